// Copyright (c) 2026 The kgrade Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Checkpoint container:
//
//   bytes 0..7    magic "KGRDCKPT"
//   uint32 LE     format version
//   uint64 LE     header length H
//   H bytes       JSON header (stage, class order, backbone config, tensor
//                 table, training history)
//   float32 LE    tensor data, concatenated in table order
//   uint32 LE     CRC-32 of every preceding byte

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgrade/model/cvt.hpp"
#include "kgrade/stage.hpp"
#include "kgrade/train/history.hpp"

namespace kgrade::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class CheckpointChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class CheckpointShapeError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct Checkpoint {
  model::StageModel<float> model;
  TrainHistory history;
};

std::vector<std::uint8_t> serialize_checkpoint(const model::StageModel<float>& model,
                                               const TrainHistory& history);

/// Throws StageMismatchError when `expected` is given and the stored tag
/// differs or is absent.
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes,
                            std::optional<Stage> expected = std::nullopt);

/// Writes via a temporary file and rename, so readers never see a partial file.
void save_checkpoint(const model::StageModel<float>& model, const TrainHistory& history,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<Stage> expected = std::nullopt);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace kgrade::train
