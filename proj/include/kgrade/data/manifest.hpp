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

// Dataset manifests: one record per image with its stage, class and split.
// On disk it is a CSV with the header `path,stage,class,split`.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgrade/stage.hpp"

namespace kgrade::data {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { kUnassigned, kTrain, kVal, kTest };

std::string_view split_name(Split s);
Split split_from_name(std::string_view name);

struct ManifestRecord {
  std::string path;
  Stage stage = Stage::kPurity;
  int label = 0;
  Split split = Split::kUnassigned;

  bool operator==(const ManifestRecord&) const = default;
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct DatasetManifest {
  Stage stage = Stage::kPurity;
  std::vector<ManifestRecord> records;
  std::vector<SkippedFile> skipped;

  std::array<std::size_t, 2> class_counts() const;
  std::array<std::size_t, 2> class_counts(Split split) const;
  std::size_t split_size(Split split) const;
  std::vector<ManifestRecord> subset(Split split) const;
  /// Unique paths, labels in range, one stage.
  void validate() const;
};

/// Maps a directory name such as "Embryo-Up" or "embryo up" to a class index.
std::optional<int> class_from_directory(Stage stage, std::string_view dir_name);

/// Scans root/<class>/ for images. Undecodable files are skipped and listed.
DatasetManifest build_manifest(const std::filesystem::path& root, Stage stage);

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

/// Per class: floor(val * n) to val, floor(test * n) to test, the rest to
/// train. Members are chosen by a seeded shuffle of the class's records in
/// path order.
DatasetManifest split_manifest(const DatasetManifest& manifest, const SplitRatios& ratios,
                               std::uint64_t seed);

/// The per-class split sizes split_manifest produces for n samples.
struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
};
SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios);

void write_manifest_csv(const DatasetManifest& manifest, const std::filesystem::path& path);
/// Relative paths in the file are resolved against the file's directory.
DatasetManifest read_manifest_csv(const std::filesystem::path& path);

}  // namespace kgrade::data
