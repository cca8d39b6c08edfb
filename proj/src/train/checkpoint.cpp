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


#include "kgrade/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <zlib.h>

namespace kgrade::train {

namespace {

constexpr char kMagic[8] = {'K', 'G', 'R', 'D', 'C', 'K', 'P', 'T'};
constexpr std::size_t kPreamble = sizeof kMagic + 4 + 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string shape_string(const tensor::Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const model::StageModel<float>& model,
                                               const TrainHistory& history) {
  const auto params = model.parameters();
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    table.push_back({{"name", p.name},
                     {"shape", p.tensor.shape()},
                     {"offset", offset},
                     {"count", p.tensor.numel()},
                     {"trainable", p.tensor.requires_grad()}});
    offset += p.tensor.numel();
  }
  nlohmann::json header;
  header["format"] = "kgrade-checkpoint";
  header["version"] = kCheckpointVersion;
  if (model.stage()) {
    header["stage"] = to_int(*model.stage());
    nlohmann::json order = nlohmann::json::array();
    for (auto n : class_names(*model.stage())) order.push_back(std::string(n));
    header["class_order"] = order;
  } else {
    header["stage"] = nullptr;
    header["class_order"] = nullptr;
  }
  header["backbone"] = model.config();
  header["tensors"] = table;
  header["history"] = history.epochs;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPreamble + text.size() + offset * 4 + 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : params) {
    for (float f : p.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  put_u32(out, crc32_of(out));
  return out;
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes, std::optional<Stage> expected) {
  if (bytes.size() < kPreamble + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic or too short)");
  }
  const std::uint32_t version = get_u32(bytes.data() + 8);
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = bytes.size() - 4;
  if (crc32_of(bytes.first(body)) != get_u32(bytes.data() + body)) {
    throw CheckpointChecksumError("checkpoint checksum mismatch (file truncated or corrupted)");
  }
  const std::uint64_t header_len = get_u64(bytes.data() + 12);
  if (header_len > body - kPreamble) throw CheckpointError("checkpoint header overruns the file");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPreamble,
                                   bytes.begin() + kPreamble + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  try {
    if (header.at("version").get<std::uint32_t>() != version) {
      throw CheckpointVersionError("checkpoint header version disagrees with the preamble");
    }
    std::optional<Stage> stage;
    if (!header.at("stage").is_null()) {
      stage = stage_from_int(header.at("stage").get<int>());
      const auto order = header.at("class_order").get<std::vector<std::string>>();
      const auto names = class_names(*stage);
      if (order.size() != names.size() || order[0] != names[0] || order[1] != names[1]) {
        throw CheckpointError("checkpoint class order does not match stage " +
                              std::to_string(to_int(*stage)));
      }
    }
    if (expected && stage != expected) {
      throw StageMismatchError("checkpoint is tagged for " +
                               (stage ? "stage " + std::to_string(to_int(*stage)) : std::string("no stage")) +
                               " but stage " + std::to_string(to_int(*expected)) + " was expected");
    }

    auto config = header.at("backbone").get<model::BackboneConfig>();
    config.validate();
    Checkpoint ck{model::StageModel<float>(config, stage), {}};
    ck.history.epochs = header.at("history").get<std::vector<EpochRecord>>();

    const std::uint8_t* data = bytes.data() + kPreamble + header_len;
    const std::size_t data_floats = (body - kPreamble - header_len) / 4;
    if ((body - kPreamble - header_len) % 4 != 0) throw CheckpointError("checkpoint data is not float-aligned");

    const auto& table = header.at("tensors");
    auto params = ck.model.parameters();
    if (table.size() != params.size()) {
      throw CheckpointShapeError("checkpoint holds " + std::to_string(table.size()) +
                                 " tensors but the backbone config needs " +
                                 std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& dst = params[i];
      const auto& entry = table[i];
      const auto name = entry.at("name").get<std::string>();
      if (name != dst.name) {
        throw CheckpointShapeError("checkpoint tensor " + std::to_string(i) + " is '" + name +
                                   "', expected '" + dst.name + "'");
      }
      const auto shape = entry.at("shape").get<tensor::Shape>();
      if (shape != dst.tensor.shape()) {
        throw CheckpointShapeError("tensor '" + name + "' has shape " + shape_string(shape) +
                                   ", config implies " + shape_string(dst.tensor.shape()));
      }
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto count = entry.at("count").get<std::uint64_t>();
      if (count != dst.tensor.numel() || offset > data_floats || count > data_floats - offset) {
        throw CheckpointShapeError("tensor '" + name + "' data range is invalid");
      }
      auto out = dst.tensor.mutable_data();
      for (std::size_t k = 0; k < count; ++k) {
        out[k] = std::bit_cast<float>(get_u32(data + 4 * (offset + k)));
      }
      dst.tensor.set_requires_grad(entry.value("trainable", true));
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header is malformed: ") + e.what());
  } catch (const model::ConfigError& e) {
    throw CheckpointError(std::string("checkpoint backbone config is invalid: ") + e.what());
  }
}

void save_checkpoint(const model::StageModel<float>& model, const TrainHistory& history,
                     const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model, history);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<Stage> expected) {
  const auto bytes = read_file(path);
  try {
    return parse_checkpoint(bytes, expected);
  } catch (const StageMismatchError& e) {
    throw StageMismatchError(path.string() + ": " + e.what());
  } catch (const CheckpointVersionError& e) {
    throw CheckpointVersionError(path.string() + ": " + e.what());
  } catch (const CheckpointChecksumError& e) {
    throw CheckpointChecksumError(path.string() + ": " + e.what());
  } catch (const CheckpointShapeError& e) {
    throw CheckpointShapeError(path.string() + ": " + e.what());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace kgrade::train
