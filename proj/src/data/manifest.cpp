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

#include "kgrade/data/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "kgrade/data/image.hpp"

namespace kgrade::data {

namespace fs = std::filesystem;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
    case Split::kUnassigned:
      break;
  }
  return "unassigned";
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  if (name == "unassigned" || name.empty()) return Split::kUnassigned;
  throw DatasetError("unknown split '" + std::string(name) + "'");
}

std::array<std::size_t, 2> DatasetManifest::class_counts() const {
  std::array<std::size_t, 2> n{};
  for (const auto& r : records) ++n.at(r.label);
  return n;
}

std::array<std::size_t, 2> DatasetManifest::class_counts(Split split) const {
  std::array<std::size_t, 2> n{};
  for (const auto& r : records) {
    if (r.split == split) ++n.at(r.label);
  }
  return n;
}

std::size_t DatasetManifest::split_size(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const auto& r) { return r.split == split; }));
}

std::vector<ManifestRecord> DatasetManifest::subset(Split split) const {
  std::vector<ManifestRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (r.stage != stage) throw DatasetError("record " + r.path + " belongs to another stage");
    if (r.label < 0 || r.label >= kNumClasses) throw DatasetError("record " + r.path + ": bad label");
    if (!seen.insert(r.path).second) throw DatasetError("duplicate path " + r.path);
  }
}

std::optional<int> class_from_directory(Stage stage, std::string_view dir_name) {
  std::string norm;
  for (char c : dir_name) {
    if (c == '-' || c == ' ') {
      norm += '_';
    } else {
      norm += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return class_index(stage, norm);
}

DatasetManifest build_manifest(const fs::path& root, Stage stage) {
  if (!fs::is_directory(root)) throw DatasetError("dataset root " + root.string() + " is not a directory");
  DatasetManifest m;
  m.stage = stage;
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  for (const auto& dir : class_dirs) {
    const auto label = class_from_directory(stage, dir.filename().string());
    if (!label) {
      const auto names = class_names(stage);
      throw DatasetError("unknown class directory '" + dir.filename().string() + "' for stage " +
                         std::to_string(to_int(stage)) + " (expected " + std::string(names[0]) +
                         " or " + std::string(names[1]) + ")");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string path = fs::absolute(f).lexically_normal().string();
      if (!has_image_extension(f)) {
        m.skipped.push_back({path, "not an image file"});
        continue;
      }
      try {
        (void)read_image(f);
      } catch (const ImageError& e) {
        m.skipped.push_back({path, e.what()});
        continue;
      }
      m.records.push_back({path, stage, *label, Split::kUnassigned});
    }
  }
  if (m.records.empty()) throw DatasetError("no decodable images under " + root.string());
  return m;
}

SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios) {
  // The small epsilon keeps products like 0.15 * 20 from landing just below 3.
  const auto part = [&](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  SplitSizes s;
  s.val = part(ratios.val);
  s.test = part(ratios.test);
  s.train = n - s.val - s.test;
  return s;
}

DatasetManifest split_manifest(const DatasetManifest& manifest, const SplitRatios& ratios,
                               std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw DatasetError("split ratios must be non-negative and sum to 1");
  }
  manifest.validate();
  DatasetManifest out = manifest;
  std::mt19937_64 rng(seed);
  for (int label = 0; label < kNumClasses; ++label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < out.records.size(); ++i) {
      if (out.records[i].label == label) idx.push_back(i);
    }
    if (idx.empty()) continue;
    if (idx.size() < 3) {
      throw DatasetError("class '" + std::string(class_names(manifest.stage)[label]) + "' has " +
                         std::to_string(idx.size()) + " samples; at least 3 are needed");
    }
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return out.records[a].path < out.records[b].path; });
    // Fisher-Yates on the raw engine keeps the order independent of the
    // standard library's shuffle implementation.
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(idx[i], idx[j]);
    }
    const SplitSizes sz = split_sizes(idx.size(), ratios);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Split s = Split::kTrain;
      if (k < sz.val) {
        s = Split::kVal;
      } else if (k < sz.val + sz.test) {
        s = Split::kTest;
      }
      out.records[idx[k]].split = s;
    }
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw DatasetError("manifest line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

void write_manifest_csv(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write manifest " + path.string());
  out << "path,stage,class,split\n";
  const auto names = class_names(manifest.stage);
  for (const auto& r : manifest.records) {
    out << csv_field(r.path) << ',' << to_int(r.stage) << ',' << names[r.label] << ','
        << split_name(r.split) << '\n';
  }
  if (!out) throw DatasetError("error writing manifest " + path.string());
}

DatasetManifest read_manifest_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) || parse_csv_line(line, 1) !=
                                     std::vector<std::string>{"path", "stage", "class", "split"}) {
    throw DatasetError("manifest " + path.string() + ": expected header path,stage,class,split");
  }
  const fs::path base = fs::absolute(path).parent_path();
  DatasetManifest m;
  std::optional<Stage> stage;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = parse_csv_line(line, line_no);
    const std::string where = "manifest line " + std::to_string(line_no);
    if (f.size() != 4) throw DatasetError(where + ": expected 4 fields");
    Stage s;
    try {
      s = stage_from_int(std::stoi(f[1]));
    } catch (const std::exception&) {
      throw DatasetError(where + ": bad stage '" + f[1] + "'");
    }
    if (stage && *stage != s) throw DatasetError(where + ": mixed stages in one manifest");
    stage = s;
    const auto label = class_index(s, f[2]);
    if (!label) throw DatasetError(where + ": class '" + f[2] + "' is not valid for this stage");
    fs::path p(f[0]);
    if (p.is_relative()) p = base / p;
    m.records.push_back({p.lexically_normal().string(), s, *label, split_from_name(f[3])});
  }
  if (!stage) throw DatasetError("manifest " + path.string() + " has no records");
  m.stage = *stage;
  m.validate();
  return m;
}

}  // namespace kgrade::data
