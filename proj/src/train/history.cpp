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


#include "kgrade/train/history.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace kgrade::train {

namespace {

constexpr const char* kHeader = "epoch,lr,train_loss,val_acc,val_macro_f1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string history_csv(const TrainHistory& history) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : history.epochs) {
    out += std::to_string(r.epoch) + "," + fmt(r.lr) + "," + fmt(r.train_loss) + "," +
           fmt(r.val_acc) + "," + fmt(r.val_macro_f1) + "\n";
  }
  return out;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write history " + path.string());
  out << history_csv(history);
  if (!out) throw std::runtime_error("failed writing history " + path.string());
}

TrainHistory read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open history " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::runtime_error("history " + path.string() + ": unexpected header");
  }
  TrainHistory h;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    EpochRecord r;
    char c1, c2, c3, c4;
    if (!(ss >> r.epoch >> c1 >> r.lr >> c2 >> r.train_loss >> c3 >> r.val_acc >> c4 >>
          r.val_macro_f1) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',') {
      throw std::runtime_error("history " + path.string() + ": bad row " + std::to_string(lineno));
    }
    h.epochs.push_back(r);
  }
  return h;
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = nlohmann::json{{"epoch", r.epoch},
                     {"lr", r.lr},
                     {"train_loss", r.train_loss},
                     {"val_acc", r.val_acc},
                     {"val_macro_f1", r.val_macro_f1}};
}

void from_json(const nlohmann::json& j, EpochRecord& r) {
  r.epoch = j.at("epoch").get<std::size_t>();
  r.lr = j.at("lr").get<double>();
  r.train_loss = j.at("train_loss").get<double>();
  r.val_acc = j.at("val_acc").get<double>();
  r.val_macro_f1 = j.at("val_macro_f1").get<double>();
}

}  // namespace kgrade::train
