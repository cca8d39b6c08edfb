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


// kgrade: command-line entry point for dataset splitting, stage training,
// evaluation, single-image inference and the HTTP service.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <thread>

#include "CLI11.hpp"
#include "kgrade/service/commands.hpp"
#include "kgrade/service/http.hpp"
#include "kgrade/train/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace kgrade;

namespace {

struct Options {
  int stage = 0;
  std::string config = "tiny";
  std::optional<std::uint64_t> seed;
  fs::path data_root, manifest, checkpoint, out, image;
  std::array<fs::path, 3> checkpoints;
  std::optional<std::string> host;
  std::optional<int> port;
  std::string split = "test";
  bool summary_only = false;
  data::SyntheticSpec synth;
};

Stage parse_stage(int s) { return stage_from_int(s); }

service::AppConfig load_config(const Options& o) {
  auto c = service::AppConfig::resolve(o.config);
  c.apply_environment();
  if (o.seed) c.train.seed = *o.seed;
  if (o.host) c.service.host = *o.host;
  if (o.port) c.service.port = *o.port;
  c.validate();
  return c;
}

void add_checkpoint_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--checkpoint-1", o.checkpoints[0], "Stage 1 (purity) checkpoint")->required();
  cmd->add_option("--checkpoint-2", o.checkpoints[1], "Stage 2 (shape) checkpoint")->required();
  cmd->add_option("--checkpoint-3", o.checkpoints[2], "Stage 3 (orientation) checkpoint")->required();
}

int cmd_synth(const Options& o) {
  auto spec = o.synth;
  if (o.seed) spec.seed = *o.seed;
  const auto m = data::generate_synthetic(o.out, parse_stage(o.stage), spec);
  std::cout << "wrote " << m.records.size() << " images and " << (o.out / "manifest.csv").string() << "\n";
  return 0;
}

int cmd_split(const Options& o) {
  service::run_split(o.data_root, parse_stage(o.stage), o.seed.value_or(0), o.out, std::cout);
  std::cout << "wrote " << o.out.string() << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const auto cfg = load_config(o);
  const auto manifest = data::read_manifest_csv(o.manifest);
  service::run_train(parse_stage(o.stage), cfg, manifest, o.out, std::cout);
  return 0;
}

int cmd_eval(const Options& o) {
  const Stage stage = parse_stage(o.stage);
  const auto manifest = data::read_manifest_csv(o.manifest);
  if (manifest.stage != stage) {
    throw StageMismatchError("manifest is for stage " + std::to_string(to_int(manifest.stage)));
  }
  auto ck = train::load_checkpoint(o.checkpoint, stage);
  const auto report = service::evaluate_manifest(manifest, data::split_from_name(o.split),
                                                 service::model_predictor(std::move(ck.model), stage));
  std::cout << metrics::render_text(report);
  if (!o.out.empty()) {
    if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
    std::ofstream(o.out) << metrics::to_json(report).dump(2) << "\n";
  }
  return 0;
}

int cmd_infer(const Options& o) {
  const auto cfg = load_config(o);
  const service::Analyzer analyzer(service::load_stage_models(o.checkpoints));
  const auto r = service::run_infer(analyzer, o.image, cfg.service.upload_limit_bytes);
  if (r.status != 200) {
    std::cerr << r.body.dump() << "\n";
    return 1;
  }
  if (o.summary_only) {
    std::cout << r.body.at("summary").get<std::string>() << "\n";
  } else {
    std::cout << r.body.dump(2) << "\n";
  }
  return 0;
}

int cmd_serve(const Options& o) {
  const auto cfg = load_config(o);
  // Signals are handled on a dedicated thread so stop() runs outside a
  // signal handler. Block them before any other thread starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto analyzer = std::make_shared<service::Analyzer>(service::load_stage_models(o.checkpoints));
  service::HttpServer server(analyzer, cfg.service);
  const int port = server.bind();
  std::cout << "serving on http://" << cfg.service.host << ":" << port << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.serve();
  // serve() can also return on its own; wake the waiter in that case.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical corn kernel grading: data, training, evaluation and serving"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Options o;
  const auto stage_opt = [&o](CLI::App* cmd) {
    return cmd->add_option("--stage", o.stage, "Stage: 1 purity, 2 shape, 3 orientation")
        ->check(CLI::Range(1, 3));
  };
  const auto config_opt = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Preset (tiny, cvt13, synthetic) or JSON config file")
        ->capture_default_str();
  };
  const auto seed_opt = [&o](CLI::App* cmd) { cmd->add_option("--seed", o.seed, "Random seed"); };

  auto* synth = app.add_subcommand("synth", "Generate the synthetic blob dataset with a manifest");
  stage_opt(synth)->default_val(1);
  seed_opt(synth);
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--size", o.synth.size, "Image side in pixels")->capture_default_str();
  synth->add_option("--train-per-class", o.synth.train_per_class)->capture_default_str();
  synth->add_option("--val-per-class", o.synth.val_per_class)->capture_default_str();
  synth->add_option("--test-per-class", o.synth.test_per_class)->capture_default_str();
  synth->add_option("--noise", o.synth.noise_std, "Pixel noise std")->capture_default_str();

  auto* split = app.add_subcommand("split", "Scan <data-root>/<class>/ and write a split manifest");
  stage_opt(split)->required();
  seed_opt(split);
  split->add_option("--data-root", o.data_root, "Directory with one folder per class")->required();
  split->add_option("--out", o.out, "Manifest CSV to write")->required();

  auto* train_cmd = app.add_subcommand("train", "Train one stage; writes a checkpoint and history CSV");
  stage_opt(train_cmd)->required();
  config_opt(train_cmd);
  seed_opt(train_cmd);
  train_cmd->add_option("--manifest", o.manifest, "Manifest CSV with train/val splits")->required();
  train_cmd->add_option("--out", o.out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Classification report for a checkpoint on a manifest split");
  stage_opt(eval)->required();
  eval->add_option("--checkpoint", o.checkpoint, "Stage checkpoint")->required();
  eval->add_option("--manifest", o.manifest, "Manifest CSV")->required();
  eval->add_option("--split", o.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  eval->add_option("--out", o.out, "Optional JSON report path");

  auto* infer = app.add_subcommand("infer", "Run the three-stage cascade on one image");
  add_checkpoint_flags(infer, o);
  config_opt(infer);
  infer->add_option("image", o.image, "Image file")->required();
  infer->add_flag("--summary", o.summary_only, "Print only the (y1, y2, y3) summary");

  auto* serve = app.add_subcommand("serve", "Serve /health and /analyze over HTTP");
  add_checkpoint_flags(serve, o);
  config_opt(serve);
  serve->add_option("--host", o.host, "Bind address (also KGRADE_HOST)");
  serve->add_option("--port", o.port, "Port, 0 for any free port (also KGRADE_PORT)")
      ->check(CLI::Range(0, 65535));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(o);
    if (*split) return cmd_split(o);
    if (*train_cmd) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*infer) return cmd_infer(o);
    if (*serve) return cmd_serve(o);
  } catch (const std::exception& e) {
    std::cerr << "kgrade: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
