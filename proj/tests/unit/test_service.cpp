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


#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "kgrade/data/image.hpp"
#include "kgrade/service/analyzer.hpp"
#include "kgrade/service/config.hpp"
#include "kgrade/service/http.hpp"
#include "kgrade/train/checkpoint.hpp"
#include "stubs.hpp"

using namespace kgrade;
using namespace kgrade::service;
using kgrade::testing::StubClassifier;
namespace fs = std::filesystem;

namespace {

struct StubSet {
  std::array<std::shared_ptr<StubClassifier>, 3> stubs;
  StageModels models;

  int calls(std::size_t i) const { return stubs[i]->calls(); }
};

std::array<float, 2> winning(int cls) {
  return cls == 0 ? std::array<float, 2>{2.0f, 0.0f} : std::array<float, 2>{0.0f, 2.0f};
}

StubSet stub_set(int y1, int y2, int y3) {
  StubSet s;
  s.stubs[0] = std::make_shared<StubClassifier>(Stage::kPurity, winning(y1));
  s.stubs[1] = std::make_shared<StubClassifier>(Stage::kShape, winning(y2));
  s.stubs[2] = std::make_shared<StubClassifier>(Stage::kOrientation, winning(y3));
  for (std::size_t i = 0; i < 3; ++i) s.models.classifiers[i] = s.stubs[i];
  s.models.versions = {"stub-1", "stub-2", "stub-3"};
  s.models.preprocess = cascade::val_preprocess(16);
  return s;
}

std::string png_bytes(std::size_t n = 16, float v = 0.5f) {
  const auto b = data::encode_png(data::RgbImage(n, n, v));
  return std::string(b.begin(), b.end());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Golden files are the pretty-printed response plus a newline. Set
// KGRADE_UPDATE_GOLDEN=1 to rewrite them.
void check_golden(const nlohmann::json& body, const std::string& name) {
  const fs::path path = fs::path(KGRADE_GOLDEN_DIR) / name;
  const std::string text = body.dump(2) + "\n";
  if (std::getenv("KGRADE_UPDATE_GOLDEN") != nullptr) {
    std::ofstream(path, std::ios::binary) << text;
  }
  REQUIRE_MESSAGE(fs::exists(path), path.string());
  CHECK(read_text(path) == text);
}

void check_invariants(const nlohmann::json& r) {
  for (const char* key : {"stage1", "stage2", "stage3"}) {
    const auto& s = r.at(key);
    if (s.at("status") == "not_applicable") {
      CHECK(s.size() == 1);
      continue;
    }
    double sum = 0.0, best = 0.0;
    for (const auto& [cls, p] : s.at("probabilities").items()) {
      sum += p.get<double>();
      best = std::max(best, p.get<double>());
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
    CHECK(s.at("confidence").get<double>() == best);
    CHECK(s.at("probabilities").contains(s.at("prediction").get<std::string>()));
  }
}

fs::path temp_dir() {
  auto d = fs::temp_directory_path() / "kgrade_test_service";
  fs::create_directories(d);
  return d;
}

fs::path write_model(const std::string& name, std::optional<Stage> stage, std::uint64_t seed,
                     std::size_t resolution = 32) {
  auto cfg = model::BackboneConfig::tiny();
  cfg.input_resolution = resolution;
  const auto path = temp_dir() / name;
  train::save_checkpoint(model::StageModel<float>::initialized(cfg, seed, stage), {}, path);
  return path;
}

// Runs an HttpServer on an ephemeral port for the lifetime of the object.
struct LiveServer {
  std::unique_ptr<HttpServer> server;
  std::thread thread;
  int port = 0;

  LiveServer(std::shared_ptr<const Analyzer> analyzer, ServiceConfig cfg = {}) {
    cfg.port = 0;
    server = std::make_unique<HttpServer>(std::move(analyzer), cfg);
    port = server->bind();
    thread = std::thread([this] { server->serve(); });
    server->wait_until_ready();
  }
  ~LiveServer() {
    server->stop();
    thread.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

httplib::Result post_image(httplib::Client& cli, const std::string& bytes,
                           const std::string& field = "image") {
  httplib::MultipartFormDataItems items{{field, bytes, "kernel.png", "image/png"}};
  return cli.Post("/analyze", items);
}

}  // namespace

TEST_CASE("golden responses for the four cascade shapes") {
  const data::RgbImage img(16, 16, 0.5f);
  struct Case {
    int y1, y2, y3;
    const char* file;
    bool ran2, ran3;
  };
  const Case cases[] = {{0, 0, 0, "analyze_impure.json", false, false},
                        {1, 1, 0, "analyze_pure_round.json", true, false},
                        {1, 0, 0, "analyze_pure_flat_embryo_down.json", true, true},
                        {1, 0, 1, "analyze_pure_flat_embryo_up.json", true, true}};
  for (const auto& c : cases) {
    CAPTURE(c.file);
    auto s = stub_set(c.y1, c.y2, c.y3);
    const Analyzer an(s.models);
    const auto r = an.analyze(img);
    check_golden(r, c.file);
    check_invariants(r);
    CHECK((r["stage2"]["status"] == "not_applicable") == !c.ran2);
    CHECK((r["stage3"]["status"] == "not_applicable") == !c.ran3);
    CHECK(s.calls(0) == 1);
    CHECK(s.calls(1) == (c.ran2 ? 1 : 0));
    CHECK(s.calls(2) == (c.ran3 ? 1 : 0));
  }
}

TEST_CASE("impure response matches the skip semantics") {
  auto s = stub_set(0, 1, 1);
  const auto r = Analyzer(s.models).analyze(data::RgbImage(8, 8, 0.2f));
  CHECK(r["stage1"]["prediction"] == "impure");
  CHECK(r["stage1"]["confidence"].get<double>() == doctest::Approx(0.8807970779778823).epsilon(1e-7));
  CHECK(r["stage2"] == nlohmann::json{{"status", "not_applicable"}});
  CHECK(r["stage3"] == nlohmann::json{{"status", "not_applicable"}});
  CHECK(r["summary"] == "(impure, –, –)");
  CHECK(r["model_versions"]["stage2"] == "stub-2");
}

TEST_CASE("upload validation") {
  auto s = stub_set(1, 0, 1);
  const Analyzer an(s.models);
  auto r = an.analyze_upload("", 1000);
  CHECK(r.status == 400);
  CHECK(r.body["error"]["code"] == "missing_image");
  r = an.analyze_upload("just some text, not an image\n", 1000);
  CHECK(r.status == 400);
  CHECK(r.body["error"]["code"] == "invalid_image");
  const auto png = png_bytes();
  r = an.analyze_upload(png, png.size() - 1);
  CHECK(r.status == 413);
  CHECK(r.body["error"]["code"] == "image_too_large");
  r = an.analyze_upload(png.substr(0, png.size() / 2), 1 << 20);
  CHECK(r.status == 400);
  CHECK(s.calls(0) == 0);
  CHECK(s.calls(1) == 0);
  CHECK(s.calls(2) == 0);
  r = an.analyze_upload(png, png.size());
  CHECK(r.status == 200);
  CHECK(r.body["summary"] == "(pure, flat, embryo_up)");
}

TEST_CASE("golden error responses") {
  auto s = stub_set(1, 1, 1);
  const Analyzer an(s.models);
  auto r = an.analyze_upload("", 100);
  CHECK(r.status == 400);
  check_golden(r.body, "error_missing_image.json");
  r = an.analyze_upload("plain text upload", 100);
  CHECK(r.status == 400);
  check_golden(r.body, "error_invalid_image.json");
  r = an.analyze_upload(std::string(101, 'x'), 100);
  CHECK(r.status == 413);
  check_golden(r.body, "error_image_too_large.json");
  CHECK(s.calls(0) == 0);
}

TEST_CASE("HTTP endpoints") {
  auto s = stub_set(1, 0, 1);
  auto an = std::make_shared<Analyzer>(s.models);
  ServiceConfig cfg;
  cfg.upload_limit_bytes = 4096;
  LiveServer live(an, cfg);
  auto cli = live.client();

  auto h = cli.Get("/health");
  REQUIRE(h);
  CHECK(h->status == 200);
  const auto health = nlohmann::json::parse(h->body);
  CHECK(health["status"] == "ok");
  CHECK(health["model_versions"] == nlohmann::json{{"stage1", "stub-1"}, {"stage2", "stub-2"}, {"stage3", "stub-3"}});

  auto r = post_image(cli, png_bytes());
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->get_header_value("Content-Type") == "application/json");
  CHECK(nlohmann::json::parse(r->body) == an->analyze(data::RgbImage(16, 16, 0.5f)));

  const auto expect_error = [](const httplib::Result& res, int status, const char* code) {
    REQUIRE(res);
    CHECK(res->status == status);
    const auto j = nlohmann::json::parse(res->body);
    CHECK(j["error"]["code"] == code);
    CHECK(j["error"]["message"].get<std::string>().size() > 0);
  };
  const int before = s.calls(0);
  expect_error(post_image(cli, "hello, this is text"), 400, "invalid_image");
  expect_error(post_image(cli, png_bytes(), "file"), 400, "missing_image");
  expect_error(cli.Post("/analyze", png_bytes(), "image/png"), 400, "missing_image");
  expect_error(post_image(cli, std::string(5000, 'x')), 413, "image_too_large");
  expect_error(post_image(cli, std::string(200000, 'x')), 413, "image_too_large");
  expect_error(cli.Get("/nope"), 404, "not_found");
  const auto wrong = cli.Get("/analyze");
  expect_error(wrong, 405, "method_not_allowed");
  CHECK(wrong->get_header_value("Allow") == "POST");
  expect_error(cli.Post("/health", "", "text/plain"), 405, "method_not_allowed");
  expect_error(cli.Delete("/analyze"), 405, "method_not_allowed");
  CHECK(s.calls(0) == before);
}

TEST_CASE("startup fails naming the stage whose checkpoint is bad") {
  const auto c1 = write_model("s1.ckpt", Stage::kPurity, 1);
  const auto c2 = write_model("s2.ckpt", Stage::kShape, 2);
  const auto c3 = write_model("s3.ckpt", Stage::kOrientation, 3);

  const auto models = load_stage_models({c1, c2, c3});
  const Analyzer an(models);
  const auto health = an.health();
  CHECK(health["model_versions"]["stage2"] == "sha256:" + train::file_sha256(c2));

  const auto expect_stage = [](const std::array<fs::path, 3>& paths, Stage stage) {
    try {
      load_stage_models(paths);
      FAIL("expected a load error");
    } catch (const ModelLoadError& e) {
      CHECK(e.stage() == stage);
      CHECK(std::string(e.what()).find("stage " + std::to_string(to_int(stage))) == 0);
    }
  };
  expect_stage({c1, temp_dir() / "missing.ckpt", c3}, Stage::kShape);
  expect_stage({c1, fs::path{}, c3}, Stage::kShape);
  expect_stage({c1, c1, c3}, Stage::kShape);
  expect_stage({c3, c2, c3}, Stage::kPurity);
  const auto other_res = write_model("s3_64.ckpt", Stage::kOrientation, 3, 64);
  expect_stage({c1, c2, other_res}, Stage::kOrientation);
  const auto corrupt = temp_dir() / "corrupt.ckpt";
  {
    auto bytes = read_text(c3);
    bytes[bytes.size() / 2] ^= 1;
    std::ofstream(corrupt, std::ios::binary) << bytes;
  }
  expect_stage({c1, c2, corrupt}, Stage::kOrientation);
}

TEST_CASE("concurrent requests match sequential results") {
  const auto models = load_stage_models({write_model("c1.ckpt", Stage::kPurity, 11),
                                         write_model("c2.ckpt", Stage::kShape, 12),
                                         write_model("c3.ckpt", Stage::kOrientation, 13)});
  auto an = std::make_shared<Analyzer>(models);
  std::vector<std::string> uploads;
  for (int i = 0; i < 12; ++i) {
    data::RgbImage img(24, 24);
    for (std::size_t k = 0; k < img.pixels.size(); ++k) img.pixels[k] = static_cast<float>((k * (i + 3)) % 17) / 16.0f;
    const auto b = data::encode_png(img);
    uploads.emplace_back(b.begin(), b.end());
  }
  std::vector<nlohmann::json> sequential;
  for (const auto& u : uploads) sequential.push_back(an->analyze_upload(u, 1 << 20).body);

  LiveServer live(an);
  std::vector<std::future<std::vector<std::string>>> workers;
  for (int t = 0; t < 4; ++t) {
    workers.push_back(std::async(std::launch::async, [&, t] {
      auto cli = live.client();
      std::vector<std::string> bodies;
      for (std::size_t i = 0; i < uploads.size(); ++i) {
        const auto& u = uploads[(i + 3 * t) % uploads.size()];
        auto r = post_image(cli, u);
        bodies.push_back(r && r->status == 200 ? r->body : std::string("failed"));
      }
      return bodies;
    }));
  }
  for (int t = 0; t < 4; ++t) {
    const auto bodies = workers[t].get();
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      REQUIRE(bodies[i] != "failed");
      CHECK(nlohmann::json::parse(bodies[i]) == sequential[(i + 3 * t) % uploads.size()]);
    }
  }
}

TEST_CASE("app config") {
  auto c = AppConfig::resolve("synthetic");
  CHECK(c.backbone == model::BackboneConfig::tiny());
  CHECK(c.train.base_lr == 1e-3);
  CHECK(c.train.augment.vflip_prob == 0.0f);
  CHECK(AppConfig::resolve("cvt13").backbone == model::BackboneConfig::cvt13());
  CHECK(AppConfig::resolve("tiny").train == train::TrainConfig{});

  const auto j = to_json(c);
  const auto back = AppConfig::from_json(j);
  CHECK(back.backbone == c.backbone);
  CHECK(back.train == c.train);
  CHECK(back.service == c.service);

  auto partial = AppConfig::from_json(nlohmann::json::parse(
      R"({"backbone": "tiny", "train": {"total_epochs": 3, "warmup_epochs": 1}, "service": {"port": 9001}})"));
  CHECK(partial.train.total_epochs == 3);
  CHECK(partial.service.port == 9001);
  CHECK(partial.service.upload_limit_bytes == 10u * 1024 * 1024);
  const nlohmann::json bare = model::BackboneConfig::tiny();
  CHECK(AppConfig::from_json(bare).backbone == model::BackboneConfig::tiny());
  CHECK_THROWS_AS(AppConfig::from_json(nlohmann::json::parse(R"({"model": {}})")), model::ConfigError);
  CHECK_THROWS_AS(AppConfig::from_json(nlohmann::json::parse(R"({"service": {"port": 70000}})")),
                  model::ConfigError);
  CHECK_THROWS_AS(AppConfig::resolve("no-such-config.json"), model::ConfigError);

  ::setenv("KGRADE_HOST", "0.0.0.0", 1);
  ::setenv("KGRADE_PORT", "8123", 1);
  c.apply_environment();
  CHECK(c.service.host == "0.0.0.0");
  CHECK(c.service.port == 8123);
  ::setenv("KGRADE_PORT", "80x", 1);
  CHECK_THROWS_AS(c.apply_environment(), model::ConfigError);
  ::unsetenv("KGRADE_HOST");
  ::unsetenv("KGRADE_PORT");
}

TEST_CASE("shipped config files match the presets") {
  for (const char* name : {"tiny", "cvt13", "synthetic"}) {
    CAPTURE(name);
    const auto file = AppConfig::resolve(std::string(KGRADE_CONFIG_DIR) + "/" + name + ".json");
    const auto preset = AppConfig::resolve(name);
    CHECK(file.backbone == preset.backbone);
    CHECK(file.train == preset.train);
    CHECK(file.service == preset.service);
  }
}
