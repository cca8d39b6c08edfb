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


// HTTP front end:
//   GET  /health   -> {"status": "ok", "model_versions": {...}}
//   POST /analyze  -> AnalyzeResponse, multipart/form-data with field "image"
// Errors are JSON {"error": {"code", "message"}} with a 4xx status for bad
// requests and 500 only for internal faults.

#pragma once

#include <memory>

#include "kgrade/service/analyzer.hpp"
#include "kgrade/service/config.hpp"

namespace kgrade::service {

class HttpServer {
 public:
  HttpServer(std::shared_ptr<const Analyzer> analyzer, ServiceConfig config);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds config.host:config.port (port 0 picks a free one) and returns
  /// the bound port. Throws if the address is unavailable.
  int bind();
  /// Serves until stop(); call bind() first.
  void serve();
  void stop();
  /// Blocks until the server accepts connections.
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kgrade::service
