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


#include "kgrade/service/http.hpp"

#include <stdexcept>

#include "httplib.h"

namespace kgrade::service {

namespace {

// Room for multipart boundaries and part headers on top of the image limit.
constexpr std::size_t kMultipartOverhead = 64 * 1024;

void send(httplib::Response& res, const ApiResult& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

struct HttpServer::Impl {
  std::shared_ptr<const Analyzer> analyzer;
  ServiceConfig config;
  httplib::Server server;
};

HttpServer::HttpServer(std::shared_ptr<const Analyzer> analyzer, ServiceConfig config)
    : impl_(std::make_unique<Impl>()) {
  if (!analyzer) throw std::invalid_argument("HttpServer needs an analyzer");
  config.validate();
  impl_->analyzer = std::move(analyzer);
  impl_->config = std::move(config);
  auto& srv = impl_->server;
  const Analyzer& an = *impl_->analyzer;
  const std::size_t limit = impl_->config.upload_limit_bytes;
  const std::size_t threads = impl_->config.threads;

  srv.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  srv.set_payload_max_length(limit + kMultipartOverhead);

  srv.Get("/health", [&an](const httplib::Request&, httplib::Response& res) {
    send(res, {200, an.health()});
  });

  srv.Post("/analyze", [&an, limit](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data()) {
      send(res, api_error(400, "missing_image",
                          "expected multipart/form-data with an 'image' file field"));
      return;
    }
    if (!req.has_file("image")) {
      send(res, api_error(400, "missing_image", "no 'image' field in the upload"));
      return;
    }
    send(res, an.analyze_upload(req.get_file_value("image").content, limit));
  });

  // Known routes answer other methods with 405 instead of the library's 404.
  const auto wrong_method = [](const char* allow) {
    return [allow](const httplib::Request&, httplib::Response& res) {
      res.set_header("Allow", allow);
      send(res, api_error(405, "method_not_allowed", std::string("use ") + allow + " on this route"));
    };
  };
  for (const auto& [route, allow] : {std::pair{"/health", "GET"}, std::pair{"/analyze", "POST"}}) {
    if (std::string(allow) != "GET") srv.Get(route, wrong_method(allow));
    if (std::string(allow) != "POST") srv.Post(route, wrong_method(allow));
    srv.Put(route, wrong_method(allow));
    srv.Patch(route, wrong_method(allow));
    srv.Delete(route, wrong_method(allow));
  }

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, api_error(500, "internal_error", what));
  });

  // Fills in JSON for statuses produced by the library itself.
  srv.set_error_handler([limit](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    ApiResult r;
    switch (res.status) {
      case 404:
        r = api_error(404, "not_found", "unknown route");
        break;
      case 405:
        r = api_error(405, "method_not_allowed", "method not allowed on this route");
        break;
      case 413:
        r = api_error(413, "image_too_large",
                      "upload exceeds the limit of " + std::to_string(limit) + " bytes");
        break;
      default:
        r = api_error(res.status, "bad_request", httplib::status_message(res.status));
    }
    send(res, r);
    return httplib::Server::HandlerResponse::Handled;
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& c = impl_->config;
  int port = c.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(c.host);
  } else if (!impl_->server.bind_to_port(c.host, port)) {
    port = -1;
  }
  if (port < 0) throw std::runtime_error("cannot bind " + c.host + ":" + std::to_string(c.port));
  return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace kgrade::service
