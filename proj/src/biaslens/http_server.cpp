// Copyright 2026 The BiasLens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "biaslens/http_server.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "biaslens/error.hpp"
#include "httplib.h"

namespace biaslens {

struct HttpServer::Impl {
  ApiService& api;
  httplib::Server server;
  bool bound = false;

  std::mutex mu;
  std::condition_variable cv;
  bool stop_requested = false;
  bool run_done = false;

  explicit Impl(ApiService& a) : api(a) {}
};

HttpServer::HttpServer(ApiService& api, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(api)) {
  auto& api_ref = impl_->api;
  auto forward = [&api_ref](const httplib::Request& req, httplib::Response& res) {
    HttpRequest in;
    in.method = req.method;
    in.path = req.path;
    for (const auto& [k, v] : req.params) in.query.emplace(k, v);
    in.body = req.body;
    HttpResponse out = api_ref.handle(in);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    if (!out.content_type.empty()) res.set_content(out.body, out.content_type);
  };
  const std::string pattern = R"(/api(/.*)?)";
  impl_->server.Get(pattern, forward);
  impl_->server.Post(pattern, forward);
  impl_->server.Put(pattern, forward);
  impl_->server.Delete(pattern, forward);
  impl_->server.Options(pattern, forward);
  if (static_dir) {
    if (!impl_->server.set_mount_point("/", static_dir->string())) {
      fail(ErrorCode::kNotFound, "static directory not found: " + static_dir->string());
    }
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) fail(ErrorCode::kIo, "cannot bind " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    fail(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
  }
  impl_->bound = true;
  return bound;
}

void HttpServer::run() {
  if (!impl_->bound) fail(ErrorCode::kInvalidArgument, "HttpServer::run called before bind");
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stop_requested) return;
    impl_->run_done = false;
  }
  // httplib ignores stop() until its accept loop is live, so keep asking
  // until listen returns.
  std::jthread watcher([impl = impl_.get()] {
    std::unique_lock lock(impl->mu);
    impl->cv.wait(lock, [impl] { return impl->stop_requested || impl->run_done; });
    while (!impl->run_done) {
      lock.unlock();
      impl->server.stop();
      lock.lock();
      impl->cv.wait_for(lock, std::chrono::milliseconds(10), [impl] { return impl->run_done; });
    }
  });
  impl_->server.listen_after_bind();
  {
    std::lock_guard lock(impl_->mu);
    impl_->run_done = true;
  }
  impl_->cv.notify_all();
}

void HttpServer::stop() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->mu);
    impl_->stop_requested = true;
  }
  impl_->cv.notify_all();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace biaslens
