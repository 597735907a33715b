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

// Socket binding for ApiService. Requests under /api go to the service;
// everything else is served from an optional static directory.

#ifndef BIASLENS_HTTP_SERVER_HPP_
#define BIASLENS_HTTP_SERVER_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "biaslens/api_service.hpp"

namespace biaslens {

class HttpServer {
 public:
  explicit HttpServer(ApiService& api, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws Error(kIo)
  // when the address is unavailable.
  int bind(const std::string& host, int port);
  // Serves until stop(). Call bind() first.
  void run();
  // Thread-safe; a stop issued before run() makes run() return at once.
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace biaslens

#endif  // BIASLENS_HTTP_SERVER_HPP_
