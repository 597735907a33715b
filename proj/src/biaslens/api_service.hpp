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

// The HTTP/JSON surface of the workbench, independent of any socket layer.
//
//   GET  /api/workspace            catalog of runs, attributes and selectors
//   POST /api/annotations/query    filtered, sorted, paged annotation rows
//   GET  /api/distribution         density curves for one selector
//   POST /api/projection           2-D layout + heatmap (asynchronous)
//   GET  /api/session              current triage state
//   POST /api/session              flag / unflag / hide / unhide
//   GET  /api/export               report download
//   GET  /api/schema               JSON schemas of every body
//
// Responses only ever carry aggregates: metric values and counts. Raw
// data-point records never reach this layer.

#ifndef BIASLENS_API_SERVICE_HPP_
#define BIASLENS_API_SERVICE_HPP_

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "biaslens/projection.hpp"
#include "biaslens/session.hpp"
#include "biaslens/workspace.hpp"

namespace biaslens {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
  std::string body;
};

struct ApiOptions {
  std::string cors_origin = "*";
  std::size_t projection_workers = 2;
  std::size_t max_limit = 1000;
};

class ApiService {
 public:
  explicit ApiService(ApiOptions options = {});
  ~ApiService();

  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  // Until this is called every /api endpoint except the schema answers 503.
  void initialize(std::shared_ptr<const Workspace> workspace, std::shared_ptr<SessionStore> session);
  bool ready() const;

  // Thread-safe.
  HttpResponse handle(const HttpRequest& request);

  // Blocks until the projection queue is drained.
  void wait_for_projections();

  std::shared_ptr<SessionStore> session() const;

 private:
  struct ProjectionJob;
  struct JobKey {
    std::uint64_t subset_hash;
    std::uint64_t seed;
    auto operator<=>(const JobKey&) const = default;
  };

  HttpResponse route(const HttpRequest& request);
  HttpResponse get_workspace();
  HttpResponse post_query(const HttpRequest& request);
  HttpResponse get_distribution(const HttpRequest& request);
  HttpResponse post_projection(const HttpRequest& request);
  HttpResponse get_session();
  HttpResponse post_session(const HttpRequest& request);
  HttpResponse get_export(const HttpRequest& request);

  void worker_loop(std::stop_token stop);

  ApiOptions options_;
  mutable std::mutex state_mu_;
  std::shared_ptr<const Workspace> workspace_;
  std::shared_ptr<SessionStore> session_;

  std::mutex jobs_mu_;
  std::condition_variable_any jobs_cv_;
  std::condition_variable jobs_idle_cv_;
  std::map<JobKey, std::shared_ptr<ProjectionJob>> jobs_;
  std::deque<std::shared_ptr<ProjectionJob>> queue_;
  std::size_t running_ = 0;
  std::vector<std::jthread> workers_;
};

}  // namespace biaslens

#endif  // BIASLENS_API_SERVICE_HPP_
