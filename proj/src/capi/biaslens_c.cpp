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

#include "biaslens/biaslens.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <new>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "biaslens/api_service.hpp"
#include "biaslens/artifact.hpp"
#include "biaslens/corpus.hpp"
#include "biaslens/counts.hpp"
#include "biaslens/error.hpp"
#include "biaslens/fixtures.hpp"
#include "biaslens/http_server.hpp"
#include "biaslens/metrics.hpp"
#include "biaslens/session.hpp"
#include "biaslens/workspace.hpp"
#include "httplib.h"

namespace fs = std::filesystem;

namespace {

thread_local std::string g_last_error;

bl_status to_status(biaslens::ErrorCode code) {
  using biaslens::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return BL_INVALID_ARGUMENT;
    case ErrorCode::kNotFound:
      return BL_NOT_FOUND;
    case ErrorCode::kParse:
      return BL_PARSE_ERROR;
    case ErrorCode::kIo:
      return BL_IO_ERROR;
    case ErrorCode::kConflict:
      return BL_CONFLICT;
    case ErrorCode::kCorrupt:
      return BL_CORRUPT;
    case ErrorCode::kUnprocessable:
      return BL_UNPROCESSABLE;
    case ErrorCode::kInternal:
      break;
  }
  return BL_INTERNAL;
}

bl_status exception_to_status() {
  try {
    throw;
  } catch (const biaslens::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return BL_INTERNAL;
}

template <typename F>
bl_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return BL_OK;
  } catch (...) {
    return exception_to_status();
  }
}

void require(const void* p, const char* what) {
  if (!p) biaslens::fail(biaslens::ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

void fill_buffer(bl_buffer* out, const std::string& bytes) {
  char* data = static_cast<char*>(std::malloc(bytes.size() + 1));
  if (!data) throw std::bad_alloc();
  std::memcpy(data, bytes.data(), bytes.size());
  data[bytes.size()] = '\0';
  out->data = data;
  out->size = bytes.size();
}

std::string opt(const char* s, const char* fallback = "") { return s ? s : fallback; }

// Writes through `<path>.tmp` and renames; the temporary is removed when
// `write` throws.
template <typename F>
void write_atomically(const fs::path& path, F&& write) {
  fs::path tmp = path;
  tmp += ".tmp";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) biaslens::fail(biaslens::ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
      write(out);
      out.flush();
      if (!out) biaslens::fail(biaslens::ErrorCode::kIo, "write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

}  // namespace

struct bl_server {
  std::string artifacts_dir;
  std::optional<fs::path> embeddings;
  fs::path session_path;
  std::string workspace_id;
  bool init_session = false;

  biaslens::ApiService api;
  std::unique_ptr<biaslens::HttpServer> http;
  int port = 0;

  std::mutex load_mu;
  bool loaded = false;
  std::shared_ptr<biaslens::SessionStore> session;

  explicit bl_server(biaslens::ApiOptions options) : api(std::move(options)) {}
};

namespace {

void load_server(bl_server& s) {
  std::lock_guard lock(s.load_mu);
  if (s.loaded) return;
  auto ws = std::make_shared<const biaslens::Workspace>(
      biaslens::Workspace::load(s.artifacts_dir, s.embeddings, s.workspace_id));
  auto state = biaslens::load_session(s.session_path, s.init_session, s.workspace_id);
  s.session = std::make_shared<biaslens::SessionStore>(std::move(state), s.session_path);
  s.api.initialize(std::move(ws), s.session);
  s.loaded = true;
}

}  // namespace

extern "C" {

const char* bl_version(void) { return "1.0.0"; }

const char* bl_status_name(bl_status status) {
  switch (status) {
    case BL_OK:
      return "ok";
    case BL_INVALID_ARGUMENT:
      return "invalid_argument";
    case BL_NOT_FOUND:
      return "not_found";
    case BL_PARSE_ERROR:
      return "parse_error";
    case BL_IO_ERROR:
      return "io_error";
    case BL_CONFLICT:
      return "conflict";
    case BL_CORRUPT:
      return "corrupt";
    case BL_UNPROCESSABLE:
      return "unprocessable";
    case BL_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* bl_last_error(void) { return g_last_error.c_str(); }

void bl_buffer_free(bl_buffer* buffer) {
  if (!buffer) return;
  std::free(buffer->data);
  buffer->data = nullptr;
  buffer->size = 0;
}

bl_status bl_compute(const char* run_name, const char* corpus_path, const char* attributes_path,
                     const char* const* metric_kinds, size_t metric_count, const char* out_dir, uint32_t shards,
                     bl_compute_summary* summary) {
  return guarded([&] {
    require(run_name, "run_name");
    require(corpus_path, "corpus_path");
    require(attributes_path, "attributes_path");
    require(out_dir, "out_dir");
    if (metric_count == 0) require(nullptr, "metric_kinds");
    require(metric_kinds, "metric_kinds");
    if (shards == 0) biaslens::fail(biaslens::ErrorCode::kInvalidArgument, "shard count must be at least 1");
    if (std::string_view(run_name).empty() || std::strchr(run_name, '/') || std::strchr(run_name, '\t')) {
      biaslens::fail(biaslens::ErrorCode::kInvalidArgument, "invalid run name '" + std::string(run_name) + "'");
    }
    const auto start = std::chrono::steady_clock::now();

    std::vector<biaslens::MetricKind> kinds;
    for (size_t i = 0; i < metric_count; ++i) {
      require(metric_kinds[i], "metric kind");
      const auto k = biaslens::parse_metric_kind(metric_kinds[i]);
      if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
    }
    auto specs = biaslens::load_attribute_specs(attributes_path);
    const biaslens::Corpus corpus = biaslens::load_corpus(corpus_path, run_name, specs);

    std::vector<biaslens::RunMetrics> blocks;
    if (corpus.total_points() > 0) {
      for (const auto& attr : corpus.attribute_specs()) {
        const auto counts = biaslens::count_cooccurrences_sharded(corpus, attr, shards);
        for (auto k : kinds) blocks.push_back(biaslens::compute_run_metrics(counts, k, run_name));
      }
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) biaslens::fail(biaslens::ErrorCode::kIo, "cannot create " + std::string(out_dir) + ": " + ec.message());
    write_atomically(biaslens::artifact_path(out_dir, run_name),
                     [&](std::ostream& out) { biaslens::write_metric_artifact(out, blocks); });

    if (summary) {
      *summary = {};
      summary->total_points = corpus.total_points();
      summary->vocabulary_size = corpus.label_vocabulary().size();
      summary->attribute_count = static_cast<uint32_t>(corpus.attribute_specs().size());
      for (const auto& a : corpus.attribute_specs()) summary->direction_count += a.directions.size();
      for (const auto& b : blocks) summary->rows_written += b.values.size();
      summary->elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  });
}

bl_status bl_artifact_path(const char* dir, const char* run_name, bl_buffer* out) {
  return guarded([&] {
    require(dir, "dir");
    require(run_name, "run_name");
    require(out, "out");
    fill_buffer(out, biaslens::artifact_path(dir, run_name).string());
  });
}

bl_status bl_export_report(const char* artifacts_dir, const char* session_path, const char* format,
                           bl_buffer* out) {
  return guarded([&] {
    require(artifacts_dir, "artifacts_dir");
    require(session_path, "session_path");
    require(out, "out");
    const auto fmt = biaslens::parse_report_format(opt(format, "tsv"));
    const auto state = biaslens::load_session(session_path, false);
    const auto ws = biaslens::Workspace::load(artifacts_dir, std::nullopt, state.workspace_id);
    fill_buffer(out, biaslens::export_report(state, ws, ws.direction_selectors(), fmt));
  });
}

bl_status bl_write_fixture(const bl_fixture_options* options) {
  return guarded([&] {
    namespace fx = biaslens::fixtures;
    require(options, "options");
    require(options->name, "name");
    require(options->out_path, "out_path");
    const std::string name = options->name;
    std::vector<biaslens::AttributeSpec> attrs;

    if (name == "clusters") {
      fx::ClusterSpec spec;
      spec.seed = options->seed;
      if (options->points) spec.per_cluster = options->points;
      const auto cf = fx::cluster_embeddings(spec);
      write_atomically(options->out_path, [&](std::ostream& out) { fx::write_embeddings(out, cf.table); });
      return;
    }
    if (name == "tiny") {
      attrs = {fx::gender_attribute()};
      write_atomically(options->out_path, [&](std::ostream& out) { fx::write_corpus(out, fx::tiny_points()); });
    } else if (name == "continent") {
      attrs = {fx::continent_attribute()};
      write_atomically(options->out_path,
                       [&](std::ostream& out) { fx::write_corpus(out, fx::continent_points()); });
    } else if (name == "random") {
      fx::FixtureSpec spec;
      spec.seed = options->seed;
      if (options->points) spec.points = options->points;
      if (options->labels) spec.labels = options->labels;
      spec.planted = {{"skateboard", "male", 0.3}, {"necklace", "female", 0.25}};
      attrs = {spec.attribute};
      const auto points = fx::random_points(spec);
      write_atomically(options->out_path, [&](std::ostream& out) { fx::write_corpus(out, points); });
    } else if (name == "scale") {
      fx::ScaleSpec spec;
      spec.seed = options->seed;
      if (options->points) spec.points = options->points;
      if (options->labels) spec.labels = options->labels;
      attrs = {fx::scale_attribute(spec)};
      write_atomically(options->out_path, [&](std::ostream& out) { fx::write_scale_corpus(out, spec); });
    } else {
      biaslens::fail(biaslens::ErrorCode::kInvalidArgument, "unknown fixture '" + name + "'");
    }
    if (options->attributes_path) {
      write_atomically(options->attributes_path,
                       [&](std::ostream& out) { out << biaslens::format_attribute_specs(attrs); });
    }
  });
}

bl_status bl_server_create(const bl_server_config* config, bl_server** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    require(config->artifacts_dir, "artifacts_dir");
    require(config->session_path, "session_path");
    *out = nullptr;

    const fs::path dir = config->artifacts_dir;
    if (biaslens::list_metric_artifacts(dir).empty()) {
      biaslens::fail(biaslens::ErrorCode::kNotFound, "no *.metrics.tsv artifacts in " + dir.string());
    }
    std::error_code ec;
    if (!config->init_session && !fs::exists(config->session_path, ec)) {
      biaslens::fail(biaslens::ErrorCode::kNotFound,
                     std::string("session file not found: ") + config->session_path + " (pass --init to create it)");
    }
    if (config->embeddings_path && !fs::is_regular_file(config->embeddings_path, ec)) {
      biaslens::fail(biaslens::ErrorCode::kNotFound, std::string("embedding file not found: ") + config->embeddings_path);
    }

    biaslens::ApiOptions options;
    options.cors_origin = opt(config->cors_origin, "*");
    auto s = std::make_unique<bl_server>(std::move(options));
    s->artifacts_dir = dir.string();
    if (config->embeddings_path) s->embeddings = fs::path(config->embeddings_path);
    s->session_path = config->session_path;
    s->init_session = config->init_session != 0;
    if (config->workspace_id && *config->workspace_id) {
      s->workspace_id = config->workspace_id;
    } else {
      const fs::path canonical = fs::weakly_canonical(dir, ec);
      s->workspace_id = (ec ? dir : canonical).filename().string();
      if (s->workspace_id.empty()) s->workspace_id = "workspace";
    }
    if (config->bind_socket) {
      std::optional<fs::path> static_dir;
      if (config->static_dir) static_dir = fs::path(config->static_dir);
      s->http = std::make_unique<biaslens::HttpServer>(s->api, static_dir);
      s->port = s->http->bind(opt(config->host, "127.0.0.1"), config->port);
    }
    *out = s.release();
  });
}

int bl_server_port(const bl_server* server) { return server ? server->port : -1; }

bl_status bl_server_load(bl_server* server) {
  return guarded([&] {
    require(server, "server");
    load_server(*server);
  });
}

bl_status bl_server_run(bl_server* server) {
  return guarded([&] {
    require(server, "server");
    if (!server->http) biaslens::fail(biaslens::ErrorCode::kInvalidArgument, "server was created without a socket");
    std::optional<biaslens::Error> load_error;
    std::jthread loader([&] {
      try {
        load_server(*server);
      } catch (const biaslens::Error& e) {
        load_error = e;
        server->http->stop();
      } catch (const std::exception& e) {
        load_error = biaslens::Error(biaslens::ErrorCode::kInternal, e.what());
        server->http->stop();
      }
    });
    server->http->run();
    loader.join();
    if (load_error) throw *load_error;
  });
}

bl_status bl_server_stop(bl_server* server) {
  return guarded([&] {
    require(server, "server");
    if (server->http) server->http->stop();
  });
}

bl_status bl_server_handle(bl_server* server, const char* method, const char* path, const char* query,
                           const char* body, int* http_status, bl_buffer* response) {
  return guarded([&] {
    require(server, "server");
    require(method, "method");
    require(path, "path");
    require(http_status, "http_status");
    require(response, "response");
    biaslens::HttpRequest req;
    req.method = method;
    req.path = path;
    req.body = opt(body);
    if (query && *query) {
      httplib::Params params;
      httplib::detail::parse_query_text(query, params);
      for (const auto& [k, v] : params) req.query.emplace(k, v);
    }
    const auto res = server->api.handle(req);
    *http_status = res.status;
    fill_buffer(response, res.body);
  });
}

bl_status bl_server_destroy(bl_server* server) {
  if (!server) return BL_OK;
  const bl_status status = guarded([&] {
    if (server->http) server->http->stop();
    std::lock_guard lock(server->load_mu);
    if (server->session) server->session->persist();
  });
  delete server;
  return status;
}

}  // extern "C"
