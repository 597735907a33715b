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

#include "biaslens/api_service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>

#include "biaslens/distribution.hpp"
#include "biaslens/error.hpp"
#include "biaslens/query.hpp"
#include "biaslens/selector.hpp"
#include "json.hpp"

namespace biaslens {

using nlohmann::json;

struct ApiService::ProjectionJob {
  JobKey key;
  std::vector<std::string> subset;
  std::shared_ptr<const Workspace> workspace;
  bool done = false;
  std::optional<Projection2D> result;
  ErrorCode error_code = ErrorCode::kInternal;
  std::string error;
};

namespace {

constexpr std::size_t kMaxHeatmapSide = 1024;

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kUnprocessable:
      return 422;
    case ErrorCode::kIo:
    case ErrorCode::kCorrupt:
    case ErrorCode::kInternal:
      break;
  }
  return 500;
}

json error_body(std::string_view code, const std::string& message, const std::string& field = {}) {
  json e = {{"code", code}, {"message", message}};
  if (!field.empty()) e["field"] = field;
  return json{{"error", std::move(e)}};
}

HttpResponse json_response(int status, const json& body) {
  HttpResponse r;
  r.status = status;
  r.body = body.dump();
  return r;
}

HttpResponse error_response(const Error& e) {
  const auto* fe = dynamic_cast<const FieldError*>(&e);
  return json_response(status_for(e.code()), error_body(to_string(e.code()), e.what(), fe ? fe->field() : ""));
}

[[noreturn]] void bad_field(const std::string& field, const std::string& message) {
  throw FieldError(ErrorCode::kInvalidArgument, field, message);
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) bad_field("body", "request body is not valid JSON");
  if (!j.is_object()) bad_field("body", "request body must be a JSON object");
  return j;
}

const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string()) bad_field(field, "expected a string");
  return v.get<std::string>();
}

double get_number(const json& v, const std::string& field) {
  if (!v.is_number()) bad_field(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad_field(field, "expected a finite number");
  return d;
}

std::uint64_t get_unsigned(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  bad_field(field, "expected a non-negative integer");
}

bool get_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) bad_field(field, "expected a boolean");
  return v.get<bool>();
}

std::vector<std::string> get_strings(const json& v, const std::string& field) {
  if (!v.is_array()) bad_field(field, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_string(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

MetricSelector get_selector(const json& v, const std::string& field) {
  const std::string text = get_string(v, field);
  try {
    return parse_selector(text);
  } catch (const Error& e) {
    bad_field(field, e.what());
  }
}

std::vector<MetricFilter> get_filters(const json& body, const Workspace& ws) {
  std::vector<MetricFilter> out;
  const json* filters = member(body, "filters");
  if (!filters) return out;
  if (!filters->is_array()) bad_field("filters", "expected an array");
  for (std::size_t i = 0; i < filters->size(); ++i) {
    const std::string field = "filters[" + std::to_string(i) + "]";
    const json& f = (*filters)[i];
    if (!f.is_object()) bad_field(field, "expected an object");
    const json* sel = member(f, "selector");
    const json* low = member(f, "low");
    const json* high = member(f, "high");
    if (!sel) bad_field(field + ".selector", "missing selector");
    if (!low) bad_field(field + ".low", "missing low bound");
    if (!high) bad_field(field + ".high", "missing high bound");
    MetricFilter filter{get_selector(*sel, field + ".selector"), get_number(*low, field + ".low"),
                        get_number(*high, field + ".high")};
    validate_filter(ws, filter, field);
    out.push_back(std::move(filter));
  }
  return out;
}

// Fields shared by the query and projection bodies.
void read_subset_fields(const json& body, const Workspace& ws, QuerySpec& spec) {
  spec.filters = get_filters(body, ws);
  if (const json* v = member(body, "include_hidden")) spec.include_hidden = get_bool(*v, "include_hidden");
  if (const json* v = member(body, "label_prefix")) spec.label_prefix = get_string(*v, "label_prefix");
  if (const json* v = member(body, "active_runs")) spec.active_runs = get_strings(*v, "active_runs");
  if (const json* v = member(body, "embedding_selection")) {
    auto labels = get_strings(*v, "embedding_selection");
    spec.embedding_selection.emplace(labels.begin(), labels.end());
  }
  resolve_active_runs(ws, spec.active_runs);
}

QuerySpec read_query(const json& body, const Workspace& ws, std::size_t max_limit) {
  QuerySpec spec;
  read_subset_fields(body, ws, spec);
  if (const json* s = member(body, "sort")) {
    if (!s->is_object()) bad_field("sort", "expected an object");
    const json* by = member(*s, "by");
    if (!by) bad_field("sort.by", "missing sort kind");
    const std::string kind = get_string(*by, "sort.by");
    if (kind == "label") {
      spec.sort = SortByLabel{};
    } else if (kind == "metric") {
      const json* sel = member(*s, "selector");
      if (!sel) bad_field("sort.selector", "missing selector");
      SortByMetric m{get_selector(*sel, "sort.selector"), true};
      ws.validate(m.selector, "sort.selector");
      if (const json* d = member(*s, "descending")) m.descending = get_bool(*d, "sort.descending");
      spec.sort = std::move(m);
    } else if (kind == "similarity") {
      const json* anchor = member(*s, "anchor");
      if (!anchor) bad_field("sort.anchor", "missing anchor label");
      spec.sort = SortBySimilarity{get_string(*anchor, "sort.anchor")};
    } else {
      bad_field("sort.by", "unknown sort kind '" + kind + "'");
    }
  }
  if (const json* v = member(body, "columns")) {
    auto names = get_strings(*v, "columns");
    std::vector<MetricSelector> columns;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const std::string field = "columns[" + std::to_string(i) + "]";
      columns.push_back(get_selector((*v)[i], field));
      ws.validate(columns.back(), field);
    }
    spec.columns = std::move(columns);
  }
  if (const json* v = member(body, "offset")) spec.offset = get_unsigned(*v, "offset");
  if (const json* v = member(body, "limit")) {
    const std::uint64_t limit = get_unsigned(*v, "limit");
    if (limit == 0 || limit > max_limit) {
      bad_field("limit", "limit must lie in [1, " + std::to_string(max_limit) + "]");
    }
    spec.limit = limit;
  }
  return spec;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json cell_json(const Cell& cell) {
  json parts = json::array();
  std::optional<std::uint64_t> joint;
  for (const auto& p : cell.parts) {
    parts.push_back({{"value", optional_number(p.value)},
                     {"joint_count", p.joint_count},
                     {"label_count", p.label_count},
                     {"direction_count", p.direction_count}});
    joint = joint ? std::min(*joint, p.joint_count) : p.joint_count;
  }
  return {{"value", optional_number(cell.value)},
          {"joint_count", joint ? json(*joint) : json(nullptr)},
          {"parts", std::move(parts)}};
}

json session_json(const SessionState& s) {
  return {{"workspace_id", s.workspace_id},
          {"revision", s.revision},
          {"flagged", std::vector<std::string>(s.flagged.begin(), s.flagged.end())},
          {"hidden", std::vector<std::string>(s.hidden.begin(), s.hidden.end())}};
}

std::uint64_t run_total(const RunEntry& run) { return run.blocks.empty() ? 0 : run.blocks.front().total_points; }

std::string hex(std::uint64_t v) {
  char buf[17];
  auto res = std::to_chars(buf, buf + sizeof buf, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

json projection_json(const Projection2D& p) {
  json points = json::object();
  for (std::size_t i = 0; i < p.labels.size(); ++i) points[p.labels[i]] = {p.points[i][0], p.points[i][1]};
  return {{"method", p.method},
          {"parameters",
           {{"neighbor_count", p.parameters.neighbor_count},
            {"min_dist", p.parameters.min_dist},
            {"epochs", p.parameters.epochs},
            {"seed", p.parameters.seed}}},
          {"points", std::move(points)},
          {"dropped", p.dropped},
          {"subset_hash", hex(p.subset_hash)}};
}

const char* kSchema = R"json({
  "QueryRequest": {
    "type": "object",
    "properties": {
      "filters": {"type": "array", "items": {"$ref": "#/MetricFilter"}},
      "sort": {"$ref": "#/SortSpec"},
      "include_hidden": {"type": "boolean", "default": false},
      "embedding_selection": {"type": "array", "items": {"type": "string"}},
      "label_prefix": {"type": "string"},
      "active_runs": {"type": "array", "items": {"type": "string"}},
      "columns": {"type": "array", "items": {"$ref": "#/Selector"}},
      "offset": {"type": "integer", "minimum": 0, "default": 0},
      "limit": {"type": "integer", "minimum": 1, "default": 50}
    }
  },
  "Selector": {
    "type": "string",
    "description": "kind:attribute:direction or kind:attribute:positive:negative",
    "pattern": "^(npmi|pmi|jaccard|dice):[^:]+:[^:]+(:[^:]+)?$"
  },
  "MetricFilter": {
    "type": "object",
    "required": ["selector", "low", "high"],
    "properties": {
      "selector": {"$ref": "#/Selector"},
      "low": {"type": "number"},
      "high": {"type": "number"}
    }
  },
  "SortSpec": {
    "type": "object",
    "required": ["by"],
    "properties": {
      "by": {"enum": ["label", "metric", "similarity"]},
      "selector": {"$ref": "#/Selector"},
      "descending": {"type": "boolean", "default": true},
      "anchor": {"type": "string"}
    }
  },
  "QueryResponse": {
    "type": "object",
    "properties": {
      "columns": {"type": "array", "items": {"$ref": "#/Selector"}},
      "runs": {"type": "array", "items": {"type": "string"}},
      "rows": {"type": "array", "items": {"$ref": "#/AnnotationRow"}},
      "total_matching": {"type": "integer"},
      "revision": {"type": "integer"}
    }
  },
  "AnnotationRow": {
    "type": "object",
    "properties": {
      "label": {"type": "string"},
      "flagged": {"type": "boolean"},
      "hidden": {"type": "boolean"},
      "sort_key": {"type": ["number", "null"]},
      "cells": {"type": "object", "additionalProperties": {"type": "array", "items": {"$ref": "#/Cell"}}}
    }
  },
  "Cell": {
    "type": "object",
    "properties": {
      "value": {"type": ["number", "null"]},
      "joint_count": {"type": ["integer", "null"]},
      "parts": {"type": "array", "items": {"$ref": "#/MetricValue"}}
    }
  },
  "MetricValue": {
    "type": "object",
    "properties": {
      "value": {"type": ["number", "null"]},
      "joint_count": {"type": "integer"},
      "label_count": {"type": "integer"},
      "direction_count": {"type": "integer"}
    }
  },
  "Workspace": {
    "type": "object",
    "properties": {
      "id": {"type": "string"},
      "runs": {"type": "array", "items": {"type": "object", "properties": {
        "name": {"type": "string"}, "color_index": {"type": "integer"}, "total_points": {"type": "integer"}}}},
      "attributes": {"type": "array", "items": {"type": "object", "properties": {
        "name": {"type": "string"}, "directions": {"type": "array", "items": {"type": "string"}}}}},
      "metric_kinds": {"type": "array"},
      "selectors": {"type": "array", "items": {"$ref": "#/Selector"}},
      "vocabulary_size": {"type": "integer"},
      "embedding_available": {"type": "boolean"}
    }
  },
  "DistributionResponse": {
    "type": "object",
    "properties": {
      "selector": {"$ref": "#/Selector"},
      "domain": {"type": "object", "properties": {"low": {"type": "number"}, "high": {"type": "number"}}},
      "curves": {"type": "array", "items": {"type": "object", "properties": {
        "run": {"type": "string"},
        "grid": {"type": "array", "items": {"type": "number"}},
        "densities": {"type": "array", "items": {"type": "number"}},
        "sample_count": {"type": "integer"},
        "bandwidth": {"type": "number"}}}}
    }
  },
  "ProjectionRequest": {
    "type": "object",
    "properties": {
      "filters": {"type": "array", "items": {"$ref": "#/MetricFilter"}},
      "selector": {"$ref": "#/Selector"},
      "seed": {"type": "integer", "minimum": 0, "default": 0},
      "bandwidth": {"type": "number", "exclusiveMinimum": 0, "default": 0.05},
      "width": {"type": "integer", "minimum": 1, "maximum": 1024, "default": 256},
      "height": {"type": "integer", "minimum": 1, "maximum": 1024, "default": 256},
      "include_hidden": {"type": "boolean"},
      "label_prefix": {"type": "string"},
      "active_runs": {"type": "array", "items": {"type": "string"}}
    }
  },
  "ProjectionResponse": {
    "type": "object",
    "required": ["status", "subset_hash"],
    "properties": {
      "status": {"enum": ["ready", "pending"]},
      "subset_hash": {"type": "string"},
      "projection": {"type": "object", "properties": {
        "method": {"enum": ["umap", "pca", "line"]},
        "parameters": {"type": "object"},
        "points": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
        "dropped": {"type": "array", "items": {"type": "string"}}}},
      "heatmap": {"type": "object", "properties": {
        "width": {"type": "integer"}, "height": {"type": "integer"}, "bandwidth": {"type": "number"},
        "intensities": {"type": "array", "items": {"type": "number"}}}}
    }
  },
  "SessionMutation": {
    "type": "object",
    "required": ["action", "labels"],
    "properties": {
      "action": {"enum": ["flag", "unflag", "hide", "unhide"]},
      "labels": {"type": "array", "items": {"type": "string"}, "minItems": 1},
      "expected_revision": {"type": "integer", "minimum": 0}
    }
  },
  "SessionState": {
    "type": "object",
    "properties": {
      "workspace_id": {"type": "string"},
      "revision": {"type": "integer"},
      "flagged": {"type": "array", "items": {"type": "string"}},
      "hidden": {"type": "array", "items": {"type": "string"}}
    }
  },
  "Error": {
    "type": "object",
    "properties": {"error": {"type": "object", "properties": {
      "code": {"type": "string"}, "message": {"type": "string"}, "field": {"type": "string"}}}}
  }
})json";

}  // namespace

ApiService::ApiService(ApiOptions options) : options_(std::move(options)) {
  const std::size_t n = std::max<std::size_t>(options_.projection_workers, 1);
  for (std::size_t i = 0; i < n; ++i) {
    workers_.emplace_back([this](std::stop_token stop) { worker_loop(stop); });
  }
}

ApiService::~ApiService() {
  for (auto& w : workers_) w.request_stop();
  jobs_cv_.notify_all();
  workers_.clear();
}

void ApiService::initialize(std::shared_ptr<const Workspace> workspace, std::shared_ptr<SessionStore> session) {
  std::lock_guard lock(state_mu_);
  workspace_ = std::move(workspace);
  session_ = std::move(session);
}

bool ApiService::ready() const {
  std::lock_guard lock(state_mu_);
  return workspace_ && session_;
}

std::shared_ptr<SessionStore> ApiService::session() const {
  std::lock_guard lock(state_mu_);
  return session_;
}

void ApiService::wait_for_projections() {
  std::unique_lock lock(jobs_mu_);
  jobs_idle_cv_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
}

void ApiService::worker_loop(std::stop_token stop) {
  while (true) {
    std::shared_ptr<ProjectionJob> job;
    {
      std::unique_lock lock(jobs_mu_);
      if (!jobs_cv_.wait(lock, stop, [this] { return !queue_.empty(); })) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      ++running_;
    }
    std::optional<Projection2D> result;
    ErrorCode code = ErrorCode::kInternal;
    std::string error;
    try {
      result = project(job->subset, *job->workspace->embeddings(), job->key.seed);
    } catch (const Error& e) {
      code = e.code();
      error = e.what();
    } catch (const std::exception& e) {
      error = e.what();
    }
    {
      std::lock_guard lock(jobs_mu_);
      job->result = std::move(result);
      job->error_code = code;
      job->error = std::move(error);
      job->done = true;
      --running_;
    }
    jobs_idle_cv_.notify_all();
  }
}

HttpResponse ApiService::handle(const HttpRequest& request) {
  HttpResponse r;
  if (request.method == "OPTIONS") {
    r.status = 204;
    r.content_type.clear();
    r.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
    r.headers["Access-Control-Allow-Headers"] = "Content-Type";
    r.headers["Access-Control-Max-Age"] = "600";
  } else {
    try {
      r = route(request);
    } catch (const Error& e) {
      r = error_response(e);
    } catch (const std::exception& e) {
      r = json_response(500, error_body("internal", e.what()));
    }
  }
  r.headers["Access-Control-Allow-Origin"] = options_.cors_origin;
  return r;
}

HttpResponse ApiService::route(const HttpRequest& request) {
  const std::string& path = request.path;
  const bool get = request.method == "GET";
  const bool post = request.method == "POST";

  if (path == "/api/schema") {
    if (!get) return json_response(405, error_body("method_not_allowed", "use GET"));
    return json_response(200, json::parse(kSchema));
  }

  struct Route {
    const char* path;
    const char* method;
  };
  static constexpr Route kRoutes[] = {
      {"/api/workspace", "GET"},    {"/api/annotations/query", "POST"}, {"/api/distribution", "GET"},
      {"/api/projection", "POST"}, {"/api/session", "GET"},             {"/api/session", "POST"},
      {"/api/export", "GET"},
  };
  bool path_known = false;
  bool method_ok = false;
  for (const auto& rt : kRoutes) {
    if (path == rt.path) {
      path_known = true;
      method_ok = method_ok || request.method == rt.method;
    }
  }
  if (!path_known) return json_response(404, error_body("not_found", "no endpoint at " + path));
  if (!method_ok) return json_response(405, error_body("method_not_allowed", request.method + " not allowed here"));

  if (!ready()) {
    HttpResponse r = json_response(503, error_body("unavailable", "workspace is still loading"));
    r.headers["Retry-After"] = "1";
    return r;
  }

  if (path == "/api/workspace") return get_workspace();
  if (path == "/api/annotations/query") return post_query(request);
  if (path == "/api/distribution") return get_distribution(request);
  if (path == "/api/projection") return post_projection(request);
  if (path == "/api/session") return get ? get_session() : post_session(request);
  if (path == "/api/export" && get) return get_export(request);
  (void)post;
  return json_response(404, error_body("not_found", "no endpoint at " + path));
}

HttpResponse ApiService::get_workspace() {
  std::shared_ptr<const Workspace> ws;
  {
    std::lock_guard lock(state_mu_);
    ws = workspace_;
  }
  json runs = json::array();
  for (const auto& run : ws->runs()) {
    runs.push_back({{"name", run.name}, {"color_index", run.color_index}, {"total_points", run_total(run)}});
  }
  json attributes = json::array();
  for (const auto& a : ws->attributes()) attributes.push_back({{"name", a.name}, {"directions", a.directions}});
  json kinds = json::array();
  for (const auto& b : ws->metric_blocks()) kinds.push_back({{"attribute", b.attribute}, {"kind", to_string(b.kind)}});
  json selectors = json::array();
  for (const auto& s : ws->direction_selectors()) selectors.push_back(to_string(s));
  return json_response(200, {{"id", ws->id()},
                             {"runs", std::move(runs)},
                             {"attributes", std::move(attributes)},
                             {"metric_kinds", std::move(kinds)},
                             {"selectors", std::move(selectors)},
                             {"vocabulary_size", ws->labels().size()},
                             {"embedding_available", ws->embeddings() != nullptr}});
}

HttpResponse ApiService::post_query(const HttpRequest& request) {
  std::shared_ptr<const Workspace> ws;
  std::shared_ptr<SessionStore> store;
  {
    std::lock_guard lock(state_mu_);
    ws = workspace_;
    store = session_;
  }
  const QuerySpec spec = read_query(parse_body(request.body), *ws, options_.max_limit);
  const QueryResult result = query_annotations(spec, *ws, store->snapshot());

  json columns = json::array();
  for (const auto& c : result.columns) columns.push_back(to_string(c));
  json rows = json::array();
  for (const auto& row : result.rows) {
    json cells = json::object();
    for (const auto& rc : row.runs) {
      json list = json::array();
      for (const auto& cell : rc.cells) list.push_back(cell_json(cell));
      cells[rc.run] = std::move(list);
    }
    rows.push_back({{"label", row.label},
                    {"flagged", row.flagged},
                    {"hidden", row.hidden},
                    {"sort_key", optional_number(row.sort_key)},
                    {"cells", std::move(cells)}});
  }
  return json_response(200, {{"columns", std::move(columns)},
                             {"runs", result.runs},
                             {"rows", std::move(rows)},
                             {"total_matching", result.total_matching},
                             {"revision", result.revision}});
}

HttpResponse ApiService::get_distribution(const HttpRequest& request) {
  std::shared_ptr<const Workspace> ws;
  {
    std::lock_guard lock(state_mu_);
    ws = workspace_;
  }
  auto sel_it = request.query.find("selector");
  if (sel_it == request.query.end()) bad_field("selector", "missing selector parameter");
  const MetricSelector selector = get_selector(json(sel_it->second), "selector");
  ws->validate(selector, "selector");

  std::vector<std::string> names;
  if (auto it = request.query.find("runs"); it != request.query.end() && !it->second.empty()) {
    std::string_view rest = it->second;
    while (true) {
      const auto comma = rest.find(',');
      names.emplace_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  std::vector<std::size_t> runs;
  for (const auto& n : names) {
    auto idx = ws->run_index(n);
    if (!idx) bad_field("runs", "unknown run '" + n + "'");
    runs.push_back(*idx);
  }
  if (names.empty()) {
    for (std::size_t r = 0; r < ws->runs().size(); ++r) runs.push_back(r);
  }

  const ValueDomain domain = distribution_domain(*ws, selector, runs);
  json curves = json::array();
  for (const auto& c : selector_distributions(*ws, selector, runs)) {
    curves.push_back({{"run", c.run},
                      {"grid", c.grid},
                      {"densities", c.densities},
                      {"sample_count", c.sample_count},
                      {"bandwidth", c.bandwidth}});
  }
  return json_response(200, {{"selector", to_string(selector)},
                             {"domain", {{"low", domain.low}, {"high", domain.high}}},
                             {"curves", std::move(curves)}});
}

HttpResponse ApiService::post_projection(const HttpRequest& request) {
  std::shared_ptr<const Workspace> ws;
  std::shared_ptr<SessionStore> store;
  {
    std::lock_guard lock(state_mu_);
    ws = workspace_;
    store = session_;
  }
  if (!ws->embeddings()) {
    return json_response(409, error_body(to_string(ErrorCode::kConflict), "no embeddings loaded"));
  }
  const json body = parse_body(request.body);
  QuerySpec spec;
  read_subset_fields(body, *ws, spec);
  std::optional<MetricSelector> selector;
  if (const json* v = member(body, "selector")) {
    selector = get_selector(*v, "selector");
    ws->validate(*selector, "selector");
  }
  std::uint64_t seed = 0;
  if (const json* v = member(body, "seed")) seed = get_unsigned(*v, "seed");
  double bandwidth = kDefaultHeatmapBandwidth;
  if (const json* v = member(body, "bandwidth")) {
    if (!v->is_number() || !(v->get<double>() > 0.0) || !std::isfinite(v->get<double>())) {
      bad_field("bandwidth", "bandwidth must be a positive number");
    }
    bandwidth = v->get<double>();
  }
  std::size_t width = kDefaultHeatmapSize;
  std::size_t height = kDefaultHeatmapSize;
  if (const json* v = member(body, "width")) width = get_unsigned(*v, "width");
  if (const json* v = member(body, "height")) height = get_unsigned(*v, "height");
  if (width == 0 || height == 0 || width > kMaxHeatmapSide || height > kMaxHeatmapSide) {
    bad_field(width == 0 || width > kMaxHeatmapSide ? "width" : "height",
              "heatmap sides must lie in [1, " + std::to_string(kMaxHeatmapSide) + "]");
  }

  const std::vector<std::size_t> active = resolve_active_runs(*ws, spec.active_runs);
  std::vector<std::string> subset;
  for (auto idx : matching_labels(spec, *ws, store->snapshot())) {
    if (ws->embeddings()->contains(ws->labels()[idx])) subset.push_back(ws->labels()[idx]);
  }
  if (subset.empty()) {
    return json_response(422, error_body(to_string(ErrorCode::kUnprocessable),
                                         "no filtered label has an embedding to project", "filters"));
  }

  const JobKey key{subset_hash(subset), seed};
  std::shared_ptr<ProjectionJob> job;
  {
    std::lock_guard lock(jobs_mu_);
    auto& slot = jobs_[key];
    if (!slot) {
      slot = std::make_shared<ProjectionJob>();
      slot->key = key;
      slot->subset = subset;
      slot->workspace = ws;
      queue_.push_back(slot);
      jobs_cv_.notify_one();
      return json_response(202, {{"status", "pending"}, {"subset_hash", hex(key.subset_hash)}});
    }
    if (!slot->done) return json_response(202, {{"status", "pending"}, {"subset_hash", hex(key.subset_hash)}});
    job = slot;
  }
  if (!job->result) {
    return json_response(status_for(job->error_code), error_body(to_string(job->error_code), job->error));
  }

  const Projection2D& projection = *job->result;
  json out = {{"status", "ready"}, {"subset_hash", hex(key.subset_hash)}, {"projection", projection_json(projection)}};
  if (selector) {
    std::vector<std::optional<Workspace::Resolved>> resolved;
    for (auto r : active) resolved.push_back(ws->resolve(r, *selector));
    std::map<std::string, double, std::less<>> values;
    for (const auto& label : projection.labels) {
      std::optional<double> best;
      if (auto idx = ws->label_index(label)) {
        for (const auto& res : resolved) {
          if (!res) continue;
          if (auto v = Workspace::value(*res, *idx)) best = best ? std::max(*best, *v) : *v;
        }
      }
      values[label] = best.value_or(0.0);
    }
    const HeatmapGrid grid = rasterize_heatmap(projection, values, bandwidth, width, height);
    out["heatmap"] = {{"width", grid.width},
                      {"height", grid.height},
                      {"bandwidth", grid.bandwidth},
                      {"selector", to_string(*selector)},
                      {"intensities", grid.intensities}};
  }
  return json_response(200, out);
}

HttpResponse ApiService::get_session() { return json_response(200, session_json(session()->snapshot())); }

HttpResponse ApiService::post_session(const HttpRequest& request) {
  const json body = parse_body(request.body);
  const json* action = member(body, "action");
  if (!action) bad_field("action", "missing action");
  const SessionAction act = parse_session_action(get_string(*action, "action"));
  const json* labels = member(body, "labels");
  if (!labels) bad_field("labels", "missing labels");
  const auto names = get_strings(*labels, "labels");
  const std::set<std::string, std::less<>> label_set(names.begin(), names.end());
  std::optional<std::uint64_t> expected;
  if (const json* v = member(body, "expected_revision")) expected = get_unsigned(*v, "expected_revision");

  const auto result = session()->apply(act, label_set, expected);
  if (!result.applied) {
    json out = error_body(to_string(ErrorCode::kConflict), "stale revision; current revision is " +
                                                               std::to_string(result.state.revision));
    out["state"] = session_json(result.state);
    return json_response(409, out);
  }
  return json_response(200, session_json(result.state));
}

HttpResponse ApiService::get_export(const HttpRequest& request) {
  std::shared_ptr<const Workspace> ws;
  {
    std::lock_guard lock(state_mu_);
    ws = workspace_;
  }
  ReportFormat format = ReportFormat::kTsv;
  if (auto it = request.query.find("format"); it != request.query.end()) format = parse_report_format(it->second);
  const auto selectors = ws->direction_selectors();
  HttpResponse r;
  r.body = export_report(session()->snapshot(), *ws, selectors, format);
  const bool tsv = format == ReportFormat::kTsv;
  r.content_type = tsv ? "text/tab-separated-values; charset=utf-8" : "text/plain; charset=utf-8";
  r.headers["Content-Disposition"] =
      "attachment; filename=\"bias-report-" + ws->id() + (tsv ? ".tsv" : ".txt") + "\"";
  return r;
}

}  // namespace biaslens
