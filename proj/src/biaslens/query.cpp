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

#include "biaslens/query.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biaslens/error.hpp"

namespace biaslens {

void validate_filter(const Workspace& workspace, const MetricFilter& filter, const std::string& field) {
  workspace.validate(filter.selector, field + ".selector");
  if (!std::isfinite(filter.low) || !std::isfinite(filter.high)) {
    throw FieldError(ErrorCode::kInvalidArgument, field, "filter bounds must be finite numbers");
  }
  if (filter.low > filter.high) {
    throw FieldError(ErrorCode::kInvalidArgument, field + ".low", "filter low bound exceeds high bound");
  }
  if (auto domain = selector_domain(filter.selector)) {
    if (filter.low < domain->low || filter.high > domain->high) {
      throw FieldError(ErrorCode::kInvalidArgument, field,
                       "filter range for " + to_string(filter.selector) + " must lie within [" +
                           std::to_string(domain->low) + ", " + std::to_string(domain->high) + "]");
    }
  }
}

std::vector<std::size_t> resolve_active_runs(const Workspace& workspace, std::span<const std::string> names) {
  std::vector<std::size_t> out;
  if (names.empty()) {
    out.resize(workspace.runs().size());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  for (const auto& n : names) {
    auto idx = workspace.run_index(n);
    if (!idx) throw FieldError(ErrorCode::kInvalidArgument, "active_runs", "unknown run '" + n + "'");
    if (std::find(out.begin(), out.end(), *idx) == out.end()) out.push_back(*idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

using ResolvedRuns = std::vector<std::optional<Workspace::Resolved>>;

ResolvedRuns resolve_all(const Workspace& ws, const MetricSelector& sel, std::span<const std::size_t> runs) {
  ResolvedRuns out;
  out.reserve(runs.size());
  for (auto r : runs) out.push_back(ws.resolve(r, sel));
  return out;
}

bool passes(const ResolvedRuns& resolved, std::size_t label, double low, double high) {
  for (const auto& r : resolved) {
    if (!r) continue;
    auto v = Workspace::value(*r, label);
    if (v && *v >= low && *v <= high) return true;
  }
  return false;
}

std::optional<double> max_value(const ResolvedRuns& resolved, std::size_t label) {
  std::optional<double> best;
  for (const auto& r : resolved) {
    if (!r) continue;
    auto v = Workspace::value(*r, label);
    if (v && (!best || *v > *best)) best = v;
  }
  return best;
}

struct Keyed {
  std::size_t label;
  std::optional<double> key;
};

// Present keys first (ordered by key), then absent keys; ties by label
// name, which equals label index order.
void sort_keyed(std::vector<Keyed>& rows, bool descending) {
  std::sort(rows.begin(), rows.end(), [descending](const Keyed& a, const Keyed& b) {
    if (a.key.has_value() != b.key.has_value()) return a.key.has_value();
    if (a.key && *a.key != *b.key) return descending ? *a.key > *b.key : *a.key < *b.key;
    return a.label < b.label;
  });
}

SortSpec effective_sort(const QuerySpec& spec) {
  if (spec.sort) return *spec.sort;
  if (!spec.filters.empty()) return SortByMetric{spec.filters.back().selector, true};
  return SortByLabel{};
}

std::vector<Keyed> select_and_sort(const QuerySpec& spec, const Workspace& ws, const SessionState& session,
                                   std::span<const std::size_t> runs) {
  for (std::size_t i = 0; i < spec.filters.size(); ++i) {
    validate_filter(ws, spec.filters[i], "filters[" + std::to_string(i) + "]");
  }
  std::vector<ResolvedRuns> filters;
  for (const auto& f : spec.filters) filters.push_back(resolve_all(ws, f.selector, runs));

  const SortSpec sort = effective_sort(spec);
  ResolvedRuns sort_runs;
  const std::vector<double>* anchor = nullptr;
  if (const auto* m = std::get_if<SortByMetric>(&sort)) {
    ws.validate(m->selector, "sort.selector");
    sort_runs = resolve_all(ws, m->selector, runs);
  } else if (const auto* s = std::get_if<SortBySimilarity>(&sort)) {
    if (!ws.embeddings()) throw FieldError(ErrorCode::kConflict, "sort.anchor", "no embeddings loaded");
    anchor = ws.embeddings()->find(s->anchor);
    if (!anchor) {
      throw FieldError(ErrorCode::kUnprocessable, "sort.anchor", "anchor label '" + s->anchor + "' has no embedding");
    }
  }

  std::vector<Keyed> rows;
  const auto& labels = ws.labels();
  for (std::size_t l = 0; l < labels.size(); ++l) {
    const std::string& name = labels[l];
    if (!spec.include_hidden && session.hidden.contains(name)) continue;
    if (spec.label_prefix && !name.starts_with(*spec.label_prefix)) continue;
    if (spec.embedding_selection && !spec.embedding_selection->contains(name)) continue;
    bool ok = true;
    for (std::size_t f = 0; f < filters.size() && ok; ++f) {
      ok = passes(filters[f], l, spec.filters[f].low, spec.filters[f].high);
    }
    if (!ok) continue;
    Keyed k{l, std::nullopt};
    if (!sort_runs.empty()) {
      k.key = max_value(sort_runs, l);
    } else if (anchor) {
      if (const auto* v = ws.embeddings()->find(name)) k.key = cosine_similarity(*anchor, *v);
    }
    rows.push_back(k);
  }

  if (const auto* m = std::get_if<SortByMetric>(&sort)) {
    sort_keyed(rows, m->descending);
  } else if (anchor) {
    sort_keyed(rows, true);
  }
  return rows;
}

}  // namespace

bool label_passes_filter(const Workspace& workspace, std::size_t label, const MetricFilter& filter,
                         std::span<const std::size_t> active_runs) {
  validate_filter(workspace, filter);
  return passes(resolve_all(workspace, filter.selector, active_runs), label, filter.low, filter.high);
}

std::vector<std::size_t> matching_labels(const QuerySpec& spec, const Workspace& workspace,
                                         const SessionState& session) {
  const auto runs = resolve_active_runs(workspace, spec.active_runs);
  const auto rows = select_and_sort(spec, workspace, session, runs);
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

QueryResult query_annotations(const QuerySpec& spec, const Workspace& workspace, const SessionState& session) {
  if (spec.limit == 0) throw FieldError(ErrorCode::kInvalidArgument, "limit", "limit must be positive");
  const auto runs = resolve_active_runs(workspace, spec.active_runs);
  const auto rows = select_and_sort(spec, workspace, session, runs);

  QueryResult result;
  result.revision = session.revision;
  result.total_matching = rows.size();
  for (auto r : runs) result.runs.push_back(workspace.runs()[r].name);

  if (spec.columns) {
    for (std::size_t i = 0; i < spec.columns->size(); ++i) {
      workspace.validate((*spec.columns)[i], "columns[" + std::to_string(i) + "]");
    }
    result.columns = *spec.columns;
  } else {
    result.columns = workspace.direction_selectors();
    auto add_diff = [&](const MetricSelector& s) {
      if (s.is_diff() && std::find(result.columns.begin(), result.columns.end(), s) == result.columns.end()) {
        result.columns.push_back(s);
      }
    };
    for (const auto& f : spec.filters) add_diff(f.selector);
    if (spec.sort) {
      if (const auto* m = std::get_if<SortByMetric>(&*spec.sort)) add_diff(m->selector);
    }
  }

  std::vector<ResolvedRuns> column_runs;
  for (const auto& c : result.columns) column_runs.push_back(resolve_all(workspace, c, runs));

  const std::size_t begin = std::min(spec.offset, rows.size());
  const std::size_t end = std::min(rows.size(), begin + std::min(spec.limit, rows.size()));
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t l = rows[i].label;
    AnnotationView view;
    view.label = workspace.labels()[l];
    view.flagged = session.flagged.contains(view.label);
    view.hidden = session.hidden.contains(view.label);
    view.sort_key = rows[i].key;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      RunCells rc;
      rc.run = workspace.runs()[runs[r]].name;
      for (const auto& cr : column_runs) rc.cells.push_back(cr[r] ? Workspace::evaluate(*cr[r], l) : Cell{});
      view.runs.push_back(std::move(rc));
    }
    result.rows.push_back(std::move(view));
  }
  return result;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) fail(ErrorCode::kInvalidArgument, "cosine_similarity: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) fail(ErrorCode::kInvalidArgument, "cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

}  // namespace biaslens
