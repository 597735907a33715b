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

// Annotation queries: range filters over metric columns, sorting, paging,
// and the join with triage state.
//
// Filter semantics:
//  * bounds are inclusive;
//  * a label passes a filter when ANY active run has a present value in
//    range; absent values never pass;
//  * multiple filters combine by conjunction.
//
// Sorting by metric uses the maximum present value across active runs as
// the key; labels without a key sort last; ties break by label name.

#ifndef BIASLENS_QUERY_HPP_
#define BIASLENS_QUERY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "biaslens/selector.hpp"
#include "biaslens/session.hpp"
#include "biaslens/workspace.hpp"

namespace biaslens {

struct MetricFilter {
  MetricSelector selector;
  double low = 0.0;
  double high = 0.0;
};

struct SortByLabel {};
struct SortByMetric {
  MetricSelector selector;
  bool descending = true;
};
struct SortBySimilarity {
  std::string anchor;
};
using SortSpec = std::variant<SortByLabel, SortByMetric, SortBySimilarity>;

struct QuerySpec {
  std::vector<MetricFilter> filters;
  // Unset: sort by the most recently added filter's selector, or by label
  // when there are no filters.
  std::optional<SortSpec> sort;
  bool include_hidden = false;
  std::optional<std::set<std::string, std::less<>>> embedding_selection;
  std::optional<std::string> label_prefix;
  std::vector<std::string> active_runs;  // empty: every loaded run
  // Cell columns; unset: every direction column plus any diff selectors
  // named by filters or the sort.
  std::optional<std::vector<MetricSelector>> columns;
  std::size_t offset = 0;
  std::size_t limit = 50;
};

struct RunCells {
  std::string run;
  std::vector<Cell> cells;  // aligned with QueryResult::columns
};

struct AnnotationView {
  std::string label;
  std::vector<RunCells> runs;  // one entry per active run
  bool flagged = false;
  bool hidden = false;
  std::optional<double> sort_key;
};

struct QueryResult {
  std::vector<MetricSelector> columns;
  std::vector<std::string> runs;
  std::vector<AnnotationView> rows;
  std::size_t total_matching = 0;
  std::uint64_t revision = 0;
};

// Throws FieldError(kInvalidArgument) on unknown selectors, low > high, or
// bounds outside the selector's value domain.
void validate_filter(const Workspace& workspace, const MetricFilter& filter, const std::string& field = "filters");

// Maps run names to indices; empty input selects every run.
std::vector<std::size_t> resolve_active_runs(const Workspace& workspace, std::span<const std::string> names);

bool label_passes_filter(const Workspace& workspace, std::size_t label, const MetricFilter& filter,
                         std::span<const std::size_t> active_runs);

// Workspace label indices that match the query, in sorted order, before
// paging.
std::vector<std::size_t> matching_labels(const QuerySpec& spec, const Workspace& workspace,
                                         const SessionState& session);

QueryResult query_annotations(const QuerySpec& spec, const Workspace& workspace, const SessionState& session);

// dot(u, v) / (|u| |v|). Throws Error(kInvalidArgument) on a dimension
// mismatch or a zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

}  // namespace biaslens

#endif  // BIASLENS_QUERY_HPP_
