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

#include "biaslens/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "biaslens/error.hpp"

namespace biaslens {

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kNpmi:
      return "npmi";
    case MetricKind::kPmi:
      return "pmi";
    case MetricKind::kJaccard:
      return "jaccard";
    case MetricKind::kDice:
      return "dice";
  }
  return "npmi";
}

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "npmi") return MetricKind::kNpmi;
  if (name == "pmi") return MetricKind::kPmi;
  if (name == "jaccard") return MetricKind::kJaccard;
  if (name == "dice") return MetricKind::kDice;
  fail(ErrorCode::kInvalidArgument, "unknown metric kind '" + std::string(name) + "'");
}

bool is_bounded(MetricKind kind) { return kind != MetricKind::kPmi; }

std::optional<ValueDomain> direction_domain(MetricKind kind) {
  switch (kind) {
    case MetricKind::kNpmi:
      return ValueDomain{-1.0, 1.0};
    case MetricKind::kJaccard:
    case MetricKind::kDice:
      return ValueDomain{0.0, 1.0};
    case MetricKind::kPmi:
      break;
  }
  return std::nullopt;
}

std::optional<ValueDomain> diff_domain(MetricKind kind) {
  auto d = direction_domain(kind);
  if (!d) return std::nullopt;
  const double width = d->high - d->low;
  return ValueDomain{-width, width};
}

namespace {

void check_counts(std::uint64_t joint, std::uint64_t cx, std::uint64_t cy, std::uint64_t total) {
  if (cx > total || cy > total || joint > cx || joint > cy || cx + cy - joint > total) {
    fail(ErrorCode::kCorrupt, "inconsistent counts: joint=" + std::to_string(joint) + " cx=" + std::to_string(cx) +
                                  " cy=" + std::to_string(cy) + " total=" + std::to_string(total));
  }
}

// ln((joint * total) / (cx * cy)), evaluated as log1p of the exact integer
// excess so that independence yields exactly zero.
double log_ratio(std::uint64_t joint, std::uint64_t cx, std::uint64_t cy, std::uint64_t total) {
  using i128 = __int128;
  const i128 observed = static_cast<i128>(joint) * static_cast<i128>(total);
  const i128 expected = static_cast<i128>(cx) * static_cast<i128>(cy);
  return std::log1p(static_cast<double>(observed - expected) / static_cast<double>(expected));
}

}  // namespace

std::optional<double> npmi_value(std::uint64_t joint, std::uint64_t cx, std::uint64_t cy, std::uint64_t total) {
  check_counts(joint, cx, cy, total);
  if (cx == 0 || cy == 0) return std::nullopt;
  if (joint == 0) return -1.0;
  if (joint == total) return 0.0;
  // -ln(joint / total) == ln(1 + (total - joint) / joint)
  const double h = std::log1p(static_cast<double>(total - joint) / static_cast<double>(joint));
  return std::clamp(log_ratio(joint, cx, cy, total) / h, -1.0, 1.0);
}

std::optional<double> alt_metric_value(MetricKind kind, std::uint64_t joint, std::uint64_t cx, std::uint64_t cy,
                                       std::uint64_t total) {
  check_counts(joint, cx, cy, total);
  switch (kind) {
    case MetricKind::kPmi:
      if (cx == 0 || cy == 0 || joint == 0) return std::nullopt;
      return log_ratio(joint, cx, cy, total);
    case MetricKind::kJaccard:
      if (cx == 0 || cy == 0) return std::nullopt;
      return static_cast<double>(joint) / static_cast<double>(cx + cy - joint);
    case MetricKind::kDice:
      if (cx == 0 || cy == 0) return std::nullopt;
      return 2.0 * static_cast<double>(joint) / static_cast<double>(cx + cy);
    case MetricKind::kNpmi:
      break;
  }
  fail(ErrorCode::kInvalidArgument, "alt_metric_value: unsupported kind '" + std::string(to_string(kind)) + "'");
}

std::optional<double> metric_value(MetricKind kind, std::uint64_t joint, std::uint64_t cx, std::uint64_t cy,
                                   std::uint64_t total) {
  if (kind == MetricKind::kNpmi) return npmi_value(joint, cx, cy, total);
  return alt_metric_value(kind, joint, cx, cy, total);
}

std::optional<std::size_t> RunMetrics::label_index(std::string_view label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

RunMetrics compute_run_metrics(const CountTable& counts, MetricKind kind, std::string run_name) {
  RunMetrics m;
  m.run_name = std::move(run_name);
  m.attribute = counts.attribute;
  m.kind = kind;
  m.total_points = counts.total;
  m.labels = counts.labels;
  const std::size_t n_dirs = counts.direction_size();
  m.values.resize(counts.labels.size() * n_dirs);
  for (std::size_t l = 0; l < counts.labels.size(); ++l) {
    for (std::size_t d = 0; d < n_dirs; ++d) {
      MetricValue& v = m.values[l * n_dirs + d];
      v.joint_count = counts.joint(l, d);
      v.label_count = counts.label_counts[l];
      v.direction_count = counts.direction_counts[d];
      v.value = metric_value(kind, v.joint_count, v.label_count, v.direction_count, counts.total);
    }
  }
  return m;
}

DiffColumn compute_diff(const RunMetrics& metrics, std::string_view positive, std::string_view negative) {
  auto p = metrics.attribute.direction_index(positive);
  auto n = metrics.attribute.direction_index(negative);
  if (!p) fail(ErrorCode::kInvalidArgument, "unknown direction '" + std::string(positive) + "'");
  if (!n) fail(ErrorCode::kInvalidArgument, "unknown direction '" + std::string(negative) + "'");
  if (*p == *n) fail(ErrorCode::kInvalidArgument, "diff directions must differ");
  DiffColumn c;
  c.positive_direction = std::string(positive);
  c.negative_direction = std::string(negative);
  c.values.reserve(metrics.labels.size());
  for (std::size_t l = 0; l < metrics.labels.size(); ++l) {
    const auto& a = metrics.at(l, *p).value;
    const auto& b = metrics.at(l, *n).value;
    c.values.push_back(a && b ? std::optional<double>(*a - *b) : std::nullopt);
  }
  return c;
}

}  // namespace biaslens
