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

// Correlation metrics between label presence and direction presence.
//
// All metrics are maximum-likelihood estimates from raw presence counts with
// no smoothing: p(x) = cx / total, p(y) = cy / total, p(x,y) = joint / total.
// The joint count stays attached to every value so callers can judge how
// many data points back it.

#ifndef BIASLENS_METRICS_HPP_
#define BIASLENS_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biaslens/corpus.hpp"
#include "biaslens/counts.hpp"

namespace biaslens {

enum class MetricKind { kNpmi, kPmi, kJaccard, kDice };

std::string_view to_string(MetricKind kind);
// Throws Error(kInvalidArgument) for unknown names.
MetricKind parse_metric_kind(std::string_view name);
// PMI is the only unbounded kind.
bool is_bounded(MetricKind kind);

struct ValueDomain {
  double low;
  double high;
};

// Value range of a direction column; nullopt for unbounded kinds.
std::optional<ValueDomain> direction_domain(MetricKind kind);
// Range of the difference of two direction columns.
std::optional<ValueDomain> diff_domain(MetricKind kind);

// Normalized pointwise mutual information
//
//   ln(p(x,y) / (p(x) p(y))) / -ln(p(x,y))
//
// Absent when either marginal is zero, -1 when the features never co-occur,
// and 0 when joint == total (both features universal, so independent).
// Throws Error(kCorrupt) when the counts are inconsistent.
std::optional<double> npmi_value(std::uint64_t joint, std::uint64_t cx, std::uint64_t cy, std::uint64_t total);

// PMI (absent when joint == 0), Jaccard, Dice. Throws for kNpmi.
std::optional<double> alt_metric_value(MetricKind kind, std::uint64_t joint, std::uint64_t cx, std::uint64_t cy,
                                       std::uint64_t total);

std::optional<double> metric_value(MetricKind kind, std::uint64_t joint, std::uint64_t cx, std::uint64_t cy,
                                   std::uint64_t total);

struct MetricValue {
  std::optional<double> value;
  std::uint64_t joint_count = 0;
  std::uint64_t label_count = 0;
  std::uint64_t direction_count = 0;

  bool operator==(const MetricValue&) const = default;
};

// One run's metric values for one attribute and metric kind over the full
// label x direction grid.
struct RunMetrics {
  std::string run_name;
  AttributeSpec attribute;
  MetricKind kind = MetricKind::kNpmi;
  std::uint64_t total_points = 0;
  std::vector<std::string> labels;  // sorted
  std::vector<MetricValue> values;  // labels.size() x directions, row-major

  std::size_t direction_size() const { return attribute.directions.size(); }
  const MetricValue& at(std::size_t label, std::size_t direction) const {
    return values[label * direction_size() + direction];
  }
  std::optional<std::size_t> label_index(std::string_view label) const;

  bool operator==(const RunMetrics&) const = default;
};

RunMetrics compute_run_metrics(const CountTable& counts, MetricKind kind, std::string run_name = {});

// Per-label difference value(x, positive) - value(x, negative), aligned with
// metrics.labels. Absent whenever either side is absent.
struct DiffColumn {
  std::string positive_direction;
  std::string negative_direction;
  std::vector<std::optional<double>> values;
};

DiffColumn compute_diff(const RunMetrics& metrics, std::string_view positive, std::string_view negative);

}  // namespace biaslens

#endif  // BIASLENS_METRICS_HPP_
