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

// Metric artifact files: `<run>.metrics.tsv`, the hand-off between the
// offline compute step and the server.
//
//   label  attribute  direction  metric_kind  value  joint_count  label_count  direction_count  total
//
// Values carry six decimals (round-half-even on the binary value); absent
// values are empty cells. Rows are ordered by label, then by block (the
// attribute/metric order given to the writer), then by direction order.

#ifndef BIASLENS_ARTIFACT_HPP_
#define BIASLENS_ARTIFACT_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biaslens/metrics.hpp"

namespace biaslens {

inline constexpr std::string_view kArtifactSuffix = ".metrics.tsv";
inline constexpr std::string_view kArtifactHeader =
    "label\tattribute\tdirection\tmetric_kind\tvalue\tjoint_count\tlabel_count\tdirection_count\ttotal";

// Fixed six-decimal rendering used by every artifact and report. Negative
// zero renders as "0.000000".
std::string format_value(double value);
std::string format_value(const std::optional<double>& value);

// All blocks must belong to the same run.
void write_metric_artifact(std::ostream& out, std::span<const RunMetrics> blocks);
std::string format_metric_artifact(std::span<const RunMetrics> blocks);

// Returns one RunMetrics per (attribute, metric kind) block, in order of
// first appearance. Throws Error(kParse/kCorrupt) with a line number on
// malformed or inconsistent content.
std::vector<RunMetrics> read_metric_artifact(std::istream& in, const std::string& run_name);
std::vector<RunMetrics> load_metric_artifact(const std::filesystem::path& path);

// "<dir>/<run>.metrics.tsv"
std::filesystem::path artifact_path(const std::filesystem::path& dir, std::string_view run_name);
// Artifact files in `dir`, sorted by file name.
std::vector<std::filesystem::path> list_metric_artifacts(const std::filesystem::path& dir);

}  // namespace biaslens

#endif  // BIASLENS_ARTIFACT_HPP_
