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

#ifndef BIASLENS_WORKSPACE_HPP_
#define BIASLENS_WORKSPACE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biaslens/corpus.hpp"
#include "biaslens/metrics.hpp"
#include "biaslens/selector.hpp"

namespace biaslens {

// A selector's value for one label in one run. `parts` holds the metric
// values the cell derives from: one for a direction, two (positive,
// negative) for a diff. Empty when the run has no row for the label.
struct Cell {
  std::optional<double> value;
  std::vector<MetricValue> parts;

  bool operator==(const Cell&) const = default;
};

struct RunEntry {
  std::string name;
  std::size_t color_index = 0;
  std::vector<RunMetrics> blocks;
  // Per block: workspace label index -> row in the block, or -1.
  std::vector<std::vector<std::int32_t>> rows;
};

// One run as handed to the Workspace: its name and the metric blocks from
// its artifact (possibly none, for an empty corpus).
struct RunInput {
  std::string name;
  std::vector<RunMetrics> blocks;
};

struct MetricBlockKey {
  std::string attribute;
  MetricKind kind;

  bool operator==(const MetricBlockKey&) const = default;
};

// Immutable view over every loaded run. Label indices refer to the sorted
// union of all runs' vocabularies.
class Workspace {
 public:
  // A selector bound to one run's block, ready for per-label evaluation.
  struct Resolved {
    const RunMetrics* block = nullptr;
    const std::vector<std::int32_t>* rows = nullptr;
    std::size_t positive = 0;
    std::size_t negative = kNone;

    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  };

  Workspace() = default;
  // Runs keep their order and receive color indices 0, 1, ...
  Workspace(std::string id, std::vector<RunInput> runs, std::optional<EmbeddingTable> embeddings);

  // Loads every `*.metrics.tsv` in `dir` (sorted by file name).
  static Workspace load(const std::filesystem::path& dir, const std::optional<std::filesystem::path>& embeddings,
                        std::string id);

  const std::string& id() const { return id_; }
  const std::vector<RunEntry>& runs() const { return runs_; }
  std::optional<std::size_t> run_index(std::string_view name) const;
  const std::vector<AttributeSpec>& attributes() const { return attributes_; }
  const std::vector<MetricBlockKey>& metric_blocks() const { return metric_blocks_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> label_index(std::string_view label) const;
  const EmbeddingTable* embeddings() const { return embeddings_ ? &*embeddings_ : nullptr; }

  // Every direction column, in block order then direction order.
  std::vector<MetricSelector> direction_selectors() const;

  // Throws FieldError(kInvalidArgument, field) when the selector names an
  // attribute, direction or metric kind that no run provides.
  void validate(const MetricSelector& selector, const std::string& field = "selector") const;

  // nullopt when the run has no block for the selector's attribute/kind.
  std::optional<Resolved> resolve(std::size_t run, const MetricSelector& selector) const;
  static Cell evaluate(const Resolved& resolved, std::size_t label);
  static std::optional<double> value(const Resolved& resolved, std::size_t label);

  // Present values of a selector in one run, in label order.
  std::vector<double> present_values(std::size_t run, const MetricSelector& selector) const;

 private:
  std::string id_;
  std::vector<RunEntry> runs_;
  std::vector<AttributeSpec> attributes_;
  std::vector<MetricBlockKey> metric_blocks_;
  std::vector<std::string> labels_;
  std::optional<EmbeddingTable> embeddings_;
};

}  // namespace biaslens

#endif  // BIASLENS_WORKSPACE_HPP_
