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

#include "biaslens/workspace.hpp"

#include <algorithm>
#include <unordered_set>

#include "biaslens/artifact.hpp"
#include "biaslens/error.hpp"

namespace biaslens {

Workspace::Workspace(std::string id, std::vector<RunInput> runs, std::optional<EmbeddingTable> embeddings)
    : id_(std::move(id)), embeddings_(std::move(embeddings)) {
  std::unordered_set<std::string> run_names;
  for (auto& input : runs) {
    RunEntry entry;
    entry.name = std::move(input.name);
    if (entry.name.empty()) fail(ErrorCode::kInvalidArgument, "run name must not be empty");
    if (!run_names.insert(entry.name).second) fail(ErrorCode::kInvalidArgument, "duplicate run name '" + entry.name + "'");
    entry.color_index = runs_.size();
    for (auto& b : input.blocks) {
      b.run_name = entry.name;
      auto attr = std::find_if(attributes_.begin(), attributes_.end(),
                               [&](const AttributeSpec& a) { return a.name == b.attribute.name; });
      if (attr == attributes_.end()) {
        attributes_.push_back(b.attribute);
      } else if (attr->directions != b.attribute.directions) {
        fail(ErrorCode::kInvalidArgument, "run '" + entry.name + "' declares attribute '" + b.attribute.name +
                                              "' with different directions than an earlier run");
      }
      MetricBlockKey key{b.attribute.name, b.kind};
      for (const auto& other : entry.blocks) {
        if (other.attribute.name == key.attribute && other.kind == key.kind) {
          fail(ErrorCode::kInvalidArgument, "run '" + entry.name + "' has two blocks for " + key.attribute + "/" +
                                                std::string(to_string(key.kind)));
        }
      }
      if (std::find(metric_blocks_.begin(), metric_blocks_.end(), key) == metric_blocks_.end()) {
        metric_blocks_.push_back(key);
      }
      labels_.insert(labels_.end(), b.labels.begin(), b.labels.end());
      entry.blocks.push_back(std::move(b));
    }
    runs_.push_back(std::move(entry));
  }
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());

  for (auto& run : runs_) {
    for (const auto& b : run.blocks) {
      std::vector<std::int32_t> rows(labels_.size(), -1);
      std::size_t g = 0;
      for (std::size_t r = 0; r < b.labels.size(); ++r) {
        while (labels_[g] != b.labels[r]) ++g;  // both sorted; b.labels is a subset
        rows[g] = static_cast<std::int32_t>(r);
      }
      run.rows.push_back(std::move(rows));
    }
  }
}

Workspace Workspace::load(const std::filesystem::path& dir, const std::optional<std::filesystem::path>& embeddings,
                          std::string id) {
  const auto files = list_metric_artifacts(dir);
  if (files.empty()) fail(ErrorCode::kNotFound, "no *.metrics.tsv artifacts in " + dir.string());
  std::vector<RunInput> runs;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    runs.push_back(RunInput{name.substr(0, name.size() - kArtifactSuffix.size()), load_metric_artifact(f)});
  }
  std::optional<EmbeddingTable> table;
  if (embeddings) table = load_embeddings(*embeddings);
  return Workspace(std::move(id), std::move(runs), std::move(table));
}

std::optional<std::size_t> Workspace::run_index(std::string_view name) const {
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    if (runs_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Workspace::label_index(std::string_view label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<MetricSelector> Workspace::direction_selectors() const {
  std::vector<MetricSelector> out;
  for (const auto& key : metric_blocks_) {
    auto attr = std::find_if(attributes_.begin(), attributes_.end(),
                             [&](const AttributeSpec& a) { return a.name == key.attribute; });
    for (const auto& d : attr->directions) out.push_back(MetricSelector::for_direction(key.kind, key.attribute, d));
  }
  return out;
}

void Workspace::validate(const MetricSelector& selector, const std::string& field) const {
  auto attr = std::find_if(attributes_.begin(), attributes_.end(),
                           [&](const AttributeSpec& a) { return a.name == selector.attribute; });
  if (attr == attributes_.end()) {
    throw FieldError(ErrorCode::kInvalidArgument, field, "unknown attribute '" + selector.attribute + "'");
  }
  if (!attr->direction_index(selector.direction)) {
    throw FieldError(ErrorCode::kInvalidArgument, field,
                     "unknown direction '" + selector.direction + "' for attribute '" + selector.attribute + "'");
  }
  if (selector.negative) {
    if (!attr->direction_index(*selector.negative)) {
      throw FieldError(ErrorCode::kInvalidArgument, field,
                       "unknown direction '" + *selector.negative + "' for attribute '" + selector.attribute + "'");
    }
    if (*selector.negative == selector.direction) {
      throw FieldError(ErrorCode::kInvalidArgument, field, "diff directions must differ");
    }
  }
  const MetricBlockKey key{selector.attribute, selector.kind};
  if (std::find(metric_blocks_.begin(), metric_blocks_.end(), key) == metric_blocks_.end()) {
    throw FieldError(ErrorCode::kInvalidArgument, field,
                     "no run provides metric '" + std::string(to_string(selector.kind)) + "' for attribute '" +
                         selector.attribute + "'");
  }
}

std::optional<Workspace::Resolved> Workspace::resolve(std::size_t run, const MetricSelector& selector) const {
  const RunEntry& entry = runs_.at(run);
  for (std::size_t b = 0; b < entry.blocks.size(); ++b) {
    const RunMetrics& block = entry.blocks[b];
    if (block.attribute.name != selector.attribute || block.kind != selector.kind) continue;
    Resolved r;
    r.block = &block;
    r.rows = &entry.rows[b];
    auto p = block.attribute.direction_index(selector.direction);
    if (!p) return std::nullopt;
    r.positive = *p;
    if (selector.negative) {
      auto n = block.attribute.direction_index(*selector.negative);
      if (!n) return std::nullopt;
      r.negative = *n;
    }
    return r;
  }
  return std::nullopt;
}

std::optional<double> Workspace::value(const Resolved& r, std::size_t label) {
  const std::int32_t row = (*r.rows)[label];
  if (row < 0) return std::nullopt;
  const auto& pos = r.block->at(static_cast<std::size_t>(row), r.positive).value;
  if (r.negative == Resolved::kNone) return pos;
  const auto& neg = r.block->at(static_cast<std::size_t>(row), r.negative).value;
  if (!pos || !neg) return std::nullopt;
  return *pos - *neg;
}

Cell Workspace::evaluate(const Resolved& r, std::size_t label) {
  Cell cell;
  const std::int32_t row = (*r.rows)[label];
  if (row < 0) return cell;
  cell.parts.push_back(r.block->at(static_cast<std::size_t>(row), r.positive));
  if (r.negative != Resolved::kNone) cell.parts.push_back(r.block->at(static_cast<std::size_t>(row), r.negative));
  cell.value = value(r, label);
  return cell;
}

std::vector<double> Workspace::present_values(std::size_t run, const MetricSelector& selector) const {
  std::vector<double> out;
  auto r = resolve(run, selector);
  if (!r) return out;
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    if (auto v = value(*r, l)) out.push_back(*v);
  }
  return out;
}

}  // namespace biaslens
