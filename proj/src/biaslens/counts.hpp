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

#ifndef BIASLENS_COUNTS_HPP_
#define BIASLENS_COUNTS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biaslens/corpus.hpp"

namespace biaslens {

// Presence counts for one attribute over a set of records. Labels are kept
// sorted by name so equal inputs give field-wise equal tables regardless of
// how the records were sharded.
struct CountTable {
  AttributeSpec attribute;
  std::uint64_t total = 0;
  std::vector<std::string> labels;
  std::vector<std::uint64_t> label_counts;
  std::vector<std::uint64_t> direction_counts;
  std::vector<std::uint64_t> joint_counts;  // labels.size() x directions, row-major

  std::size_t direction_size() const { return attribute.directions.size(); }
  std::uint64_t joint(std::size_t label, std::size_t direction) const {
    return joint_counts[label * direction_size() + direction];
  }
  std::optional<std::size_t> label_index(std::string_view label) const;

  bool operator==(const CountTable&) const = default;
};

// Single pass over records [first, last). Per-record work is
// (labels on record) x (directions on record).
CountTable count_cooccurrences(const Corpus& corpus, const AttributeSpec& attribute);
CountTable count_cooccurrences(const Corpus& corpus, const AttributeSpec& attribute, std::size_t first,
                               std::size_t last);

// Splits the records into `shards` contiguous ranges, counts each on its own
// thread and merges the results.
CountTable count_cooccurrences_sharded(const Corpus& corpus, const AttributeSpec& attribute, std::size_t shards);

// Field-wise sum over the union of both label sets. Both tables must refer
// to the same attribute.
CountTable merge(const CountTable& a, const CountTable& b);

}  // namespace biaslens

#endif  // BIASLENS_COUNTS_HPP_
