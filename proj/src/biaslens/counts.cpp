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

#include "biaslens/counts.hpp"

#include <algorithm>
#include <bit>
#include <exception>
#include <thread>

#include "biaslens/error.hpp"

namespace biaslens {

std::optional<std::size_t> CountTable::label_index(std::string_view label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

namespace {

std::size_t resolve_attribute(const Corpus& corpus, const AttributeSpec& attribute) {
  auto idx = corpus.attribute_index(attribute.name);
  if (!idx || corpus.attribute_specs()[*idx] != attribute) {
    fail(ErrorCode::kInvalidArgument, "attribute '" + attribute.name + "' is not declared for corpus '" +
                                          corpus.run_name() + "'");
  }
  return *idx;
}

}  // namespace

CountTable count_cooccurrences(const Corpus& corpus, const AttributeSpec& attribute) {
  return count_cooccurrences(corpus, attribute, 0, corpus.total_points());
}

CountTable count_cooccurrences(const Corpus& corpus, const AttributeSpec& attribute, std::size_t first,
                               std::size_t last) {
  const std::size_t a = resolve_attribute(corpus, attribute);
  if (first > last || last > corpus.total_points()) {
    fail(ErrorCode::kInvalidArgument, "record range out of bounds");
  }
  const std::size_t n_dirs = attribute.directions.size();
  CountTable t;
  t.attribute = attribute;
  t.labels = corpus.label_vocabulary();
  t.label_counts.assign(t.labels.size(), 0);
  t.direction_counts.assign(n_dirs, 0);
  t.joint_counts.assign(t.labels.size() * n_dirs, 0);

  std::uint8_t dirs[kMaxDirections];
  for (std::size_t i = first; i < last; ++i) {
    const Corpus::Record r = corpus.record(i);
    std::uint64_t mask = r.direction_masks[a];
    std::size_t n_present = 0;
    while (mask != 0) {
      const int d = std::countr_zero(mask);
      dirs[n_present++] = static_cast<std::uint8_t>(d);
      ++t.direction_counts[static_cast<std::size_t>(d)];
      mask &= mask - 1;
    }
    for (auto label : r.labels) {
      ++t.label_counts[label];
      std::uint64_t* row = &t.joint_counts[label * n_dirs];
      for (std::size_t k = 0; k < n_present; ++k) ++row[dirs[k]];
    }
  }
  t.total = last - first;
  return t;
}

CountTable count_cooccurrences_sharded(const Corpus& corpus, const AttributeSpec& attribute, std::size_t shards) {
  if (shards == 0) fail(ErrorCode::kInvalidArgument, "shard count must be at least 1");
  resolve_attribute(corpus, attribute);
  const std::size_t n = corpus.total_points();
  if (shards == 1 || n == 0) return count_cooccurrences(corpus, attribute);

  std::vector<CountTable> partial(shards);
  std::vector<std::exception_ptr> errors(shards);
  {
    std::vector<std::jthread> workers;
    workers.reserve(shards);
    for (std::size_t s = 0; s < shards; ++s) {
      const std::size_t first = n * s / shards;
      const std::size_t last = n * (s + 1) / shards;
      workers.emplace_back([&, s, first, last] {
        try {
          partial[s] = count_cooccurrences(corpus, attribute, first, last);
        } catch (...) {
          errors[s] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  CountTable result = std::move(partial[0]);
  for (std::size_t s = 1; s < shards; ++s) result = merge(result, partial[s]);
  return result;
}

CountTable merge(const CountTable& a, const CountTable& b) {
  if (a.attribute != b.attribute) {
    fail(ErrorCode::kInvalidArgument, "cannot merge counts for different attributes ('" + a.attribute.name +
                                          "' vs '" + b.attribute.name + "')");
  }
  const std::size_t n_dirs = a.direction_size();
  CountTable out;
  out.attribute = a.attribute;
  out.total = a.total + b.total;
  out.direction_counts.resize(n_dirs);
  for (std::size_t d = 0; d < n_dirs; ++d) out.direction_counts[d] = a.direction_counts[d] + b.direction_counts[d];

  out.labels.reserve(std::max(a.labels.size(), b.labels.size()));
  std::size_t i = 0, j = 0;
  auto append = [&](const CountTable* x, std::size_t xi, const CountTable* y, std::size_t yi) {
    const std::string& name = x ? x->labels[xi] : y->labels[yi];
    out.labels.push_back(name);
    std::uint64_t lc = 0;
    if (x) lc += x->label_counts[xi];
    if (y) lc += y->label_counts[yi];
    out.label_counts.push_back(lc);
    for (std::size_t d = 0; d < n_dirs; ++d) {
      std::uint64_t jc = 0;
      if (x) jc += x->joint(xi, d);
      if (y) jc += y->joint(yi, d);
      out.joint_counts.push_back(jc);
    }
  };
  while (i < a.labels.size() || j < b.labels.size()) {
    if (j == b.labels.size() || (i < a.labels.size() && a.labels[i] < b.labels[j])) {
      append(&a, i++, nullptr, 0);
    } else if (i == a.labels.size() || b.labels[j] < a.labels[i]) {
      append(nullptr, 0, &b, j++);
    } else {
      append(&a, i++, &b, j++);
    }
  }
  return out;
}

}  // namespace biaslens
