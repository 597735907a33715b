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

// Brute-force filter evaluation over raw data points.

#ifndef BIASLENS_TESTS_SUPPORT_QUERY_ORACLE_HPP_
#define BIASLENS_TESTS_SUPPORT_QUERY_ORACLE_HPP_

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "biaslens/fixtures.hpp"
#include "biaslens/query.hpp"
#include "biaslens/random.hpp"
#include "support/test_support.hpp"

namespace biaslens::testing {

using LabelSet = std::set<std::string>;

// Raw points per run plus the brute-force metric values derived from them.
struct World {
  std::vector<std::string> runs;
  std::vector<std::vector<DataPoint>> points;
  AttributeSpec attribute;
  std::vector<RunMetrics> oracle;  // npmi per run, from the nested-loop oracle
  Workspace workspace;
};

inline World make_world(Rng& rng, std::size_t run_count) {
  World w;
  w.attribute = {"attr", {}};
  const std::size_t k = 2 + rng.below(4);
  for (std::size_t d = 0; d < k; ++d) w.attribute.directions.push_back("d" + std::to_string(d));
  std::vector<RunInput> inputs;
  for (std::size_t r = 0; r < run_count; ++r) {
    fixtures::FixtureSpec spec;
    spec.seed = rng.next();
    spec.points = 20 + rng.below(200);
    spec.labels = 5 + rng.below(30);
    spec.label_rate = 0.05 + 0.3 * rng.uniform();
    spec.attribute = w.attribute;
    spec.extra_direction_rate = 0.2 * rng.uniform();
    spec.missing_direction_rate = 0.2 * rng.uniform();
    const std::string name = "run" + std::to_string(r);
    w.runs.push_back(name);
    w.points.push_back(fixtures::random_points(spec));
    w.oracle.push_back(fixtures::oracle_metrics(w.points.back(), w.attribute, MetricKind::kNpmi));
    inputs.push_back(run_input(build_corpus(w.points.back(), {w.attribute}, name)));
  }
  w.workspace = Workspace("ws", std::move(inputs), std::nullopt);
  return w;
}

inline std::optional<double> oracle_cell(const World& w, std::size_t run, const std::string& label,
                                  const MetricSelector& sel) {
  const RunMetrics& m = w.oracle[run];
  const auto l = m.label_index(label);
  if (!l) return std::nullopt;
  const auto pos = m.at(*l, *w.attribute.direction_index(sel.direction)).value;
  if (!sel.is_diff()) return pos;
  const auto neg = m.at(*l, *w.attribute.direction_index(*sel.negative)).value;
  if (!pos || !neg) return std::nullopt;
  return *pos - *neg;
}

inline LabelSet brute_force(const World& w, const std::vector<MetricFilter>& filters, const std::vector<std::size_t>& active,
                     const LabelSet& hidden, bool include_hidden) {
  LabelSet all;
  for (const auto& pts : w.points) {
    for (const auto& p : pts) all.insert(p.labels.begin(), p.labels.end());
  }
  LabelSet out;
  for (const auto& label : all) {
    if (!include_hidden && hidden.contains(label)) continue;
    bool ok = true;
    for (const auto& f : filters) {
      bool any = false;
      for (auto r : active) {
        const auto v = oracle_cell(w, r, label, f.selector);
        if (v && *v >= f.low && *v <= f.high) any = true;
      }
      ok = ok && any;
    }
    if (ok) out.insert(label);
  }
  return out;
}

inline MetricFilter random_filter(Rng& rng, const World& w) {
  const auto& dirs = w.attribute.directions;
  const std::size_t a = rng.below(dirs.size());
  MetricFilter f;
  if (rng.bernoulli(0.3)) {
    const std::size_t b = (a + 1 + rng.below(dirs.size() - 1)) % dirs.size();
    f.selector = MetricSelector::for_diff(MetricKind::kNpmi, w.attribute.name, dirs[a], dirs[b]);
    double x = -2.0 + 4.0 * rng.uniform(), y = -2.0 + 4.0 * rng.uniform();
    f.low = std::min(x, y);
    f.high = std::max(x, y);
  } else {
    f.selector = MetricSelector::for_direction(MetricKind::kNpmi, w.attribute.name, dirs[a]);
    double x = -1.0 + 2.0 * rng.uniform(), y = -1.0 + 2.0 * rng.uniform();
    f.low = std::min(x, y);
    f.high = std::max(x, y);
  }
  return f;
}

inline LabelSet names(const Workspace& ws, const std::vector<std::size_t>& idx) {
  LabelSet out;
  for (auto i : idx) out.insert(ws.labels()[i]);
  return out;
}

}  // namespace biaslens::testing

#endif  // BIASLENS_TESTS_SUPPORT_QUERY_ORACLE_HPP_
