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

#include "biaslens/fixtures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>

#include "biaslens/error.hpp"
#include "biaslens/random.hpp"

namespace biaslens::fixtures {
namespace {

std::string numbered(const char* prefix, std::size_t n, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
  return buf;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

struct ContinentProfile {
  const char* label;
  std::array<int, 5> counts;  // north_america, europe, africa, asia, south_america
  bool in_range;
};

constexpr std::size_t kContinentBlock = 80;

constexpr std::array<ContinentProfile, 13> kContinentProfiles = {{
    {"airport", {16, 0, 0, 14, 0}, true},
    {"bridge", {14, 4, 4, 12, 4}, true},
    {"canyon", {24, 10, 10, 8, 10}, true},
    {"desert", {12, 10, 10, 10, 10}, true},
    {"evenly", {10, 10, 10, 10, 10}, true},
    {"forest", {0, 0, 0, 40, 0}, false},
    {"glacier", {28, 0, 0, 34, 0}, false},
    {"harbor", {30, 10, 10, 6, 10}, false},
    {"island", {40, 0, 0, 0, 0}, false},
    {"jungle", {2, 20, 20, 30, 20}, false},
    {"kiosk", {36, 4, 4, 2, 4}, false},
    {"lagoon", {0, 6, 6, 4, 6}, false},
    {"meadow", {6, 6, 6, 20, 6}, false},
}};

// Emits the scale corpus record by record; `emit` receives the id, the
// label indices and the direction mask.
template <typename Emit>
void generate_scale(const ScaleSpec& spec, Emit&& emit) {
  if (spec.labels == 0 || spec.directions < kMinDirections || spec.directions > kMaxDirections ||
      spec.min_labels_per_point > spec.max_labels_per_point) {
    fail(ErrorCode::kInvalidArgument, "invalid scale fixture parameters");
  }
  Rng rng(spec.seed);
  const std::uint64_t spread = spec.max_labels_per_point - spec.min_labels_per_point + 1;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < spec.points; ++i) {
    labels.clear();
    const std::size_t n = spec.min_labels_per_point + rng.below(spread);
    for (std::size_t k = 0; k < n; ++k) {
      // Quadratic skew: low indices are common, high ones rare.
      const double u = rng.uniform();
      labels.push_back(std::min(static_cast<std::size_t>(u * u * static_cast<double>(spec.labels)), spec.labels - 1));
    }
    std::uint64_t mask = 0;
    const double kind = rng.uniform();
    if (kind < 0.95) mask |= std::uint64_t{1} << rng.below(spec.directions);
    if (kind < 0.05) mask |= std::uint64_t{1} << rng.below(spec.directions);
    if (kind >= 0.95) mask = 0;
    emit(i, labels, mask);
  }
}

}  // namespace

AttributeSpec gender_attribute() { return {"gender", {"male", "female"}}; }

std::vector<DataPoint> tiny_points() {
  const std::set<int> basketball = {1, 2, 3, 4};
  const std::set<int> ballet = {7, 8, 9};
  const std::set<int> tree = {2, 7};
  const std::set<int> male = {1, 2, 3, 5, 6};
  std::vector<DataPoint> points;
  for (int i = 1; i <= 10; ++i) {
    DataPoint p;
    p.id = numbered("p", static_cast<std::size_t>(i), 2);
    if (basketball.contains(i)) p.labels.push_back("basketball");
    if (ballet.contains(i)) p.labels.push_back("ballet");
    if (tree.contains(i)) p.labels.push_back("tree");
    p.attributes["gender"] = {male.contains(i) ? "male" : "female"};
    points.push_back(std::move(p));
  }
  return points;
}

Corpus tiny_corpus(std::string run_name) {
  CorpusBuilder builder(std::move(run_name), {gender_attribute()});
  for (const auto& p : tiny_points()) builder.add(p);
  return std::move(builder).build();
}

AttributeSpec continent_attribute() {
  return {"continent", {"north_america", "europe", "africa", "asia", "south_america"}};
}

std::vector<DataPoint> continent_points() {
  const AttributeSpec attr = continent_attribute();
  std::vector<DataPoint> points;
  for (std::size_t d = 0; d < attr.directions.size(); ++d) {
    for (std::size_t i = 0; i < kContinentBlock; ++i) {
      DataPoint p;
      p.id = numbered("geo-", d * kContinentBlock + i, 4);
      for (const auto& profile : kContinentProfiles) {
        if (static_cast<int>(i) < profile.counts[d]) p.labels.emplace_back(profile.label);
      }
      p.attributes[attr.name] = {attr.directions[d]};
      points.push_back(std::move(p));
    }
  }
  return points;
}

std::vector<std::string> continent_in_range_labels() {
  std::vector<std::string> out;
  for (const auto& profile : kContinentProfiles) {
    if (profile.in_range) out.emplace_back(profile.label);
  }
  return out;
}

std::vector<DataPoint> random_points(const FixtureSpec& spec) {
  validate_attribute_spec(spec.attribute);
  const auto& dirs = spec.attribute.directions;
  const std::size_t k = dirs.size();
  if (spec.label_rate <= 0.0 || spec.label_rate >= 1.0) {
    fail(ErrorCode::kInvalidArgument, "label_rate must lie in (0, 1)");
  }
  if (!spec.planted.empty() && (spec.extra_direction_rate != 0.0 || spec.missing_direction_rate != 0.0)) {
    fail(ErrorCode::kInvalidArgument, "planted biases need exactly one direction per point");
  }

  struct Plant {
    std::string label;
    std::size_t direction;
    double p_on;   // P(label | direction)
    double p_off;  // P(label | other direction)
  };
  std::vector<Plant> plants;
  std::set<std::string> names;
  for (std::size_t i = 0; i < spec.labels; ++i) names.insert(numbered("label_", i, 3));
  const double q = 1.0 / static_cast<double>(k);
  const double r = spec.label_rate;
  for (const auto& pb : spec.planted) {
    auto d = spec.attribute.direction_index(pb.direction);
    if (!d) fail(ErrorCode::kInvalidArgument, "planted direction '" + pb.direction + "' is not declared");
    if (!names.insert(pb.label).second) fail(ErrorCode::kInvalidArgument, "duplicate planted label '" + pb.label + "'");
    const double t = pb.target_npmi;
    if (!(t >= -1.0 && t < 1.0)) fail(ErrorCode::kInvalidArgument, "planted target must lie in [-1, 1)");
    const double j = t == -1.0 ? 0.0 : std::pow(r * q, 1.0 / (1.0 + t));
    const double p_on = j / q;
    const double p_off = (r - j) / (1.0 - q);
    const bool tiny = t > -1.0 && j * static_cast<double>(spec.points) < 1.0;
    if (p_on > 1.0 || p_off < 0.0 || p_off > 1.0 || tiny) {
      fail(ErrorCode::kInvalidArgument,
           "planted target for '" + pb.label + "' is infeasible at this label rate and corpus size");
    }
    plants.push_back({pb.label, *d, p_on, p_off});
  }

  Rng rng(spec.seed);
  std::vector<DataPoint> points;
  points.reserve(spec.points);
  for (std::size_t i = 0; i < spec.points; ++i) {
    DataPoint p;
    p.id = numbered("r", i, 6);
    const std::size_t primary = rng.below(k);
    std::vector<std::string> point_dirs;
    if (!rng.bernoulli(spec.missing_direction_rate)) {
      point_dirs.push_back(dirs[primary]);
      if (rng.bernoulli(spec.extra_direction_rate)) {
        const std::size_t extra = (primary + 1 + rng.below(k - 1)) % k;
        point_dirs.push_back(dirs[extra]);
      }
    }
    for (std::size_t l = 0; l < spec.labels; ++l) {
      if (rng.bernoulli(r)) p.labels.push_back(numbered("label_", l, 3));
    }
    for (const auto& plant : plants) {
      if (rng.bernoulli(primary == plant.direction ? plant.p_on : plant.p_off)) p.labels.push_back(plant.label);
    }
    if (!point_dirs.empty()) p.attributes[spec.attribute.name] = std::move(point_dirs);
    points.push_back(std::move(p));
  }
  return points;
}

Corpus random_corpus(const FixtureSpec& spec, std::string run_name) {
  CorpusBuilder builder(std::move(run_name), {spec.attribute});
  for (const auto& p : random_points(spec)) builder.add(p);
  return std::move(builder).build();
}

AttributeSpec scale_attribute(const ScaleSpec& spec) {
  AttributeSpec attr{"group", {}};
  for (std::size_t d = 0; d < spec.directions; ++d) attr.directions.push_back(numbered("dir_", d, 1));
  return attr;
}

std::string scale_label_name(std::size_t index) { return numbered("label_", index, 5); }

Corpus scale_corpus(const ScaleSpec& spec, std::string run_name) {
  std::vector<std::string> names(spec.labels);
  for (std::size_t l = 0; l < spec.labels; ++l) names[l] = scale_label_name(l);
  CorpusBuilder builder(std::move(run_name), {scale_attribute(spec)});
  std::vector<std::string_view> views;
  generate_scale(spec, [&](std::size_t i, const std::vector<std::size_t>& labels, std::uint64_t mask) {
    views.clear();
    for (auto l : labels) views.push_back(names[l]);
    const std::string id = numbered("s", i, 7);
    builder.add(id, views, std::span<const std::uint64_t>(&mask, 1));
  });
  return std::move(builder).build();
}

void write_scale_corpus(std::ostream& out, const ScaleSpec& spec) {
  const AttributeSpec attr = scale_attribute(spec);
  generate_scale(spec, [&](std::size_t i, const std::vector<std::size_t>& labels, std::uint64_t mask) {
    DataPoint p;
    p.id = numbered("s", i, 7);
    std::set<std::size_t> unique(labels.begin(), labels.end());
    for (auto l : unique) p.labels.push_back(scale_label_name(l));
    auto& dirs = p.attributes[attr.name];
    for (std::size_t d = 0; d < attr.directions.size(); ++d) {
      if (mask >> d & 1) dirs.push_back(attr.directions[d]);
    }
    out << format_data_point(p) << '\n';
  });
}

ClusterFixture cluster_embeddings(const ClusterSpec& spec) {
  if (spec.clusters == 0 || spec.dimension < spec.clusters || spec.per_cluster == 0) {
    fail(ErrorCode::kInvalidArgument, "invalid cluster fixture parameters");
  }
  // Scaled unit vectors e_c sit sqrt(2) * offset apart.
  const double offset = spec.separation * spec.noise / std::sqrt(2.0);
  Rng rng(spec.seed);
  ClusterFixture fx{EmbeddingTable(spec.dimension), {}};
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    for (std::size_t m = 0; m < spec.per_cluster; ++m) {
      std::vector<double> v(spec.dimension);
      for (std::size_t d = 0; d < spec.dimension; ++d) v[d] = spec.noise * rng.normal();
      v[c] += offset;
      const std::string label = numbered("c", c, 1) + numbered("_", m, 2);
      fx.table.insert(label, std::move(v));
      fx.cluster_of[label] = c;
    }
  }
  return fx;
}

void write_corpus(std::ostream& out, std::span<const DataPoint> points) {
  for (const auto& p : points) out << format_data_point(p) << '\n';
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  char buf[64];
  for (const auto& [label, vec] : table.vectors()) {
    out << label;
    for (double v : vec) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

OracleCounts oracle_counts(std::span<const DataPoint> points, const AttributeSpec& attribute) {
  OracleCounts oc;
  oc.total = points.size();
  std::set<std::string> vocabulary;
  for (const auto& p : points) vocabulary.insert(p.labels.begin(), p.labels.end());

  auto directions_of = [&](const DataPoint& p) -> const std::vector<std::string>* {
    auto it = p.attributes.find(attribute.name);
    return it == p.attributes.end() ? nullptr : &it->second;
  };
  for (const auto& dir : attribute.directions) {
    std::uint64_t n = 0;
    for (const auto& p : points) {
      const auto* ds = directions_of(p);
      if (ds && contains(*ds, dir)) ++n;
    }
    oc.direction[dir] = n;
  }
  for (const auto& label : vocabulary) {
    std::uint64_t n = 0;
    for (const auto& p : points) {
      if (contains(p.labels, label)) ++n;
    }
    oc.label[label] = n;
    for (const auto& dir : attribute.directions) {
      std::uint64_t j = 0;
      for (const auto& p : points) {
        const auto* ds = directions_of(p);
        if (contains(p.labels, label) && ds && contains(*ds, dir)) ++j;
      }
      oc.joint[{label, dir}] = j;
    }
  }
  return oc;
}

std::optional<double> oracle_value(MetricKind kind, std::uint64_t joint, std::uint64_t cx, std::uint64_t cy,
                                   std::uint64_t total) {
  const double n = static_cast<double>(total);
  const double px = static_cast<double>(cx) / n;
  const double py = static_cast<double>(cy) / n;
  const double pxy = static_cast<double>(joint) / n;
  switch (kind) {
    case MetricKind::kNpmi:
      if (cx == 0 || cy == 0) return std::nullopt;
      if (joint == 0) return -1.0;
      if (joint == total) return 0.0;
      return std::log(pxy / (px * py)) / -std::log(pxy);
    case MetricKind::kPmi:
      if (cx == 0 || cy == 0 || joint == 0) return std::nullopt;
      return std::log(pxy / (px * py));
    case MetricKind::kJaccard:
      if (cx == 0 || cy == 0) return std::nullopt;
      return static_cast<double>(joint) / static_cast<double>(cx + cy - joint);
    case MetricKind::kDice:
      if (cx == 0 || cy == 0) return std::nullopt;
      return 2.0 * static_cast<double>(joint) / static_cast<double>(cx + cy);
  }
  return std::nullopt;
}

RunMetrics oracle_metrics(std::span<const DataPoint> points, const AttributeSpec& attribute, MetricKind kind) {
  const OracleCounts oc = oracle_counts(points, attribute);
  RunMetrics m;
  m.attribute = attribute;
  m.kind = kind;
  m.total_points = oc.total;
  for (const auto& [label, n] : oc.label) {
    m.labels.push_back(label);
    for (const auto& dir : attribute.directions) {
      MetricValue v;
      v.joint_count = oc.joint.at({label, dir});
      v.label_count = n;
      v.direction_count = oc.direction.at(dir);
      v.value = oracle_value(kind, v.joint_count, v.label_count, v.direction_count, oc.total);
      m.values.push_back(v);
    }
  }
  return m;
}

RunMetrics oracle_metrics(const Corpus& corpus, const AttributeSpec& attribute, MetricKind kind) {
  std::vector<DataPoint> points;
  points.reserve(corpus.total_points());
  for (std::size_t i = 0; i < corpus.total_points(); ++i) points.push_back(corpus.data_point(i));
  RunMetrics m = oracle_metrics(points, attribute, kind);
  m.run_name = corpus.run_name();
  return m;
}

double trustworthiness(const std::vector<std::vector<double>>& high, const std::vector<std::array<double, 2>>& low,
                       std::size_t k) {
  const std::size_t n = high.size();
  if (n != low.size() || k == 0 || 2 * n < 3 * k + 2) {
    fail(ErrorCode::kInvalidArgument, "trustworthiness needs matching point sets and n > 3k/2 + 1");
  }
  auto order_by = [n](auto&& dist, std::size_t i) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) idx.push_back(j);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dist(i, a) < dist(i, b); });
    return idx;
  };
  auto high_dist = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t d = 0; d < high[a].size(); ++d) s += (high[a][d] - high[b][d]) * (high[a][d] - high[b][d]);
    return s;
  };
  auto low_dist = [&](std::size_t a, std::size_t b) {
    const double dx = low[a][0] - low[b][0];
    const double dy = low[a][1] - low[b][1];
    return dx * dx + dy * dy;
  };

  double penalty = 0.0;
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto by_high = order_by(high_dist, i);
    for (std::size_t r = 0; r < by_high.size(); ++r) rank[by_high[r]] = r + 1;
    const auto by_low = order_by(low_dist, i);
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = by_low[r];
      if (rank[j] > k) penalty += static_cast<double>(rank[j] - k);
    }
  }
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * penalty;
}

}  // namespace biaslens::fixtures
