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

// Deterministic fixture corpora and brute-force reference computations.
//
// The oracles here work on raw DataPoint records with nested loops and the
// textbook probability formulas. They share no code with the counting or
// metric paths, so any displayed value can be re-derived from the raw data
// independently.

#ifndef BIASLENS_FIXTURES_HPP_
#define BIASLENS_FIXTURES_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "biaslens/corpus.hpp"
#include "biaslens/metrics.hpp"

namespace biaslens::fixtures {

// --- Canonical small fixtures ----------------------------------------------

// gender: [male, female]
AttributeSpec gender_attribute();

// Ten points p01..p10. basketball on 1-4, ballet on 7-9, tree on {2, 7};
// male on {1, 2, 3, 5, 6}, female on the rest.
std::vector<DataPoint> tiny_points();
Corpus tiny_corpus(std::string run_name = "tiny");

// continent: [north_america, europe, africa, asia, south_america]
AttributeSpec continent_attribute();

// 400 points, 80 per continent, with labels placed on exact per-continent
// counts. Five labels have an nPMI difference north_america - asia inside
// [0, 0.403]; the rest sit well outside it.
std::vector<DataPoint> continent_points();
std::vector<std::string> continent_in_range_labels();

// --- Random corpora with planted biases -------------------------------------

struct PlantedBias {
  std::string label;
  std::string direction;
  double target_npmi;
};

struct FixtureSpec {
  std::uint64_t seed = 1;
  std::size_t points = 1000;
  std::size_t labels = 20;  // unplanted labels label_000, label_001, ...
  AttributeSpec attribute = gender_attribute();
  double label_rate = 0.2;
  // Chances that a point carries a second direction / no direction at all.
  // Both must be zero when biases are planted.
  double extra_direction_rate = 0.0;
  double missing_direction_rate = 0.0;
  std::vector<PlantedBias> planted;
};

// Every point carries one uniformly drawn direction (modulo the extra /
// missing rates). Unplanted labels appear independently with label_rate.
// A planted label has marginal label_rate and joint probability
// (label_rate * q)^(1 / (1 + target)) with its direction (q = 1/K), which
// puts its population nPMI exactly at the target. Throws
// Error(kInvalidArgument) when a target is infeasible for the rates and
// point count.
std::vector<DataPoint> random_points(const FixtureSpec& spec);
Corpus random_corpus(const FixtureSpec& spec, std::string run_name = "random");

// --- Desk-scale corpus --------------------------------------------------------

struct ScaleSpec {
  std::uint64_t seed = 42;
  std::size_t points = 1'000'000;
  std::size_t labels = 20'000;
  std::size_t min_labels_per_point = 5;
  std::size_t max_labels_per_point = 15;  // mean 10
  std::size_t directions = 4;
};

// attribute "group" with directions dir_0 .. dir_{K-1}
AttributeSpec scale_attribute(const ScaleSpec& spec);
std::string scale_label_name(std::size_t index);
// Built straight into a Corpus without JSON round-trips.
Corpus scale_corpus(const ScaleSpec& spec, std::string run_name = "scale");
// The same records as corpus lines.
void write_scale_corpus(std::ostream& out, const ScaleSpec& spec);

// --- Embeddings -----------------------------------------------------------------

struct ClusterSpec {
  std::uint64_t seed = 7;
  std::size_t clusters = 3;
  std::size_t per_cluster = 30;
  std::size_t dimension = 25;
  double noise = 1.0;        // per-coordinate standard deviation
  double separation = 10.0;  // center-to-center distance in units of noise
};

struct ClusterFixture {
  EmbeddingTable table;
  std::map<std::string, std::size_t> cluster_of;
};

// Labels c<cluster>_<member>; centers form a regular simplex.
ClusterFixture cluster_embeddings(const ClusterSpec& spec);

// --- Writers ----------------------------------------------------------------------

void write_corpus(std::ostream& out, std::span<const DataPoint> points);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

// --- Oracles ----------------------------------------------------------------------

struct OracleCounts {
  std::uint64_t total = 0;
  std::map<std::string, std::uint64_t> label;
  std::map<std::string, std::uint64_t> direction;
  std::map<std::pair<std::string, std::string>, std::uint64_t> joint;
};

// Nested loops: for every label, every direction, every record.
OracleCounts oracle_counts(std::span<const DataPoint> points, const AttributeSpec& attribute);

// Probabilities as ratios, metrics straight from their definitions.
std::optional<double> oracle_value(MetricKind kind, std::uint64_t joint, std::uint64_t cx, std::uint64_t cy,
                                   std::uint64_t total);
RunMetrics oracle_metrics(std::span<const DataPoint> points, const AttributeSpec& attribute, MetricKind kind);
RunMetrics oracle_metrics(const Corpus& corpus, const AttributeSpec& attribute, MetricKind kind);

// Trustworthiness of a low-dimensional layout with respect to the
// high-dimensional points, by brute-force neighbor ranking.
double trustworthiness(const std::vector<std::vector<double>>& high, const std::vector<std::array<double, 2>>& low,
                       std::size_t k);

}  // namespace biaslens::fixtures

#endif  // BIASLENS_FIXTURES_HPP_
