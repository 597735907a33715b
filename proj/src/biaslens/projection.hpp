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

// 2-D layout of label embeddings and the signed density heatmap drawn
// beneath it.
//
// Subsets of at least 8 labels get a UMAP-style neighbor embedding: exact
// k-NN graph, fuzzy simplicial set membership, symmetrized by fuzzy union,
// then 200 epochs of cross-entropy SGD with negative sampling from a PCA
// initialization. Smaller subsets fall back to PCA (3..7 labels) or evenly
// spaced points on a line (1..2 labels). Coordinates are min-max normalized
// per axis into [0, 1]; a degenerate axis maps to 0.5.
//
// Everything is single-threaded and seeded, so a (subset, seed) pair
// always produces bit-identical coordinates.

#ifndef BIASLENS_PROJECTION_HPP_
#define BIASLENS_PROJECTION_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biaslens/corpus.hpp"

namespace biaslens {

inline constexpr std::size_t kDefaultNeighbors = 15;
inline constexpr double kDefaultMinDist = 0.1;
inline constexpr std::size_t kDefaultEpochs = 200;
inline constexpr std::size_t kUmapMinPoints = 8;
inline constexpr double kDefaultHeatmapBandwidth = 0.05;
inline constexpr std::size_t kDefaultHeatmapSize = 256;

struct ProjectionParams {
  std::size_t neighbor_count = kDefaultNeighbors;
  double min_dist = kDefaultMinDist;
  std::size_t epochs = kDefaultEpochs;
  std::uint64_t seed = 0;

  bool operator==(const ProjectionParams&) const = default;
};

struct Projection2D {
  std::vector<std::string> labels;  // sorted
  std::vector<std::array<double, 2>> points;
  std::vector<std::string> dropped;  // requested labels without embeddings
  ProjectionParams parameters;       // neighbor_count is the effective value
  std::string method;                // "umap", "pca" or "line"
  std::uint64_t subset_hash = 0;

  std::optional<std::array<double, 2>> find(std::string_view label) const;

  bool operator==(const Projection2D&) const = default;
};

// FNV-1a over the sorted, de-duplicated label set.
std::uint64_t subset_hash(std::span<const std::string> labels);

// Parameters (a, b) of the low-dimensional similarity 1 / (1 + a d^(2b)),
// least-squares fitted to the min_dist-offset exponential.
struct CurveParams {
  double a;
  double b;
};
CurveParams fit_curve_params(double min_dist, double spread = 1.0);

// Labels without an embedding are dropped and listed in `dropped`. Throws
// Error(kUnprocessable) when nothing is left to project.
Projection2D project(std::span<const std::string> subset, const EmbeddingTable& embeddings, std::uint64_t seed);

// Lower-level entry used by project(): rows of `data` are points. Returns
// un-normalized coordinates and sets `method`.
std::vector<std::array<double, 2>> layout(const std::vector<std::vector<double>>& data, const ProjectionParams& params,
                                          std::string* method);

struct HeatmapGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  double bandwidth = 0.0;
  std::vector<double> intensities;  // row-major, height x width

  double at(std::size_t row, std::size_t col) const { return intensities[row * width + col]; }
  bool operator==(const HeatmapGrid&) const = default;
};

// intensity(cell) = sum over points of value * exp(-d^2 / (2 sigma^2)),
// d measured from the cell center ((col + 0.5) / width, (row + 0.5) /
// height) in normalized units, kernels truncated beyond 4 sigma. Every
// projected label needs a value.
HeatmapGrid rasterize_heatmap(const Projection2D& projection, const std::map<std::string, double, std::less<>>& values,
                              double bandwidth = kDefaultHeatmapBandwidth, std::size_t width = kDefaultHeatmapSize,
                              std::size_t height = kDefaultHeatmapSize);

}  // namespace biaslens

#endif  // BIASLENS_PROJECTION_HPP_
