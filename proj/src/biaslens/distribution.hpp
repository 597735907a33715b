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

#ifndef BIASLENS_DISTRIBUTION_HPP_
#define BIASLENS_DISTRIBUTION_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "biaslens/selector.hpp"
#include "biaslens/workspace.hpp"

namespace biaslens {

inline constexpr std::size_t kDensityGridPoints = 100;
inline constexpr double kMinBandwidth = 0.01;

struct DensityCurve {
  std::string run;
  MetricSelector selector;
  std::vector<double> grid;       // kDensityGridPoints, evenly spaced over [lo, hi]
  std::vector<double> densities;  // same length, non-negative
  std::size_t sample_count = 0;
  double bandwidth = 0.0;
};

// max(0.9 * min(sd, IQR / 1.34) * n^(-1/5), kMinBandwidth), with the sample
// standard deviation and linearly interpolated quartiles.
double silverman_bandwidth(std::span<const double> values);

// Gaussian KDE evaluated on the grid. The curve is rescaled so its
// trapezoidal integral over [lo, hi] is one, which keeps mass that the
// kernels place beyond the domain edges (e.g. the many nPMI values of
// exactly -1) from deflating the curve. Empty input gives an all-zero curve.
// Throws Error(kInvalidArgument) when lo >= hi.
DensityCurve density(std::span<const double> values, double lo, double hi);

double trapezoid_integral(std::span<const double> grid, std::span<const double> values);

// Value domain used for a selector's violin: the selector's fixed domain, or
// for unbounded metrics the observed range across the given runs (padded
// when degenerate).
ValueDomain distribution_domain(const Workspace& workspace, const MetricSelector& selector,
                                std::span<const std::size_t> runs);

// One curve per run over every label with a present value (no filtering).
std::vector<DensityCurve> selector_distributions(const Workspace& workspace, const MetricSelector& selector,
                                                 std::span<const std::size_t> runs);

}  // namespace biaslens

#endif  // BIASLENS_DISTRIBUTION_HPP_
