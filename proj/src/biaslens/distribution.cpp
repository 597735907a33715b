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

#include "biaslens/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "biaslens/error.hpp"

namespace biaslens {
namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double silverman_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return kMinBandwidth;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double spread = std::min(sd, iqr / 1.34);
  return std::max(0.9 * spread * std::pow(static_cast<double>(n), -0.2), kMinBandwidth);
}

double trapezoid_integral(std::span<const double> grid, std::span<const double> values) {
  double area = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) area += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  return area;
}

DensityCurve density(std::span<const double> values, double lo, double hi) {
  if (!(lo < hi)) fail(ErrorCode::kInvalidArgument, "density domain is empty");
  DensityCurve c;
  c.grid.resize(kDensityGridPoints);
  const double step = (hi - lo) / static_cast<double>(kDensityGridPoints - 1);
  for (std::size_t i = 0; i < kDensityGridPoints; ++i) c.grid[i] = lo + step * static_cast<double>(i);
  c.grid.back() = hi;
  c.densities.assign(kDensityGridPoints, 0.0);
  c.sample_count = values.size();
  if (values.empty()) return c;

  const double h = silverman_bandwidth(values);
  c.bandwidth = h;
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < kDensityGridPoints; ++i) {
    double sum = 0.0;
    for (double v : values) {
      const double z = (c.grid[i] - v) / h;
      sum += std::exp(-0.5 * z * z);
    }
    c.densities[i] = sum * norm;
  }
  const double area = trapezoid_integral(c.grid, c.densities);
  if (area > 0.0) {
    for (auto& d : c.densities) d /= area;
  }
  return c;
}

ValueDomain distribution_domain(const Workspace& workspace, const MetricSelector& selector,
                                std::span<const std::size_t> runs) {
  if (auto d = selector_domain(selector)) return *d;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (auto r : runs) {
    for (double v : workspace.present_values(r, selector)) {
      lo = any ? std::min(lo, v) : v;
      hi = any ? std::max(hi, v) : v;
      any = true;
    }
  }
  if (!any) return {-1.0, 1.0};
  if (hi - lo < 1e-9) return {lo - 0.5, hi + 0.5};
  return {lo, hi};
}

std::vector<DensityCurve> selector_distributions(const Workspace& workspace, const MetricSelector& selector,
                                                 std::span<const std::size_t> runs) {
  workspace.validate(selector);
  const ValueDomain domain = distribution_domain(workspace, selector, runs);
  std::vector<DensityCurve> out;
  for (auto r : runs) {
    auto values = workspace.present_values(r, selector);
    for (auto& v : values) v = std::clamp(v, domain.low, domain.high);
    DensityCurve c = density(values, domain.low, domain.high);
    c.run = workspace.runs()[r].name;
    c.selector = selector;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace biaslens
