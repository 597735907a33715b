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

#include "biaslens/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "biaslens/error.hpp"
#include "biaslens/random.hpp"

namespace biaslens {
namespace {

using Matrix = std::vector<std::vector<double>>;
using Point2 = std::array<double, 2>;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// ---------------------------------------------------------------------------
// PCA

// Top-2 principal axes by power iteration with deflation. The start vector
// is fixed and each axis is sign-normalized (largest |loading| positive) so
// the result does not depend on the seed.
std::vector<Point2> pca_2d(const Matrix& data) {
  const std::size_t n = data.size();
  const std::size_t dim = data.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& row : data) {
    for (std::size_t k = 0; k < dim; ++k) mean[k] += row[k];
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  Matrix centered(n, std::vector<double>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) centered[i][k] = data[i][k] - mean[k];
  }
  Matrix cov(dim, std::vector<double>(dim, 0.0));
  for (const auto& row : centered) {
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = a; b < dim; ++b) cov[a][b] += row[a] * row[b];
    }
  }
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b < a; ++b) cov[a][b] = cov[b][a];
  }

  std::vector<std::vector<double>> axes;
  for (int component = 0; component < 2; ++component) {
    std::vector<double> v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = 1.0 + std::fmod(0.6180339887 * static_cast<double>(k + 1), 1.0);
    std::vector<double> next(dim);
    double eigen = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
      for (const auto& prev : axes) {
        const double p = std::inner_product(v.begin(), v.end(), prev.begin(), 0.0);
        for (std::size_t k = 0; k < dim; ++k) v[k] -= p * prev[k];
      }
      for (std::size_t a = 0; a < dim; ++a) next[a] = std::inner_product(cov[a].begin(), cov[a].end(), v.begin(), 0.0);
      for (const auto& prev : axes) {
        const double p = std::inner_product(next.begin(), next.end(), prev.begin(), 0.0);
        for (std::size_t k = 0; k < dim; ++k) next[k] -= p * prev[k];
      }
      const double norm = std::sqrt(std::inner_product(next.begin(), next.end(), next.begin(), 0.0));
      if (norm < 1e-300) {
        std::fill(next.begin(), next.end(), 0.0);
        eigen = 0.0;
        v = next;
        break;
      }
      for (auto& x : next) x /= norm;
      double delta = 0.0;
      for (std::size_t k = 0; k < dim; ++k) delta = std::max(delta, std::abs(next[k] - v[k]));
      v.swap(next);
      eigen = norm;
      if (delta < 1e-13) break;
    }
    (void)eigen;
    std::size_t arg = 0;
    for (std::size_t k = 1; k < dim; ++k) {
      if (std::abs(v[k]) > std::abs(v[arg]) + 1e-15) arg = k;
    }
    if (v[arg] < 0) {
      for (auto& x : v) x = -x;
    }
    axes.push_back(v);
  }

  std::vector<Point2> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) {
      out[i][static_cast<std::size_t>(c)] =
          std::inner_product(centered[i].begin(), centered[i].end(), axes[static_cast<std::size_t>(c)].begin(), 0.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fuzzy neighbor graph

struct Edge {
  std::uint32_t head;
  std::uint32_t tail;
  double weight;
};

std::vector<Edge> fuzzy_graph(const Matrix& data, std::size_t k) {
  const std::size_t n = data.size();
  std::vector<std::vector<std::pair<double, std::uint32_t>>> knn(n);
  std::vector<std::pair<double, std::uint32_t>> cand;
  cand.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(std::sqrt(squared_distance(data[i], data[j])), static_cast<std::uint32_t>(j));
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    knn[i].assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k));
  }

  double global_mean = 0.0;
  for (const auto& row : knn) {
    for (const auto& [d, j] : row) global_mean += d;
  }
  global_mean /= static_cast<double>(n * k);

  const double target = std::log2(static_cast<double>(k));
  std::vector<std::vector<double>> directed(n, std::vector<double>(k));
  for (std::size_t i = 0; i < n; ++i) {
    double rho = 0.0;
    for (const auto& [d, j] : knn[i]) {
      if (d > 0.0) {
        rho = d;
        break;
      }
    }
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), sigma = 1.0;
    for (int iter = 0; iter < 64; ++iter) {
      double psum = 0.0;
      for (const auto& [d, j] : knn[i]) {
        const double excess = d - rho;
        psum += excess > 0.0 ? std::exp(-excess / sigma) : 1.0;
      }
      if (std::abs(psum - target) < 1e-5) break;
      if (psum > target) {
        hi = sigma;
        sigma = (lo + hi) / 2.0;
      } else {
        lo = sigma;
        sigma = std::isinf(hi) ? sigma * 2.0 : (lo + hi) / 2.0;
      }
    }
    double mean_i = 0.0;
    for (const auto& [d, j] : knn[i]) mean_i += d;
    mean_i /= static_cast<double>(k);
    const double floor = 1e-3 * (rho > 0.0 ? mean_i : global_mean);
    sigma = std::max(sigma, floor);
    if (sigma <= 0.0) sigma = 1e-12;
    for (std::size_t m = 0; m < k; ++m) {
      const double excess = knn[i][m].first - rho;
      directed[i][m] = excess > 0.0 ? std::exp(-excess / sigma) : 1.0;
    }
  }

  // Fuzzy union: w = a + b - a*b.
  std::vector<std::pair<std::uint64_t, double>> entries;
  entries.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < k; ++m) {
      entries.emplace_back((static_cast<std::uint64_t>(i) << 32) | knn[i][m].second, directed[i][m]);
    }
  }
  std::sort(entries.begin(), entries.end());
  auto directed_weight = [&](std::uint32_t i, std::uint32_t j) {
    const std::uint64_t key = (static_cast<std::uint64_t>(i) << 32) | j;
    auto it = std::lower_bound(entries.begin(), entries.end(), std::make_pair(key, -1.0));
    return (it != entries.end() && it->first == key) ? it->second : 0.0;
  };
  std::vector<Edge> edges;
  for (const auto& [key, w] : entries) {
    const auto i = static_cast<std::uint32_t>(key >> 32);
    const auto j = static_cast<std::uint32_t>(key & 0xffffffffu);
    const double other = directed_weight(j, i);
    const double sym = w + other - w * other;
    edges.push_back({i, j, sym});
    if (other == 0.0) edges.push_back({j, i, sym});
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.head != b.head ? a.head < b.head : a.tail < b.tail; });
  return edges;
}

// ---------------------------------------------------------------------------
// Layout optimization

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

std::vector<Point2> optimize_layout(std::vector<Point2> y, std::vector<Edge> edges, const ProjectionParams& params,
                                    CurveParams curve) {
  const std::size_t epochs = params.epochs;
  double max_w = 0.0;
  for (const auto& e : edges) max_w = std::max(max_w, e.weight);
  std::erase_if(edges, [&](const Edge& e) { return e.weight < max_w / static_cast<double>(epochs); });

  constexpr double kNegativeSampleRate = 5.0;
  const std::size_t m = edges.size();
  std::vector<double> per_sample(m), next_sample(m), per_negative(m), next_negative(m);
  for (std::size_t e = 0; e < m; ++e) {
    per_sample[e] = max_w / edges[e].weight;
    next_sample[e] = per_sample[e];
    per_negative[e] = per_sample[e] / kNegativeSampleRate;
    next_negative[e] = per_negative[e];
  }

  Rng rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  const double a = curve.a;
  const double b = curve.b;
  const std::size_t n = y.size();
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const double alpha = 1.0 - static_cast<double>(epoch) / static_cast<double>(epochs);
    const double now = static_cast<double>(epoch);
    for (std::size_t e = 0; e < m; ++e) {
      if (next_sample[e] > now) continue;
      Point2& cur = y[edges[e].head];
      Point2& oth = y[edges[e].tail];
      double d2 = (cur[0] - oth[0]) * (cur[0] - oth[0]) + (cur[1] - oth[1]) * (cur[1] - oth[1]);
      if (d2 > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        for (std::size_t d = 0; d < 2; ++d) {
          const double g = clip(coeff * (cur[d] - oth[d]));
          cur[d] += g * alpha;
          oth[d] -= g * alpha;
        }
      }
      next_sample[e] += per_sample[e];

      const auto n_neg = static_cast<std::size_t>(std::max(0.0, (now - next_negative[e]) / per_negative[e]));
      for (std::size_t p = 0; p < n_neg; ++p) {
        const std::size_t k = rng.below(n);
        if (k == edges[e].head) continue;
        const Point2& other = y[k];
        d2 = (cur[0] - other[0]) * (cur[0] - other[0]) + (cur[1] - other[1]) * (cur[1] - other[1]);
        double coeff = 0.0;
        if (d2 > 0.0) coeff = 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
        for (std::size_t d = 0; d < 2; ++d) {
          const double g = coeff > 0.0 ? clip(coeff * (cur[d] - other[d])) : 4.0;
          cur[d] += g * alpha;
        }
      }
      next_negative[e] += static_cast<double>(n_neg) * per_negative[e];
    }
  }
  return y;
}

void normalize_unit_square(std::vector<Point2>& pts) {
  for (std::size_t axis = 0; axis < 2; ++axis) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : pts) {
      lo = std::min(lo, p[axis]);
      hi = std::max(hi, p[axis]);
    }
    const double range = hi - lo;
    for (auto& p : pts) {
      p[axis] = range > 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi))) ? (p[axis] - lo) / range : 0.5;
      p[axis] = std::clamp(p[axis], 0.0, 1.0);
    }
  }
}

}  // namespace

std::optional<std::array<double, 2>> Projection2D::find(std::string_view label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) return std::nullopt;
  return points[static_cast<std::size_t>(it - labels.begin())];
}

std::uint64_t subset_hash(std::span<const std::string> labels) {
  std::vector<std::string> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : sorted) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;  // separator byte that cannot occur in UTF-8
    h *= 0x100000001b3ULL;
  }
  return h;
}

CurveParams fit_curve_params(double min_dist, double spread) {
  constexpr std::size_t kSamples = 300;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (std::size_t i = 0; i < kSamples; ++i) {
    xs[i] = 3.0 * spread * static_cast<double>(i) / static_cast<double>(kSamples - 1);
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }
  auto sse = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < kSamples; ++i) {
      const double r = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b)) - ys[i];
      s += r * r;
    }
    return s;
  };
  // Levenberg-Marquardt on (a, b).
  double a = 1.0, b = 1.0, lambda = 1e-3;
  double err = sse(a, b);
  for (int iter = 0; iter < 500; ++iter) {
    double jtj[2][2] = {{0, 0}, {0, 0}};
    double jtr[2] = {0, 0};
    for (std::size_t i = 0; i < kSamples; ++i) {
      const double x = xs[i];
      const double p = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double f = 1.0 / (1.0 + a * p);
      const double r = f - ys[i];
      const double da = -p * f * f;
      const double db = x > 0.0 ? -a * p * 2.0 * std::log(x) * f * f : 0.0;
      jtj[0][0] += da * da;
      jtj[0][1] += da * db;
      jtj[1][1] += db * db;
      jtr[0] += da * r;
      jtr[1] += db * r;
    }
    jtj[1][0] = jtj[0][1];
    const double m00 = jtj[0][0] * (1.0 + lambda);
    const double m11 = jtj[1][1] * (1.0 + lambda);
    const double det = m00 * m11 - jtj[0][1] * jtj[1][0];
    if (std::abs(det) < 1e-300) break;
    const double step_a = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
    const double step_b = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
    const double na = a + step_a;
    const double nb = b + step_b;
    const double nerr = (na > 0 && nb > 0) ? sse(na, nb) : std::numeric_limits<double>::infinity();
    if (nerr < err) {
      const bool converged = err - nerr < 1e-15 * std::max(1.0, err);
      a = na;
      b = nb;
      err = nerr;
      lambda = std::max(lambda / 10.0, 1e-12);
      if (converged) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

std::vector<std::array<double, 2>> layout(const Matrix& data, const ProjectionParams& params, std::string* method) {
  const std::size_t n = data.size();
  if (n == 0) return {};
  if (n <= 2) {
    if (method) *method = "line";
    if (n == 1) return {Point2{0.5, 0.5}};
    return {Point2{0.0, 0.5}, Point2{1.0, 0.5}};
  }
  if (n < kUmapMinPoints) {
    if (method) *method = "pca";
    return pca_2d(data);
  }
  if (method) *method = "umap";
  const std::size_t k = std::min(params.neighbor_count, n - 1);
  auto edges = fuzzy_graph(data, k);

  // PCA initialization scaled to a 10-unit box plus seeded jitter.
  auto init = pca_2d(data);
  double max_abs = 0.0;
  for (const auto& p : init) max_abs = std::max({max_abs, std::abs(p[0]), std::abs(p[1])});
  const double scale = max_abs > 0.0 ? 10.0 / max_abs : 1.0;
  Rng jitter(params.seed);
  for (auto& p : init) {
    p[0] = p[0] * scale + 1e-4 * jitter.normal();
    p[1] = p[1] * scale + 1e-4 * jitter.normal();
  }
  return optimize_layout(std::move(init), std::move(edges), params, fit_curve_params(params.min_dist));
}

Projection2D project(std::span<const std::string> subset, const EmbeddingTable& embeddings, std::uint64_t seed) {
  Projection2D out;
  std::vector<std::string> sorted(subset.begin(), subset.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Matrix data;
  for (auto& label : sorted) {
    if (const auto* v = embeddings.find(label)) {
      data.push_back(*v);
      out.labels.push_back(std::move(label));
    } else {
      out.dropped.push_back(std::move(label));
    }
  }
  if (out.labels.empty()) fail(ErrorCode::kUnprocessable, "no label in the subset has an embedding");
  out.subset_hash = subset_hash(out.labels);
  out.parameters.seed = seed;
  out.parameters.neighbor_count = std::min(kDefaultNeighbors, out.labels.size() - 1);
  out.points = layout(data, out.parameters, &out.method);
  normalize_unit_square(out.points);
  return out;
}

HeatmapGrid rasterize_heatmap(const Projection2D& projection, const std::map<std::string, double, std::less<>>& values,
                              double bandwidth, std::size_t width, std::size_t height) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    fail(ErrorCode::kInvalidArgument, "heatmap bandwidth must be positive");
  }
  if (width == 0 || height == 0) fail(ErrorCode::kInvalidArgument, "heatmap dimensions must be positive");
  HeatmapGrid grid;
  grid.width = width;
  grid.height = height;
  grid.bandwidth = bandwidth;
  grid.intensities.assign(width * height, 0.0);

  const double reach = 4.0 * bandwidth;
  const double reach2 = reach * reach;
  const double inv_two_var = 1.0 / (2.0 * bandwidth * bandwidth);
  const auto w = static_cast<double>(width);
  const auto h = static_cast<double>(height);
  for (std::size_t i = 0; i < projection.labels.size(); ++i) {
    auto it = values.find(projection.labels[i]);
    if (it == values.end()) fail(ErrorCode::kInvalidArgument, "no heatmap value for '" + projection.labels[i] + "'");
    const double value = it->second;
    const double px = projection.points[i][0];
    const double py = projection.points[i][1];
    const auto col_lo = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor((px - reach) * w - 0.5)));
    const auto col_hi = std::min(static_cast<std::ptrdiff_t>(width) - 1,
                                 static_cast<std::ptrdiff_t>(std::ceil((px + reach) * w - 0.5)));
    const auto row_lo = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor((py - reach) * h - 0.5)));
    const auto row_hi = std::min(static_cast<std::ptrdiff_t>(height) - 1,
                                 static_cast<std::ptrdiff_t>(std::ceil((py + reach) * h - 0.5)));
    for (std::ptrdiff_t r = row_lo; r <= row_hi; ++r) {
      const double dy = (static_cast<double>(r) + 0.5) / h - py;
      for (std::ptrdiff_t c = col_lo; c <= col_hi; ++c) {
        const double dx = (static_cast<double>(c) + 0.5) / w - px;
        const double d2 = dx * dx + dy * dy;
        if (d2 > reach2) continue;
        grid.intensities[static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c)] +=
            value * std::exp(-d2 * inv_two_var);
      }
    }
  }
  return grid;
}

}  // namespace biaslens
