//
// Copyright 2026 The SNH Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Independent reference implementations used as test oracles.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "snh/dp_collect.hpp"
#include "snh/geo.hpp"
#include "snh/mlp.hpp"
#include "snh/random.hpp"

namespace snh::testing {

// Reference forward pass over flattened parameters, written out by hand.
inline double ref_forward(std::size_t depth, std::size_t width, const std::vector<double>& p,
                          double x0, double x1) {
  std::vector<double> a = {x0, x1};
  std::size_t k = 0;
  for (std::size_t l = 0; l <= depth; ++l) {
    const std::size_t out = l == depth ? 1 : width;
    const std::size_t in = a.size();
    std::vector<double> z(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      for (std::size_t c = 0; c < in; ++c) z[r] += p[k++] * a[c];
    }
    for (std::size_t r = 0; r < out; ++r) z[r] += p[k++];
    if (l < depth) {
      for (auto& v : z) v = std::max(v, 0.0);
    }
    a = std::move(z);
  }
  return a[0];
}

inline double ref_loss(std::size_t depth, std::size_t width, const std::vector<double>& p,
                const Batch& b, double psi) {
  double loss = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    const double f = ref_forward(depth, width, p, b.inputs(0, j), b.inputs(1, j));
    const double d = f - b.labels(j);
    loss += b.weights(j) / std::max(b.labels(j), psi) * d * d;
  }
  return loss;
}

inline Batch random_batch(Rng& g, std::size_t n) {
  Batch b;
  b.inputs.resize(2, static_cast<Eigen::Index>(n));
  b.labels.resize(static_cast<Eigen::Index>(n));
  b.weights.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    b.inputs(0, i) = uniform(g, 0, 1);
    b.inputs(1, i) = uniform(g, 0, 1);
    b.labels(i) = uniform(g, -0.2, 2.0);
    b.weights(i) = static_cast<double>(uniform_index(g, 4));
  }
  return b;
}

// Smallest |pre-activation| over every hidden unit and sample.
inline double ref_kink_margin(std::size_t depth, std::size_t width, const std::vector<double>& p,
                              const Batch& b) {
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < b.inputs.cols(); ++s) {
    std::vector<double> a = {b.inputs(0, s), b.inputs(1, s)};
    std::size_t k = 0;
    for (std::size_t l = 0; l < depth; ++l) {
      std::vector<double> z(width, 0.0);
      for (std::size_t r = 0; r < width; ++r) {
        for (double v : a) z[r] += p[k++] * v;
      }
      for (std::size_t r = 0; r < width; ++r) {
        z[r] += p[k++];
        margin = std::min(margin, std::abs(z[r]));
        z[r] = std::max(z[r], 0.0);
      }
      a = std::move(z);
    }
  }
  return margin;
}

struct GradientCase {
  Mlp model;
  Batch batch;
  double psi;
};

// Random parameters in [-1, 1] and a random weighted batch, redrawn until no
// hidden pre-activation lies within 1e-3 of the ReLU kink, so central
// differences with a 1e-5 step never straddle it.
inline GradientCase random_gradient_case(Rng& g, std::size_t depth, std::size_t width,
                                         std::size_t samples) {
  for (;;) {
    Mlp m(depth, width);
    std::vector<double> p(m.parameter_count());
    for (auto& v : p) v = uniform(g, -1, 1);
    m.set_parameters(p);
    auto b = random_batch(g, samples);
    if (ref_kink_margin(depth, width, p, b) >= 1e-3) return {std::move(m), b, uniform(g, 0.01, 1)};
  }
}

inline double max_rel_discrepancy(const Mlp& m, const Batch& b, double psi) {
  const auto analytic = loss_and_grad(m, b, psi).gradient.flatten();
  auto p = m.parameters();
  const double h = 1e-5;
  double worst = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = ref_loss(m.depth(), m.width(), p, b, psi);
    p[i] = keep - h;
    const double dn = ref_loss(m.depth(), m.width(), p, b, psi);
    p[i] = keep;
    const double numeric = (up - dn) / (2 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

// Independent oracle: clip every cell against the query and sum by area.
inline double oracle_label(const NoisyHistogram& h, const RangeQuery& q,
                           double* abs_mass = nullptr) {
  const auto& g = h.grid();
  const double rho = g.rho();
  double total = 0, mag = 0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto p = g.corner(c);
    const double w = std::max(0.0, std::min(p.x + rho, q.corner().x + q.size()) -
                                       std::max(p.x, q.corner().x));
    const double hgt = std::max(0.0, std::min(p.y + rho, q.corner().y + q.size()) -
                                         std::max(p.y, q.corner().y));
    const double frac = w * hgt / (rho * rho);
    total += frac * h.answer(c);
    mag += frac * std::abs(h.answer(c));
  }
  if (abs_mass) *abs_mass = mag;
  return total;
}

inline NoisyHistogram random_histogram(Rng& g) {
  const double side = uniform(g, 1, 2000);
  const std::size_t m = 1 + uniform_index(g, 8);
  // Sometimes let the last column overhang the region.
  const double rho = side / static_cast<double>(m) * (g() % 3 == 0 ? uniform(g, 1.0, 1.3) : 1.0);
  Grid grid(Region(GeoPoint(0, 0), side), std::min(rho, side));
  std::vector<double> ys(grid.cell_count());
  for (auto& y : ys) y = uniform(g, -20, 200);
  return NoisyHistogram(grid, std::move(ys), 0.5, 1000);
}

}  // namespace snh::testing
