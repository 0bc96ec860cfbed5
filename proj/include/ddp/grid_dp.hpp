// Copyright 2026 The ddpcuts Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ddp/instances.hpp"

namespace ddp {

/// Cost-to-go values of the inventory problem tabulated on a uniform grid,
/// with affine interpolation between grid points and boundary-slope
/// extrapolation outside (each extrapolating lookup during the build is
/// counted in `extrapolations`).
class ValueTable {
 public:
  ValueTable(int T, double lo, double hi, Eigen::Index N)
      : T_(T), lo_(lo), hi_(hi), N_(N),
        values_(static_cast<size_t>(T), Vector::Zero(N)) {
    if (N < 2 || !(lo < hi))
      throw std::invalid_argument("value table: need N >= 2 and lo < hi");
  }

  int horizon() const { return T_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  Eigen::Index grid_size() const { return N_; }
  double step() const { return (hi_ - lo_) / static_cast<double>(N_ - 1); }
  double grid_point(Eigen::Index j) const {
    return lo_ + step() * static_cast<double>(j);
  }
  long extrapolations() const { return extrapolations_; }

  /// Values of the cost-to-go entering stage t, for t = 2..T+1.
  const Vector& values(int t) const { return values_.at(index(t)); }
  Vector& values(int t) { return values_.at(index(t)); }

  /// Affine interpolation of the stage-t cost-to-go at y; outside the grid
  /// the boundary segment's slope extends the table.
  double interp(int t, double y) const {
    const Vector& v = values_.at(index(t));
    const double h = step();
    if (y <= lo_) return v[0] + (v[1] - v[0]) / h * (y - lo_);
    if (y >= hi_)
      return v[N_ - 1] + (v[N_ - 1] - v[N_ - 2]) / h * (y - hi_);
    const auto j = std::min<Eigen::Index>(
        N_ - 2, static_cast<Eigen::Index>((y - lo_) / h));
    const double w = (y - grid_point(j)) / h;
    return v[j] * (1.0 - w) + v[j + 1] * w;
  }

  bool outside(double y) const { return y < lo_ || y > hi_; }
  void count_extrapolation() { ++extrapolations_; }

  /// Smallest second difference of the stage-t values (>= 0 for a convex
  /// table up to rounding).
  double min_second_difference(int t) const {
    const Vector& v = values_.at(index(t));
    double m = 0.0;
    for (Eigen::Index j = 1; j + 1 < N_; ++j)
      m = std::min(m, v[j - 1] - 2.0 * v[j] + v[j + 1]);
    return m;
  }

 private:
  size_t index(int t) const {
    if (t < 2 || t > T_ + 1)
      throw std::out_of_range("value table stage " + std::to_string(t));
    return static_cast<size_t>(t - 2);
  }

  int T_;
  double lo_, hi_;
  Eigen::Index N_;
  std::vector<Vector> values_;
  long extrapolations_ = 0;
};

namespace detail {

/// Exact minimizer of the stage-t objective
///   psi(x) = c_t x + b (D-x)_+ + h (x-D)_+ + Vhat_{t+1}(x - D)
/// over [max(y, x_lo), x_hi], exploiting convexity: psi is piecewise linear
/// with knots at D and at grid images, so the unconstrained minimum sits on a
/// knot; for y past the minimizer the left endpoint is optimal.
struct StageMinimizer {
  const InventoryParams* params;
  ValueTable* table;  // may be null at t = T (zero continuation)
  int t;
  double x_lo, x_hi;
  double x_star = 0.0, psi_star = 0.0;

  double psi(double x) const {
    const double D = params->demand(t);
    const double c = params->order_cost(t);
    double v = c * x + params->backorder_cost * std::max(0.0, D - x) +
               params->holding_cost * std::max(0.0, x - D);
    if (t < params->T) {
      const double arg = x - D;
      if (table->outside(arg)) table->count_extrapolation();
      v += table->interp(t + 1, arg);
    }
    return v;
  }

  void locate_minimum() {
    std::vector<double> knots{x_lo, x_hi};
    const double D = params->demand(t);
    if (D > x_lo && D < x_hi) knots.push_back(D);
    if (t < params->T) {
      for (Eigen::Index j = 0; j < table->grid_size(); ++j) {
        const double x = table->grid_point(j) + D;
        if (x > x_lo && x < x_hi) knots.push_back(x);
      }
    }
    std::sort(knots.begin(), knots.end());
    x_star = knots.front();
    psi_star = psi(x_star);
    for (const double x : knots) {
      const double v = psi(x);
      if (v < psi_star) {
        psi_star = v;
        x_star = x;
      }
    }
  }

  /// min over x in [max(y, x_lo), x_hi]; requires y <= x_hi.
  double value(double y) const {
    const double c = params->order_cost(t);
    if (y <= x_star) return psi_star - c * y;
    return psi(y) - c * y;
  }
};

}  // namespace detail

/// Backward grid recursion for the inventory problem: tabulates the
/// cost-to-go of stages T+1 down to 2 at N equally spaced points of
/// [lo, hi], minimizing each stage objective exactly over the knots of its
/// piecewise-linear continuation.
inline ValueTable grid_dp(const InventoryParams& params, Eigen::Index N,
                          double lo, double hi) {
  ValueTable table(params.T, lo, hi, N);
  for (int t = params.T; t >= 2; --t) {
    detail::StageMinimizer mini{&params, &table, t, params.state_lo,
                                params.order_hi(t)};
    mini.locate_minimum();
    Vector& out = table.values(t);
    for (Eigen::Index j = 0; j < N; ++j)
      out[j] = mini.value(table.grid_point(j));
  }
  return table;
}

inline ValueTable grid_dp(const InventoryParams& params, Eigen::Index N) {
  return grid_dp(params, N, params.state_lo, params.state_hi);
}

/// First-stage value Q_1(y1) evaluated through the table.
inline double initial_value(const InventoryParams& params,
                            ValueTable& table, double y1) {
  detail::StageMinimizer mini{&params, &table, 1, params.state_lo,
                              params.order_hi(1)};
  mini.locate_minimum();
  return mini.value(y1);
}

}  // namespace ddp
