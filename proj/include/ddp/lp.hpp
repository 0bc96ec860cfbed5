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

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min cost.x  s.t.  eq_mat x = eq_rhs,  ineq_mat x <= ineq_rhs,  lo <= x <= hi.
/// Bound entries may be +-inf; lo == hi fixes a variable.
struct LpProblem {
  Vector cost;
  Matrix eq_mat;    // q x n
  Vector eq_rhs;    // q
  Matrix ineq_mat;  // p x n
  Vector ineq_rhs;  // p
  Vector lo, hi;    // n
  std::string name;

  Eigen::Index num_vars() const { return cost.size(); }
  Eigen::Index num_eq() const { return eq_rhs.size(); }
  Eigen::Index num_ineq() const { return ineq_rhs.size(); }

  void check_dims() const {
    const Eigen::Index n = num_vars();
    if (lo.size() != n || hi.size() != n)
      throw std::invalid_argument("lp '" + name + "': bound size mismatch");
    if (eq_mat.rows() != num_eq() || (num_eq() > 0 && eq_mat.cols() != n))
      throw std::invalid_argument("lp '" + name + "': equality dims mismatch");
    if (ineq_mat.rows() != num_ineq() ||
        (num_ineq() > 0 && ineq_mat.cols() != n))
      throw std::invalid_argument("lp '" + name + "': inequality dims mismatch");
    for (Eigen::Index j = 0; j < n; ++j)
      if (lo[j] > hi[j])
        throw std::invalid_argument("lp '" + name + "': lo > hi at var " +
                                    std::to_string(j));
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

/// Solution of an LpProblem. Multiplier signs follow the convention
///   reduced_cost = cost + eq_mat^T dual_eq + ineq_mat^T dual_ineq
/// with dual_ineq >= 0 at an optimum, so that for a parametric right-hand side
/// the map rhs -> value has slope -dual. `dual_bounds` holds the reduced costs
/// of the structural variables (>= 0 at a lower bound, <= 0 at an upper bound).
struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  Vector x;
  double obj = 0.0;
  Vector dual_eq;
  Vector dual_ineq;
  Vector dual_bounds;
  /// Basic column indices, one per row: 0..n-1 structural, n..n+p-1 slacks of
  /// the inequality rows, larger values are internal artificials.
  std::vector<int> basis;
  /// Infeasible: row multipliers (eq then ineq) certifying that no point of
  /// the box satisfies the rows; see SimplexSolver::check_farkas.
  Vector farkas_ray;
  /// Unbounded: feasible direction with negative cost.
  Vector primal_ray;
  int pivots = 0;
  bool used_bland = false;
};

}  // namespace ddp
