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
#include <cstdlib>
#include <string>
#include <vector>

#include "ddp/lp.hpp"

namespace ddp {

struct SimplexOptions {
  double tol_feas = 1e-9;  // primal feasibility
  double tol_opt = 1e-8;   // dual feasibility / reduced-cost threshold
  double tol_piv = 1e-11;  // entries below this never pivot or block
  // No objective progress for max(stall_base, 3*ncols) pivots switches the
  // pricing rule to Bland's, which cannot cycle.
  int stall_base = 50;
  int max_pivots = 2'000'000;
  int refactor_every = 256;
};

/// Bounded-variable two-phase primal simplex over a dense basis inverse.
/// Returns a basic (vertex) optimal solution: every nonbasic variable sits
/// exactly on one of its bounds, so optimal solutions are extreme points of
/// the feasible polytope. Deterministic: ties in pricing and in the ratio
/// test are broken by lowest variable index.
class SimplexSolver {
 public:
  explicit SimplexSolver(SimplexOptions opts = {}) : opts_(opts) {}

  LpSolution solve(const LpProblem& lp) {
    lp.check_dims();
    setup(lp);

    LpSolution sol;
    sol.status = LpStatus::Optimal;

    // Phase 1: minimize the total artificial infeasibility.
    phase1_ = true;
    set_phase_costs();
    const LoopExit e1 = primal_loop();
    if (e1 == LoopExit::Unbounded)
      throw std::runtime_error("simplex: phase-1 unbounded on '" + lp_->name +
                               "' (numerical failure)");
    refactor();
    const double infeas = current_obj();
    if (infeas > opts_.tol_feas * (1.0 + rhs_scale_)) {
      sol.status = LpStatus::Infeasible;
      Vector y = duals_y();
      sol.farkas_ray = y;
      sol.pivots = pivots_;
      sol.used_bland = used_bland_;
      return sol;
    }

    // Phase 2 on the original costs; artificials are pinned to zero.
    phase1_ = false;
    set_phase_costs();
    const LoopExit e2 = primal_loop();
    sol.pivots = pivots_;
    sol.used_bland = used_bland_;
    if (e2 == LoopExit::Unbounded) {
      sol.status = LpStatus::Unbounded;
      sol.primal_ray = structural_ray();
      return sol;
    }

    refactor();
    extract(sol);
    return sol;
  }

  /// True iff the active constraints at x (equalities, tight inequalities,
  /// tight bounds) span the full variable space, i.e. x is an extreme point.
  /// Throws if x is not feasible within tol_feas.
  static bool is_vertex(const LpProblem& lp, const Vector& x,
                        double tol_feas = 1e-9, double tol_active = 1e-7) {
    lp.check_dims();
    const Eigen::Index n = lp.num_vars();
    if (x.size() != n) throw std::invalid_argument("is_vertex: size mismatch");
    const double fs = tol_feas * (1.0 + x.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < lp.num_eq(); ++i)
      if (std::abs(lp.eq_mat.row(i).dot(x) - lp.eq_rhs[i]) >
          fs * (1.0 + std::abs(lp.eq_rhs[i])))
        throw std::invalid_argument("is_vertex: x violates equality row " +
                                    std::to_string(i));
    for (Eigen::Index i = 0; i < lp.num_ineq(); ++i)
      if (lp.ineq_mat.row(i).dot(x) - lp.ineq_rhs[i] >
          fs * (1.0 + std::abs(lp.ineq_rhs[i])))
        throw std::invalid_argument("is_vertex: x violates inequality row " +
                                    std::to_string(i));
    for (Eigen::Index j = 0; j < n; ++j)
      if (x[j] < lp.lo[j] - fs || x[j] > lp.hi[j] + fs)
        throw std::invalid_argument("is_vertex: x violates bounds at var " +
                                    std::to_string(j));

    std::vector<Eigen::Index> active_ineq, active_bnd;
    for (Eigen::Index i = 0; i < lp.num_ineq(); ++i) {
      const double s = lp.ineq_rhs[i] - lp.ineq_mat.row(i).dot(x);
      if (std::abs(s) <= tol_active * (1.0 + std::abs(lp.ineq_rhs[i])))
        active_ineq.push_back(i);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double scale = 1.0 + std::abs(x[j]);
      if ((std::isfinite(lp.lo[j]) &&
           std::abs(x[j] - lp.lo[j]) <= tol_active * scale) ||
          (std::isfinite(lp.hi[j]) &&
           std::abs(x[j] - lp.hi[j]) <= tol_active * scale))
        active_bnd.push_back(j);
    }
    const Eigen::Index rows =
        lp.num_eq() + static_cast<Eigen::Index>(active_ineq.size()) +
        static_cast<Eigen::Index>(active_bnd.size());
    if (rows < n) return false;
    Matrix act(rows, n);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < lp.num_eq(); ++i) act.row(r++) = lp.eq_mat.row(i);
    for (const Eigen::Index i : active_ineq) act.row(r++) = lp.ineq_mat.row(i);
    for (const Eigen::Index j : active_bnd) {
      act.row(r).setZero();
      act(r, j) = 1.0;
      ++r;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(act);
    qr.setThreshold(1e-9);
    return qr.rank() == n;
  }

 private:
  enum class VarState : char { Basic, AtLower, AtUpper, FreeZero };
  enum class LoopExit { Optimal, Unbounded };

  void setup(const LpProblem& lp) {
    lp_ = &lp;
    n_ = lp.num_vars();
    p_ = lp.num_ineq();
    m_ = lp.num_eq() + p_;
    ncols_ = n_ + p_;  // structural + slack; artificials handled implicitly

    A_.setZero(m_, ncols_);
    rhs_.resize(m_);
    if (lp.num_eq() > 0) {
      A_.topLeftCorner(lp.num_eq(), n_) = lp.eq_mat;
      rhs_.head(lp.num_eq()) = lp.eq_rhs;
    }
    if (p_ > 0) {
      A_.bottomLeftCorner(p_, n_) = lp.ineq_mat;
      A_.bottomRightCorner(p_, p_).setIdentity();
      rhs_.tail(p_) = lp.ineq_rhs;
    }
    rhs_scale_ = m_ > 0 ? rhs_.cwiseAbs().maxCoeff() : 0.0;

    lo_.resize(ncols_);
    hi_.resize(ncols_);
    lo_.head(n_) = lp.lo;
    hi_.head(n_) = lp.hi;
    lo_.tail(p_).setZero();
    hi_.tail(p_).setConstant(kInf);

    cost_.setZero(ncols_);

    state_.assign(static_cast<size_t>(ncols_) + static_cast<size_t>(m_),
                  VarState::AtLower);
    for (Eigen::Index j = 0; j < ncols_; ++j) {
      if (std::isfinite(lo_[j]) &&
          (!std::isfinite(hi_[j]) || std::abs(lo_[j]) <= std::abs(hi_[j])))
        state_[j] = VarState::AtLower;
      else if (std::isfinite(hi_[j]))
        state_[j] = VarState::AtUpper;
      else
        state_[j] = VarState::FreeZero;
    }

    // Artificial basis: one signed unit column per row, value = |residual|.
    Vector r = rhs_;
    for (Eigen::Index j = 0; j < ncols_; ++j) {
      const double v = nb_value(j);
      if (v != 0.0) r -= A_.col(j) * v;
    }
    art_sign_.resize(m_);
    basis_.resize(m_);
    xB_.resize(m_);
    Binv_.setZero(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      art_sign_[i] = r[i] >= 0.0 ? 1.0 : -1.0;
      basis_[i] = static_cast<int>(ncols_ + i);
      state_[static_cast<size_t>(ncols_ + i)] = VarState::Basic;
      xB_[i] = std::abs(r[i]);
      Binv_(i, i) = art_sign_[i];
    }

    pivots_ = 0;
    used_bland_ = false;
  }

  void set_phase_costs() {
    if (phase1_)
      cost_.setZero();
    else
      cost_.head(n_) = lp_->cost;
  }

  double col_cost(int j) const {
    if (j >= ncols_) return phase1_ ? 1.0 : 0.0;
    return cost_[j];
  }

  double nb_value(Eigen::Index j) const {
    switch (state_[static_cast<size_t>(j)]) {
      case VarState::AtLower: return j < ncols_ ? lo_[j] : 0.0;
      case VarState::AtUpper: return hi_[j];
      default: return 0.0;
    }
  }

  Vector basic_cost() const {
    Vector cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) cb[i] = col_cost(basis_[i]);
    return cb;
  }

  /// Row multipliers y with y = Binv^T c_B.
  Vector duals_y() const { return Binv_.transpose() * basic_cost(); }

  double current_obj() const {
    double obj = basic_cost().dot(xB_);
    for (Eigen::Index j = 0; j < ncols_; ++j)
      if (state_[static_cast<size_t>(j)] != VarState::Basic)
        obj += col_cost(static_cast<int>(j)) * nb_value(j);
    return obj;
  }

  Vector col(int j) const {
    if (j < ncols_) return A_.col(j);
    Vector a = Vector::Zero(m_);
    a[j - ncols_] = art_sign_[j - ncols_];
    return a;
  }

  void refactor() {
    if (m_ == 0) return;
    Matrix B(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) B.col(i) = col(basis_[i]);
    Eigen::PartialPivLU<Matrix> lu(B);
    Binv_ = lu.inverse();
    if (!Binv_.allFinite())
      throw std::runtime_error("simplex: singular basis on '" + lp_->name +
                               "'");
    Vector b_eff = rhs_;
    for (Eigen::Index j = 0; j < ncols_; ++j) {
      if (state_[static_cast<size_t>(j)] == VarState::Basic) continue;
      const double v = nb_value(j);
      if (v != 0.0) b_eff -= A_.col(j) * v;
    }
    xB_ = Binv_ * b_eff;
  }

  LoopExit primal_loop() {
    int stall = 0;
    const int stall_limit =
        std::max(opts_.stall_base, 3 * static_cast<int>(ncols_));
    double best_obj = current_obj();
    int since_refactor = 0;

    for (;;) {
      if (pivots_ > opts_.max_pivots)
        throw std::runtime_error("simplex: pivot limit exceeded on '" +
                                 lp_->name + "'");
      if (since_refactor >= opts_.refactor_every) {
        refactor();
        since_refactor = 0;
      }

      const Vector y = duals_y();
      int enter = -1;
      double enter_score = opts_.tol_opt;
      double d_enter = 0.0;
      for (Eigen::Index j = 0; j < ncols_; ++j) {
        const VarState st = state_[static_cast<size_t>(j)];
        if (st == VarState::Basic) continue;
        if (lo_[j] == hi_[j]) continue;  // fixed
        const double d = cost_[j] - y.dot(A_.col(j));
        double viol = 0.0;
        if (st == VarState::AtLower || st == VarState::FreeZero)
          viol = std::max(viol, -d);
        if (st == VarState::AtUpper || st == VarState::FreeZero)
          viol = std::max(viol, d);
        if (viol <= opts_.tol_opt) continue;
        if (used_bland_) {
          enter = static_cast<int>(j);
          d_enter = d;
          break;
        }
        if (viol > enter_score) {
          enter_score = viol;
          enter = static_cast<int>(j);
          d_enter = d;
        }
      }
      if (enter < 0) {
        // Recheck against an exactly refactorized basis before declaring
        // optimality; rank-one updates drift.
        if (since_refactor > 0) {
          refactor();
          since_refactor = 0;
          continue;
        }
        return LoopExit::Optimal;
      }

      double sigma;
      switch (state_[static_cast<size_t>(enter)]) {
        case VarState::AtLower: sigma = 1.0; break;
        case VarState::AtUpper: sigma = -1.0; break;
        default: sigma = d_enter < 0.0 ? 1.0 : -1.0; break;
      }

      const Vector w = Binv_ * A_.col(enter);

      // Ratio test: largest step t keeping all basic variables within their
      // bounds; the entering variable itself blocks at its opposite bound.
      double t_best = kInf;
      Eigen::Index leave_row = -1;
      bool leave_at_upper = false;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double delta = -sigma * w[i];  // change of basic i per unit t
        if (std::abs(delta) <= opts_.tol_piv) continue;
        const int bi = basis_[i];
        const double blo = bi < ncols_ ? lo_[bi] : 0.0;
        const double bhi = bi < ncols_ ? hi_[bi] : (phase1_ ? kInf : 0.0);
        double t;
        bool at_upper;
        if (delta < 0.0) {
          if (!std::isfinite(blo)) continue;
          t = (xB_[i] - blo) / (-delta);
          at_upper = false;
        } else {
          if (!std::isfinite(bhi)) continue;
          t = (bhi - xB_[i]) / delta;
          at_upper = true;
        }
        if (t < 0.0) t = 0.0;  // tolerance slack on a bound
        const double tie = 1e-10 * (1.0 + std::min(t, t_best));
        if (leave_row < 0 || t < t_best - tie ||
            (t <= t_best + tie && bi < basis_[leave_row])) {
          t_best = std::min(t, t_best);
          leave_row = i;
          leave_at_upper = at_upper;
        }
      }
      const double span = hi_[enter] - lo_[enter];
      const bool self_blocks = std::isfinite(span) && span <= t_best;

      if (!self_blocks && leave_row < 0) {
        unbounded_enter_ = enter;
        unbounded_sigma_ = sigma;
        return LoopExit::Unbounded;
      }

      if (self_blocks) {
        // Bound flip, no basis change.
        xB_ -= sigma * span * w;
        state_[static_cast<size_t>(enter)] =
            state_[static_cast<size_t>(enter)] == VarState::AtLower
                ? VarState::AtUpper
                : VarState::AtLower;
      } else {
        const double t = t_best;
        const double enter_val = nb_value(enter) + sigma * t;
        xB_ -= sigma * t * w;
        const int leave = basis_[leave_row];
        state_[static_cast<size_t>(leave)] =
            leave_at_upper ? VarState::AtUpper : VarState::AtLower;
        basis_[leave_row] = enter;
        state_[static_cast<size_t>(enter)] = VarState::Basic;
        xB_[leave_row] = enter_val;
        // Binv update: pivot on w[leave_row].
        const double piv = w[leave_row];
        Binv_.row(leave_row) /= piv;
        for (Eigen::Index i = 0; i < m_; ++i) {
          if (i == leave_row) continue;
          const double f = w[i];
          if (f != 0.0) Binv_.row(i) -= f * Binv_.row(leave_row);
        }
      }
      ++pivots_;
      ++since_refactor;

      const double obj = current_obj();
      if (obj < best_obj - 1e-12 * (1.0 + std::abs(best_obj))) {
        best_obj = obj;
        stall = 0;
      } else if (!used_bland_ && ++stall > stall_limit) {
        used_bland_ = true;
      }
    }
  }

  /// Projection of the direction found unbounded onto structural space.
  Vector structural_ray() const {
    Vector ray = Vector::Zero(n_);
    if (unbounded_enter_ < 0) return ray;
    const double sigma = unbounded_sigma_;
    const Vector w = Binv_ * A_.col(unbounded_enter_);
    if (unbounded_enter_ < n_) ray[unbounded_enter_] = sigma;
    for (Eigen::Index i = 0; i < m_; ++i)
      if (basis_[i] < n_) ray[basis_[i]] = -sigma * w[i];
    return ray;
  }

  void extract(LpSolution& sol) const {
    sol.x.resize(n_);
    for (Eigen::Index j = 0; j < n_; ++j)
      sol.x[j] = state_[static_cast<size_t>(j)] == VarState::Basic
                     ? 0.0
                     : nb_value(j);
    for (Eigen::Index i = 0; i < m_; ++i)
      if (basis_[i] < n_) sol.x[basis_[i]] = xB_[i];
    sol.obj = lp_->cost.dot(sol.x);

    const Vector y = duals_y();
    const Eigen::Index q = lp_->num_eq();
    sol.dual_eq = -y.head(q);
    sol.dual_ineq = (-y.tail(p_)).cwiseMax(0.0);
    sol.dual_bounds.resize(n_);
    for (Eigen::Index j = 0; j < n_; ++j)
      sol.dual_bounds[j] = state_[static_cast<size_t>(j)] == VarState::Basic
                               ? 0.0
                               : cost_[j] - y.dot(A_.col(j));
    sol.basis.assign(basis_.begin(), basis_.end());
  }

  SimplexOptions opts_;
  const LpProblem* lp_ = nullptr;
  Eigen::Index n_ = 0, p_ = 0, m_ = 0, ncols_ = 0;
  Matrix A_;
  Vector rhs_, lo_, hi_, cost_;
  double rhs_scale_ = 0.0;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  Vector xB_;
  Matrix Binv_;
  Vector art_sign_;
  bool phase1_ = true;
  int pivots_ = 0;
  bool used_bland_ = false;
  int unbounded_enter_ = -1;
  double unbounded_sigma_ = 1.0;
};

/// Lagrangian dual value matching LpSolution's sign convention; equals the
/// primal objective at an optimum (strong duality).
inline double dual_objective(const LpProblem& lp, const LpSolution& sol) {
  double g = 0.0;
  if (lp.num_eq() > 0) g -= sol.dual_eq.dot(lp.eq_rhs);
  if (lp.num_ineq() > 0) g -= sol.dual_ineq.dot(lp.ineq_rhs);
  for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
    const double d = sol.dual_bounds[j];
    if (d > 0.0)
      g += std::isfinite(lp.lo[j]) ? d * lp.lo[j] : -kInf;
    else if (d < 0.0)
      g += std::isfinite(lp.hi[j]) ? d * lp.hi[j] : -kInf;
  }
  return g;
}

/// Value of the Farkas certificate: positive proves that no point of the box
/// satisfies all rows. `ray` is LpSolution::farkas_ray (eq rows then ineq).
inline double farkas_gap(const LpProblem& lp, const Vector& ray) {
  const Eigen::Index q = lp.num_eq();
  double g = 0.0;
  for (Eigen::Index i = 0; i < q; ++i) g += ray[i] * lp.eq_rhs[i];
  for (Eigen::Index i = 0; i < lp.num_ineq(); ++i) {
    const double yi = ray[q + i];
    if (yi > 1e-12) return -kInf;  // slack in [0,inf) would be unbounded
    g += yi * lp.ineq_rhs[i];
  }
  for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
    double w = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) w -= ray[i] * lp.eq_mat(i, j);
    for (Eigen::Index i = 0; i < lp.num_ineq(); ++i)
      w -= ray[q + i] * lp.ineq_mat(i, j);
    if (w > 0.0)
      g += std::isfinite(lp.lo[j]) ? w * lp.lo[j] : -kInf;
    else if (w < 0.0)
      g += std::isfinite(lp.hi[j]) ? w * lp.hi[j] : -kInf;
  }
  return g;
}

}  // namespace ddp
