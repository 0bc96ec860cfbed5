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

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "ddp/cuts.hpp"
#include "ddp/lp.hpp"
#include "ddp/model.hpp"
#include "ddp/simplex.hpp"

namespace ddp {

/// Stage subproblem at incoming state x_prev:
///   min c.dec + theta
///   s.t. A dec = b - B x_prev,  G dec <= h - H x_prev,  lo <= dec <= hi,
///        theta >= alpha_l + beta_l . dec_state   for each selected cut l,
/// with theta omitted while the pool has no cuts (the cost-to-go model is
/// still -infinity) and for the last stage (cost-to-go is identically zero).
/// The constant d . x_prev is NOT part of the LP objective; callers add it
/// back to recover the stage value.
inline LpProblem build_stage_subproblem(const StageLp& stage,
                                        const Vector& x_prev,
                                        const CutPool* pool) {
  if (x_prev.size() != stage.num_prev())
    throw std::invalid_argument("stage " + std::to_string(stage.t) +
                                ": x_prev has " + std::to_string(x_prev.size()) +
                                " entries, expected " +
                                std::to_string(stage.num_prev()));
  const Eigen::Index nd = stage.num_dec();
  const Eigen::Index ncuts = pool ? pool->num_selected() : 0;
  const bool with_theta = ncuts > 0;
  const Eigen::Index nv = nd + (with_theta ? 1 : 0);

  LpProblem lp;
  lp.name = "stage" + std::to_string(stage.t);
  lp.cost.setZero(nv);
  lp.cost.head(nd) = stage.c;
  if (with_theta) lp.cost[nd] = 1.0;

  lp.lo.resize(nv);
  lp.hi.resize(nv);
  lp.lo.head(nd) = stage.lo;
  lp.hi.head(nd) = stage.hi;
  if (with_theta) {
    lp.lo[nd] = -kInf;
    lp.hi[nd] = kInf;
  }

  lp.eq_mat.setZero(stage.num_eq(), nv);
  if (stage.num_eq() > 0) {
    lp.eq_mat.leftCols(nd) = stage.A;
    lp.eq_rhs = stage.b - stage.B * x_prev;
  } else {
    lp.eq_rhs.resize(0);
  }

  lp.ineq_mat.setZero(stage.num_ineq() + ncuts, nv);
  lp.ineq_rhs.resize(stage.num_ineq() + ncuts);
  if (stage.num_ineq() > 0) {
    lp.ineq_mat.topLeftCorner(stage.num_ineq(), nd) = stage.G;
    lp.ineq_rhs.head(stage.num_ineq()) = stage.h - stage.H * x_prev;
  }
  if (with_theta) {
    Eigen::Index r = stage.num_ineq();
    pool->for_each_selected([&](const Cut& c) {
      lp.ineq_mat.row(r).head(stage.n_state) = c.beta.transpose();
      lp.ineq_mat(r, nd) = -1.0;
      lp.ineq_rhs[r] = -c.alpha;
      ++r;
    });
  }
  return lp;
}

/// Cut for the stage's cost-to-go as a function of the incoming state, from
/// the optimal duals of the stage subproblem: slope d + B^T lambda + H^T mu
/// (mu restricted to the stage's own inequality rows; appended cut rows do
/// not involve x_prev), height = the stage value theta_val at x_prev.
inline Cut compute_cut(const StageLp& stage, const LpSolution& sol,
                       const Vector& x_prev, double theta_val) {
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error(
        "compute_cut: stage " + std::to_string(stage.t) + " subproblem is " +
        std::string(to_string(sol.status)) +
        " (relatively complete recourse violated)");
  Vector beta = stage.d;
  if (stage.num_eq() > 0) beta += stage.B.transpose() * sol.dual_eq;
  if (stage.num_ineq() > 0)
    beta += stage.H.transpose() * sol.dual_ineq.head(stage.num_ineq());
  return make_cut(x_prev, theta_val, std::move(beta));
}

enum class RunStatus { Converged, IterLimit, Error };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::IterLimit: return "IterLimit";
    case RunStatus::Error: return "Error";
  }
  return "?";
}

struct IterationRecord {
  int k = 0;
  std::vector<Vector> trajectory;    // x_t for t = 1..T
  std::vector<double> stage_values;  // stage value at each t
  double lb = -kInf;          // first-stage model value this iteration
  double running_lb = -kInf;  // sup over iterations so far
  double ub = kInf;           // cost of this iteration's feasible trajectory
  double ub_best = kInf;      // min over iterations so far
  std::vector<Eigen::Index> selected_counts;  // per pool, t = 2..T
  double wall_time = 0.0;                     // seconds, this iteration
  int new_trial_points = 0;
  bool selection_changed = false;
};

struct RunReport {
  RunStatus status = RunStatus::Error;
  std::string error_message;
  std::vector<IterationRecord> iterations;
  std::vector<Vector> final_trajectory;  // states of the best-ub iteration
  double epsilon = 0.0;
  std::string strategy_name;
  bool maximize = false;
  double running_lb = -kInf;
  double ub_best = kInf;
  double total_time = 0.0;
  long cuts_computed = 0;
  long cuts_selected = 0;
  long invariant_violations = 0;
  int converged_at = -1;  // first iteration meeting the gap criterion

  double gap() const { return ub_best - running_lb; }
  /// Attained objective in the problem's original sense.
  double value() const { return maximize ? -ub_best : ub_best; }
  /// Optimistic bound in the original sense.
  double bound() const { return maximize ? -running_lb : running_lb; }
};

/// When cuts are generated. The backward sweep re-solves the stages from T
/// down to 2 along the iteration's trajectory, so each cut already reflects
/// this iteration's downstream cuts and value information crosses the whole
/// horizon in one iteration. Cutting during the forward pass instead uses
/// only last iteration's models, which propagates values a single stage per
/// iteration and needs on the order of T iterations to close the gap.
enum class CutTiming { BackwardSweep, ForwardPass };

struct RunOptions {
  double epsilon = 1e-6;
  int max_iter = 10'000;
  CutTiming cut_timing = CutTiming::BackwardSweep;
  /// Keep running this many iterations past convergence (stabilization
  /// studies); bounds and pools keep updating, records keep accumulating.
  int extra_iterations = 0;
  /// Track the height relations at trial points ((ineq1)/(ineq2)) every
  /// iteration, counting violations beyond invariant_tol * (1 + |value|).
  bool check_invariants = false;
  double invariant_tol = 1e-9;
  SimplexOptions simplex;
};

/// Forward-pass DDP with pluggable cut selection: at each iteration solves
/// the stage subproblems along one trajectory, adds one cut per cost-to-go
/// function from each stage's duals, and stops when the best feasible cost
/// comes within epsilon of the best first-stage model value.
class DdpEngine {
 public:
  DdpEngine(const MultistageProblem& prob, Strategy strategy,
            RunOptions opts = {})
      : prob_(&prob), strategy_(strategy), opts_(opts), solver_(opts.simplex) {
    strategy_.check();
    const ValidationReport rep = validate(prob);
    if (has_errors(rep))
      throw std::invalid_argument("ddp: invalid problem: stage " +
                                  std::to_string(rep.front().stage) + ": " +
                                  rep.front().message);
    if (opts_.epsilon < 0)
      throw std::invalid_argument("ddp: epsilon must be positive");
    if (opts_.max_iter < 1)
      throw std::invalid_argument("ddp: max_iter must be >= 1");
    for (int t = 2; t <= prob.T; ++t)
      pools_.emplace_back(t, prob.stages[static_cast<size_t>(t - 1)].num_prev());
    pool_heights_.resize(pools_.size());
    seed_pools();
  }

  /// Pool approximating the cost-to-go of stage t (2..T).
  const CutPool& pool(int t) const {
    return pools_.at(static_cast<size_t>(t - 2));
  }
  CutPool& mutable_pool(int t) { return pools_.at(static_cast<size_t>(t - 2)); }
  Eigen::Index num_pools() const {
    return static_cast<Eigen::Index>(pools_.size());
  }

  IterationRecord forward_pass(int k) {
    const auto tic = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.k = k;
    const int T = prob_->T;
    std::vector<Vector> states(static_cast<size_t>(T) + 1);
    states[0] = prob_->x0;
    std::vector<LpSolution> sols(static_cast<size_t>(T));
    std::vector<int> seen_revision(static_cast<size_t>(T), 0);
    double ub = 0.0;

    for (int t = 1; t <= T; ++t) {
      const StageLp& stage = prob_->stages[static_cast<size_t>(t - 1)];
      const CutPool* next_pool =
          t < T ? &pools_[static_cast<size_t>(t - 1)] : nullptr;
      const Vector& x_prev = states[static_cast<size_t>(t - 1)];
      const LpProblem lp = build_stage_subproblem(stage, x_prev, next_pool);
      LpSolution sol = solver_.solve(lp);
      if (sol.status != LpStatus::Optimal)
        throw std::runtime_error("ddp: stage " + std::to_string(t) +
                                 " subproblem " + to_string(sol.status) +
                                 " at iteration " + std::to_string(k));
      const Vector dec = sol.x.head(stage.num_dec());
      const double stage_value = sol.obj + stage.d.dot(x_prev);
      rec.stage_values.push_back(stage_value);
      // The first-stage value is a certified lower bound once the model for
      // the next cost-to-go exists (always true for seeded pools and T = 1).
      if (t == 1)
        rec.lb = (next_pool == nullptr || next_pool->num_selected() > 0)
                     ? stage_value
                     : -kInf;
      ub += stage_cost(stage, dec, x_prev);
      states[static_cast<size_t>(t)] = dec.head(stage.n_state);
      seen_revision[static_cast<size_t>(t - 1)] =
          next_pool ? next_pool->revision() : 0;
      sols[static_cast<size_t>(t - 1)] = std::move(sol);

      if (opts_.cut_timing == CutTiming::ForwardPass && t >= 2)
        add_cut(rec, t, x_prev, sols[static_cast<size_t>(t - 1)], stage_value);
    }

    if (opts_.cut_timing == CutTiming::BackwardSweep) {
      for (int t = T; t >= 2; --t) {
        const StageLp& stage = prob_->stages[static_cast<size_t>(t - 1)];
        const CutPool* next_pool =
            t < T ? &pools_[static_cast<size_t>(t - 1)] : nullptr;
        const Vector& x_prev = states[static_cast<size_t>(t - 1)];
        const LpSolution* sol = &sols[static_cast<size_t>(t - 1)];
        LpSolution fresh;
        // Re-solve only when this iteration's cuts changed the downstream
        // model since the forward solve.
        if (next_pool &&
            next_pool->revision() != seen_revision[static_cast<size_t>(t - 1)]) {
          fresh = solver_.solve(build_stage_subproblem(stage, x_prev, next_pool));
          if (fresh.status != LpStatus::Optimal)
            throw std::runtime_error("ddp: stage " + std::to_string(t) +
                                     " subproblem " + to_string(fresh.status) +
                                     " in backward sweep, iteration " +
                                     std::to_string(k));
          sol = &fresh;
        }
        const double stage_value = sol->obj + stage.d.dot(x_prev);
        add_cut(rec, t, x_prev, *sol, stage_value);
      }
    }

    rec.trajectory.assign(states.begin() + 1, states.end());
    rec.ub = ub;
    for (const CutPool& p : pools_)
      rec.selected_counts.push_back(p.num_selected());
    rec.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
            .count();
    return rec;
  }

  RunReport run() {
    const auto tic = std::chrono::steady_clock::now();
    RunReport report;
    report.epsilon = opts_.epsilon;
    report.strategy_name = strategy_.name();
    report.maximize = prob_->maximize;
    int extra_left = opts_.extra_iterations;
    try {
      for (int k = 1; k <= opts_.max_iter; ++k) {
        IterationRecord rec = forward_pass(k);
        report.running_lb = std::max(report.running_lb, rec.lb);
        rec.running_lb = report.running_lb;
        if (rec.ub < report.ub_best) {
          report.ub_best = rec.ub;
          report.final_trajectory = rec.trajectory;
        }
        rec.ub_best = report.ub_best;
        report.iterations.push_back(std::move(rec));

        if (strategy_.usefulness_period > 0 &&
            k % strategy_.usefulness_period == 0)
          usefulness_sweep();

        const bool gap_ok =
            report.ub_best - report.running_lb <= opts_.epsilon;
        if (gap_ok && report.converged_at < 0) report.converged_at = k;
        if (gap_ok) {
          if (extra_left == 0) {
            report.status = RunStatus::Converged;
            break;
          }
          --extra_left;
        }
      }
      if (report.status != RunStatus::Converged)
        report.status = report.converged_at >= 0 ? RunStatus::Converged
                                                 : RunStatus::IterLimit;
    } catch (const std::exception& e) {
      report.status = RunStatus::Error;
      report.error_message = e.what();
    }
    for (const CutPool& p : pools_) report.cuts_selected += p.num_selected();
    report.cuts_computed = cuts_computed_;
    report.invariant_violations = invariant_violations_;
    report.total_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
            .count();
    return report;
  }

  long invariant_violations() const { return invariant_violations_; }

  /// Runs the redundancy sweep on every pool whose state box is finite.
  void usefulness_sweep() {
    for (size_t pi = 0; pi < pools_.size(); ++pi) {
      CutPool& pool = pools_[pi];
      if (pool.num_selected() < 2) continue;
      // State box: bounds of the previous stage's state block.
      const StageLp& prev_stage = prob_->stages[pi];  // stage t-1 for pool t
      const Vector box_lo = prev_stage.lo.head(prev_stage.n_state);
      const Vector box_hi = prev_stage.hi.head(prev_stage.n_state);
      if (!box_lo.allFinite() || !box_hi.allFinite()) continue;
      apply_usefulness(pool, box_lo, box_hi, solver_,
                       opts_.simplex.tol_opt);
    }
  }

 private:
  void add_cut(IterationRecord& rec, int t, const Vector& x_prev,
               const LpSolution& sol, double stage_value) {
    const StageLp& stage = prob_->stages[static_cast<size_t>(t - 1)];
    CutPool& pool_t = pools_[static_cast<size_t>(t - 2)];
    const Cut cut = compute_cut(stage, sol, x_prev, stage_value);
    pool_t.insert_and_select(cut, x_prev, strategy_);
    ++cuts_computed_;
    if (pool_t.last_trial_was_new()) ++rec.new_trial_points;
    rec.selection_changed |= pool_t.selection_changed();
    if (opts_.check_invariants)
      verify_heights(pool_t, cut, x_prev, stage_value);
  }

  /// Seeds every pool with the exact minimum of the remaining stage costs
  /// over the stage boxes: a valid constant minorant of the cost-to-go (the
  /// initial cut 0). Without it, an empty model would make the first stage
  /// values overshoot whenever later costs can be negative, producing cuts
  /// that are not minorants. Pools whose tail includes an unbounded cost term
  /// are left unseeded (the engine then relies on nonnegative future costs).
  void seed_pools() {
    double tail = 0.0;
    bool finite = true;
    for (int t = prob_->T; t >= 2; --t) {
      const StageLp& s = prob_->stages[static_cast<size_t>(t - 1)];
      const StageLp& prev = prob_->stages[static_cast<size_t>(t - 2)];
      double lo_cost = 0.0;
      for (Eigen::Index j = 0; j < s.num_dec(); ++j)
        lo_cost += interval_min(s.c[j], s.lo[j], s.hi[j]);
      for (Eigen::Index j = 0; j < s.num_prev(); ++j)
        lo_cost += interval_min(s.d[j], prev.lo[j], prev.hi[j]);
      tail += lo_cost;
      finite = finite && std::isfinite(tail);
      if (finite)
        pools_[static_cast<size_t>(t - 2)].seed_lower_bound(tail);
    }
  }

  static double interval_min(double coef, double lo, double hi) {
    if (coef == 0.0) return 0.0;
    return coef > 0.0 ? coef * lo : coef * hi;
  }

  /// (ineq1): the pool height at the newest trial point must be at least the
  /// new cut's height there; (ineq2): heights at stored trial points never
  /// decrease.
  void verify_heights(CutPool& pool, const Cut& cut, const Vector& new_trial,
                      double theta) {
    const double tol1 = opts_.invariant_tol * (1.0 + std::abs(theta));
    const double at_new = pool_value_or_throw(pool, new_trial);
    if (at_new < cut.value(new_trial) - tol1) ++invariant_violations_;

    auto& heights = pool_heights_[static_cast<size_t>(pool.stage() - 2)];
    for (Eigen::Index i = 0;
         i < static_cast<Eigen::Index>(heights.size()); ++i) {
      const double now = pool_value_or_throw(pool, pool.trial_point(i));
      const double tol
          = opts_.invariant_tol * (1.0 + std::abs(heights[static_cast<size_t>(i)]));
      if (now < heights[static_cast<size_t>(i)] - tol) ++invariant_violations_;
    }
    heights.clear();
    for (Eigen::Index i = 0; i < pool.num_trials(); ++i)
      heights.push_back(pool_value_or_throw(pool, pool.trial_point(i)));
  }

  const MultistageProblem* prob_;
  Strategy strategy_;
  RunOptions opts_;
  SimplexSolver solver_;
  std::vector<CutPool> pools_;
  std::vector<std::vector<double>> pool_heights_;
  long cuts_computed_ = 0;
  long invariant_violations_ = 0;
};

/// Solves via the flat extensive-form LP, reported as a one-iteration run so
/// the CLI and comparison tables treat all algorithms uniformly.
inline RunReport solve_extensive(const MultistageProblem& prob,
                                 SimplexOptions opts = {}) {
  const auto tic = std::chrono::steady_clock::now();
  RunReport report;
  report.strategy_name = "extensive-form simplex";
  report.maximize = prob.maximize;
  const ExtensiveForm ef = extensive_form(prob);
  SimplexSolver solver(opts);
  const LpSolution sol = solver.solve(ef.lp);
  if (sol.status != LpStatus::Optimal) {
    report.status = RunStatus::Error;
    report.error_message =
        std::string("extensive form: ") + to_string(sol.status);
    return report;
  }
  const double value = sol.obj + ef.offset;
  report.status = RunStatus::Converged;
  report.converged_at = 1;
  report.running_lb = value;
  report.ub_best = value;
  IterationRecord rec;
  rec.k = 1;
  rec.lb = rec.running_lb = rec.ub = rec.ub_best = value;
  Eigen::Index off = 0;
  for (const StageLp& s : prob.stages) {
    rec.trajectory.push_back(sol.x.segment(off, s.n_state));
    off += s.num_dec();
  }
  report.final_trajectory = rec.trajectory;
  rec.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
          .count();
  report.total_time = rec.wall_time;
  report.iterations.push_back(std::move(rec));
  return report;
}

}  // namespace ddp
