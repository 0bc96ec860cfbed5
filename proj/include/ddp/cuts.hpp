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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddp/lp.hpp"
#include "ddp/simplex.hpp"

namespace ddp {

/// Affine minorant of a cost-to-go function, anchored at the trial point
/// x_ref where it was generated: C(x) = theta + beta.(x - x_ref), evaluated
/// as alpha + beta.x with alpha = theta - beta.x_ref.
struct Cut {
  int id = 0;  // creation index within its pool, 1-based, monotone
  Vector x_ref;
  double theta = 0.0;
  Vector beta;
  double alpha = 0.0;

  double value(const Vector& x) const {
    if (x.size() != beta.size())
      throw std::invalid_argument("cut " + std::to_string(id) +
                                  ": evaluation point has " +
                                  std::to_string(x.size()) + " entries, beta " +
                                  std::to_string(beta.size()));
    return alpha + beta.dot(x);
  }
};

inline Cut make_cut(Vector x_ref, double theta, Vector beta) {
  if (!beta.allFinite() || !std::isfinite(theta))
    throw std::invalid_argument("cut coefficients must be finite");
  Cut c;
  c.x_ref = std::move(x_ref);
  c.theta = theta;
  c.beta = std::move(beta);
  c.alpha = theta - c.beta.dot(c.x_ref);
  return c;
}

inline double eval_cut(const Cut& cut, const Vector& x) { return cut.value(x); }

enum class SelectionRule {
  None,                 // keep every cut
  Level1,               // cuts maximal at some trial point, argmax over all
  Territory,            // argmax over previously selected + new; prune rest
  LimitedMemoryLevel1,  // single oldest maximal cut per trial point
  LevelH,               // H highest cuts per trial point
};

inline const char* to_string(SelectionRule r) {
  switch (r) {
    case SelectionRule::None: return "none";
    case SelectionRule::Level1: return "level1";
    case SelectionRule::Territory: return "territory";
    case SelectionRule::LimitedMemoryLevel1: return "limited-memory-level1";
    case SelectionRule::LevelH: return "levelH";
  }
  return "?";
}

/// Cut-selection strategy: a base rule, plus an optional periodic redundancy
/// sweep (usefulness_period > 0 runs the usefulness test every that many
/// iterations) which composes with any base rule.
struct Strategy {
  SelectionRule rule = SelectionRule::None;
  int h_cuts = 1;             // cuts kept per trial point, LevelH only, >= 1
  int usefulness_period = 0;  // 0 = off, else >= 1

  static Strategy none() { return {}; }
  static Strategy level1() { return {SelectionRule::Level1, 1, 0}; }
  static Strategy territory() { return {SelectionRule::Territory, 1, 0}; }
  static Strategy limited_memory() {
    return {SelectionRule::LimitedMemoryLevel1, 1, 0};
  }
  static Strategy level_h(int h) { return {SelectionRule::LevelH, h, 0}; }

  Strategy with_usefulness(int period) const {
    Strategy s = *this;
    s.usefulness_period = period;
    return s;
  }

  void check() const {
    if (h_cuts < 1) throw std::invalid_argument("level_h must be >= 1");
    if (usefulness_period < 0)
      throw std::invalid_argument("usefulness_period must be >= 0");
  }

  std::string name() const {
    std::string n = to_string(rule);
    if (rule == SelectionRule::LevelH) n += "(" + std::to_string(h_cuts) + ")";
    if (usefulness_period > 0)
      n += "+usefulness(" + std::to_string(usefulness_period) + ")";
    return n;
  }
};

/// Values within this distance of the running maximum count as ties.
inline double tie_tol(double m) { return 1e-12 * (1.0 + std::abs(m)); }

/// Per-stage cut storage and selection bookkeeping. Trial points are deduped
/// within `trial_match_tol` in the infinity norm so that a revisited state
/// reuses its slot. For each trial point i the pool tracks the (value, id)
/// list `best(i)` of maximal cuts there, whose top value is m_i; the selected
/// set is the union of the best lists. Storage is append-only except for the
/// Territory rule, which physically discards deselected cuts.
class CutPool {
 public:
  explicit CutPool(int stage_t, Eigen::Index state_dim)
      : stage_(stage_t), state_dim_(state_dim) {}

  int stage() const { return stage_; }
  Eigen::Index state_dim() const { return state_dim_; }

  /// Installs an a-priori constant minorant as cut 0 (selected, id 0, flat).
  /// Pools seeded this way are never empty, so the epigraph variable exists
  /// from the first iteration on. Must precede any insert_and_select.
  void seed_lower_bound(double height) {
    if (!cuts_.empty() || next_id_ != 1)
      throw std::logic_error("seed_lower_bound: pool already has cuts");
    Stored st;
    st.cut = make_cut(Vector::Zero(state_dim_), height,
                      Vector::Zero(state_dim_));
    st.cut.id = 0;
    st.selected = true;
    cuts_.push_back(std::move(st));
  }

  Eigen::Index num_stored() const {
    return static_cast<Eigen::Index>(cuts_.size());
  }
  Eigen::Index num_trials() const {
    return static_cast<Eigen::Index>(trials_.size());
  }
  int cuts_created() const { return next_id_ - 1; }

  const Cut& stored(Eigen::Index i) const {
    return cuts_[static_cast<size_t>(i)].cut;
  }
  bool stored_selected(Eigen::Index i) const {
    return cuts_[static_cast<size_t>(i)].selected;
  }
  const Vector& trial_point(Eigen::Index i) const {
    return trials_[static_cast<size_t>(i)].x;
  }
  /// m_i: value of the highest cut seen at trial point i.
  double best_value(Eigen::Index i) const {
    return trials_[static_cast<size_t>(i)].best.front().first;
  }
  /// I_i: ids of the cuts the rule keeps at trial point i.
  std::vector<int> best_ids(Eigen::Index i) const {
    std::vector<int> ids;
    for (const auto& [v, id] : trials_[static_cast<size_t>(i)].best)
      ids.push_back(id);
    return ids;
  }

  std::vector<int> selected_ids() const {
    std::vector<int> ids;
    for (const auto& s : cuts_)
      if (s.selected) ids.push_back(s.cut.id);
    return ids;
  }
  Eigen::Index num_selected() const {
    Eigen::Index n = 0;
    for (const auto& s : cuts_)
      if (s.selected) ++n;
    return n;
  }

  /// Applies fn to every selected cut.
  template <typename Fn>
  void for_each_selected(Fn&& fn) const {
    for (const auto& s : cuts_)
      if (s.selected) fn(s.cut);
  }

  /// Max of the selected cuts at x; nullopt when the pool has no selected cut
  /// (no lower model yet -- the caller omits the epigraph variable).
  std::optional<double> value(const Vector& x) const {
    std::optional<double> best;
    for (const auto& s : cuts_) {
      if (!s.selected) continue;
      const double v = s.cut.value(x);
      if (!best || v > *best) best = v;
    }
    return best;
  }

  /// Index of the trial slot matching x within tol, or -1.
  Eigen::Index find_trial(const Vector& x, double tol = kTrialMatchTol) const {
    for (size_t i = 0; i < trials_.size(); ++i)
      if ((trials_[i].x - x).cwiseAbs().maxCoeff() <= tol)
        return static_cast<Eigen::Index>(i);
    return -1;
  }

  /// Inserts the cut computed at `new_trial` and reruns the strategy's
  /// selection. Returns the assigned cut id; `selection_changed()` reports
  /// whether the selected id set differs from before, and
  /// `last_trial_was_new()` whether a new trial slot was created.
  int insert_and_select(const Cut& cut, const Vector& new_trial,
                        const Strategy& strategy) {
    strategy.check();
    if (cut.beta.size() != state_dim_ || new_trial.size() != state_dim_)
      throw std::invalid_argument(
          "insert_and_select: dimension mismatch at stage " +
          std::to_string(stage_));
    const std::vector<int> before = selected_ids();

    Stored st;
    st.cut = cut;
    st.cut.id = next_id_++;
    st.selected = false;
    const int id = st.cut.id;

    Eigen::Index ti = find_trial(new_trial);
    last_trial_was_new_ = ti < 0;
    if (ti < 0) {
      trials_.push_back({new_trial, {}});
      ti = static_cast<Eigen::Index>(trials_.size()) - 1;
    }

    cuts_.push_back(std::move(st));
    const Cut& c = cuts_.back().cut;

    switch (strategy.rule) {
      case SelectionRule::None:
      case SelectionRule::Level1:
      case SelectionRule::LimitedMemoryLevel1:
      case SelectionRule::Territory: {
        const bool keep_ties = strategy.rule == SelectionRule::Level1 ||
                               strategy.rule == SelectionRule::Territory;
        // Update every pre-existing trial slot with the new cut's value.
        for (size_t i = 0; i < trials_.size(); ++i) {
          Trial& tr = trials_[i];
          if (static_cast<Eigen::Index>(i) == ti && last_trial_was_new_)
            continue;
          const double v = c.value(tr.x);
          const double m = tr.best.front().first;
          if (v > m + tie_tol(m))
            tr.best = {{v, c.id}};
          else if (keep_ties && v >= m - tie_tol(m))
            tr.best.emplace_back(v, c.id);
        }
        if (last_trial_was_new_) {
          // Fresh trial point: scan cuts in creation order so the oldest
          // maximal cut wins under a strict-improvement update.
          Trial& tr = trials_[static_cast<size_t>(ti)];
          for (const auto& s : cuts_) {
            if (strategy.rule == SelectionRule::Territory && !s.selected &&
                s.cut.id != id)
              continue;  // argmax restricted to selected + new
            const double v = s.cut.value(tr.x);
            if (tr.best.empty()) {
              tr.best = {{v, s.cut.id}};
            } else {
              const double m = tr.best.front().first;
              if (v > m + tie_tol(m))
                tr.best = {{v, s.cut.id}};
              else if (keep_ties && v >= m - tie_tol(m))
                tr.best.emplace_back(v, s.cut.id);
            }
          }
        }
        break;
      }
      case SelectionRule::LevelH: {
        const size_t H = static_cast<size_t>(strategy.h_cuts);
        auto cmp = [](const std::pair<double, int>& a,
                      const std::pair<double, int>& b) {
          if (a.first != b.first) return a.first > b.first;
          return a.second < b.second;
        };
        for (size_t i = 0; i < trials_.size(); ++i) {
          Trial& tr = trials_[i];
          if (static_cast<Eigen::Index>(i) == ti && last_trial_was_new_) {
            for (const auto& s : cuts_)
              tr.best.emplace_back(s.cut.value(tr.x), s.cut.id);
          } else {
            tr.best.emplace_back(c.value(tr.x), c.id);
          }
          std::sort(tr.best.begin(), tr.best.end(), cmp);
          if (tr.best.size() > H) tr.best.resize(H);
        }
        break;
      }
    }

    // Selected set = union of the per-trial best lists.
    if (strategy.rule == SelectionRule::None) {
      for (auto& s : cuts_) s.selected = true;
    } else {
      for (auto& s : cuts_) s.selected = false;
      for (const Trial& tr : trials_)
        for (const auto& [v, bid] : tr.best) mark_selected(bid);
    }

    if (strategy.rule == SelectionRule::Territory) prune_unselected();

    const std::vector<int> after = selected_ids();
    selection_changed_ = before != after;
    if (selection_changed_) ++revision_;
    return id;
  }

  bool selection_changed() const { return selection_changed_; }
  bool last_trial_was_new() const { return last_trial_was_new_; }
  /// Bumped whenever the selected set (the lower model) changes.
  int revision() const { return revision_; }

  /// Drops a cut from the selected set (used by the usefulness sweep). The
  /// cut stays in storage; for the Territory rule the next insert prunes
  /// whatever selection leaves behind.
  void deselect(int id) {
    for (auto& s : cuts_)
      if (s.cut.id == id) {
        s.selected = false;
        ++revision_;
        return;
      }
  }

  /// Rebuilds the per-trial best lists from scratch over the stored cuts in
  /// creation order. Test hook: must reproduce the incrementally maintained
  /// state for append-only rules.
  std::vector<std::vector<int>> recompute_best_from_scratch(
      const Strategy& strategy) const {
    std::vector<std::vector<int>> out;
    for (const Trial& tr : trials_) {
      std::vector<std::pair<double, int>> best;
      for (const auto& s : cuts_) {
        const double v = s.cut.value(tr.x);
        if (best.empty()) {
          best = {{v, s.cut.id}};
          continue;
        }
        if (strategy.rule == SelectionRule::LevelH) {
          best.emplace_back(v, s.cut.id);
          continue;
        }
        const double m = best.front().first;
        const bool keep_ties = strategy.rule == SelectionRule::Level1 ||
                               strategy.rule == SelectionRule::Territory;
        if (v > m + tie_tol(m))
          best = {{v, s.cut.id}};
        else if (keep_ties && v >= m - tie_tol(m))
          best.emplace_back(v, s.cut.id);
      }
      if (strategy.rule == SelectionRule::LevelH) {
        std::sort(best.begin(), best.end(),
                  [](const auto& a, const auto& b) {
                    if (a.first != b.first) return a.first > b.first;
                    return a.second < b.second;
                  });
        if (best.size() > static_cast<size_t>(strategy.h_cuts))
          best.resize(static_cast<size_t>(strategy.h_cuts));
      }
      std::vector<int> ids;
      for (const auto& [v, bid] : best) ids.push_back(bid);
      out.push_back(std::move(ids));
    }
    return out;
  }

  static constexpr double kTrialMatchTol = 1e-9;

 private:
  struct Stored {
    Cut cut;
    bool selected = false;
  };
  struct Trial {
    Vector x;
    std::vector<std::pair<double, int>> best;  // (value, id), best first
  };

  void mark_selected(int id) {
    for (auto& s : cuts_)
      if (s.cut.id == id) {
        s.selected = true;
        return;
      }
  }

  void prune_unselected() {
    cuts_.erase(std::remove_if(cuts_.begin(), cuts_.end(),
                               [](const Stored& s) { return !s.selected; }),
                cuts_.end());
  }

  int stage_;
  Eigen::Index state_dim_;
  int next_id_ = 1;
  std::vector<Stored> cuts_;
  std::vector<Trial> trials_;
  bool selection_changed_ = false;
  bool last_trial_was_new_ = false;
  int revision_ = 0;
};

inline double pool_value_or_throw(const CutPool& pool, const Vector& x) {
  const auto v = pool.value(x);
  if (!v)
    throw std::logic_error("pool for stage " + std::to_string(pool.stage()) +
                           " queried while empty (no lower model)");
  return *v;
}

/// Largest violation max_{x in box} C_j(x) - max_{l != j} C_l(x), solved as
/// the LP  min s - C_j(x)  s.t.  s >= C_l(x), x in box. A nonpositive value
/// means cut j never rises above the others anywhere on the box.
inline double redundancy_gap(const std::vector<const Cut*>& others,
                             const Cut& cj, const Vector& box_lo,
                             const Vector& box_hi, SimplexSolver& solver) {
  const Eigen::Index n = box_lo.size();
  if (others.empty())
    throw std::invalid_argument("redundancy_gap: no competing cuts");
  LpProblem lp;
  lp.name = "usefulness:cut" + std::to_string(cj.id);
  lp.cost.resize(n + 1);
  lp.cost.head(n) = -cj.beta;
  lp.cost[n] = 1.0;  // minimize s - beta_j.x
  lp.lo.resize(n + 1);
  lp.hi.resize(n + 1);
  lp.lo.head(n) = box_lo;
  lp.hi.head(n) = box_hi;
  lp.lo[n] = -kInf;
  lp.hi[n] = kInf;
  lp.eq_mat.resize(0, n + 1);
  lp.eq_rhs.resize(0);
  lp.ineq_mat.resize(static_cast<Eigen::Index>(others.size()), n + 1);
  lp.ineq_rhs.resize(static_cast<Eigen::Index>(others.size()));
  for (size_t i = 0; i < others.size(); ++i) {
    lp.ineq_mat.row(static_cast<Eigen::Index>(i)).head(n) =
        others[i]->beta.transpose();
    lp.ineq_mat(static_cast<Eigen::Index>(i), n) = -1.0;
    lp.ineq_rhs[static_cast<Eigen::Index>(i)] = -others[i]->alpha;
  }
  const LpSolution sol = solver.solve(lp);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("usefulness LP not optimal for cut " +
                             std::to_string(cj.id));
  return cj.alpha - sol.obj;
}

/// Ids of selected cuts that are never active on the box: for each selected
/// cut j, solves max C_j - max(others); redundant iff the optimum is <=
/// tol_opt. Pure test -- does not modify the pool. Mutual redundancy is
/// possible (two identical cuts each cover the other), so removal must
/// recheck; see apply_usefulness.
inline std::vector<int> usefulness_test(const CutPool& pool,
                                        const Vector& box_lo,
                                        const Vector& box_hi,
                                        SimplexSolver& solver,
                                        double tol_opt = 1e-8) {
  std::vector<const Cut*> sel;
  pool.for_each_selected([&](const Cut& c) { sel.push_back(&c); });
  std::vector<int> redundant;
  if (sel.size() < 2) return redundant;
  for (size_t j = 0; j < sel.size(); ++j) {
    std::vector<const Cut*> others;
    for (size_t l = 0; l < sel.size(); ++l)
      if (l != j) others.push_back(sel[l]);
    if (redundancy_gap(others, *sel[j], box_lo, box_hi, solver) <= tol_opt)
      redundant.push_back(sel[j]->id);
  }
  return redundant;
}

/// Deselects redundant cuts, newest first, rechecking each against the
/// surviving set so that removing one of two mutually redundant cuts keeps
/// the other. The selected envelope changes by at most tol_opt anywhere on
/// the box. Returns the ids actually removed.
inline std::vector<int> apply_usefulness(CutPool& pool, const Vector& box_lo,
                                         const Vector& box_hi,
                                         SimplexSolver& solver,
                                         double tol_opt = 1e-8) {
  std::vector<int> flagged = usefulness_test(pool, box_lo, box_hi, solver,
                                             tol_opt);
  std::sort(flagged.begin(), flagged.end(), std::greater<int>());
  std::vector<int> removed;
  for (const int id : flagged) {
    if (pool.num_selected() < 2) break;
    std::vector<const Cut*> others;
    const Cut* cj = nullptr;
    pool.for_each_selected([&](const Cut& c) {
      if (c.id == id)
        cj = &c;
      else
        others.push_back(&c);
    });
    if (cj == nullptr || others.empty()) continue;
    if (redundancy_gap(others, *cj, box_lo, box_hi, solver) <= tol_opt) {
      pool.deselect(id);
      removed.push_back(id);
    }
  }
  return removed;
}

}  // namespace ddp
