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

#include <string>
#include <vector>

#include "ddp/lp.hpp"

namespace ddp {

/// One stage of a multistage linear program:
///   cost      c . dec + d . x_prev
///   equalities    A dec + B x_prev  = b
///   inequalities  G dec + H x_prev <= h
///   bounds        lo <= dec <= hi
/// The decision vector `dec` has n_state + n_local entries; its FIRST n_state
/// entries are the state handed to stage t+1. `x_prev` is the previous
/// stage's state (or x0 for t = 1).
struct StageLp {
  int t = 1;
  Eigen::Index n_state = 0;
  Eigen::Index n_local = 0;
  Vector c;
  Vector d;
  Matrix A;
  Matrix B;
  Vector b;
  Matrix G;
  Matrix H;
  Vector h;
  Vector lo, hi;

  Eigen::Index num_dec() const { return n_state + n_local; }
  Eigen::Index num_prev() const { return d.size(); }
  Eigen::Index num_eq() const { return b.size(); }
  Eigen::Index num_ineq() const { return h.size(); }
};

/// Horizon of stages plus the initial state. Costs are always stored in
/// minimization form; `maximize` records the original sense so reports can be
/// presented in it (a max problem is normalized by negating c and d once, at
/// construction).
struct MultistageProblem {
  int T = 0;
  Vector x0;
  std::vector<StageLp> stages;
  bool maximize = false;
  std::string name;
};

/// Builds a problem from stage data, normalizing sense=max to min.
inline MultistageProblem make_problem(std::vector<StageLp> stages, Vector x0,
                                      bool maximize = false,
                                      std::string name = {}) {
  MultistageProblem p;
  p.T = static_cast<int>(stages.size());
  p.x0 = std::move(x0);
  p.stages = std::move(stages);
  p.maximize = maximize;
  p.name = std::move(name);
  if (maximize) {
    for (StageLp& s : p.stages) {
      s.c = -s.c;
      s.d = -s.d;
    }
  }
  return p;
}

enum class IssueKind {
  DimensionMismatch,  // error
  BoundOrder,         // error: lo > hi
  UnboundedBox,       // warning: state space not compact
};

struct ValidationIssue {
  int stage = 0;
  IssueKind kind = IssueKind::DimensionMismatch;
  std::string message;
  bool is_error() const { return kind != IssueKind::UnboundedBox; }
};

using ValidationReport = std::vector<ValidationIssue>;

inline bool has_errors(const ValidationReport& report) {
  for (const auto& i : report)
    if (i.is_error()) return true;
  return false;
}

/// Checks dimension consistency, bound ordering, stage-to-stage coupling, and
/// box compactness. Issues are data, not failures; an empty report means the
/// problem is well-formed with compact stage polytopes.
inline ValidationReport validate(const MultistageProblem& prob) {
  ValidationReport rep;
  auto issue = [&rep](int t, IssueKind k, std::string msg) {
    rep.push_back({t, k, std::move(msg)});
  };
  if (prob.T != static_cast<int>(prob.stages.size())) {
    issue(0, IssueKind::DimensionMismatch,
          "T=" + std::to_string(prob.T) + " but " +
              std::to_string(prob.stages.size()) + " stages");
    return rep;
  }
  if (prob.T < 1) {
    issue(0, IssueKind::DimensionMismatch, "horizon must be >= 1");
    return rep;
  }
  for (int t = 1; t <= prob.T; ++t) {
    const StageLp& s = prob.stages[static_cast<size_t>(t - 1)];
    const Eigen::Index nd = s.num_dec();
    const Eigen::Index np =
        t == 1 ? prob.x0.size()
               : prob.stages[static_cast<size_t>(t - 2)].n_state;
    auto dim = [&](bool ok, const std::string& what) {
      if (!ok) issue(t, IssueKind::DimensionMismatch, what);
    };
    dim(s.t == t, "stage index field t=" + std::to_string(s.t) +
                      " does not match position " + std::to_string(t));
    dim(s.c.size() == nd, "c has " + std::to_string(s.c.size()) +
                              " entries, expected " + std::to_string(nd));
    dim(s.d.size() == np, "d has " + std::to_string(s.d.size()) +
                              " entries, expected coupling dim " +
                              std::to_string(np));
    dim(s.A.rows() == s.num_eq() && (s.num_eq() == 0 || s.A.cols() == nd),
        "A is " + std::to_string(s.A.rows()) + "x" + std::to_string(s.A.cols()) +
            ", expected " + std::to_string(s.num_eq()) + "x" +
            std::to_string(nd));
    dim(s.B.rows() == s.num_eq() && (s.num_eq() == 0 || s.B.cols() == np),
        "B is " + std::to_string(s.B.rows()) + "x" + std::to_string(s.B.cols()) +
            ", expected " + std::to_string(s.num_eq()) + "x" +
            std::to_string(np));
    dim(s.G.rows() == s.num_ineq() && (s.num_ineq() == 0 || s.G.cols() == nd),
        "G is " + std::to_string(s.G.rows()) + "x" + std::to_string(s.G.cols()) +
            ", expected " + std::to_string(s.num_ineq()) + "x" +
            std::to_string(nd));
    dim(s.H.rows() == s.num_ineq() && (s.num_ineq() == 0 || s.H.cols() == np),
        "H is " + std::to_string(s.H.rows()) + "x" + std::to_string(s.H.cols()) +
            ", expected " + std::to_string(s.num_ineq()) + "x" +
            std::to_string(np));
    dim(s.lo.size() == nd && s.hi.size() == nd,
        "bounds have " + std::to_string(s.lo.size()) + "/" +
            std::to_string(s.hi.size()) + " entries, expected " +
            std::to_string(nd));
    if (s.lo.size() == nd && s.hi.size() == nd) {
      for (Eigen::Index j = 0; j < nd; ++j) {
        if (s.lo[j] > s.hi[j])
          issue(t, IssueKind::BoundOrder,
                "lo > hi at decision " + std::to_string(j));
        if (!std::isfinite(s.lo[j]) || !std::isfinite(s.hi[j]))
          issue(t, IssueKind::UnboundedBox,
                "decision " + std::to_string(j) +
                    (j < s.n_state ? " (state)" : " (local)") +
                    " has an infinite bound; stage polytope is not compact");
      }
    }
  }
  return rep;
}

/// Linear stage cost c . dec + d . x_prev.
inline double stage_cost(const StageLp& stage, const Vector& dec,
                         const Vector& x_prev) {
  if (dec.size() != stage.num_dec())
    throw std::invalid_argument("stage_cost: dec has " +
                                std::to_string(dec.size()) + " entries, stage " +
                                std::to_string(stage.t) + " expects " +
                                std::to_string(stage.num_dec()));
  if (x_prev.size() != stage.num_prev())
    throw std::invalid_argument("stage_cost: x_prev size mismatch at stage " +
                                std::to_string(stage.t));
  return stage.c.dot(dec) + stage.d.dot(x_prev);
}

/// The whole horizon flattened into one LP over the concatenation of all
/// stage decisions. The LP objective omits the constant d_1 . x0, returned in
/// `offset`; the multistage optimum is lp optimum + offset.
struct ExtensiveForm {
  LpProblem lp;
  double offset = 0.0;
  /// var_offset[t-1] = first column of stage t's decision block.
  std::vector<Eigen::Index> var_offset;
};

inline ExtensiveForm extensive_form(const MultistageProblem& prob) {
  {
    const ValidationReport rep = validate(prob);
    if (has_errors(rep))
      throw std::invalid_argument("extensive_form: invalid problem: stage " +
                                  std::to_string(rep.front().stage) + ": " +
                                  rep.front().message);
  }
  ExtensiveForm ef;
  Eigen::Index nv = 0, ne = 0, ni = 0;
  for (const StageLp& s : prob.stages) {
    ef.var_offset.push_back(nv);
    nv += s.num_dec();
    ne += s.num_eq();
    ni += s.num_ineq();
  }
  LpProblem& lp = ef.lp;
  lp.name = prob.name.empty() ? "extensive" : prob.name + ":extensive";
  lp.cost.setZero(nv);
  lp.lo.resize(nv);
  lp.hi.resize(nv);
  lp.eq_mat.setZero(ne, nv);
  lp.eq_rhs.resize(ne);
  lp.ineq_mat.setZero(ni, nv);
  lp.ineq_rhs.resize(ni);

  Eigen::Index re = 0, ri = 0;
  for (int t = 1; t <= prob.T; ++t) {
    const StageLp& s = prob.stages[static_cast<size_t>(t - 1)];
    const Eigen::Index off = ef.var_offset[static_cast<size_t>(t - 1)];
    const Eigen::Index nd = s.num_dec();
    lp.cost.segment(off, nd) += s.c;
    lp.lo.segment(off, nd) = s.lo;
    lp.hi.segment(off, nd) = s.hi;

    if (s.num_eq() > 0) {
      lp.eq_mat.block(re, off, s.num_eq(), nd) = s.A;
      lp.eq_rhs.segment(re, s.num_eq()) = s.b;
    }
    if (s.num_ineq() > 0) {
      lp.ineq_mat.block(ri, off, s.num_ineq(), nd) = s.G;
      lp.ineq_rhs.segment(ri, s.num_ineq()) = s.h;
    }
    if (t == 1) {
      if (s.num_eq() > 0) lp.eq_rhs.segment(re, s.num_eq()) -= s.B * prob.x0;
      if (s.num_ineq() > 0)
        lp.ineq_rhs.segment(ri, s.num_ineq()) -= s.H * prob.x0;
      ef.offset = s.d.dot(prob.x0);
    } else {
      const Eigen::Index poff = ef.var_offset[static_cast<size_t>(t - 2)];
      const Eigen::Index ns =
          prob.stages[static_cast<size_t>(t - 2)].n_state;
      if (s.num_eq() > 0) lp.eq_mat.block(re, poff, s.num_eq(), ns) = s.B;
      if (s.num_ineq() > 0) lp.ineq_mat.block(ri, poff, s.num_ineq(), ns) = s.H;
      lp.cost.segment(poff, ns) += s.d;
    }
    re += s.num_eq();
    ri += s.num_ineq();
  }
  return ef;
}

/// Objective of the concatenated decision vector in the original problem,
/// i.e. sum of stage costs along the encoded trajectory.
inline double trajectory_cost(const MultistageProblem& prob,
                              const Vector& flat_decisions) {
  double total = 0.0;
  Eigen::Index off = 0;
  Vector x_prev = prob.x0;
  for (const StageLp& s : prob.stages) {
    const Vector dec = flat_decisions.segment(off, s.num_dec());
    total += stage_cost(s, dec, x_prev);
    x_prev = dec.head(s.n_state);
    off += s.num_dec();
  }
  return total;
}

}  // namespace ddp
