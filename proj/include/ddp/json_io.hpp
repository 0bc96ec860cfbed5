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
//
// File formats: the problem JSON schema (see docs/format.md), run reports,
// pool dumps, and the CSV traces.

#pragma once

#include <fstream>
#include <iomanip>
#include <string>

#include <json.hpp>

#include "ddp/cuts.hpp"
#include "ddp/engine.hpp"
#include "ddp/grid_dp.hpp"
#include "ddp/model.hpp"

namespace ddp {

using nlohmann::json;

namespace io_detail {

inline json num(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

inline double parse_num(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw std::runtime_error("problem file: bad number in " + where);
}

inline json vec_out(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

inline Vector vec_in(const json& a, const std::string& where) {
  if (!a.is_array())
    throw std::runtime_error("problem file: " + where + " must be an array");
  Vector v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (const auto& e : a) v[i++] = parse_num(e, where);
  return v;
}

inline json mat_out(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    rows.push_back(vec_out(m.row(i).transpose()));
  return rows;
}

inline Matrix mat_in(const json& a, Eigen::Index cols,
                     const std::string& where) {
  if (!a.is_array())
    throw std::runtime_error("problem file: " + where + " must be an array");
  Matrix m(static_cast<Eigen::Index>(a.size()), cols);
  Eigen::Index r = 0;
  for (const auto& row : a) {
    const Vector v = vec_in(row, where);
    if (v.size() != cols)
      throw std::runtime_error("problem file: " + where + " row " +
                               std::to_string(r + 1) + " has " +
                               std::to_string(v.size()) + " entries, expected " +
                               std::to_string(cols));
    m.row(r++) = v.transpose();
  }
  return m;
}

}  // namespace io_detail

inline json problem_to_json(const MultistageProblem& prob,
                            const json& meta = json()) {
  using namespace io_detail;
  json j;
  j["format"] = "multistage-lp-v1";
  if (!prob.name.empty()) j["name"] = prob.name;
  j["sense"] = prob.maximize ? "max" : "min";
  j["T"] = prob.T;
  j["x0"] = vec_out(prob.x0);
  if (!meta.is_null()) j["meta"] = meta;
  json stages = json::array();
  for (const StageLp& s : prob.stages) {
    json js;
    js["t"] = s.t;
    js["n_state"] = static_cast<int>(s.n_state);
    js["n_local"] = static_cast<int>(s.n_local);
    // Costs are stored internally in min form; emit the original sense.
    const double flip = prob.maximize ? -1.0 : 1.0;
    js["c"] = vec_out(flip * s.c);
    js["d"] = vec_out(flip * s.d);
    js["A"] = mat_out(s.A);
    js["B"] = mat_out(s.B);
    js["b"] = vec_out(s.b);
    js["G"] = mat_out(s.G);
    js["H"] = mat_out(s.H);
    js["h"] = vec_out(s.h);
    js["lo"] = vec_out(s.lo);
    js["hi"] = vec_out(s.hi);
    stages.push_back(std::move(js));
  }
  j["stages"] = std::move(stages);
  return j;
}

inline MultistageProblem problem_from_json(const json& j,
                                           json* meta_out = nullptr) {
  using namespace io_detail;
  if (j.value("format", "") != "multistage-lp-v1")
    throw std::runtime_error("problem file: unknown or missing format tag");
  const std::string sense = j.value("sense", "min");
  if (sense != "min" && sense != "max")
    throw std::runtime_error("problem file: sense must be 'min' or 'max'");
  if (meta_out) *meta_out = j.contains("meta") ? j["meta"] : json();

  Vector x0 = vec_in(j.at("x0"), "x0");
  std::vector<StageLp> stages;
  Eigen::Index prev_state = x0.size();
  int t = 0;
  for (const auto& js : j.at("stages")) {
    ++t;
    const std::string at = "stage " + std::to_string(t);
    StageLp s;
    s.t = js.value("t", t);
    s.n_state = js.at("n_state").get<Eigen::Index>();
    s.n_local = js.at("n_local").get<Eigen::Index>();
    s.c = vec_in(js.at("c"), at + " c");
    s.d = vec_in(js.at("d"), at + " d");
    s.A = mat_in(js.at("A"), s.num_dec(), at + " A");
    s.B = mat_in(js.at("B"), prev_state, at + " B");
    s.b = vec_in(js.at("b"), at + " b");
    s.G = mat_in(js.at("G"), s.num_dec(), at + " G");
    s.H = mat_in(js.at("H"), prev_state, at + " H");
    s.h = vec_in(js.at("h"), at + " h");
    s.lo = vec_in(js.at("lo"), at + " lo");
    s.hi = vec_in(js.at("hi"), at + " hi");
    prev_state = s.n_state;
    stages.push_back(std::move(s));
  }
  MultistageProblem prob = make_problem(std::move(stages), std::move(x0),
                                        sense == "max", j.value("name", ""));
  if (j.contains("T") && j["T"].get<int>() != prob.T)
    throw std::runtime_error("problem file: T does not match stage count");
  const ValidationReport rep = validate(prob);
  if (has_errors(rep))
    throw std::runtime_error("problem file: stage " +
                             std::to_string(rep.front().stage) + ": " +
                             rep.front().message);
  return prob;
}

inline void save_problem(const MultistageProblem& prob, const std::string& path,
                         const json& meta = json()) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << problem_to_json(prob, meta).dump(1, '\t') << '\n';
}

inline MultistageProblem load_problem(const std::string& path,
                                      json* meta_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file: " + path);
  json j;
  in >> j;
  return problem_from_json(j, meta_out);
}

/// Spec'd dump of a pool: every stored cut with its selection flag.
inline json pool_to_json(const CutPool& pool) {
  json cuts = json::array();
  for (Eigen::Index i = 0; i < pool.num_stored(); ++i) {
    const Cut& c = pool.stored(i);
    json jc;
    jc["id"] = c.id;
    jc["x_ref"] = io_detail::vec_out(c.x_ref);
    jc["theta"] = c.theta;
    jc["beta"] = io_detail::vec_out(c.beta);
    jc["selected"] = pool.stored_selected(i);
    cuts.push_back(std::move(jc));
  }
  return cuts;
}

inline json report_to_json(const RunReport& r) {
  json j;
  j["status"] = to_string(r.status);
  if (!r.error_message.empty()) j["error"] = r.error_message;
  j["strategy"] = r.strategy_name;
  j["sense"] = r.maximize ? "max" : "min";
  j["epsilon"] = r.epsilon;
  j["value"] = io_detail::num(r.value());
  j["bound"] = io_detail::num(r.bound());
  j["gap"] = io_detail::num(r.gap());
  j["lb"] = io_detail::num(r.running_lb);
  j["ub_best"] = io_detail::num(r.ub_best);
  j["iterations"] = r.iterations.size();
  j["converged_at"] = r.converged_at;
  j["total_time_s"] = r.total_time;
  j["cuts_computed"] = r.cuts_computed;
  j["cuts_selected"] = r.cuts_selected;
  j["invariant_violations"] = r.invariant_violations;
  json iters = json::array();
  for (const IterationRecord& rec : r.iterations) {
    json ji;
    ji["k"] = rec.k;
    ji["lb"] = io_detail::num(rec.lb);
    ji["running_lb"] = io_detail::num(rec.running_lb);
    ji["ub"] = io_detail::num(rec.ub);
    ji["ub_best"] = io_detail::num(rec.ub_best);
    ji["time_s"] = rec.wall_time;
    ji["new_trial_points"] = rec.new_trial_points;
    ji["selection_changed"] = rec.selection_changed;
    long sel = 0;
    for (const auto c : rec.selected_counts) sel += c;
    ji["cuts_selected_total"] = sel;
    iters.push_back(std::move(ji));
  }
  j["trace"] = std::move(iters);
  json traj = json::array();
  for (const Vector& x : r.final_trajectory)
    traj.push_back(io_detail::vec_out(x));
  j["final_trajectory"] = std::move(traj);
  return j;
}

inline void save_report(const RunReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << report_to_json(r).dump(1, '\t') << '\n';
}

/// Per-iteration bound trace.
inline void save_bounds_csv(const RunReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iter,lb,running_lb,ub,ub_best,time_s,cuts_selected_total\n";
  out << std::setprecision(17);
  for (const IterationRecord& rec : r.iterations) {
    long sel = 0;
    for (const auto c : rec.selected_counts) sel += c;
    out << rec.k << ',' << rec.lb << ',' << rec.running_lb << ',' << rec.ub
        << ',' << rec.ub_best << ',' << rec.wall_time << ',' << sel << '\n';
  }
}

/// Grid oracle dump: one row per (stage, grid point).
inline void save_value_table_csv(const ValueTable& table,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,y,value\n";
  out << std::setprecision(17);
  for (int t = 2; t <= table.horizon() + 1; ++t)
    for (Eigen::Index jj = 0; jj < table.grid_size(); ++jj)
      out << t << ',' << table.grid_point(jj) << ',' << table.values(t)[jj]
          << '\n';
}

}  // namespace ddp
