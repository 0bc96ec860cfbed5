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

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ddp/model.hpp"
#include "ddp/rng.hpp"

namespace ddp {

/// Single-product inventory control: at each step order up to level x_t >=
/// y_t, pay per-unit ordering cost c_t on the order, backorder cost on unmet
/// demand and holding cost on the surplus; inventory evolves by
/// y_{t+1} = x_t - D_t and may go negative.
struct InventoryParams {
  int T = 1;
  double backorder_cost = 2.8;
  double holding_cost = 0.2;
  double initial_inventory = 10.0;
  double state_lo = -100.0;
  double state_hi = 2000.0;
  double aux_hi = 4000.0;

  double order_cost(int t) const {
    return 1.5 + std::cos(std::numbers::pi * t / 6.0);
  }
  double demand(int t) const { return 5.0 + 0.5 * t; }
  /// Order-up-to levels may exceed the state ceiling by one demand so the
  /// state box, not the decision box, is what binds.
  double order_hi(int t) const { return state_hi + demand(t); }
};

/// Stage decision layout: (y_{t+1}, x_t, p_t, q_t) with p_t >= D_t - x_t and
/// q_t >= x_t - D_t linearizing the two rectifier terms of the stage cost.
inline MultistageProblem gen_inventory(const InventoryParams& params) {
  if (params.T < 1) throw std::invalid_argument("gen_inventory: T must be >= 1");
  std::vector<StageLp> stages;
  for (int t = 1; t <= params.T; ++t) {
    const double c = params.order_cost(t);
    const double D = params.demand(t);
    StageLp s;
    s.t = t;
    s.n_state = 1;
    s.n_local = 3;
    s.c.resize(4);
    s.c << 0.0, c, params.backorder_cost, params.holding_cost;
    s.d.resize(1);
    s.d << -c;
    s.A.resize(1, 4);
    s.A << 1.0, -1.0, 0.0, 0.0;  // y_{t+1} - x_t = -D_t
    s.B = Matrix::Zero(1, 1);
    s.b.resize(1);
    s.b << -D;
    s.G.resize(3, 4);
    s.G << 0.0, -1.0, 0.0, 0.0,   //  y_t - x_t        <= 0
           0.0, -1.0, -1.0, 0.0,  // -x_t - p_t        <= -D_t
           0.0, 1.0, 0.0, -1.0;   //  x_t - q_t        <=  D_t
    s.H = Matrix::Zero(3, 1);
    s.H(0, 0) = 1.0;
    s.h.resize(3);
    s.h << 0.0, -D, D;
    s.lo.resize(4);
    s.lo << params.state_lo, params.state_lo, 0.0, 0.0;
    s.hi.resize(4);
    s.hi << params.state_hi, params.order_hi(t), params.aux_hi, params.aux_hi;
    stages.push_back(std::move(s));
  }
  Vector x0(1);
  x0 << params.initial_inventory;
  return make_problem(std::move(stages), std::move(x0), false,
                      "inventory_T" + std::to_string(params.T));
}

inline MultistageProblem gen_inventory(int T) {
  InventoryParams p;
  p.T = T;
  return gen_inventory(p);
}

/// Multi-asset portfolio rebalancing with proportional transaction costs and
/// per-asset caps; asset n is cash. Maximizes terminal wealth; returns and
/// the initial portfolio are drawn from the seeded generator unless supplied.
struct PortfolioParams {
  int T = 1;
  int n = 1;  // risky assets; the state has n+1 entries
  double cash_return = 0.0001;
  double sell_cost = 0.001;  // eta
  double buy_cost = 0.001;   // nu
  double position_cap = 1.0;
  std::uint64_t seed = 0;
  double return_lo = 0.00005;
  double return_hi = 0.0004;
  double x0_hi = 100.0;
  /// (T+1) x (n+1): row t holds the returns of period t, last column cash.
  /// Leave empty to draw rows from the seed.
  Matrix returns;
  /// n+1 initial positions; leave empty to draw from the seed.
  Vector x0;
};

/// Fills any unset randomness. Draw order (fixed for reproducibility): the
/// n+1 initial positions, then returns row by row for t = 0..T, assets only.
inline void materialize(PortfolioParams& p) {
  if (p.T < 1 || p.n < 1)
    throw std::invalid_argument("portfolio: T and n must be >= 1");
  Xoshiro256 rng(p.seed);
  if (p.x0.size() == 0) {
    p.x0.resize(p.n + 1);
    for (int i = 0; i <= p.n; ++i) p.x0[i] = rng.uniform(0.0, p.x0_hi);
  } else if (p.x0.size() != p.n + 1) {
    throw std::invalid_argument("portfolio: x0 must have n+1 entries");
  }
  if (p.returns.size() == 0) {
    p.returns.resize(p.T + 1, p.n + 1);
    for (int t = 0; t <= p.T; ++t) {
      for (int i = 0; i < p.n; ++i)
        p.returns(t, i) = rng.uniform(p.return_lo, p.return_hi);
      p.returns(t, p.n) = p.cash_return;
    }
  } else if (p.returns.rows() != p.T + 1 || p.returns.cols() != p.n + 1) {
    throw std::invalid_argument(
        "portfolio: returns must be (T+1) x (n+1); got " +
        std::to_string(p.returns.rows()) + "x" +
        std::to_string(p.returns.cols()));
  }
}

/// Wealth can grow by at most the best return each period, so this ceiling
/// bounds every position, sale, and purchase without ever binding at an
/// optimum; it makes the stage polytopes compact.
inline double wealth_ceiling(const PortfolioParams& p) {
  double w = p.x0.sum();
  for (int t = 0; t <= p.T; ++t) w *= 1.0 + p.returns.row(t).maxCoeff();
  return w;
}

/// Stage decision layout: (x_t[0..n], y_t[0..n-1], z_t[0..n-1]) where y
/// sells and z buys. Equalities propagate each position and the cash
/// balance; inequalities cap positions at a fraction of the budget.
inline MultistageProblem gen_portfolio(PortfolioParams params) {
  materialize(params);
  const int n = params.n;
  const Eigen::Index ns = n + 1;
  const Eigen::Index nd = ns + 2 * n;
  const double wmax = wealth_ceiling(params);

  std::vector<StageLp> stages;
  for (int t = 1; t <= params.T; ++t) {
    const auto r_prev = params.returns.row(t - 1);
    StageLp s;
    s.t = t;
    s.n_state = ns;
    s.n_local = 2 * n;
    s.c = Vector::Zero(nd);
    if (t == params.T)
      for (Eigen::Index i = 0; i < ns; ++i)
        s.c[i] = 1.0 + params.returns(params.T, i);
    s.d = Vector::Zero(ns);

    s.A = Matrix::Zero(ns, nd);
    s.B = Matrix::Zero(ns, ns);
    s.b = Vector::Zero(ns);
    for (int i = 0; i < n; ++i) {
      s.A(i, i) = 1.0;           // x_t^i
      s.A(i, ns + i) = 1.0;      // + y_t^i
      s.A(i, ns + n + i) = -1.0;  // - z_t^i
      s.B(i, i) = -(1.0 + r_prev[i]);
    }
    s.A(n, n) = 1.0;
    for (int i = 0; i < n; ++i) {
      s.A(n, ns + i) = -(1.0 - params.sell_cost);
      s.A(n, ns + n + i) = 1.0 + params.buy_cost;
    }
    s.B(n, n) = -(1.0 + r_prev[n]);

    s.G = Matrix::Zero(n, nd);
    s.H = Matrix::Zero(n, ns);
    s.h = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      s.G(i, i) = 1.0;
      for (Eigen::Index j = 0; j < ns; ++j)
        s.H(i, j) = -params.position_cap * (1.0 + r_prev[j]);
    }

    s.lo = Vector::Zero(nd);
    s.hi = Vector::Constant(nd, wmax);
    stages.push_back(std::move(s));
  }
  return make_problem(std::move(stages), params.x0, true,
                      "portfolio_T" + std::to_string(params.T) + "_n" +
                          std::to_string(n) + "_s" +
                          std::to_string(params.seed));
}

inline MultistageProblem gen_portfolio(int T, int n, std::uint64_t seed) {
  PortfolioParams p;
  p.T = T;
  p.n = n;
  p.seed = seed;
  return gen_portfolio(std::move(p));
}

/// Parses a dense CSV of decimal returns: one row per period, one column per
/// asset. Errors name the offending 1-based row/column.
inline Matrix load_returns_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open returns file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      try {
        size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() &&
               std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ": row " + std::to_string(lineno) +
                                 ", column " + std::to_string(col) +
                                 ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": row " + std::to_string(lineno) +
                               " has " + std::to_string(row.size()) +
                               " cells, expected " +
                               std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return m;
}

/// Consumes an asset-returns matrix (rows r_0, r_1, ...) in place of random
/// draws: a T-stage problem needs T+1 rows (the last row prices the terminal
/// objective). n is the column count; the cash column is appended.
inline void apply_csv_returns(PortfolioParams& params, const Matrix& csv) {
  if (params.T < 1) params.T = static_cast<int>(csv.rows()) - 1;
  params.n = static_cast<int>(csv.cols());
  if (csv.rows() < params.T + 1)
    throw std::invalid_argument(
        "returns file has " + std::to_string(csv.rows()) + " rows; need T+1 = " +
        std::to_string(params.T + 1));
  params.returns.resize(params.T + 1, params.n + 1);
  params.returns.leftCols(params.n) = csv.topRows(params.T + 1);
  params.returns.col(params.n).setConstant(params.cash_return);
}

}  // namespace ddp
