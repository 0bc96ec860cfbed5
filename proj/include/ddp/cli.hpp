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

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ddp/engine.hpp"
#include "ddp/grid_dp.hpp"
#include "ddp/instances.hpp"
#include "ddp/json_io.hpp"

namespace ddp::cli {

struct AlgoResult {
  std::string algo;
  RunReport report;
};

inline bool is_simplex_algo(const std::string& a) {
  return a == "simplex" || a == "simplex-extensive-form";
}

inline Strategy strategy_for(const std::string& algo, int h, int period) {
  Strategy s;
  if (algo == "ddp")
    s = Strategy::none();
  else if (algo == "ddp-cs-1")
    s = Strategy::level1();
  else if (algo == "ddp-cs-2")
    s = Strategy::limited_memory();
  else if (algo == "territory")
    s = Strategy::territory();
  else if (algo == "level-h")
    s = Strategy::level_h(h);
  else
    throw CLI::ValidationError("--algo", "unknown algorithm '" + algo + "'");
  if (period > 0) s = s.with_usefulness(period);
  s.check();
  return s;
}

inline InventoryParams inventory_params_from_meta(const json& meta) {
  if (meta.is_null() || meta.value("family", "") != "inventory")
    throw std::runtime_error(
        "the grid oracle needs an inventory instance generated by this tool "
        "(meta.family == \"inventory\")");
  InventoryParams p;
  p.T = meta.at("T").get<int>();
  return p;
}

/// Runs one algorithm on one instance; the oracle variant is reported as a
/// converged single-iteration run whose value is the interpolated Q_1.
inline RunReport run_algo(const MultistageProblem& prob, const json& meta,
                          const std::string& algo, double eps, int max_iter,
                          int h, int period, Eigen::Index N,
                          const std::string& table_csv = {}) {
  if (is_simplex_algo(algo)) return solve_extensive(prob);
  if (algo == "dp-oracle") {
    const auto tic = std::chrono::steady_clock::now();
    const InventoryParams params = inventory_params_from_meta(meta);
    ValueTable table = grid_dp(params, N);
    const double q1 = initial_value(params, table, prob.x0[0]);
    if (!table_csv.empty()) save_value_table_csv(table, table_csv);
    RunReport r;
    r.status = RunStatus::Converged;
    r.converged_at = 1;
    r.strategy_name = "grid-dp(N=" + std::to_string(N) + ")";
    r.maximize = prob.maximize;
    r.running_lb = r.ub_best = q1;
    r.total_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
            .count();
    return r;
  }
  RunOptions opts;
  opts.epsilon = eps;
  opts.max_iter = max_iter;
  DdpEngine engine(prob, strategy_for(algo, h, period), opts);
  return engine.run();
}

inline void print_result(const std::string& algo, const RunReport& r) {
  std::printf("%-24s status=%-9s value=%.6f iterations=%zu time=%.3fs\n",
              algo.c_str(), to_string(r.status), r.value(),
              r.iterations.size(), r.total_time);
  if (r.status == RunStatus::Error)
    std::printf("  error: %s\n", r.error_message.c_str());
}

/// Fixed-size worker pool over an indexed job list; results keep job order,
/// so output is identical no matter how many threads run.
template <typename Job>
inline void run_parallel(std::vector<Job>& jobs, int threads) {
  const int nw = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (nw == 1) {
    for (Job& j : jobs) j();
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < nw; ++w)
    workers.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        jobs[i]();
      }
    });
  for (auto& w : workers) w.join();
}

inline void write_compare_files(const std::vector<AlgoResult>& results,
                                const std::string& out_dir) {
  std::ofstream csv(out_dir + "/compare.csv");
  csv << "algo,value,iterations,time_s,cuts_computed,cuts_selected\n";
  csv << std::setprecision(17);
  for (const AlgoResult& r : results)
    csv << r.algo << ',' << r.report.value() << ',' << r.report.iterations.size()
        << ',' << r.report.total_time << ',' << r.report.cuts_computed << ','
        << r.report.cuts_selected << '\n';

  std::ofstream txt(out_dir + "/compare.txt");
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %16s %10s %10s %12s %12s\n", "algo",
                "value", "iters", "time_s", "cuts", "selected");
  txt << line;
  for (const AlgoResult& r : results) {
    std::snprintf(line, sizeof line, "%-24s %16.6f %10zu %10.3f %12ld %12ld\n",
                  r.algo.c_str(), r.report.value(),
                  r.report.iterations.size(), r.report.total_time,
                  r.report.cuts_computed, r.report.cuts_selected);
    txt << line;
  }
}

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{
      "ddpsolve: multistage linear programs by dual dynamic programming "
      "with cut selection"};
  app.require_subcommand(1);

  // generate ------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "write a benchmark instance");
  std::string gen_family;
  int gen_T = 0, gen_n = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out = ".", gen_returns;
  gen->add_option("family", gen_family, "inventory | portfolio")
      ->required()
      ->check(CLI::IsMember({"inventory", "portfolio"}));
  auto* gen_t_opt = gen->add_option("--T", gen_T, "horizon length");
  gen->add_option("--n", gen_n, "portfolio: number of risky assets");
  gen->add_option("--seed", gen_seed, "portfolio: RNG seed");
  gen->add_option("--returns", gen_returns,
                  "portfolio: CSV of returns (rows r_0..r_T) instead of "
                  "random draws");
  gen->add_option("--out", gen_out, "output directory");

  // solve ---------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "run one algorithm on an instance");
  std::string s_algo, s_instance, s_out = ".";
  double s_eps = 1e-6;
  int s_max_iter = 10'000, s_h = 1, s_period = 0;
  Eigen::Index s_N = 2001;
  bool s_dump_pools = false;
  solve->add_option("instance", s_instance, "problem JSON file")->required();
  solve
      ->add_option("--algo", s_algo,
                   "simplex | ddp | ddp-cs-1 | ddp-cs-2 | territory | "
                   "level-h | dp-oracle")
      ->required();
  solve->add_option("--eps", s_eps, "stopping gap");
  solve->add_option("--max-iter", s_max_iter, "iteration cap");
  solve->add_option("--strategy-h", s_h, "level-h: cuts kept per trial point");
  solve->add_option("--usefulness-period", s_period,
                    "run the redundancy sweep every this many iterations");
  solve->add_option("--N", s_N, "dp-oracle: grid size");
  solve->add_option("--out", s_out, "output directory");
  solve->add_flag("--dump-pools", s_dump_pools,
                  "also write the per-stage cut pools");

  // oracle ----------------------------------------------------------------
  auto* oracle = app.add_subcommand(
      "oracle", "tabulate the inventory cost-to-go on a grid");
  std::string o_instance, o_out = ".";
  int o_T = 0;
  Eigen::Index o_N = 2001;
  oracle->add_option("instance", o_instance,
                     "inventory instance file (or give --T)");
  oracle->add_option("--T", o_T, "horizon (alternative to an instance file)");
  oracle->add_option("--N", o_N, "grid size");
  oracle->add_option("--out", o_out, "output directory");

  // compare ---------------------------------------------------------------
  auto* cmp = app.add_subcommand("compare",
                                 "run several algorithms on one instance");
  std::string c_instance, c_out = ".";
  std::vector<std::string> c_algos;
  double c_eps = 1e-6;
  int c_max_iter = 10'000, c_h = 1, c_period = 0, c_threads = 1;
  Eigen::Index c_N = 2001;
  cmp->add_option("instance", c_instance, "problem JSON file")->required();
  cmp->add_option("--algo", c_algos, "algorithms to run (repeat; >= 2)");
  cmp->add_option("--eps", c_eps, "stopping gap");
  cmp->add_option("--max-iter", c_max_iter, "iteration cap");
  cmp->add_option("--strategy-h", c_h, "level-h parameter");
  cmp->add_option("--usefulness-period", c_period, "redundancy sweep period");
  cmp->add_option("--N", c_N, "dp-oracle grid size");
  cmp->add_option("--threads", c_threads, "parallel independent runs");
  cmp->add_option("--out", c_out, "output directory");

  // bench -------------------------------------------------------------------
  auto* bench = app.add_subcommand(
      "bench", "sweep instance sizes (or gaps) and tabulate timings");
  std::vector<int> b_Ts;
  std::vector<int> b_ns;
  std::vector<double> b_epss;
  std::vector<std::string> b_algos{"ddp", "ddp-cs-1", "ddp-cs-2"};
  int b_T_fixed = 0, b_max_iter = 10'000, b_h = 1, b_period = 0,
      b_threads = 1;
  std::uint64_t b_seed = 0;
  std::string b_out = ".";
  bench->add_option("--T", b_Ts, "inventory horizons to sweep");
  bench->add_option("--n", b_ns,
                    "portfolio asset counts to sweep (fixed --T-fixed)");
  bench->add_option("--eps", b_epss,
                    "gaps to sweep at fixed --T-fixed (inventory)");
  bench->add_option("--T-fixed", b_T_fixed,
                    "horizon for --n and --eps sweeps");
  bench->add_option("--algo", b_algos, "algorithms to run at each size");
  bench->add_option("--seed", b_seed, "portfolio sweep seed");
  bench->add_option("--max-iter", b_max_iter, "iteration cap");
  bench->add_option("--strategy-h", b_h, "level-h parameter");
  bench->add_option("--usefulness-period", b_period, "sweep period");
  bench->add_option("--threads", b_threads, "parallel runs");
  bench->add_option("--out", b_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      std::filesystem::create_directories(gen_out);
      if (gen_family == "inventory") {
        if (gen_T < 1)
          throw CLI::ValidationError("--T", "inventory needs --T >= 1");
        InventoryParams params;
        params.T = gen_T;
        MultistageProblem prob = gen_inventory(params);
        json meta{{"family", "inventory"},
                  {"T", params.T},
                  {"y1", params.initial_inventory}};
        const std::string path =
            gen_out + "/inventory_T" + std::to_string(gen_T) + ".json";
        save_problem(prob, path, meta);
        std::printf("wrote %s  (T=%d, y1=%g)\n", path.c_str(), gen_T,
                    params.initial_inventory);
      } else {
        PortfolioParams params;
        params.seed = gen_seed;
        params.T = gen_T;
        params.n = gen_n;
        if (!gen_returns.empty()) {
          apply_csv_returns(params, load_returns_csv(gen_returns));
        } else if (gen_T < 1 || gen_n < 1) {
          throw CLI::ValidationError(
              "--T", "portfolio needs --T and --n (or --returns)");
        }
        MultistageProblem prob = gen_portfolio(params);
        json meta{{"family", "portfolio"},
                  {"T", params.T},
                  {"n", params.n},
                  {"seed", params.seed}};
        const std::string path = gen_out + "/portfolio_T" +
                                 std::to_string(params.T) + "_n" +
                                 std::to_string(params.n) + "_s" +
                                 std::to_string(params.seed) + ".json";
        save_problem(prob, path, meta);
        std::printf("wrote %s  (T=%d, n=%d, seed=%llu%s)\n", path.c_str(),
                    params.T, params.n,
                    static_cast<unsigned long long>(params.seed),
                    gen_returns.empty() ? "" : ", returns from CSV");
      }
      return 0;
    }

    if (solve->parsed()) {
      std::filesystem::create_directories(s_out);
      if (s_eps <= 0) throw CLI::ValidationError("--eps", "must be > 0");
      json meta;
      MultistageProblem prob = load_problem(s_instance, &meta);
      RunReport report;
      if (is_simplex_algo(s_algo) || s_algo == "dp-oracle") {
        report =
            run_algo(prob, meta, s_algo, s_eps, s_max_iter, s_h, s_period, s_N,
                     s_algo == "dp-oracle" ? s_out + "/value_table.csv" : "");
      } else {
        RunOptions opts;
        opts.epsilon = s_eps;
        opts.max_iter = s_max_iter;
        DdpEngine engine(prob, strategy_for(s_algo, s_h, s_period), opts);
        report = engine.run();
        if (s_dump_pools) {
          json pools = json::object();
          for (int t = 2; t <= prob.T; ++t)
            pools[std::to_string(t)] = pool_to_json(engine.pool(t));
          std::ofstream out(s_out + "/pools.json");
          out << pools.dump(1, '\t') << '\n';
        }
      }
      print_result(s_algo, report);
      save_report(report, s_out + "/report.json");
      save_bounds_csv(report, s_out + "/bounds.csv");
      return report.status == RunStatus::Converged ? 0 : 1;
    }

    if (oracle->parsed()) {
      std::filesystem::create_directories(o_out);
      InventoryParams params;
      double y1;
      if (!o_instance.empty()) {
        json meta;
        MultistageProblem prob = load_problem(o_instance, &meta);
        params = inventory_params_from_meta(meta);
        y1 = prob.x0[0];
      } else if (o_T >= 1) {
        params.T = o_T;
        y1 = params.initial_inventory;
      } else {
        throw CLI::ValidationError("--T", "give an instance file or --T");
      }
      ValueTable table = grid_dp(params, o_N);
      const double q1 = initial_value(params, table, y1);
      save_value_table_csv(table, o_out + "/value_table.csv");
      std::printf(
          "grid-dp T=%d N=%ld: Q1(%g) = %.6f  (extrapolations: %ld)\n",
          params.T, static_cast<long>(o_N), y1, q1, table.extrapolations());
      std::printf("wrote %s/value_table.csv\n", o_out.c_str());
      return 0;
    }

    if (cmp->parsed()) {
      std::filesystem::create_directories(c_out);
      if (c_algos.size() < 2)
        throw CLI::ValidationError("--algo", "compare needs >= 2 algorithms");
      if (c_eps <= 0) throw CLI::ValidationError("--eps", "must be > 0");
      json meta;
      const MultistageProblem prob = load_problem(c_instance, &meta);
      std::vector<AlgoResult> results(c_algos.size());
      std::vector<std::function<void()>> jobs;
      for (size_t i = 0; i < c_algos.size(); ++i)
        jobs.emplace_back([&, i] {
          results[i].algo = c_algos[i];
          results[i].report = run_algo(prob, meta, c_algos[i], c_eps,
                                       c_max_iter, c_h, c_period, c_N);
        });
      run_parallel(jobs, c_threads);
      for (const AlgoResult& r : results) print_result(r.algo, r.report);
      write_compare_files(results, c_out);
      std::printf("wrote %s/compare.csv and compare.txt\n", c_out.c_str());
      for (const AlgoResult& r : results)
        if (r.report.status != RunStatus::Converged) return 1;
      return 0;
    }

    if (bench->parsed()) {
      std::filesystem::create_directories(b_out);
      struct BenchJob {
        std::string size_label;
        std::string algo;
        MultistageProblem prob;
        json meta;
        double eps;
      };
      std::vector<BenchJob> spec;
      if (!b_Ts.empty()) {
        for (const int T : b_Ts) {
          InventoryParams params;
          params.T = T;
          MultistageProblem prob = gen_inventory(params);
          for (const auto& algo : b_algos)
            spec.push_back({std::to_string(T), algo, prob,
                            json{{"family", "inventory"}, {"T", T}}, 0.1});
        }
      } else if (!b_ns.empty()) {
        if (b_T_fixed < 1)
          throw CLI::ValidationError("--T-fixed",
                                     "portfolio sweep needs --T-fixed");
        for (const int n : b_ns) {
          MultistageProblem prob = gen_portfolio(b_T_fixed, n, b_seed);
          for (const auto& algo : b_algos)
            spec.push_back({std::to_string(n), algo, prob, json(), 1.0});
        }
      } else if (!b_epss.empty()) {
        if (b_T_fixed < 1)
          throw CLI::ValidationError("--T-fixed",
                                     "the gap sweep needs --T-fixed");
        InventoryParams params;
        params.T = b_T_fixed;
        MultistageProblem prob = gen_inventory(params);
        for (const double eps : b_epss)
          for (const auto& algo : b_algos)
            spec.push_back({std::to_string(eps), algo, prob,
                            json{{"family", "inventory"}, {"T", b_T_fixed}},
                            eps});
      } else {
        throw CLI::ValidationError("--T", "give --T, --n, or --eps values");
      }

      std::vector<RunReport> reports(spec.size());
      std::vector<std::string> errors(spec.size());
      std::vector<std::function<void()>> jobs;
      for (size_t i = 0; i < spec.size(); ++i)
        jobs.emplace_back([&, i] {
          try {
            reports[i] = run_algo(spec[i].prob, spec[i].meta, spec[i].algo,
                                  spec[i].eps, b_max_iter, b_h, b_period, 2001);
          } catch (const std::exception& e) {
            errors[i] = e.what();
            reports[i].status = RunStatus::Error;
            reports[i].error_message = e.what();
          }
        });
      run_parallel(jobs, b_threads);

      std::ofstream csv(b_out + "/bench.csv");
      csv << "size,algo,time_s,iters,value\n";
      csv << std::setprecision(17);
      bool all_ok = true;
      for (size_t i = 0; i < spec.size(); ++i) {
        const RunReport& r = reports[i];
        const bool ok = r.status == RunStatus::Converged;
        all_ok = all_ok && ok;
        csv << spec[i].size_label << ',' << spec[i].algo << ',' << r.total_time
            << ',' << r.iterations.size() << ',';
        if (ok)
          csv << r.value();
        else
          csv << "error";
        csv << '\n';
        std::printf("size=%-8s %-12s %s value=%.6f time=%.3fs\n",
                    spec[i].size_label.c_str(), spec[i].algo.c_str(),
                    to_string(r.status), ok ? r.value() : 0.0, r.total_time);
      }
      std::printf("wrote %s/bench.csv\n", b_out.c_str());
      return all_ok ? 0 : 1;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace ddp::cli
