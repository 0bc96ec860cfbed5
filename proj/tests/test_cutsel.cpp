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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "ddp/cuts.hpp"
#include "ddp/rng.hpp"

using namespace ddp;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

// 1-D cut through (x_ref, theta) with slope b.
Cut cut1(double x_ref, double theta, double b) {
  return make_cut(vec({x_ref}), theta, vec({b}));
}

}  // namespace

TEST_CASE("eval_cut") {
  CHECK(eval_cut(cut1(123.0, 5.0, 0.0), vec({-7.0})) == 5.0);
  CHECK(eval_cut(cut1(0.0, 0.0, 1.0), vec({3.0})) == 3.0);
  const Cut c = make_cut(vec({1.0, 1.0}), 2.0, vec({1.0, -1.0}));
  CHECK(eval_cut(c, vec({2.0, 0.0})) == Catch::Approx(4.0));
  CHECK(std::abs(c.alpha + c.beta.dot(c.x_ref) - c.theta) <=
        1e-12 * (1.0 + std::abs(c.theta)));
  CHECK_THROWS_AS(eval_cut(c, vec({1.0})), std::invalid_argument);
  CHECK_THROWS_AS(make_cut(vec({0.0}), kInf, vec({1.0})),
                  std::invalid_argument);
}

TEST_CASE("pool_value over selected cuts") {
  CutPool pool(2, 1);
  CHECK_FALSE(pool.value(vec({0.0})).has_value());
  CHECK_THROWS_AS(pool_value_or_throw(pool, vec({0.0})), std::logic_error);

  pool.insert_and_select(cut1(0.0, 5.0, 0.0), vec({0.0}), Strategy::level1());
  CHECK(pool_value_or_throw(pool, vec({42.0})) == 5.0);

  CutPool two(2, 1);
  two.insert_and_select(cut1(0.0, 0.0, 1.0), vec({0.0}), Strategy::level1());
  two.insert_and_select(cut1(0.0, 1.0, -1.0), vec({1.0}), Strategy::level1());
  CHECK(pool_value_or_throw(two, vec({0.25})) == Catch::Approx(0.75));
}

TEST_CASE("only selected cuts contribute to pool_value") {
  // Under limited memory, a cut dominated at every trial point stays stored
  // but unselected, so the pool value can sit below the max over all cuts.
  CutPool pool(2, 1);
  pool.insert_and_select(cut1(0.0, 1.0, 0.0), vec({0.0}),
                         Strategy::limited_memory());
  pool.insert_and_select(cut1(0.0, 0.0, 2.0), vec({0.0}),
                         Strategy::limited_memory());
  REQUIRE(pool.num_stored() == 2);
  REQUIRE(pool.selected_ids() == std::vector<int>{1});
  // At x=1 the unselected cut would give 2; the selected envelope gives 1.
  CHECK(pool_value_or_throw(pool, vec({1.0})) == Catch::Approx(1.0));
}

TEST_CASE("duplicate cuts: level 1 keeps both, limited memory keeps oldest") {
  for (int variant = 0; variant < 2; ++variant) {
    const Strategy strat =
        variant == 0 ? Strategy::level1() : Strategy::limited_memory();
    CutPool pool(2, 1);
    pool.insert_and_select(cut1(0.5, 1.0, 2.0), vec({0.5}), strat);
    pool.insert_and_select(cut1(0.5, 1.0, 2.0), vec({0.5}), strat);
    REQUIRE(pool.num_trials() == 1);
    if (variant == 0) {
      CHECK(pool.selected_ids() == std::vector<int>{1, 2});
    } else {
      CHECK(pool.selected_ids() == std::vector<int>{1});
      CHECK(pool.best_ids(0) == std::vector<int>{1});
    }
  }
}

TEST_CASE("level 1 keeps every cut that wins somewhere") {
  CutPool pool(2, 1);
  pool.insert_and_select(cut1(0.0, 0.5, 0.0), vec({0.0}), Strategy::level1());
  pool.insert_and_select(cut1(1.0, 1.0, 1.0), vec({1.0}), Strategy::level1());
  // C1 = 0.5 wins at x=0 (0.5 > 0), C2 = x wins at x=1 (1 > 0.5).
  CHECK(pool.selected_ids() == std::vector<int>{1, 2});

  // A cut strictly below the pool everywhere changes nothing but is stored.
  pool.insert_and_select(cut1(0.5, -1.0, 0.0), vec({0.5}), Strategy::level1());
  CHECK(pool.selected_ids() == std::vector<int>{1, 2});
  CHECK(pool.num_stored() == 3);
  CHECK_FALSE(pool.selection_changed());
}

TEST_CASE("territory prunes dominated cuts from storage") {
  CutPool pool(2, 1);
  pool.insert_and_select(cut1(0.0, 0.0, 0.0), vec({0.0}),
                         Strategy::territory());
  // Strictly higher everywhere: the first cut is dropped from storage.
  pool.insert_and_select(cut1(0.0, 1.0, 0.0), vec({0.0}),
                         Strategy::territory());
  CHECK(pool.num_stored() == 1);
  CHECK(pool.stored(0).id == 2);  // creation id preserved after compaction
  CHECK(pool.selected_ids() == std::vector<int>{2});
}

TEST_CASE("level H keeps the H highest cuts per trial point") {
  CutPool pool(2, 1);
  const Strategy strat = Strategy::level_h(2);
  pool.insert_and_select(cut1(0.0, 1.0, 0.0), vec({0.0}), strat);
  pool.insert_and_select(cut1(0.0, 2.0, 0.0), vec({0.0}), strat);
  pool.insert_and_select(cut1(0.0, 2.0, 0.0), vec({0.0}), strat);
  // Values at the single trial: 1, 2, 2. Top-2 with ties by lowest id: {2,3}.
  CHECK(pool.selected_ids() == std::vector<int>{2, 3});
  CHECK(pool.best_ids(0) == std::vector<int>{2, 3});
  CHECK(pool.num_stored() == 3);
}

TEST_CASE("strategy parameter validation") {
  CHECK_THROWS_AS(Strategy::level_h(0).check(), std::invalid_argument);
  CHECK_NOTHROW(Strategy::level1().with_usefulness(10).check());
}

TEST_CASE("selection invariants over random cut streams") {
  const Strategy strategies[] = {
      Strategy::none(), Strategy::level1(), Strategy::territory(),
      Strategy::limited_memory(), Strategy::level_h(3)};
  for (const Strategy& strat : strategies) {
    Xoshiro256 rng(91 + static_cast<int>(strat.rule));
    CutPool pool(3, 2);
    std::vector<double> prev_m;
    for (int k = 1; k <= 60; ++k) {
      Vector x(2);
      // Revisit earlier trial points now and then.
      if (k > 5 && rng.uniform() < 0.3) {
        x = pool.trial_point(static_cast<Eigen::Index>(
            rng.next() % static_cast<std::uint64_t>(pool.num_trials())));
      } else {
        x << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
      }
      Vector beta(2);
      beta << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
      const Cut c = make_cut(x, rng.uniform(-1.0, 1.0), beta);
      pool.insert_and_select(c, x, strat);

      // Height at the new trial point is at least the new cut's height.
      const Eigen::Index ti = pool.find_trial(x);
      REQUIRE(ti >= 0);
      REQUIRE(pool_value_or_throw(pool, x) >=
              c.value(x) - 1e-9 * (1.0 + std::abs(c.value(x))));

      // Pool heights at stored trial points never decrease.
      for (size_t i = 0; i < prev_m.size(); ++i) {
        const double now = pool_value_or_throw(
            pool, pool.trial_point(static_cast<Eigen::Index>(i)));
        REQUIRE(now >= prev_m[i] - 1e-9 * (1.0 + std::abs(prev_m[i])));
      }
      prev_m.clear();
      for (Eigen::Index i = 0; i < pool.num_trials(); ++i)
        prev_m.push_back(pool_value_or_throw(pool, pool.trial_point(i)));

      // Cardinality bounds per rule.
      if (strat.rule == SelectionRule::LimitedMemoryLevel1) {
        for (Eigen::Index i = 0; i < pool.num_trials(); ++i)
          REQUIRE(pool.best_ids(i).size() == 1);
        REQUIRE(pool.num_selected() <= pool.num_trials());
      }
      if (strat.rule == SelectionRule::LevelH)
        REQUIRE(pool.num_selected() <= 3 * pool.num_trials());

      // Selected set is exactly the union of the per-trial best lists.
      if (strat.rule != SelectionRule::None) {
        std::vector<int> uni;
        for (Eigen::Index i = 0; i < pool.num_trials(); ++i)
          for (int id : pool.best_ids(i)) uni.push_back(id);
        std::sort(uni.begin(), uni.end());
        uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
        std::vector<int> sel = pool.selected_ids();
        // Territory may keep stale tie ids out of storage; selected must
        // still match the best-list union restricted to stored cuts.
        REQUIRE(sel == uni);
      }
    }

    // Replaying selection from scratch reproduces the incremental state for
    // append-only rules (oldest-wins determinism of the limited variant).
    if (strat.rule == SelectionRule::Level1 ||
        strat.rule == SelectionRule::LimitedMemoryLevel1 ||
        strat.rule == SelectionRule::LevelH) {
      const auto scratch = pool.recompute_best_from_scratch(strat);
      for (Eigen::Index i = 0; i < pool.num_trials(); ++i)
        REQUIRE(pool.best_ids(i) == scratch[static_cast<size_t>(i)]);
    }
  }
}

TEST_CASE("usefulness test: identical, crossing, and dominated cuts") {
  SimplexSolver solver;
  const Vector lo = vec({0.0}), hi = vec({1.0});

  SECTION("two identical cuts cover each other") {
    CutPool pool(2, 1);
    pool.insert_and_select(cut1(0.0, 0.25, 1.0), vec({0.0}),
                           Strategy::level1());
    pool.insert_and_select(cut1(0.0, 0.25, 1.0), vec({0.0}),
                           Strategy::level1());
    const auto red = usefulness_test(pool, lo, hi, solver);
    CHECK(red == std::vector<int>{1, 2});
    // Applying the sweep keeps one of them: the envelope must not drop.
    const auto removed = apply_usefulness(pool, lo, hi, solver);
    REQUIRE(removed == std::vector<int>{2});  // newest goes first
    REQUIRE(pool.num_selected() == 1);
    for (double x = 0.0; x <= 1.0; x += 0.1)
      CHECK(pool_value_or_throw(pool, vec({x})) ==
            Catch::Approx(0.25 + x).margin(1e-12));
  }

  SECTION("crossing cuts: neither is redundant") {
    CutPool pool(2, 1);
    pool.insert_and_select(cut1(0.0, 0.0, 1.0), vec({0.0}),
                           Strategy::level1());  // C1(x) = x
    pool.insert_and_select(cut1(0.0, 1.0, -1.0), vec({1.0}),
                           Strategy::level1());  // C2(x) = 1 - x
    CHECK(usefulness_test(pool, lo, hi, solver).empty());
    // Gap of C1 against C2 is max over [0,1] of 2x - 1 = 1, at x = 1.
    std::vector<const Cut*> others{&pool.stored(1)};
    CHECK(redundancy_gap(others, pool.stored(0), lo, hi, solver) ==
          Catch::Approx(1.0));
  }

  SECTION("parallel dominated cut is redundant") {
    // Under no-selection both cuts stay in the tested set.
    CutPool pool(2, 1);
    pool.insert_and_select(cut1(0.0, 0.0, 1.0), vec({0.0}),
                           Strategy::none());  // C1(x) = x
    pool.insert_and_select(cut1(0.0, -1.0, 1.0), vec({0.0}),
                           Strategy::none());  // C2(x) = x - 1
    const auto red = usefulness_test(pool, lo, hi, solver);
    CHECK(red == std::vector<int>{2});
    std::vector<const Cut*> others{&pool.stored(0)};
    CHECK(redundancy_gap(others, pool.stored(1), lo, hi, solver) ==
          Catch::Approx(-1.0));
  }
}

TEST_CASE("usefulness sweep preserves the envelope on random pools") {
  SimplexSolver solver;
  Xoshiro256 rng(5150);
  const Vector lo = vec({-2.0, -2.0}), hi = vec({2.0, 2.0});
  for (int rep = 0; rep < 10; ++rep) {
    CutPool pool(2, 2);
    for (int k = 0; k < 15; ++k) {
      Vector x(2);
      x << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
      Vector beta(2);
      beta << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
      pool.insert_and_select(make_cut(x, rng.uniform(-0.2, 0.2), beta), x,
                             Strategy::none());
    }
    std::vector<Vector> sample;
    std::vector<double> before;
    for (int s = 0; s < 200; ++s) {
      Vector x(2);
      x << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
      sample.push_back(x);
      before.push_back(pool_value_or_throw(pool, x));
    }
    const auto removed = apply_usefulness(pool, lo, hi, solver);
    INFO("removed " << removed.size() << " cuts");
    for (size_t s = 0; s < sample.size(); ++s) {
      const double after = pool_value_or_throw(pool, sample[s]);
      REQUIRE(std::abs(after - before[s]) <=
              1e-8 * (1.0 + std::abs(before[s])));
    }
  }
}
