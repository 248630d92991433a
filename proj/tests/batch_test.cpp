// Copyright 2026 The olnv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "olnv/batch.hpp"
#include "olnv/data.hpp"
#include "test_support.hpp"

namespace olnv {
namespace {

using testing::Gen;

// The 1-D objective is convex piecewise linear in q, so its minimum over
// the feasible interval sits at a breakpoint E_t / x_t or an interval end.
double breakpoint_oracle(const std::vector<Sample>& s, double cap, bool enforce) {
  double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
  if (enforce)
    for (const auto& x : s) {
      const double a = x.features[0];
      if (a > 0) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, cap / a);
      } else if (a < 0) {
        lo = std::max(lo, cap / a);
        hi = std::min(hi, 0.0);
      }
    }
  std::vector<double> cand{0.0};
  for (const auto& x : s)
    if (x.features[0] != 0) cand.push_back(x.energy / x.features[0]);
  if (std::isfinite(lo)) cand.push_back(lo);
  if (std::isfinite(hi)) cand.push_back(hi);
  double best = std::numeric_limits<double>::infinity();
  for (double q : cand) {
    if (q < lo - 1e-12 || q > hi + 1e-12) continue;
    best = std::min(best, average_loss(s, DecisionVector{std::clamp(q, lo, hi)}));
  }
  return best;
}

std::vector<Sample> energies(std::initializer_list<double> e, PenaltyPair pen) {
  std::vector<Sample> s;
  for (double v : e) s.push_back({v, pen, {1.0}});
  return s;
}

TEST(SolveErm, TwoPointExample) {
  const auto s = energies({1, 3}, {1, 1});
  const ErmSolution sol = solve_erm({s, 10, true});
  EXPECT_EQ(sol.solver_status, SolverStatus::optimal);
  EXPECT_NEAR(sol.objective, 1.0, 1e-12);  // average of the two unit errors
  EXPECT_NEAR(sol.objective * 2, 2.0, 1e-12);
  EXPECT_GE(sol.q_star[0], 1 - 1e-9);
  EXPECT_LE(sol.q_star[0], 3 + 1e-9);
}

TEST(SolveErm, RealizableDataHasZeroObjective) {
  Gen g(401);
  const DecisionVector q0{5.0, 0.5, 0.2};
  std::vector<Sample> s;
  while (s.size() < 60) {
    std::vector<double> x{1.0, g.uniform(0, 100), g.uniform(0, 100)};
    s.push_back({dot(x, q0.view()), g.penalties(), x});
  }
  const ErmSolution sol = solve_erm({s, 200, true});
  EXPECT_EQ(sol.solver_status, SolverStatus::optimal);
  EXPECT_LT(sol.objective, 1e-9);
  for (const auto& x : s) EXPECT_NEAR(dot(x.features, sol.q_star.view()), x.energy, 1e-7);
}

TEST(SolveErm, QuantileExample) {
  const auto s = energies({1, 2, 3, 4, 5}, {3, 1});
  const ErmSolution sol = solve_erm({s, 10, true});
  EXPECT_NEAR(sol.q_star[0], 4.0, 1e-9);
}

TEST(SolveErm, Errors) {
  EXPECT_THROW(solve_erm({{}, 10, true}), std::invalid_argument);
  const std::vector<Sample> mixed{{1, {1, 1}, {1.0}}, {1, {1, 1}, {1.0, 2.0}}};
  EXPECT_THROW(solve_erm({mixed, 10, true}), std::invalid_argument);
  const auto above = energies({12}, {1, 1});
  EXPECT_THROW(solve_erm({above, 10, true}), std::invalid_argument);
}

TEST(SolveErm, MatchesBreakpointOracle) {
  Gen g(402);
  for (int inst = 0; inst < 500; ++inst) {
    const std::size_t n = 1 + g.index(50);
    std::vector<Sample> s;
    for (std::size_t t = 0; t < n; ++t)
      s.push_back({g.uniform(0, 100), g.penalties(), {g.coin(0.1) ? 0.0 : g.uniform(-5, 15)}});
    for (bool enforce : {true, false}) {
      const ErmSolution sol = solve_erm({s, 100, enforce});
      const double best = breakpoint_oracle(s, 100, enforce);
      ASSERT_NE(sol.solver_status, SolverStatus::infeasible);
      ASSERT_NEAR(sol.objective, best, 1e-6) << inst;
    }
  }
}

std::vector<Sample> random_window(Gen& g, std::size_t n, std::size_t p) {
  std::vector<Sample> s;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> x(p);
    x[0] = 1.0;
    for (std::size_t j = 1; j < p; ++j) x[j] = g.uniform(0, 50);
    s.push_back({g.uniform(0, 100), g.penalties(), x});
  }
  return s;
}

TEST(Properties, RandomProbesNeverBeatTheOptimum) {
  Gen g(403);
  for (int inst = 0; inst < 100; ++inst) {
    const auto s = random_window(g, 20 + g.index(100), 2 + g.index(4));
    const std::size_t p = s.front().dim();
    const ErmSolution sol = solve_erm({s, 100, true});
    ASSERT_EQ(sol.solver_status, SolverStatus::optimal);
    for (int k = 0; k < 100; ++k) {
      // random direction scaled into the feasible region
      DecisionVector q(g.vec(p, -1, 1));
      double worst = 0.0;
      for (const auto& x : s) worst = std::max(worst, std::abs(dot(x.features, q.view())));
      const double target = g.uniform(0, 100);
      for (std::size_t j = 0; j < p; ++j) q[j] *= target / std::max(worst, 1e-12);
      q[0] = std::abs(q[0]);
      bool ok = true;
      for (const auto& x : s) {
        const double o = dot(x.features, q.view());
        ok = ok && o >= 0 && o <= 100;
      }
      if (!ok) continue;
      ASSERT_LE(sol.objective, average_loss(s, q) + 1e-6);
    }
    ASSERT_LE(sol.objective, average_loss(s, sol.q_star) + 1e-12);
  }
}

TEST(Properties, ObjectiveIgnoresSampleOrder) {
  Gen g(404);
  for (int inst = 0; inst < 50; ++inst) {
    auto s = random_window(g, 30 + g.index(200), 2 + g.index(3));
    const double a = solve_erm({s, 100, true}).objective;
    std::shuffle(s.begin(), s.end(), g.engine());
    const double b = solve_erm({s, 100, true}).objective;
    ASSERT_NEAR(a, b, 1e-12);
  }
}

TEST(Properties, DroppingCapacityNeverHurts) {
  Gen g(405);
  for (int inst = 0; inst < 100; ++inst) {
    const auto s = random_window(g, 10 + g.index(100), 1 + g.index(4));
    const ErmSolution with = solve_erm({s, 100, true});
    const ErmSolution without = solve_erm({s, 100, false});
    ASSERT_LE(without.objective, with.objective + 1e-9);
  }
}

TEST(Properties, ComparatorsDominateHindsight) {
  Gen g(406);
  for (int inst = 0; inst < 30; ++inst) {
    const auto s = random_window(g, 100 + g.index(200), 1 + g.index(3));
    const std::size_t l = 1 + g.index(80);
    const auto comp = comparator_sequence(s, l, 100);
    const ErmSolution fx = hindsight_fx(s, 100);
    const std::vector<DecisionVector> fixed(s.size(), fx.q_star);
    ASSERT_LE(total_loss(s, comp), total_loss(s, fixed) + 1e-6);
  }
}

SynthStream alternating(std::uint64_t seed, std::size_t horizon, PenaltyScheme scheme) {
  SynthConfig c;
  c.seed = seed;
  c.horizon = horizon;
  c.penalty_scheme = std::move(scheme);
  return synth_stream(c);
}

TEST(RollingWindow, SingleRefreshKeepsQConstant) {
  const auto st = alternating(1, 1200, FixedPenalties{{1, 3}});
  const std::span<const Sample> all(st.samples);
  const auto out = rolling_window_run(all.subspan(720), all.first(720), {480, 480}, 100);
  ASSERT_EQ(out.size(), 480u);
  for (const auto& r : out) EXPECT_EQ(r.q_used, out.front().q_used);
  const ErmSolution sol = solve_erm({all.subspan(240, 480), 100, true});
  EXPECT_NEAR(out.front().q_used[0], sol.q_star[0], 1e-12);
  for (std::size_t t = 0; t < out.size(); ++t)
    EXPECT_EQ(out[t].offer, box_offer(st.samples[720 + t].features, out[t].q_used, 100));
}

TEST(RollingWindow, StationaryStreamGivesStableDecisions) {
  const auto st = alternating(2, 720 * 4, FixedPenalties{{1, 3}});
  const std::span<const Sample> all(st.samples);
  const auto out = rolling_window_run(all.subspan(1440), all.first(1440), {720, 24}, 100);
  for (std::size_t t = 24; t < out.size(); t += 24)
    EXPECT_LT(std::abs(out[t].q_used[0] - out[t - 24].q_used[0]), 0.05);
}

TEST(RollingWindow, RegimeLengthWindowIsNeutral) {
  const auto st = alternating(3, 1440 * 5, AlternatingPenalties{});
  const std::span<const Sample> all(st.samples);
  const auto out = rolling_window_run(all.subspan(2880), all.first(2880), {2880, 24}, 100);
  std::size_t near = 0, total = 0;
  for (std::size_t t = 0; t < out.size(); t += 24, ++total)
    near += std::abs(out[t].q_used[0] - 1.0) <= 0.05;
  EXPECT_GE(near, total * 95 / 100);
}

TEST(RollingWindow, Errors) {
  const auto st = alternating(1, 100, FixedPenalties{{1, 3}});
  const std::span<const Sample> all(st.samples);
  EXPECT_THROW(rolling_window_run(all.subspan(50), all.first(50), {60, 24}, 100), std::invalid_argument);
  EXPECT_THROW(rolling_window_run(all.subspan(50), all.first(50), {40, 41}, 100), ConfigError);
  EXPECT_THROW(rolling_window_run(all.subspan(50), all.first(50), {0, 0}, 100), ConfigError);
}

TEST(HindsightFx, EqualsFullSolve) {
  const auto st = alternating(4, 2880, AlternatingPenalties{});
  const ErmSolution a = hindsight_fx(st.samples, 100), b = solve_erm({st.samples, 100, true});
  EXPECT_EQ(a.q_star, b.q_star);
  EXPECT_NEAR(a.q_star[0], 1.0, 0.05);
}

TEST(ComparatorSequence, Shapes) {
  const auto st = alternating(5, 2880, AlternatingPenalties{});
  const auto one = comparator_sequence(st.samples, 5000, 100);
  const ErmSolution fx = hindsight_fx(st.samples, 100);
  for (const auto& q : one) EXPECT_EQ(q, fx.q_star);

  const auto two = comparator_sequence(st.samples, 1440, 100);
  const std::span<const Sample> all(st.samples);
  EXPECT_EQ(two.front(), hindsight_fx(all.first(1440), 100).q_star);
  EXPECT_EQ(two.back(), hindsight_fx(all.subspan(1440), 100).q_star);
  // (1, 3) regime favours low offers, (3, 1) high ones
  EXPECT_LT(two.front()[0], two.back()[0]);

  const std::span<const Sample> head = all.first(50);
  const auto per = comparator_sequence(head, 1, 100);
  for (std::size_t t = 0; t < per.size(); ++t) EXPECT_NEAR(nv_loss(head[t], per[t]), 0.0, 1e-9);
  EXPECT_THROW(comparator_sequence(head, 0, 100), std::invalid_argument);
  EXPECT_THROW(comparator_sequence({}, 1, 100), std::invalid_argument);
}

TEST(ComparatorSequence, LastPartitionMayBeShorter) {
  const auto st = alternating(6, 250, FixedPenalties{{2, 1}});
  const auto c = comparator_sequence(st.samples, 100, 100);
  ASSERT_EQ(c.size(), 250u);
  const std::span<const Sample> all(st.samples);
  EXPECT_EQ(c[249], hindsight_fx(all.subspan(200), 100).q_star);
}

TEST(OptimalQuantileOffer, Examples) {
  const std::vector<double> h{4, 1, 3, 2};
  EXPECT_EQ(optimal_quantile_offer(h, 1, 1), 2);
  EXPECT_EQ(optimal_quantile_offer(h, 3, 1), 3);
  EXPECT_EQ(optimal_quantile_offer(h, 1, 0), 4);
  EXPECT_EQ(optimal_quantile_offer(h, 0, 1), 1);
  EXPECT_THROW(optimal_quantile_offer(h, 0, 0), std::invalid_argument);
  EXPECT_THROW(optimal_quantile_offer({}, 1, 1), std::invalid_argument);
}

TEST(OptimalQuantileOffer, AgreesWithErm) {
  Gen g(407);
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<double> h(1 + g.index(40));
    for (auto& v : h) v = g.uniform(0, 100);
    const PenaltyPair pen{g.uniform(0.1, 5), g.uniform(0.1, 5)};
    std::vector<Sample> s;
    for (double v : h) s.push_back({v, pen, {1.0}});
    const double q = optimal_quantile_offer(h, pen.psi_plus, pen.psi_minus);
    ASSERT_NEAR(average_loss(s, DecisionVector{q}), solve_erm({s, 100, true}).objective, 1e-9);
  }
}

}  // namespace
}  // namespace olnv
