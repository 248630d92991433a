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

#ifndef OLNV_BATCH_HPP
#define OLNV_BATCH_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "olnv/geometry.hpp"
#include "olnv/lp_solver.hpp"
#include "olnv/nv_core.hpp"
#include "olnv/types.hpp"

namespace olnv {

/// Empirical risk minimization over a window of samples. The samples are
/// viewed, not owned.
struct ErmProblem {
  std::span<const Sample> samples;
  double capacity = 100.0;
  bool enforce_capacity = true;
};

enum class SolverStatus { optimal, infeasible, degenerate };

struct ErmSolution {
  DecisionVector q_star;
  double objective = 0.0;  // average loss over the window
  SolverStatus solver_status = SolverStatus::optimal;
};

struct RollingWindowConfig {
  std::size_t window_len = 720;
  std::size_t refresh_every = 24;

  void validate() const {
    if (window_len == 0 || refresh_every == 0)
      throw ConfigError("rolling window lengths must be positive");
    if (refresh_every > window_len)
      throw ConfigError("refresh_every must not exceed window_len");
  }
};

/// Average newsvendor loss of q over the samples, pairwise-summed.
inline double average_loss(std::span<const Sample> samples, const DecisionVector& q) {
  std::vector<double> losses(samples.size());
  for (std::size_t t = 0; t < samples.size(); ++t) losses[t] = nv_loss(samples[t], q);
  return pairwise_sum(losses) / static_cast<double>(samples.size());
}

inline double total_loss(std::span<const Sample> samples,
                         std::span<const DecisionVector> decisions) {
  if (samples.size() != decisions.size())
    throw std::invalid_argument("total_loss: length mismatch");
  std::vector<double> losses(samples.size());
  for (std::size_t t = 0; t < samples.size(); ++t)
    losses[t] = nv_loss(samples[t], decisions[t]);
  return pairwise_sum(losses);
}

inline ErmSolution solve_erm(const ErmProblem& problem) {
  const auto& samples = problem.samples;
  if (samples.empty()) throw std::invalid_argument("solve_erm: empty sample set");
  if (problem.enforce_capacity && !(problem.capacity > 0.0))
    throw std::invalid_argument("solve_erm: capacity must be positive");
  const std::size_t n = samples.size(), p = samples.front().dim();
  if (p == 0) throw std::invalid_argument("solve_erm: zero-dimensional features");

  lp::Program prog;
  prog.rows = n;
  prog.dim = p;
  prog.x.reserve(n * p);
  prog.e.resize(n);
  prog.cost_o.resize(n);
  prog.cost_u.resize(n);
  prog.ub_o.resize(n);
  prog.ub_u.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  // Without capacity the optimal face can be unbounded and interior
  // iterates drift along it, so the interior phase works inside a wide
  // residual bound.
  double max_e = 0.0;
  for (const Sample& s : samples) max_e = std::max(max_e, std::abs(s.energy));
  lp::Options opt;
  opt.interior_bound = 100.0 * (1.0 + max_e);
  for (std::size_t t = 0; t < n; ++t) {
    const Sample& s = samples[t];
    if (s.dim() != p) throw std::invalid_argument("solve_erm: mixed feature dimensions");
    prog.x.insert(prog.x.end(), s.features.begin(), s.features.end());
    prog.e[t] = s.energy;
    prog.cost_o[t] = s.penalties.psi_plus * inv_n;
    prog.cost_u[t] = s.penalties.psi_minus * inv_n;
    if (problem.enforce_capacity) {
      if (s.energy < 0.0 || s.energy > problem.capacity)
        throw std::invalid_argument("solve_erm: energy outside [0, capacity]");
      prog.ub_o[t] = s.energy;
      prog.ub_u[t] = problem.capacity - s.energy;
    } else {
      prog.ub_o[t] = lp::kInf;
      prog.ub_u[t] = lp::kInf;
    }
  }

  const lp::Result res = lp::solve(prog, opt);
  ErmSolution sol;
  sol.q_star = DecisionVector(res.q);
  sol.objective = average_loss(samples, sol.q_star);
  if (!sol.q_star.finite()) {
    sol.solver_status = SolverStatus::infeasible;
  } else if (!res.converged) {
    sol.solver_status = SolverStatus::degenerate;
  } else if (problem.enforce_capacity &&
             !lp::detail::feasible(prog, res.q, 1e-7 * std::max(1.0, problem.capacity))) {
    sol.solver_status = SolverStatus::infeasible;
  }
  return sol;
}

struct RollingOffer {
  double offer = 0.0;
  DecisionVector q_used;
};

/// Rolling-window benchmark: re-solve on the trailing window every
/// refresh_every hours, offer with the box projection in between.
inline std::vector<RollingOffer> rolling_window_run(std::span<const Sample> stream,
                                                    std::span<const Sample> warmup,
                                                    const RollingWindowConfig& cfg,
                                                    double capacity) {
  cfg.validate();
  if (warmup.size() < cfg.window_len)
    throw std::invalid_argument("rolling_window_run: warmup shorter than window");
  std::vector<Sample> history;
  history.reserve(warmup.size() + stream.size());
  history.insert(history.end(), warmup.begin(), warmup.end());
  history.insert(history.end(), stream.begin(), stream.end());

  std::vector<RollingOffer> out;
  out.reserve(stream.size());
  DecisionVector q;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (i % cfg.refresh_every == 0) {
      const std::size_t end = warmup.size() + i;
      const std::span<const Sample> window(history.data() + end - cfg.window_len,
                                           cfg.window_len);
      const ErmSolution sol = solve_erm({window, capacity, true});
      if (sol.solver_status == SolverStatus::infeasible)
        throw SolverError("rolling window solve reported infeasibility");
      q = sol.q_star;
    }
    out.push_back({box_offer(stream[i].features, q, capacity), q});
  }
  return out;
}

/// Best single decision vector in hindsight over the whole set.
inline ErmSolution hindsight_fx(std::span<const Sample> samples, double capacity) {
  return solve_erm({samples, capacity, true});
}

/// Hindsight optimum of each adjacent partition of length partition_len
/// (the last one may be shorter), repeated for every hour it covers.
inline std::vector<DecisionVector> comparator_sequence(std::span<const Sample> samples,
                                                       std::size_t partition_len,
                                                       double capacity) {
  if (samples.empty()) throw std::invalid_argument("comparator_sequence: empty input");
  if (partition_len == 0)
    throw std::invalid_argument("comparator_sequence: partition length must be >= 1");
  std::vector<DecisionVector> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += partition_len) {
    const std::size_t len = std::min(partition_len, samples.size() - start);
    const ErmSolution sol = hindsight_fx(samples.subspan(start, len), capacity);
    if (sol.solver_status == SolverStatus::infeasible)
      throw SolverError("partition solve reported infeasibility");
    out.insert(out.end(), len, sol.q_star);
  }
  return out;
}

/// Type-1 empirical quantile of the history at psi+ / (psi+ + psi-).
inline double optimal_quantile_offer(std::span<const double> history,
                                     double psi_bar_plus, double psi_bar_minus) {
  if (history.empty()) throw std::invalid_argument("optimal_quantile_offer: empty history");
  if (!(psi_bar_plus + psi_bar_minus > 0.0))
    throw std::invalid_argument("optimal_quantile_offer: both anchors are zero");
  const double level = psi_bar_plus / (psi_bar_plus + psi_bar_minus);
  std::vector<double> sorted(history.begin(), history.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto k = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

}  // namespace olnv

#endif
