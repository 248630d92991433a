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

#ifndef OLNV_METRICS_HPP
#define OLNV_METRICS_HPP

#include <cassert>
#include <span>
#include <stdexcept>
#include <vector>

#include "olnv/batch.hpp"
#include "olnv/nv_core.hpp"
#include "olnv/types.hpp"

namespace olnv {

/// An evaluated trajectory. All three views have the same length.
struct EvaluationRun {
  std::span<const double> offers;
  std::span<const DecisionVector> decisions;
  std::span<const Sample> samples;

  std::size_t size() const { return samples.size(); }

  void validate() const {
    if (samples.empty()) throw std::invalid_argument("EvaluationRun: empty run");
    if (offers.size() != samples.size() || decisions.size() != samples.size())
      throw std::invalid_argument("EvaluationRun: sequences differ in length");
  }
};

/// Average cost of the boxed offers against raw penalties.
inline double deviation_cost(const EvaluationRun& run) {
  run.validate();
  std::vector<double> c(run.size());
  for (std::size_t t = 0; t < run.size(); ++t)
    c[t] = deviation_loss(run.samples[t].energy, run.offers[t], run.samples[t].penalties);
  return pairwise_sum(c) / static_cast<double>(run.size());
}

/// Percentage of the baseline cost removed by a method.
inline double relative_improvement(double cost_method, double cost_fo) {
  if (!(cost_fo > 0.0))
    throw std::domain_error("relative_improvement: baseline cost is zero");
  return (cost_fo - cost_method) / cost_fo * 100.0;
}

namespace detail {

inline std::vector<double> decision_losses(std::span<const Sample> samples,
                                           std::span<const DecisionVector> decisions) {
  std::vector<double> out(samples.size());
  for (std::size_t t = 0; t < samples.size(); ++t) out[t] = nv_loss(samples[t], decisions[t]);
  return out;
}

}  // namespace detail

/// Cumulative loss of the played decision vectors (evaluated at x^T q).
inline double cumulative_loss(const EvaluationRun& run) {
  run.validate();
  return pairwise_sum(detail::decision_losses(run.samples, run.decisions));
}

inline double static_regret(const EvaluationRun& run, double capacity) {
  run.validate();
  const ErmSolution fx = hindsight_fx(run.samples, capacity);
  if (fx.solver_status == SolverStatus::infeasible)
    throw SolverError("hindsight solve reported infeasibility");
  std::vector<double> best(run.size());
  for (std::size_t t = 0; t < run.size(); ++t) best[t] = nv_loss(run.samples[t], fx.q_star);
  return cumulative_loss(run) - pairwise_sum(best);
}

/// Regret against per-sample minimizers. Each hour's minimum is zero, so
/// this is the cumulative loss itself.
inline double worst_case_regret(const EvaluationRun& run) {
#ifndef NDEBUG
  for (const Sample& s : run.samples) {
    const double nx = squared_norm(s.features);
    if (nx > 0.0) {
      DecisionVector q(detail::scaled(s.features, s.energy / nx));
      assert(nv_loss(s, q) <= 1e-9 * (1.0 + s.energy) * (1.0 + s.penalties.sum()));
    }
  }
#endif
  return cumulative_loss(run);
}

inline double dynamic_regret(const EvaluationRun& run,
                             std::span<const DecisionVector> comparators) {
  run.validate();
  if (comparators.size() != run.size())
    throw std::invalid_argument("dynamic_regret: comparator length mismatch");
  return cumulative_loss(run) -
         pairwise_sum(detail::decision_losses(run.samples, comparators));
}

/// One point of an averaged-regret curve over the prefix [0, hours).
struct RegretPoint {
  std::size_t hours = 0;
  double regret = 0.0;
  double averaged = 0.0;  // regret / hours
};

/// Static regret of every prefix whose length is a multiple of step,
/// plus the full horizon if it is not one.
inline std::vector<RegretPoint> static_regret_series(const EvaluationRun& run,
                                                     std::size_t step, double capacity) {
  run.validate();
  if (step == 0) throw std::invalid_argument("static_regret_series: step must be >= 1");
  std::vector<RegretPoint> out;
  for (std::size_t end = step;; end += step) {
    if (end > run.size()) end = run.size();
    const EvaluationRun prefix{run.offers.first(end), run.decisions.first(end),
                               run.samples.first(end)};
    const double r = static_regret(prefix, capacity);
    out.push_back({end, r, r / static_cast<double>(end)});
    if (end == run.size()) break;
  }
  return out;
}

/// Running dynamic regret against a fixed comparator sequence, one point
/// per hour.
inline std::vector<RegretPoint> dynamic_regret_series(const EvaluationRun& run,
                                                      std::span<const DecisionVector> comparators) {
  run.validate();
  if (comparators.size() != run.size())
    throw std::invalid_argument("dynamic_regret_series: comparator length mismatch");
  std::vector<RegretPoint> out(run.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < run.size(); ++t) {
    acc += nv_loss(run.samples[t], run.decisions[t]) - nv_loss(run.samples[t], comparators[t]);
    out[t] = {t + 1, acc, acc / static_cast<double>(t + 1)};
  }
  return out;
}

}  // namespace olnv

#endif
