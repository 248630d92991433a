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

#ifndef OLNV_LEARNER_HPP
#define OLNV_LEARNER_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "olnv/geometry.hpp"
#include "olnv/nv_core.hpp"
#include "olnv/types.hpp"

namespace olnv {

/// Update with the subgradient of the piecewise-linear loss.
struct SubgradientMode {};

/// Update with the gradient of the softplus-smoothed loss.
struct SmoothMode {
  double alpha = 1.0;
};

using GradientMode = std::variant<SubgradientMode, SmoothMode>;

/// Starting point that reproduces the producer's own forecast: 1 on the
/// forecast component, 0.01 everywhere else.
inline DecisionVector forecast_aligned_init(std::size_t dim,
                                            std::size_t forecast_index) {
  if (forecast_index >= dim)
    throw ConfigError("forecast feature index out of range");
  std::vector<double> q(dim, 0.01);
  q[forecast_index] = 1.0;
  return DecisionVector(std::move(q));
}

struct OlnvConfig {
  double eta = 1e-3;
  double rho = 0.95;
  double epsilon = 1e-6;
  GradientMode mode = SubgradientMode{};
  AnchorConfig anchor{0.7, 1.0, 1.0};
  double capacity = 100.0;
  DecisionVector q_init;

  void validate() const {
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(capacity > 0.0)) throw ConfigError("capacity must be positive");
    if (const auto* s = std::get_if<SmoothMode>(&mode); s && !(s->alpha > 0.0))
      throw ConfigError("smoothing alpha must be positive");
    anchor.validate();
    if (q_init.size() == 0) throw ConfigError("q_init is empty");
    if (!q_init.finite()) throw ConfigError("q_init has non-finite entries");
  }
};

struct OlnvState {
  DecisionVector q;
  std::vector<double> g2_bar;  // decayed mean of squared gradient components
  std::uint64_t step_count = 0;
};

/// Audit trail of one update.
struct StepRecord {
  double offer = 0.0;
  double loss = 0.0;
  std::vector<double> gradient;
  std::vector<double> learning_rate;
  DecisionVector q_after;
};

inline OlnvState init(const OlnvConfig& config) {
  config.validate();
  return {config.q_init, std::vector<double>(config.q_init.size(), 0.0), 0};
}

inline std::vector<double> accumulate_sq_grad(std::span<const double> g2_bar_prev,
                                              std::span<const double> g,
                                              double rho) {
  if (g2_bar_prev.size() != g.size())
    throw std::invalid_argument("accumulate_sq_grad: dimension mismatch");
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    out[i] = rho * g2_bar_prev[i] + (1.0 - rho) * g[i] * g[i];
  return out;
}

inline std::vector<double> learning_rate(std::span<const double> g2_bar,
                                         double eta, double epsilon) {
  std::vector<double> out(g2_bar.size());
  for (std::size_t i = 0; i < g2_bar.size(); ++i)
    out[i] = eta / std::sqrt(g2_bar[i] + epsilon);
  return out;
}

/// One round: offer, pay the raw-penalty loss, then learn from the
/// anchored loss. When x_t = 0 the slab constrains nothing and the
/// projection is skipped.
inline std::pair<OlnvState, StepRecord> step(OlnvState state,
                                             const Sample& sample,
                                             const OlnvConfig& config) {
  if (sample.dim() != state.q.size())
    throw std::invalid_argument("sample dimension does not match the learner");

  StepRecord rec;
  rec.offer = box_offer(sample.features, state.q, config.capacity);
  rec.loss = deviation_loss(sample.energy, rec.offer, sample.penalties);

  Sample anchored{sample.energy, anchor_penalties(sample.penalties, config.anchor),
                  sample.features};
  if (const auto* s = std::get_if<SmoothMode>(&config.mode))
    rec.gradient = smooth_gradient(anchored, state.q, s->alpha);
  else
    rec.gradient = nv_subgradient(anchored, state.q);

  state.g2_bar = accumulate_sq_grad(state.g2_bar, rec.gradient, config.rho);
  rec.learning_rate = learning_rate(state.g2_bar, config.eta, config.epsilon);

  std::vector<double> moved = state.q.q;
  for (std::size_t i = 0; i < moved.size(); ++i)
    moved[i] -= rec.learning_rate[i] * rec.gradient[i];

  if (squared_norm(sample.features) > 0.0)
    state.q = project_decision(moved, Slab{sample.features, config.capacity});
  else
    state.q = DecisionVector(std::move(moved));
  if (!state.q.finite())
    throw SolverError("decision vector became non-finite");

  ++state.step_count;
  rec.q_after = state.q;
  return {std::move(state), std::move(rec)};
}

struct StreamResult {
  OlnvState final_state;
  std::vector<StepRecord> records;
};

inline StreamResult run_stream(std::span<const Sample> samples,
                               const OlnvConfig& config,
                               OlnvState start) {
  if (samples.empty()) throw std::invalid_argument("run_stream: empty stream");
  StreamResult out;
  out.records.reserve(samples.size());
  for (const Sample& s : samples) {
    auto [next, rec] = step(std::move(start), s, config);
    start = std::move(next);
    out.records.push_back(std::move(rec));
  }
  out.final_state = std::move(start);
  return out;
}

inline StreamResult run_stream(std::span<const Sample> samples,
                               const OlnvConfig& config) {
  return run_stream(samples, config, init(config));
}

}  // namespace olnv

#endif
