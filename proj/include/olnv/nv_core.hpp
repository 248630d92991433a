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

#ifndef OLNV_NV_CORE_HPP
#define OLNV_NV_CORE_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "olnv/types.hpp"

namespace olnv {

/// Negative penalties in [-kPenaltyClip, 0) are rounding noise and are
/// clamped to zero; anything below is a corrupted record.
inline constexpr double kPenaltyClip = 1e-6;

/// Overproduction penalty is forward minus down-regulation price,
/// underproduction penalty is up-regulation minus forward price.
inline PenaltyPair penalties_from_prices(const MarketPrices& prices) {
  auto clip = [](double v, const char* what) {
    if (!std::isfinite(v) || v < -kPenaltyClip)
      throw DataError(std::string("negative ") + what +
                      " penalty beyond rounding tolerance");
    return v < 0.0 ? 0.0 : v;
  };
  return {clip(prices.forward - prices.down_reg, "overproduction"),
          clip(prices.up_reg - prices.forward, "underproduction")};
}

/// Cost of an offer against the realized energy.
inline double deviation_loss(double energy, double offer,
                             const PenaltyPair& pen) {
  return pen.psi_plus * positive_part(energy - offer) +
         pen.psi_minus * positive_part(offer - energy);
}

/// Forward sale plus balancing settlement under dual pricing.
inline Revenue settle_revenue(const MarketPrices& prices, double offer,
                              double energy) {
  if (offer < 0.0 || energy < 0.0)
    throw std::invalid_argument("settle_revenue: negative offer or energy");
  Revenue r;
  r.forward_part = prices.forward * offer;
  r.balancing_part = -prices.up_reg * positive_part(offer - energy) +
                     prices.down_reg * positive_part(energy - offer);
  r.total = r.forward_part + r.balancing_part;
#ifndef NDEBUG
  const PenaltyPair pen{prices.forward - prices.down_reg,
                        prices.up_reg - prices.forward};
  const double via_penalties =
      prices.forward * energy - deviation_loss(energy, offer, pen);
  const double scale = std::max({1.0, std::abs(r.total),
                                 std::abs(prices.forward * energy)});
  assert(std::abs(via_penalties - r.total) <= 1e-9 * scale);
#endif
  return r;
}

namespace detail {

inline void check_dim(const Sample& s, const DecisionVector& q) {
  if (s.dim() != q.size())
    throw std::invalid_argument("sample and decision vector dimensions differ");
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
}

/// log(1 + exp(-|z|)), never overflows.
inline double softplus_tail(double z) { return std::log1p(std::exp(-std::abs(z))); }

/// 1 / (1 + exp(-z)) evaluated on the branch that cannot overflow.
inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline std::vector<double> scaled(std::span<const double> x, double c) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
  return out;
}

}  // namespace detail

/// Signed error u = E - x^T q.
inline double residual(const Sample& s, const DecisionVector& q) {
  detail::check_dim(s, q);
  return s.energy - dot(s.features, q.view());
}

inline double nv_loss(const Sample& s, const DecisionVector& q) {
  return deviation_loss(s.energy, dot(s.features, q.view()), s.penalties);
}

/// Softplus smoothing of the newsvendor loss. Written as the exact loss
/// plus alpha (psi+ + psi-) log(1 + e^{-|u|/alpha}), which is the same
/// function on both sides of u = 0 and keeps the gap to nv_loss exact.
inline double smooth_nv_loss(const Sample& s, const DecisionVector& q,
                             double alpha) {
  detail::check_alpha(alpha);
  const double u = residual(s, q);
  const PenaltyPair& p = s.penalties;
  const double exact = u >= 0.0 ? p.psi_plus * u : -p.psi_minus * u;
  return exact + alpha * p.sum() * detail::softplus_tail(u / alpha);
}

inline std::vector<double> smooth_gradient(const Sample& s,
                                           const DecisionVector& q,
                                           double alpha) {
  detail::check_alpha(alpha);
  const double u = residual(s, q);
  const PenaltyPair& p = s.penalties;
  const double slope = -p.psi_plus + p.sum() * detail::logistic(-u / alpha);
  return detail::scaled(s.features, slope);
}

/// Subgradient of nv_loss; the zero vector at the kink u = 0.
inline std::vector<double> nv_subgradient(const Sample& s,
                                          const DecisionVector& q) {
  const double u = residual(s, q);
  double slope = 0.0;
  if (u > 0.0)
    slope = -s.penalties.psi_plus;
  else if (u < 0.0)
    slope = s.penalties.psi_minus;
  return detail::scaled(s.features, slope);
}

/// smooth_gradient - nv_subgradient in closed form. Undefined at u = 0,
/// where the subdifferential is an interval.
inline std::vector<double> gradient_error(const Sample& s,
                                          const DecisionVector& q,
                                          double alpha) {
  detail::check_alpha(alpha);
  const double u = residual(s, q);
  if (u == 0.0)
    throw std::domain_error("gradient_error is set-valued at zero residual");
  const double total = s.penalties.sum();
  const double coef = u > 0.0 ? total * detail::logistic(-u / alpha)
                              : -total * detail::logistic(u / alpha);
  return detail::scaled(s.features, coef);
}

inline PenaltyPair anchor_penalties(const PenaltyPair& raw,
                                    const AnchorConfig& cfg) {
  const double m = cfg.mu;
  return {m * raw.psi_plus + (1.0 - m) * cfg.psi_bar_plus,
          m * raw.psi_minus + (1.0 - m) * cfg.psi_bar_minus};
}

}  // namespace olnv

#endif
