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

#ifndef OLNV_TYPES_HPP
#define OLNV_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace olnv {

/// Base of every error raised by the library. The CLI maps the three
/// subclasses onto exit codes 2, 3 and 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

/// Forward, up-regulation and down-regulation prices of one hour
/// (currency/MWh).
struct MarketPrices {
  double forward = 0.0;
  double up_reg = 0.0;
  double down_reg = 0.0;
};

/// Imbalance penalties: psi_plus is charged per MWh produced above the
/// offer, psi_minus per MWh produced below it.
struct PenaltyPair {
  double psi_plus = 0.0;
  double psi_minus = 0.0;

  double sum() const { return psi_plus + psi_minus; }
  friend bool operator==(const PenaltyPair&, const PenaltyPair&) = default;
};

/// One market hour: realized energy, its penalties and the context
/// available before the offer was made.
struct Sample {
  double energy = 0.0;
  PenaltyPair penalties;
  std::vector<double> features;

  std::size_t dim() const { return features.size(); }
};

/// Coefficients of the linear offering rule offer = x^T q.
struct DecisionVector {
  std::vector<double> q;

  DecisionVector() = default;
  explicit DecisionVector(std::vector<double> values) : q(std::move(values)) {}
  DecisionVector(std::initializer_list<double> values) : q(values) {}

  std::size_t size() const { return q.size(); }
  double operator[](std::size_t i) const { return q[i]; }
  double& operator[](std::size_t i) { return q[i]; }
  std::span<const double> view() const { return q; }

  bool finite() const {
    for (double v : q)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const DecisionVector&, const DecisionVector&) = default;
};

/// Revenue split into the forward-market and balancing-market parts.
struct Revenue {
  double forward_part = 0.0;
  double balancing_part = 0.0;
  double total = 0.0;
};

/// Convex blend of realized penalties with historical averages.
struct AnchorConfig {
  double mu = 1.0;
  double psi_bar_plus = 1.0;
  double psi_bar_minus = 1.0;

  void validate() const {
    if (!(mu >= 0.0 && mu <= 1.0))
      throw ConfigError("anchor mu must lie in [0, 1]");
    if (!(psi_bar_plus >= 0.0) || !(psi_bar_minus >= 0.0))
      throw ConfigError("anchor penalties must be nonnegative");
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

/// Pairwise (cascade) summation. Reduction order depends only on the
/// length, so sums are bit-stable for a given input.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 32;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double positive_part(double a) { return a > 0.0 ? a : 0.0; }

}  // namespace olnv

#endif
