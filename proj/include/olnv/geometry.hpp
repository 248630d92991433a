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

#ifndef OLNV_GEOMETRY_HPP
#define OLNV_GEOMETRY_HPP

#include <algorithm>
#include <span>
#include <stdexcept>

#include "olnv/types.hpp"

namespace olnv {

/// The decision set {q : 0 <= x^T q <= capacity} of one feature vector,
/// bounded by two parallel hyperplanes.
struct Slab {
  std::span<const double> x;
  double capacity = 0.0;
};

/// Offer implied by q, clamped to the physical range [0, capacity].
inline double box_offer(std::span<const double> x, const DecisionVector& q,
                        double capacity) {
  if (!(capacity > 0.0)) throw std::invalid_argument("capacity must be positive");
  return std::min(std::max(0.0, dot(x, q.view())), capacity);
}

/// Euclidean projection of o onto the slab. Points on the boundary count
/// as interior and come back unchanged.
inline DecisionVector project_decision(std::span<const double> o,
                                       const Slab& slab) {
  if (!(slab.capacity > 0.0))
    throw std::invalid_argument("capacity must be positive");
  const double nx2 = squared_norm(slab.x);
  if (!(nx2 > 0.0))
    throw std::domain_error("projection onto the slab of a zero feature vector");
  const double xo = dot(slab.x, o);
  DecisionVector out(std::vector<double>(o.begin(), o.end()));
  double shift = 0.0;
  if (xo > slab.capacity)
    shift = (slab.capacity - xo) / nx2;
  else if (xo < 0.0)
    shift = -xo / nx2;
  else
    return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += shift * slab.x[i];
  return out;
}

}  // namespace olnv

#endif
