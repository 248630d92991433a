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

/**
 * @file lp_solver.hpp
 * @brief Interior-point solver for feature-driven newsvendor programs.
 *
 * Solves
 *
 *   min  sum_t c_o[t] o[t] + c_u[t] u[t]
 *   s.t. x_t^T q + o[t] - u[t] = e[t]        (one row per sample)
 *        0 <= o[t] <= ub_o[t],  0 <= u[t] <= ub_u[t],  q free
 *
 * with Mehrotra's predictor-corrector method. Each row couples only
 * through q, so the Newton system reduces to a p x p normal matrix
 * sum_t x_t x_t^T / d_t and one iteration costs O(n p^2).
 *
 * Bounds equal to +inf are absent; bounds equal to 0 fix the variable
 * at zero. Capacity constraints 0 <= x^T q <= cap are expressed through
 * ub_o = e and ub_u = cap - e, which admits exactly the same q.
 *
 * The interior iterate (or q = 0, which every program here admits) is then
 * handed to a crossover that finishes on an optimal vertex.
 */

#ifndef OLNV_LP_SOLVER_HPP
#define OLNV_LP_SOLVER_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace olnv::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Program {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> x;  // row-major, rows x dim
  std::vector<double> e;
  std::vector<double> cost_o, cost_u;
  std::vector<double> ub_o, ub_u;

  double xq(std::size_t t, const double* q) const {
    const double* r = &x[t * dim];
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += r[j] * q[j];
    return s;
  }
};

struct Options {
  int max_iterations = 200;
  double feasibility_tol = 1e-9;
  double gap_tol = 1e-9;
  double step_damping = 0.9995;
  // Once within stall_zone of the tolerances, stop after stall_limit
  // iterations without a better merit value.
  int stall_limit = 6;
  double stall_zone = 1e3;
  int max_pivots = 10000;
  // Infinite bounds are replaced by this value inside the interior phase so
  // that iterates stay on a compact region. The crossover sees the true
  // bounds.
  double interior_bound = kInf;
};

struct Result {
  std::vector<double> q;
  int iterations = 0;
  int pivots = 0;
  bool converged = false;  // optimal, by tolerances or by a certified vertex
  bool vertex = false;     // crossover ended on a vertex with no improving edge
};

namespace detail {

/// Per-variable state of one bounded column.
struct Column {
  std::vector<double> v, z, s, w;
  std::vector<char> active, bounded;
  std::vector<double> ub;
};

inline double primal_objective(const Program& lp, const std::vector<double>& q) {
  std::vector<double> terms(lp.rows);
  for (std::size_t t = 0; t < lp.rows; ++t) {
    const double r = lp.e[t] - lp.xq(t, q.data());
    terms[t] = r > 0.0 ? lp.cost_o[t] * r : -lp.cost_u[t] * r;
  }
  // Rows are averaged upstream, so plain summation in fixed order is stable.
  double s = 0.0;
  for (double v : terms) s += v;
  return s;
}

inline bool feasible(const Program& lp, const std::vector<double>& q, double tol) {
  for (std::size_t t = 0; t < lp.rows; ++t) {
    const double r = lp.e[t] - lp.xq(t, q.data());
    if (r > lp.ub_o[t] + tol || -r > lp.ub_u[t] + tol) return false;
  }
  return true;
}

/// Crossover from a feasible point to an optimal vertex.
///
/// The objective is separable in the offers o_t = x_t^T q: row t costs
/// c_o (e - o)^+ + c_u (o - e)^+ on the interval [e - ub_o, e + ub_u].
/// Purification walks inside the null space of the rows fixed so far until
/// p rows sit on a breakpoint, never increasing the objective. Pivoting then
/// releases one basis row at a time along the edge with the most negative
/// directional derivative and stops at the minimizer of that edge.
class Crossover {
 public:
  explicit Crossover(const Program& lp) : lp_(lp), n_(lp.rows), p_(lp.dim) {
    double sc = 1.0;
    for (std::size_t t = 0; t < n_; ++t) sc = std::max(sc, std::abs(lp_.e[t]));
    tol_ = 1e-11 * sc;
  }

  struct Outcome {
    std::vector<double> q;
    bool vertex = false;      // p independent rows on breakpoints
    bool certified = false;   // no improving edge left
    int pivots = 0;
  };

  Outcome run(std::vector<double> q, int max_pivots) {
    Outcome out;
    o_.resize(n_);
    s_.resize(n_);
    offers(q);
    basis_.clear();
    targets_.clear();

    // purification
    while (basis_.size() < p_) {
      Eigen::VectorXd d = null_direction();
      if (d.size() == 0) break;
      directions(d);
      const double up = derivative(+1.0), down = derivative(-1.0);
      double sign = up <= down ? 1.0 : -1.0;
      const double slope = std::min(up, down);
      if (std::isinf(slope)) {
        if (!adopt_blocking_row()) break;
        continue;
      }
      if (slope > 0.0) {
        // Both ways climb, so a row on this line already sits on a kink.
        if (!adopt_blocking_row()) break;
        continue;
      }
      std::size_t row = 0;
      double target = 0.0, alpha = 0.0;
      if (!line_search(sign, slope, alpha, row, target)) {
        // Flat both ways with nothing ahead: try the other way.
        if (std::max(up, down) > 0.0) break;
        sign = -sign;
        if (!line_search(sign, slope, alpha, row, target)) break;
      }
      advance(q, d, sign * alpha);
      basis_.push_back(row);
      targets_.push_back(target);
      ++out.pivots;
      if (out.pivots > max_pivots) break;
    }
    if (basis_.size() < p_) {
      out.q = std::move(q);
      return out;
    }
    if (!snap(q)) {
      out.q = std::move(q);
      return out;
    }
    out.vertex = true;

    // pivoting
    side_.assign(n_, 1);
    bool bland = false;
    while (out.pivots <= max_pivots) {
      Eigen::MatrixXd xb(p_, p_);
      for (std::size_t j = 0; j < p_; ++j) xb.row(j) = row_vec(basis_[j]).transpose();
      const Eigen::MatrixXd inv = Eigen::PartialPivLU<Eigen::MatrixXd>(xb).inverse();
      std::vector<std::size_t> order(p_);
      std::iota(order.begin(), order.end(), std::size_t{0});
      if (bland)
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return basis_[a] < basis_[b]; });
      double best = 0.0, best_sign = 0.0;
      std::size_t best_k = p_;
      for (std::size_t k : order) {
        directions(inv.col(static_cast<Eigen::Index>(k)));
        s_[basis_[k]] = 1.0;
        for (double sign : {1.0, -1.0}) {
          const double der = reduced_cost(k, sign);
          if (der < best - slope_tol(sign)) {
            best = der;
            best_sign = sign;
            best_k = k;
          }
        }
        if (bland && best_k != p_) break;
      }
      if (best_k == p_) {
        out.certified = true;
        break;
      }
      const Eigen::VectorXd d = inv.col(static_cast<Eigen::Index>(best_k));
      directions(d);
      s_[basis_[best_k]] = 1.0;
      std::size_t row = 0;
      double target = 0.0, alpha = 0.0;
      if (!sided_search(best_k, best_sign, best, alpha, row, target)) break;
      side_[basis_[best_k]] = best_sign > 0.0 ? 1 : -1;
      basis_[best_k] = row;
      targets_[best_k] = target;
      if (!snap(q)) {
        out.vertex = false;
        break;
      }
      bland = alpha == 0.0;
      ++out.pivots;
    }
    out.q = std::move(q);
    return out;
  }

 private:
  Eigen::Map<const Eigen::VectorXd> row_vec(std::size_t t) const {
    return Eigen::Map<const Eigen::VectorXd>(&lp_.x[t * p_], static_cast<Eigen::Index>(p_));
  }
  double low(std::size_t t) const { return lp_.e[t] - lp_.ub_o[t]; }
  double high(std::size_t t) const { return lp_.e[t] + lp_.ub_u[t]; }

  void offers(const std::vector<double>& q) {
    for (std::size_t t = 0; t < n_; ++t) o_[t] = lp_.xq(t, q.data());
  }

  void directions(const Eigen::VectorXd& d) {
    const double dn = d.norm();
    for (std::size_t t = 0; t < n_; ++t) {
      const auto r = row_vec(t);
      const double v = r.dot(d);
      // Cancellation leaves rounding noise on rows parallel to the basis.
      s_[t] = std::abs(v) <= 1e-12 * r.norm() * dn ? 0.0 : v;
    }
    for (std::size_t b : basis_) s_[b] = 0.0;
  }

  void advance(std::vector<double>& q, const Eigen::VectorXd& d, double step) {
    for (std::size_t j = 0; j < p_; ++j) q[j] += step * d(static_cast<Eigen::Index>(j));
    offers(q);
    for (std::size_t j = 0; j < basis_.size(); ++j) o_[basis_[j]] = targets_[j];
  }

  /// Solves X_B q = b_B so that basis rows sit exactly on their breakpoints.
  bool snap(std::vector<double>& q) {
    Eigen::MatrixXd xb(p_, p_);
    Eigen::VectorXd b(p_);
    for (std::size_t j = 0; j < p_; ++j) {
      xb.row(j) = row_vec(basis_[j]).transpose();
      b(j) = targets_[j];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(xb);
    if (lu.rank() < static_cast<Eigen::Index>(p_)) return false;
    const Eigen::VectorXd sol = lu.solve(b);
    if (!sol.allFinite()) return false;
    q.assign(sol.data(), sol.data() + p_);
    offers(q);
    for (std::size_t j = 0; j < p_; ++j) o_[basis_[j]] = targets_[j];
    return true;
  }

  /// Unit direction orthogonal to the current basis rows, taken from the
  /// coordinate axis with the largest remaining component.
  Eigen::VectorXd null_direction() const {
    Eigen::MatrixXd ortho(p_, basis_.size());
    for (std::size_t j = 0; j < basis_.size(); ++j) {
      Eigen::VectorXd r = row_vec(basis_[j]);
      for (std::size_t k = 0; k < j; ++k) r -= ortho.col(k).dot(r) * ortho.col(k);
      const double nr = r.norm();
      if (nr == 0.0) return {};
      ortho.col(j) = r / nr;
    }
    Eigen::VectorXd best;
    double best_norm = 0.0;
    for (std::size_t i = 0; i < p_; ++i) {
      Eigen::VectorXd d = Eigen::VectorXd::Unit(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(i));
      for (std::size_t k = 0; k < basis_.size(); ++k) d -= ortho.col(k).dot(d) * ortho.col(k);
      for (std::size_t k = 0; k < basis_.size(); ++k) d -= ortho.col(k).dot(d) * ortho.col(k);
      if (d.norm() > best_norm + 1e-12) {
        best_norm = d.norm();
        best = d;
      }
    }
    if (best_norm < 1e-8) return {};
    return best / best_norm;
  }

  /// One-sided derivative of row t's cost when its offer moves at rate s.
  double row_derivative(std::size_t t, double s) const {
    if (s == 0.0) return 0.0;
    const double o = o_[t], e = lp_.e[t];
    if (s > 0.0) {
      if (o >= high(t) - tol_) return kInf;
      return o < e - tol_ ? -lp_.cost_o[t] * s : lp_.cost_u[t] * s;
    }
    if (o <= low(t) + tol_) return kInf;
    return o > e + tol_ ? lp_.cost_u[t] * s : -lp_.cost_o[t] * s;
  }

  double derivative(double sign) const {
    double d = 0.0;
    for (std::size_t t = 0; t < n_; ++t) {
      const double r = row_derivative(t, sign * s_[t]);
      if (std::isinf(r)) return kInf;
      d += r;
    }
    return d;
  }

  double slope_tol(double sign) const {
    double m = 0.0;
    for (std::size_t t = 0; t < n_; ++t)
      m += (lp_.cost_o[t] + lp_.cost_u[t]) * std::abs(sign * s_[t]);
    return 1e-12 * m + 1e-300;
  }

  /// A row on the current line that blocks both directions joins the basis.
  bool adopt_blocking_row() {
    for (std::size_t t = 0; t < n_; ++t) {
      if (s_[t] == 0.0 || std::find(basis_.begin(), basis_.end(), t) != basis_.end()) continue;
      for (double b : {lp_.e[t], low(t), high(t)}) {
        if (std::isfinite(b) && std::abs(o_[t] - b) <= tol_) {
          basis_.push_back(t);
          targets_.push_back(b);
          return true;
        }
      }
    }
    return false;
  }

  /// Minimizes the cost along the current direction times sign, starting
  /// with slope `slope` <= 0. Reports the breakpoint where it stops.
  bool line_search(double sign, double slope, double& alpha, std::size_t& row,
                   double& target) {
    struct Brk {
      double alpha;
      std::size_t row;
      double target;
      bool wall;
    };
    std::vector<Brk> brk;
    for (std::size_t t = 0; t < n_; ++t) {
      const double s = sign * s_[t];
      if (s == 0.0) continue;
      auto add = [&](double b, bool wall) {
        if (!std::isfinite(b)) return;
        const double gap = b - o_[t];
        if (std::abs(gap) <= tol_ || (gap > 0.0) != (s > 0.0)) return;
        brk.push_back({gap / s, t, b, wall});
      };
      add(lp_.e[t], false);
      add(low(t), true);
      add(high(t), true);
    }
    std::sort(brk.begin(), brk.end(), [](const Brk& a, const Brk& b) {
      return a.alpha < b.alpha || (a.alpha == b.alpha && a.row < b.row);
    });
    for (const Brk& b : brk) {
      const bool stop =
          b.wall || (slope += (lp_.cost_o[b.row] + lp_.cost_u[b.row]) * std::abs(s_[b.row])) >= 0.0;
      if (stop) {
        alpha = b.alpha;
        row = b.row;
        target = b.target;
        return true;
      }
    }
    return false;
  }

  bool in_basis(std::size_t t) const {
    return std::find(basis_.begin(), basis_.end(), t) != basis_.end();
  }

  /// Slope of a non-basis row; a row on its kink uses the piece on its side.
  double slope(std::size_t t) const {
    const double o = o_[t], e = lp_.e[t];
    if (std::abs(o - e) <= tol_) return side_[t] > 0 ? lp_.cost_u[t] : -lp_.cost_o[t];
    return o < e ? -lp_.cost_o[t] : lp_.cost_u[t];
  }

  /// Derivative along basis edge k. Non-basis rows contribute their sided
  /// slopes, so walls they touch block the step instead of the edge.
  double reduced_cost(std::size_t k, double sign) const {
    double d = row_derivative(basis_[k], sign);
    if (std::isinf(d)) return kInf;
    for (std::size_t t = 0; t < n_; ++t)
      if (s_[t] != 0.0 && !in_basis(t)) d += slope(t) * sign * s_[t];
    return d;
  }

  /// Ratio test for a pivot. Breakpoints a row already touches count at
  /// alpha = 0 when the move leaves its side. Ties go to the lower row.
  bool sided_search(std::size_t k, double sign, double slope_now, double& alpha,
                    std::size_t& row, double& target) {
    struct Brk {
      double alpha;
      std::size_t row;
      double target;
      bool wall;
    };
    std::vector<Brk> brk;
    const std::size_t leaving = basis_[k];
    for (std::size_t t = 0; t < n_; ++t) {
      const double s = sign * s_[t];
      if (s == 0.0 || (t != leaving && in_basis(t))) continue;
      auto add = [&](double b, bool wall) {
        if (!std::isfinite(b)) return;
        const double gap = b - o_[t];
        if (std::abs(gap) <= tol_) {
          if (t == leaving) return;
          const bool leaves = wall ? (b == high(t)) == (s > 0.0) : side_[t] * s < 0.0;
          if (leaves) brk.push_back({0.0, t, b, wall});
          return;
        }
        if ((gap > 0.0) == (s > 0.0)) brk.push_back({gap / s, t, b, wall});
      };
      add(lp_.e[t], false);
      add(low(t), true);
      add(high(t), true);
    }
    std::sort(brk.begin(), brk.end(), [](const Brk& a, const Brk& b) {
      return a.alpha < b.alpha || (a.alpha == b.alpha && a.row < b.row);
    });
    for (const Brk& b : brk) {
      const bool stop =
          b.wall || (slope_now += (lp_.cost_o[b.row] + lp_.cost_u[b.row]) * std::abs(s_[b.row])) >= 0.0;
      if (stop) {
        alpha = b.alpha;
        row = b.row;
        target = b.target;
        return true;
      }
      side_[b.row] = sign * s_[b.row] > 0.0 ? 1 : -1;
    }
    return false;
  }

  const Program& lp_;
  std::size_t n_, p_;
  double tol_ = 0.0;
  std::vector<double> o_, s_;
  std::vector<std::size_t> basis_;
  std::vector<double> targets_;
  std::vector<int> side_;
};

}  // namespace detail

inline Result solve(const Program& lp, const Options& opt = {}) {
  const std::size_t n = lp.rows, p = lp.dim;
  const std::size_t m = 2 * n;  // columns o_0..o_{n-1}, u_0..u_{n-1}

  detail::Column col;
  col.v.assign(m, 0.0);
  col.z.assign(m, 0.0);
  col.s.assign(m, 0.0);
  col.w.assign(m, 0.0);
  col.active.assign(m, 0);
  col.bounded.assign(m, 0);
  col.ub.assign(m, kInf);
  std::vector<double> c(m);

  double scale = 1.0;
  for (double v : lp.e) scale = std::max(scale, std::abs(v));
  double cscale = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    cscale = std::max({cscale, lp.cost_o[t], lp.cost_u[t]});
  if (cscale == 0.0) cscale = 1.0;

  std::size_t pairs = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t t = i % n;
    c[i] = i < n ? lp.cost_o[t] : lp.cost_u[t];
    col.ub[i] = std::min(i < n ? lp.ub_o[t] : lp.ub_u[t], opt.interior_bound);
    if (col.ub[i] <= 0.0) continue;  // fixed at zero
    col.active[i] = 1;
    ++pairs;
    col.z[i] = std::max(cscale, std::abs(c[i]));
    if (std::isfinite(col.ub[i])) {
      col.bounded[i] = 1;
      ++pairs;
      col.v[i] = 0.5 * col.ub[i];
      col.s[i] = 0.5 * col.ub[i];
      col.w[i] = cscale;
    } else {
      col.v[i] = scale;
    }
  }

  std::vector<double> q(p, 0.0), y(n, 0.0);
  std::vector<double> rp(n), rq(p), rd(m), ru(m);
  std::vector<double> dq(p), dy(n), dv(m), dz(m), ds(m), dw(m);
  std::vector<double> theta(m), hhat(m), dd(n), rhs_row(n);
  std::vector<double> rvz(m), rsw(m);

  Result res;
  double max_e = 0.0, max_ub = 0.0, max_c = 0.0;
  for (double v : lp.e) max_e = std::max(max_e, std::abs(v));
  for (std::size_t i = 0; i < m; ++i) {
    if (col.bounded[i]) max_ub = std::max(max_ub, col.ub[i]);
    max_c = std::max(max_c, std::abs(c[i]));
  }

  Eigen::MatrixXd normal(p, p);
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  std::vector<double> best_q = q;
  double best_merit = std::numeric_limits<double>::infinity();
  int best_iter = 0;

  auto solve_direction = [&]() {
    // theta, hhat from current rvz/rsw
    for (std::size_t i = 0; i < m; ++i) {
      if (!col.active[i]) {
        theta[i] = 0.0;
        hhat[i] = 0.0;
        continue;
      }
      double tinv = col.z[i] / col.v[i];
      double h = rd[i] - rvz[i] / col.v[i];
      if (col.bounded[i]) {
        tinv += col.w[i] / col.s[i];
        h += (rsw[i] - col.w[i] * ru[i]) / col.s[i];
      }
      theta[i] = 1.0 / tinv;
      hhat[i] = h;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (std::size_t t = 0; t < n; ++t) {
      const double a_t = theta[t] * hhat[t] - theta[n + t] * hhat[n + t];
      rhs_row[t] = (rp[t] + a_t) / dd[t];
      const double* r = &lp.x[t * p];
      for (std::size_t j = 0; j < p; ++j) rhs(j) += r[j] * rhs_row[t];
    }
    for (std::size_t j = 0; j < p; ++j) rhs(j) -= rq[j];
    Eigen::VectorXd sol = ldlt.solve(rhs);
    for (std::size_t j = 0; j < p; ++j) dq[j] = sol(j);
    for (std::size_t t = 0; t < n; ++t) {
      dy[t] = rhs_row[t] - lp.xq(t, dq.data()) / dd[t];
      dv[t] = theta[t] * (dy[t] - hhat[t]);
      dv[n + t] = theta[n + t] * (-dy[t] - hhat[n + t]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!col.active[i]) {
        dv[i] = dz[i] = ds[i] = dw[i] = 0.0;
        continue;
      }
      dz[i] = (rvz[i] - col.z[i] * dv[i]) / col.v[i];
      if (col.bounded[i]) {
        ds[i] = ru[i] - dv[i];
        dw[i] = (rsw[i] - col.w[i] * ds[i]) / col.s[i];
      } else {
        ds[i] = dw[i] = 0.0;
      }
    }
  };

  auto step_lengths = [&](double& ap, double& ad) {
    ap = 1.0;
    ad = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!col.active[i]) continue;
      if (dv[i] < 0.0) ap = std::min(ap, -col.v[i] / dv[i]);
      if (dz[i] < 0.0) ad = std::min(ad, -col.z[i] / dz[i]);
      if (col.bounded[i]) {
        if (ds[i] < 0.0) ap = std::min(ap, -col.s[i] / ds[i]);
        if (dw[i] < 0.0) ad = std::min(ad, -col.w[i] / dw[i]);
      }
    }
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    // residuals
    double inf_p = 0.0, inf_d = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      rp[t] = lp.e[t] - lp.xq(t, q.data()) - col.v[t] + col.v[n + t];
      inf_p = std::max(inf_p, std::abs(rp[t]));
    }
    std::fill(rq.begin(), rq.end(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double* r = &lp.x[t * p];
      for (std::size_t j = 0; j < p; ++j) rq[j] -= r[j] * y[t];
    }
    for (double v : rq) inf_d = std::max(inf_d, std::abs(v));
    double comp = 0.0, pobj = 0.0, dobj = 0.0;
    for (std::size_t t = 0; t < n; ++t) dobj += lp.e[t] * y[t];
    double inf_u = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!col.active[i]) {
        rd[i] = ru[i] = 0.0;
        continue;
      }
      const double bty = i < n ? y[i] : -y[i - n];
      rd[i] = c[i] - bty - col.z[i] + col.w[i];
      inf_d = std::max(inf_d, std::abs(rd[i]));
      pobj += c[i] * col.v[i];
      comp += col.v[i] * col.z[i];
      if (col.bounded[i]) {
        ru[i] = col.ub[i] - col.v[i] - col.s[i];
        inf_u = std::max(inf_u, std::abs(ru[i]));
        comp += col.s[i] * col.w[i];
        dobj -= col.ub[i] * col.w[i];
      } else {
        ru[i] = 0.0;
      }
    }
    const double mu = pairs > 0 ? comp / static_cast<double>(pairs) : 0.0;
    const double rel_p = std::max(inf_p / (1.0 + max_e), inf_u / (1.0 + max_ub));
    const double rel_d = inf_d / (1.0 + max_c);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    const double merit = std::max({rel_p / opt.feasibility_tol,
                                   rel_d / opt.feasibility_tol, gap / opt.gap_tol});
    if (merit < best_merit) {
      best_merit = merit;
      best_iter = it;
      best_q = q;
    }
    if (merit < 1.0) break;
    if (!(mu > 0.0) || !std::isfinite(merit)) break;
    if (best_merit < opt.stall_zone && it - best_iter >= opt.stall_limit) break;

    normal.setZero();
    for (std::size_t t = 0; t < n; ++t) {
      double tinv_o = 0.0, tinv_u = 0.0;
      if (col.active[t]) {
        tinv_o = col.z[t] / col.v[t];
        if (col.bounded[t]) tinv_o += col.w[t] / col.s[t];
      }
      if (col.active[n + t]) {
        tinv_u = col.z[n + t] / col.v[n + t];
        if (col.bounded[n + t]) tinv_u += col.w[n + t] / col.s[n + t];
      }
      dd[t] = (tinv_o > 0.0 ? 1.0 / tinv_o : 0.0) + (tinv_u > 0.0 ? 1.0 / tinv_u : 0.0);
      Eigen::Map<const Eigen::VectorXd> r(&lp.x[t * p], p);
      normal.selfadjointView<Eigen::Lower>().rankUpdate(r, 1.0 / dd[t]);
    }
    normal = normal.selfadjointView<Eigen::Lower>();
    const double reg = 1e-13 * std::max(1.0, normal.diagonal().maxCoeff());
    normal.diagonal().array() += reg;
    ldlt.compute(normal);

    // predictor
    for (std::size_t i = 0; i < m; ++i) {
      rvz[i] = -col.v[i] * col.z[i];
      rsw[i] = -col.s[i] * col.w[i];
    }
    solve_direction();
    double ap, ad;
    step_lengths(ap, ad);
    double comp_aff = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!col.active[i]) continue;
      comp_aff += (col.v[i] + ap * dv[i]) * (col.z[i] + ad * dz[i]);
      if (col.bounded[i])
        comp_aff += (col.s[i] + ap * ds[i]) * (col.w[i] + ad * dw[i]);
    }
    const double mu_aff = pairs > 0 ? comp_aff / static_cast<double>(pairs) : 0.0;
    const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3.0) : 0.0;

    // corrector
    for (std::size_t i = 0; i < m; ++i) {
      rvz[i] = sigma * mu - col.v[i] * col.z[i] - dv[i] * dz[i];
      rsw[i] = col.bounded[i] ? sigma * mu - col.s[i] * col.w[i] - ds[i] * dw[i] : 0.0;
    }
    solve_direction();
    step_lengths(ap, ad);
    ap = ad = std::min(1.0, opt.step_damping * std::min(ap, ad));

    for (std::size_t j = 0; j < p; ++j) q[j] += ap * dq[j];
    for (std::size_t t = 0; t < n; ++t) y[t] += ad * dy[t];
    for (std::size_t i = 0; i < m; ++i) {
      if (!col.active[i]) continue;
      col.v[i] += ap * dv[i];
      col.z[i] += ad * dz[i];
      if (col.bounded[i]) {
        col.s[i] += ap * ds[i];
        col.w[i] += ad * dw[i];
      }
    }
    res.iterations = it + 1;
  }

  res.converged = best_merit < 1.0;
  bool start_ok = true;
  for (double v : best_q) start_ok = start_ok && std::isfinite(v);
  if (!start_ok) best_q.assign(p, 0.0);
  // Interior iterates may overshoot a bound by the residual tolerance.
  // Shrinking toward q = 0 restores feasibility exactly.
  double lambda = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double o = lp.xq(t, best_q.data());
    const double lo = lp.e[t] - col.ub[t], hi = lp.e[t] + col.ub[n + t];
    if (o > hi) lambda = std::min(lambda, hi / o);
    if (o < lo) lambda = std::min(lambda, lo / o);
  }
  for (double& v : best_q) v *= std::max(lambda, 0.0);
  detail::Crossover cross(lp);
  auto out = cross.run(best_q, opt.max_pivots);
  res.q = std::move(out.q);
  res.pivots = out.pivots;
  res.vertex = out.vertex && out.certified;
  if (res.vertex) res.converged = true;
  return res;
}

}  // namespace olnv::lp

#endif
