// Copyright 2026 The hetlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HETLEARN_RESPONSE_KERNEL_HPP_
#define HETLEARN_RESPONSE_KERNEL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetlearn/errors.hpp"
#include "hetlearn/game_model.hpp"

namespace hetlearn {

// Probability vector over one agent's actions.
using MixedStrategy = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Vector>;
using MatrixRef = Eigen::Ref<const Matrix>;

inline constexpr double kSimplexTolerance = 1e-12;

inline bool IsMixedStrategy(const VectorRef& p, double tol = kSimplexTolerance) {
  return p.size() > 0 && p.allFinite() && p.minCoeff() >= 0.0 &&
         std::abs(p.sum() - 1.0) <= tol;
}

inline MixedStrategy Uniform(int n) { return Vector::Constant(n, 1.0 / n); }

inline MixedStrategy PureStrategy(int n, int a) {
  Vector e = Vector::Zero(n);
  e(a) = 1.0;
  return e;
}

// Shannon entropy with 0 log 0 = 0.
inline double Entropy(const VectorRef& p) {
  double h = 0.0;
  for (Eigen::Index a = 0; a < p.size(); ++a) {
    if (p(a) > 0.0) h -= p(a) * std::log(p(a));
  }
  return h;
}

inline double LogSumExp(const VectorRef& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// tau * logsumexp(q / tau), which is max_p <p, q> + tau H(p); reduces to max q
// at tau = 0.
inline double SoftMax(const VectorRef& q, double tau) {
  if (tau == 0.0) return q.maxCoeff();
  return tau * LogSumExp(q / tau);
}

// {a : q(a) >= max q - eps}, ascending.
inline std::vector<int> BestResponseSet(const VectorRef& q, double eps = 0.0) {
  if (q.size() == 0) throw StructuralError("empty payoff vector");
  if (!(eps >= 0.0)) throw DomainError("eps must be non-negative");
  const double threshold = q.maxCoeff() - eps;
  std::vector<int> out;
  for (Eigen::Index a = 0; a < q.size(); ++a) {
    if (q(a) >= threshold) out.push_back(static_cast<int>(a));
  }
  return out;
}

// Lowest-index maximizer.
inline int BestResponse(const VectorRef& q) {
  Eigen::Index a = 0;
  q.maxCoeff(&a);
  return static_cast<int>(a);
}

inline MixedStrategy SmoothedBestResponse(const VectorRef& q, double tau) {
  if (!(tau > 0.0)) {
    throw DomainError("smoothed best response needs tau > 0, got " + std::to_string(tau));
  }
  if (q.size() == 0) throw StructuralError("empty payoff vector");
  Vector e = ((q.array() - q.maxCoeff()) / tau).exp();
  return e / e.sum();
}

// ---------------------------------------------------------------------------
// Values of max_x min_y x^T R y + tau_i H(x) - tau_j H(y).

struct ValueCertificate {
  double value = 0.0;
  MixedStrategy maximizer;
  MixedStrategy minimizer;
  // Duality gap, or the larger of duality gap and fixed-point residual when
  // both temperatures are positive.
  double residual = 0.0;
};

// Guaranteed value of x against a best-responding minimizer.
inline double LowerCertificate(const MatrixRef& r, const VectorRef& x, double tau_i,
                               double tau_j) {
  return tau_i * Entropy(x) - SoftMax(-(r.transpose() * x), tau_j);
}

// Value the maximizer can at most reach against y.
inline double UpperCertificate(const MatrixRef& r, const VectorRef& y, double tau_i,
                               double tau_j) {
  return SoftMax(r * y, tau_i) - tau_j * Entropy(y);
}

inline double QreResidual(const MatrixRef& r, const VectorRef& x, const VectorRef& y,
                          double tau_i, double tau_j) {
  const double rx = (SmoothedBestResponse(r * y, tau_i) - x).cwiseAbs().maxCoeff();
  const double ry =
      (SmoothedBestResponse(-(r.transpose() * x), tau_j) - y).cwiseAbs().maxCoeff();
  return std::max(rx, ry);
}

namespace detail {

inline void CheckFinite(const MatrixRef& r) {
  if (r.size() == 0) throw StructuralError("empty payoff matrix");
  if (!r.allFinite()) throw StructuralError("payoff matrix has non-finite entries");
}

}  // namespace detail

// Dense tableau simplex with Bland's rule on
//   max 1^T w  s.t.  R' w <= 1, w >= 0,   R' = R - min R + 1 > 0.
// At the optimum 1^T w = 1 / val(R'); the minimizer is w normalized and the
// maximizer is the normalized slack dual.
inline ValueCertificate MinimaxValue(const MatrixRef& r) {
  detail::CheckFinite(r);
  const int n = static_cast<int>(r.rows());
  const int m = static_cast<int>(r.cols());
  const double shift = 1.0 - r.minCoeff();
  const int cols = m + n + 1;
  const int rhs = m + n;
  Matrix t = Matrix::Zero(n + 1, cols);
  t.topLeftCorner(n, m) = r.array() + shift;
  t.block(0, m, n, n).setIdentity();
  t.col(rhs).head(n).setOnes();
  t.row(n).head(m).setConstant(-1.0);
  std::vector<int> basis(n);
  for (int i = 0; i < n; ++i) basis[i] = m + i;

  constexpr double kPivotTol = 1e-12;
  const int max_pivots = 50 * (n + m) + 1000;
  int pivots = 0;
  while (true) {
    int enter = -1;
    for (int j = 0; j < m + n; ++j) {
      if (t(n, j) < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (t(i, enter) <= kPivotTol) continue;
      const double ratio = t(i, rhs) / t(i, enter);
      if (leave < 0 || ratio < best_ratio - 1e-15 ||
          (ratio <= best_ratio + 1e-15 && basis[i] < basis[leave])) {
        best_ratio = std::min(best_ratio, ratio);
        leave = i;
      }
    }
    if (leave < 0) throw NumericalError("simplex: unbounded direction", 0.0);
    t.row(leave) /= t(leave, enter);
    for (int i = 0; i <= n; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    basis[leave] = enter;
    if (++pivots > max_pivots) {
      throw NumericalError("simplex: pivot limit reached", 0.0);
    }
  }

  Vector w = Vector::Zero(m);
  for (int i = 0; i < n; ++i) {
    if (basis[i] < m) w(basis[i]) = std::max(0.0, t(i, rhs));
  }
  Vector u = t.row(n).segment(m, n).transpose().cwiseMax(0.0);
  if (!(w.sum() > 0.0) || !(u.sum() > 0.0)) {
    throw NumericalError("simplex: degenerate optimum", 0.0);
  }
  ValueCertificate cert;
  cert.minimizer = w / w.sum();
  cert.maximizer = u / u.sum();
  const double upper = (r * cert.minimizer).maxCoeff();
  const double lower = (r.transpose() * cert.maximizer).minCoeff();
  cert.value = 0.5 * (upper + lower);
  cert.residual = std::max(0.0, upper - lower);
  if (cert.residual > 1e-9 * std::max(1.0, r.cwiseAbs().maxCoeff())) {
    throw NumericalError("simplex: duality gap too large", cert.residual);
  }
  return cert;
}

namespace detail {

// Path-following barrier Newton on the saddle function
//   x^T R y + tau_i H(x) + mu sum log x - tau_j H(y) - mu sum log y
// restricted to the two simplices, for mu decreasing geometrically to ~1e-15.
// The Jacobian [[-Dx, R], [R^T, Dy]] with positive diagonals Dx, Dy is
// nonsingular, so every Newton system is well posed, including tau = 0.
inline void BarrierSaddle(const MatrixRef& r, double tau_i, double tau_j, Vector& x,
                          Vector& y) {
  const int n = static_cast<int>(r.rows());
  const int m = static_cast<int>(r.cols());
  const int dim = n + m + 2;
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  const double mu_final = 1e-15 * scale;
  x = Uniform(n);
  y = Uniform(m);
  double mu = scale;

  Matrix k = Matrix::Zero(dim, dim);
  k.block(0, n, n, m) = r;
  k.block(n, 0, m, n) = r.transpose();
  k.block(0, n + m, n, 1).setConstant(-1.0);
  k.block(n, n + m + 1, m, 1).setConstant(-1.0);
  k.block(n + m, 0, 1, n).setOnes();
  k.block(n + m + 1, n, 1, m).setOnes();
  Vector rhs = Vector::Zero(dim);

  while (true) {
    for (int inner = 0; inner < 50; ++inner) {
      const Vector gx =
          r * y - tau_i * (x.array().log() + 1.0).matrix() + (mu / x.array()).matrix();
      const Vector gy = r.transpose() * x + tau_j * (y.array().log() + 1.0).matrix() -
                        (mu / y.array()).matrix();
      k.topLeftCorner(n, n).diagonal() =
          -(tau_i / x.array() + mu / x.array().square()).matrix();
      k.block(n, n, m, m).diagonal() = (tau_j / y.array() + mu / y.array().square()).matrix();
      rhs.head(n) = -gx;
      rhs.segment(n, m) = -gy;
      const Vector sol = k.partialPivLu().solve(rhs);
      if (!sol.allFinite()) return;
      const Vector dx = sol.head(n);
      const Vector dy = sol.segment(n, m);
      const double lam = sol(n + m);
      const double nu = sol(n + m + 1);
      const double kkt = std::sqrt((gx.array() - lam).square().sum() +
                                   (gy.array() - nu).square().sum());
      if (kkt <= 0.1 * mu) break;
      // Fraction-to-boundary rule keeps both iterates strictly positive.
      double step = 1.0;
      for (int a = 0; a < n; ++a)
        if (dx(a) < 0.0) step = std::min(step, -0.95 * x(a) / dx(a));
      for (int b = 0; b < m; ++b)
        if (dy(b) < 0.0) step = std::min(step, -0.95 * y(b) / dy(b));
      x += step * dx;
      y += step * dy;
      x /= x.sum();
      y /= y.sum();
    }
    if (mu <= mu_final) break;
    mu = std::max(mu / 10.0, mu_final);
  }
}

}  // namespace detail

inline ValueCertificate RegularizedValue(const MatrixRef& r, double tau_i, double tau_j) {
  detail::CheckFinite(r);
  if (!(tau_i >= 0.0) || !(tau_j >= 0.0) || !std::isfinite(tau_i) || !std::isfinite(tau_j)) {
    throw DomainError("temperatures must be finite and non-negative");
  }
  if (tau_i == 0.0 && tau_j == 0.0) return MinimaxValue(r);
  ValueCertificate cert;
  detail::BarrierSaddle(r, tau_i, tau_j, cert.maximizer, cert.minimizer);
  const double lower = LowerCertificate(r, cert.maximizer, tau_i, tau_j);
  const double upper = UpperCertificate(r, cert.minimizer, tau_i, tau_j);
  const double gap = upper - lower;
  cert.value = 0.5 * (upper + lower);
  cert.residual = std::max(0.0, gap);
  if (tau_i > 0.0 && tau_j > 0.0) {
    cert.residual =
        std::max(cert.residual, QreResidual(r, cert.maximizer, cert.minimizer, tau_i, tau_j));
  }
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  if (!std::isfinite(gap) || gap > 1e-9 * scale) {
    throw NumericalError("regularized value did not converge", gap);
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Sum and sandwich checks relating the two agents' values.

struct ValueConsistencyReport {
  bool sum_bound_ok = false;
  bool sandwich_ok = false;
  // Largest violation over all checks; zero when everything holds.
  double worst_violation = 0.0;
  std::array<double, 2> val = {0.0, 0.0};
  std::array<double, 2> reg_val = {0.0, 0.0};
};

inline ValueConsistencyReport CheckValueConsistency(const MatrixGame& g,
                                                    std::array<double, 2> taus,
                                                    double tol = 1e-8) {
  const MatrixGameReport shape = ValidateMatrixGame(g);
  ValueConsistencyReport report;
  for (int i = 0; i < 2; ++i) {
    report.val[i] = MinimaxValue(g.payoff(i)).value;
    report.reg_val[i] = RegularizedValue(g.payoff(i), taus[i], taus[1 - i]).value;
  }
  auto excess = [](double lo, double v, double hi) {
    return std::max({0.0, lo - v, v - hi});
  };
  const double sum_violation =
      std::max(excess(shape.r_min, report.val[0] + report.val[1], shape.r_max),
               excess(shape.r_min, report.reg_val[0] + report.reg_val[1], shape.r_max));
  double sandwich_violation = 0.0;
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    const double lo = -taus[j] * std::log(static_cast<double>(g.num_actions(j)));
    const double hi = taus[i] * std::log(static_cast<double>(g.num_actions(i)));
    sandwich_violation =
        std::max(sandwich_violation, excess(lo, report.reg_val[i] - report.val[i], hi));
  }
  report.sum_bound_ok = sum_violation <= tol;
  report.sandwich_ok = sandwich_violation <= tol;
  report.worst_violation = std::max(sum_violation, sandwich_violation);
  return report;
}

}  // namespace hetlearn

#endif  // HETLEARN_RESPONSE_KERNEL_HPP_
