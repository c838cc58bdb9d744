#pragma once

// Small dense kernels used by the discriminant code: direct inverse,
// the rank-two inverse update, quadratic forms and the normal quantile.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "oslda/error.hpp"

namespace oslda {

using Vec = Eigen::VectorXd;
using SymMat = Eigen::MatrixXd;

/// Replaces A by (A + A^T) / 2.
inline void symmetrize(SymMat& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  }
}

/// Gauss-Jordan inverse with partial pivoting.
///
/// Throws SingularMatrix when a pivot falls below 1e-12 of the scale of its
/// original row, or when the 1-norm condition estimate exceeds `cond_cap`.
inline SymMat mat_inverse(const SymMat& a,
                          double cond_cap = std::numeric_limits<double>::infinity()) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw DimensionMismatch("mat_inverse needs a square matrix");
  if (!a.allFinite()) throw DomainError("mat_inverse input has non-finite entries");
  if (n == 0) return SymMat(0, 0);

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat work = a;
  RowMat inv = RowMat::Identity(n, n);
  Eigen::VectorXd row_scale(n);
  for (Eigen::Index i = 0; i < n; ++i) row_scale(i) = a.row(i).cwiseAbs().maxCoeff();

  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    double best = -1.0;
    for (Eigen::Index r = col; r < n; ++r) {
      // Scaled partial pivoting keeps badly scaled rows from dominating.
      const double s = row_scale(r) > 0.0 ? std::abs(work(r, col)) / row_scale(r) : 0.0;
      if (s > best) {
        best = s;
        pivot = r;
      }
    }
    if (!(best >= 1e-12)) {
      throw SingularMatrix("pivot below 1e-12 of row scale at column " + std::to_string(col));
    }
    if (pivot != col) {
      work.row(pivot).swap(work.row(col));
      inv.row(pivot).swap(inv.row(col));
      std::swap(row_scale(pivot), row_scale(col));
    }
    const double d = work(col, col);
    const Eigen::Index tail = n - col;
    work.row(col).tail(tail) /= d;
    inv.row(col) /= d;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work(r, col);
      if (f == 0.0) continue;
      work.row(r).tail(tail) -= f * work.row(col).tail(tail);
      inv.row(r) -= f * inv.row(col);
    }
  }

  if (std::isfinite(cond_cap)) {
    const double norm_a = a.cwiseAbs().colwise().sum().maxCoeff();
    const double norm_inv = inv.cwiseAbs().colwise().sum().maxCoeff();
    if (norm_a * norm_inv > cond_cap) {
      throw SingularMatrix("condition estimate " + std::to_string(norm_a * norm_inv) +
                           " exceeds cap");
    }
  }
  SymMat out = inv;
  if (a.isApprox(a.transpose(), 1e-12)) symmetrize(out);
  return out;
}

/// Inverse of (Sigma0 + p1 q1^T + p2 q2^T) given Sigma0^{-1}, in O(n^2).
///
/// Two chained Sherman-Morrison steps written in the factored form
///   Sinv0 - Sinv0 U D^{-1} V^T Sinv0,
///   U = [p1, p2 - (q1^T Sinv0 p2 / r1) p1],  V = [q1, q2 - (q2^T Sinv0 p1 / r1) q1],
///   r1 = 1 + q1^T Sinv0 p1,  r2 = 1 + V_2^T Sinv0 p2.
/// Sinv0 is assumed symmetric. Throws DegenerateUpdate if |r1| or |r2| is
/// below 1e-10 * (1 + |operand|).
namespace detail {
// True when Sinv0 and p1 q1^T + p2 q2^T are both symmetric, so the exact
// result is symmetric and may be symmetrized.
inline bool symmetric_update(const SymMat& sinv0, const Vec& p1, const Vec& q1, const Vec& p2,
                             const Vec& q2) {
  const double scale = sinv0.cwiseAbs().maxCoeff();
  if ((sinv0 - sinv0.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
  const Eigen::MatrixXd pert = p1 * q1.transpose() + p2 * q2.transpose();
  const double pscale = pert.cwiseAbs().maxCoeff();
  return (pert - pert.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * pscale;
}
}  // namespace detail

inline SymMat rank_two_inverse_update(const SymMat& sinv0, const Vec& p1, const Vec& q1,
                                      const Vec& p2, const Vec& q2) {
  const Eigen::Index n = sinv0.rows();
  if (sinv0.cols() != n || p1.size() != n || q1.size() != n || p2.size() != n ||
      q2.size() != n) {
    throw DimensionMismatch("rank_two_inverse_update operand sizes disagree");
  }

  const Vec s_p1 = sinv0 * p1;
  const Vec s_p2 = sinv0 * p2;
  const Vec s_q1 = sinv0.transpose() * q1;  // (q1^T Sinv0)^T
  const Vec s_q2 = sinv0.transpose() * q2;

  const double t1 = q1.dot(s_p1);
  const double r1 = 1.0 + t1;
  if (!(std::abs(r1) >= 1e-10 * (1.0 + std::abs(t1)))) {
    throw DegenerateUpdate("r1 = " + std::to_string(r1));
  }
  const double a = q1.dot(s_p2) / r1;  // coefficient in U's second column
  const double b = q2.dot(s_p1) / r1;  // coefficient in V's second column

  // Sinv0 * U_2 and Sinv0^T * V_2 without forming U, V.
  const Vec s_u2 = s_p2 - a * s_p1;
  const Vec s_v2 = s_q2 - b * s_q1;
  const double t2 = s_v2.dot(p2);
  const double r2 = 1.0 + t2;
  if (!(std::abs(r2) >= 1e-10 * (1.0 + std::abs(t2)))) {
    throw DegenerateUpdate("r2 = " + std::to_string(r2));
  }

  SymMat out = sinv0;
  out.noalias() -= (s_p1 / r1) * s_q1.transpose();
  out.noalias() -= (s_u2 / r2) * s_v2.transpose();
  if (detail::symmetric_update(sinv0, p1, q1, p2, q2)) symmetrize(out);
  return out;
}

/// Rank-two update with the documented fallback: on a degenerate r1/r2 the
/// perturbed matrix is formed explicitly and inverted directly.
/// `used_fallback` (optional) reports which path ran.
inline SymMat rank_two_inverse_update_or_direct(const SymMat& sigma0, const SymMat& sinv0,
                                                const Vec& p1, const Vec& q1, const Vec& p2,
                                                const Vec& q2, bool* used_fallback = nullptr) {
  try {
    SymMat out = rank_two_inverse_update(sinv0, p1, q1, p2, q2);
    if (used_fallback) *used_fallback = false;
    return out;
  } catch (const DegenerateUpdate&) {
    SymMat full = sigma0;
    full.noalias() += p1 * q1.transpose();
    full.noalias() += p2 * q2.transpose();
    if (used_fallback) *used_fallback = true;
    return mat_inverse(full);
  }
}

/// w^T A w.
inline double quadratic_form(const Vec& w, const SymMat& a) {
  if (a.rows() != w.size() || a.cols() != w.size()) {
    throw DimensionMismatch("quadratic_form: w has " + std::to_string(w.size()) +
                            " entries, matrix is " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()));
  }
  return w.dot(a * w);
}

inline double normal_pdf(double x) {
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Newton step against the erfc-based CDF.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("inverse_normal_cdf needs 0 < p < 1, got " + std::to_string(p));
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Phi(x) - p; the upper half goes through the tail mass to keep precision near 1.
  const double resid =
      p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double dens = normal_pdf(x);
  if (dens > 0.0) x -= resid / dens;
  return x;
}

}  // namespace oslda
