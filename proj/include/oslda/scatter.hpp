#pragma once

// Two-class scatter bookkeeping over selected weak-learner responses.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "oslda/error.hpp"
#include "oslda/linalg.hpp"
#include "oslda/stump.hpp"

namespace oslda {

inline constexpr double kDefaultRidge = 1e-6;

/// Sufficient statistics of the two classes over the selected responses.
///
/// Class scatters are mean-removed outer-product sums with no 1/N factor.
/// `sw_inv` is the inverse of (sigma1 + sigma2 + ridge * I); the ridge is
/// fixed when the state is built so that later rank-two updates keep
/// inverting the same regularized matrix.
struct ScatterState {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  Vec m1;
  Vec m2;
  SymMat sigma1;
  SymMat sigma2;
  SymMat sb;
  SymMat sw_inv;
  double ridge = 0.0;
  std::size_t updates_since_refresh = 0;

  Eigen::Index dim() const { return m1.size(); }
  std::size_t total() const { return n1 + n2; }
  SymMat within() const { return sigma1 + sigma2; }
  SymMat regularized_within() const {
    SymMat sw = within();
    sw.diagonal().array() += ridge;
    return sw;
  }
};

/// S_b = (N1 N2 / N) (m1 - m2)(m1 - m2)^T; zero when either class is empty.
inline SymMat between_scatter(std::size_t n1, std::size_t n2, const Vec& m1, const Vec& m2) {
  const Eigen::Index d = m1.size();
  if (n1 == 0 || n2 == 0) return SymMat::Zero(d, d);
  const Vec diff = m1 - m2;
  const double f = static_cast<double>(n1) * static_cast<double>(n2) /
                   static_cast<double>(n1 + n2);
  SymMat sb = f * diff * diff.transpose();
  symmetrize(sb);
  return sb;
}

/// lambda * trace(S_w) / T, or lambda when the scatter is identically zero.
inline double ridge_for(const SymMat& sw, double lambda) {
  if (sw.rows() == 0) return 0.0;
  const double tr = sw.trace() / static_cast<double>(sw.rows());
  return tr > 0.0 ? lambda * tr : lambda;
}

/// Inverts the regularized within-class scatter of `s` into s.sw_inv.
inline void refresh_inverse(ScatterState& s) {
  try {
    s.sw_inv = mat_inverse(s.regularized_within());
  } catch (const SingularMatrix& e) {
    throw SingularScatter(e.what());
  }
  s.updates_since_refresh = 0;
}

/// Batch statistics from samples stored as columns of `x` (T x N).
/// When `fixed_ridge` is non-negative it is used instead of lambda*trace/T.
inline ScatterState scatter_from_samples(const Eigen::MatrixXd& x, std::span<const Label> labels,
                                         double lambda = kDefaultRidge,
                                         double fixed_ridge = -1.0) {
  if (static_cast<std::size_t>(x.cols()) != labels.size()) {
    throw DimensionMismatch("scatter_from_samples: sample and label counts differ");
  }
  const Eigen::Index d = x.rows();
  ScatterState s;
  s.m1 = Vec::Zero(d);
  s.m2 = Vec::Zero(d);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (is_positive(labels[j])) {
      s.m1 += x.col(j);
      ++s.n1;
    } else {
      s.m2 += x.col(j);
      ++s.n2;
    }
  }
  if (s.n1 == 0 || s.n2 == 0) throw EmptyClass("both classes need at least one sample");
  s.m1 /= static_cast<double>(s.n1);
  s.m2 /= static_cast<double>(s.n2);

  Eigen::MatrixXd c1(d, static_cast<Eigen::Index>(s.n1));
  Eigen::MatrixXd c2(d, static_cast<Eigen::Index>(s.n2));
  Eigen::Index i1 = 0, i2 = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (is_positive(labels[j]))
      c1.col(i1++) = x.col(j) - s.m1;
    else
      c2.col(i2++) = x.col(j) - s.m2;
  }
  s.sigma1 = c1 * c1.transpose();
  s.sigma2 = c2 * c2.transpose();
  symmetrize(s.sigma1);
  symmetrize(s.sigma2);
  s.sb = between_scatter(s.n1, s.n2, s.m1, s.m2);
  s.ridge = fixed_ridge >= 0.0 ? fixed_ridge : ridge_for(s.within(), lambda);
  refresh_inverse(s);
  return s;
}

/// Dense T x N response matrix for the selected learners of a table.
inline Eigen::MatrixXd selected_responses(const FeatureTable& table,
                                          std::span<const std::size_t> selected) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(selected.size()),
                    static_cast<Eigen::Index>(table.samples()));
  for (std::size_t r = 0; r < selected.size(); ++r) {
    if (selected[r] >= table.learners()) throw OutOfBounds("selected learner id out of range");
    const auto row = table.row(selected[r]);
    for (std::size_t j = 0; j < row.size(); ++j) x(static_cast<Eigen::Index>(r), j) = row[j];
  }
  return x;
}

inline ScatterState scatter_from_data(const FeatureTable& table,
                                      std::span<const std::size_t> selected,
                                      double lambda = kDefaultRidge, double fixed_ridge = -1.0) {
  return scatter_from_samples(selected_responses(table, selected), table.labels(), lambda,
                              fixed_ridge);
}

/// J(w) = (w^T S_b w) / (w^T S_w w) on the unregularized within-class scatter.
inline double fisher_criterion(const ScatterState& s, const Vec& w) {
  const double num = quadratic_form(w, s.sb);
  const double den = quadratic_form(w, s.within());
  if (!(den > 0.0)) throw ZeroDenominator("w^T S_w w = " + std::to_string(den));
  return num / den;
}

/// w = S_w^{-1} (m1 - m2), oriented so the positive class projects higher.
inline Vec lda_direction(const ScatterState& s) {
  if (s.sw_inv.rows() != s.dim()) throw DimensionMismatch("state has no valid inverse");
  const Vec diff = s.m1 - s.m2;
  Vec w = s.sw_inv * diff;
  if (w.dot(diff) < 0.0) w = -w;
  return w;
}

}  // namespace oslda
