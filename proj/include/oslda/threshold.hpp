#pragma once

// Threshold rules for the projected one-dimensional problem. The decision
// rule throughout is: positive iff w^T x > w0.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "oslda/error.hpp"
#include "oslda/linalg.hpp"
#include "oslda/scatter.hpp"

namespace oslda {

enum class CriterionKind { Fisher, EqualDensity, TargetDetection, NegativeMean, AsymmetricMin };

struct Criterion {
  CriterionKind kind = CriterionKind::Fisher;
  double miss_rate = 0.01;  // used by TargetDetection and AsymmetricMin

  static Criterion fisher() { return {CriterionKind::Fisher, 0.01}; }
  static Criterion equal_density() { return {CriterionKind::EqualDensity, 0.01}; }
  static Criterion target_detection(double p) { return {CriterionKind::TargetDetection, p}; }
  static Criterion negative_mean() { return {CriterionKind::NegativeMean, 0.01}; }
  static Criterion asymmetric_min(double p = 0.01) { return {CriterionKind::AsymmetricMin, p}; }

  /// Accepts fisher, equal-density, target-detect:p, neg-mean, asym-min[:p].
  static Criterion parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    double p = 0.01;
    if (colon != std::string::npos) {
      try {
        std::size_t used = 0;
        p = std::stod(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("bad miss rate in criterion '" + text + "'");
      }
      if (!(p > 0.0 && p < 1.0)) throw ConfigError("miss rate must lie in (0,1): " + text);
    }
    if (name == "fisher" && colon == std::string::npos) return fisher();
    if (name == "equal-density" && colon == std::string::npos) return equal_density();
    if (name == "neg-mean" && colon == std::string::npos) return negative_mean();
    if (name == "target-detect" && colon != std::string::npos) return target_detection(p);
    if (name == "asym-min") return asymmetric_min(p);
    throw ConfigError("unknown criterion '" + text + "'");
  }

  std::string to_string() const {
    switch (kind) {
      case CriterionKind::Fisher: return "fisher";
      case CriterionKind::EqualDensity: return "equal-density";
      case CriterionKind::NegativeMean: return "neg-mean";
      case CriterionKind::TargetDetection: return "target-detect:" + format_rate();
      case CriterionKind::AsymmetricMin: return "asym-min:" + format_rate();
    }
    return "?";
  }

  friend bool operator==(const Criterion&, const Criterion&) = default;

 private:
  std::string format_rate() const {
    // Shortest %g form that reads back to the same double.
    char buf[32];
    for (int digits = 6; digits <= 17; ++digits) {
      std::snprintf(buf, sizeof buf, "%.*g", digits, miss_rate);
      if (std::strtod(buf, nullptr) == miss_rate) break;
    }
    return buf;
  }
};

/// Class means and standard deviations on the projected line.
/// sigma_c = sqrt(w^T Sigma_c w / (N_c - 1)).
struct ProjectedStats {
  double mu1 = 0.0, mu2 = 0.0;
  double sigma1 = 0.0, sigma2 = 0.0;
};

inline ProjectedStats projected_stats(const ScatterState& s, const Vec& w) {
  ProjectedStats p;
  p.mu1 = w.dot(s.m1);
  p.mu2 = w.dot(s.m2);
  if (s.n1 >= 2) p.sigma1 = std::sqrt(std::max(0.0, quadratic_form(w, s.sigma1)) / (s.n1 - 1.0));
  if (s.n2 >= 2) p.sigma2 = std::sqrt(std::max(0.0, quadratic_form(w, s.sigma2)) / (s.n2 - 1.0));
  return p;
}

struct ThresholdResult {
  double value = 0.0;
  bool fell_back = false;  // equal-density found no root between the means
};

/// Point between the projected means where the two normal densities are equal.
/// Falls back to the midpoint when no such root exists.
inline ThresholdResult threshold_equal_density(double mu1, double sigma1, double mu2,
                                               double sigma2) {
  const double mid = 0.5 * (mu1 + mu2);
  if (!(sigma1 > 0.0 && sigma2 > 0.0)) return {mid, true};
  const double lo = std::min(mu1, mu2), hi = std::max(mu1, mu2);
  const double v1 = sigma1 * sigma1, v2 = sigma2 * sigma2;
  // log N(x; mu1, s1) - log N(x; mu2, s2) = a x^2 + b x + c
  const double a = -0.5 / v1 + 0.5 / v2;
  const double b = mu1 / v1 - mu2 / v2;
  const double c = 0.5 * mu2 * mu2 / v2 - 0.5 * mu1 * mu1 / v1 + std::log(sigma2) - std::log(sigma1);
  auto inside = [&](double x) { return x > lo && x < hi; };
  auto polish = [&](double x) {
    const double slope = 2.0 * a * x + b;
    if (slope != 0.0) {
      const double y = x - ((a * x + b) * x + c) / slope;
      if (inside(y)) return y;
    }
    return x;
  };

  if (std::abs(a) <= 1e-12 * (0.5 / v1 + 0.5 / v2)) {
    if (b != 0.0) {
      const double x = -c / b;
      if (inside(x)) return {polish(x), false};
    }
    return {mid, true};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {mid, true};
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  const double r1 = q / a;
  const double r2 = q != 0.0 ? c / q : r1;
  if (inside(r1)) return {polish(r1), false};
  if (inside(r2)) return {polish(r2), false};
  return {mid, true};
}

inline ThresholdResult threshold_equal_density(const ScatterState& s, const Vec& w) {
  const auto p = projected_stats(s, w);
  return threshold_equal_density(p.mu1, p.sigma1, p.mu2, p.sigma2);
}

/// w0 = mu1 + Phi^{-1}(p) sigma1: a fraction 1-p of the positive Gaussian
/// mass lies above the threshold.
inline double threshold_target_detection(double mu1, double sigma1, double miss_rate) {
  return mu1 + inverse_normal_cdf(miss_rate) * sigma1;
}

inline double threshold_target_detection(const ScatterState& s, const Vec& w, double miss_rate) {
  if (s.n1 < 2) throw DomainError("target-detection threshold needs two positive samples");
  const auto p = projected_stats(s, w);
  return threshold_target_detection(p.mu1, p.sigma1, miss_rate);
}

/// w0 = w^T m2.
inline double threshold_negative_mean(const ScatterState& s, const Vec& w) {
  if (s.n2 == 0) throw EmptyClass("negative-mean threshold with no negatives");
  return w.dot(s.m2);
}

/// Bayes threshold for Gaussian classes with a shared covariance, expressed
/// on w^T x with w = S_w^{-1}(m1 - m2):
///   theta = (m1 + m2)^T w / 2 + log(P2 / P1) / (N - 2).
/// The 1/(N-2) converts the log prior ratio from units of the pooled
/// covariance discriminant to units of the unnormalized scatter discriminant.
inline double fisher_threshold(const ScatterState& s, const Vec& w, double prior1, double prior2) {
  if (!(prior1 > 0.0 && prior2 > 0.0)) throw DomainError("priors must be positive");
  const double dof = std::max(1.0, static_cast<double>(s.total()) - 2.0);
  return 0.5 * w.dot(s.m1 + s.m2) + std::log(prior2 / prior1) / dof;
}

inline double fisher_threshold(const ScatterState& s, const Vec& w) {
  return fisher_threshold(s, w, static_cast<double>(s.n1), static_cast<double>(s.n2));
}

inline ThresholdResult compute_threshold(const ScatterState& s, const Vec& w, const Criterion& c) {
  switch (c.kind) {
    case CriterionKind::Fisher: return {fisher_threshold(s, w), false};
    case CriterionKind::EqualDensity: return threshold_equal_density(s, w);
    case CriterionKind::TargetDetection:
      return {threshold_target_detection(s, w, c.miss_rate), false};
    case CriterionKind::NegativeMean: return {threshold_negative_mean(s, w), false};
    case CriterionKind::AsymmetricMin:
      return {std::min(threshold_target_detection(s, w, c.miss_rate), threshold_negative_mean(s, w)),
              false};
  }
  return {};
}

}  // namespace oslda
