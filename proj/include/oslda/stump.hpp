#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "oslda/error.hpp"
#include "oslda/parallel.hpp"

namespace oslda {

/// Class tag. Positive is class C1 (object), Negative is class C2.
enum class Label : std::uint8_t { Negative = 0, Positive = 1 };

inline bool is_positive(Label l) { return l == Label::Positive; }

/// One-feature threshold classifier: h(v) = 1 iff polarity * (v - threshold) > 0.
struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;

  int respond(double value) const { return polarity * (value - threshold) > 0.0 ? 1 : 0; }
  friend bool operator==(const Stump&, const Stump&) = default;
};

struct StumpFit {
  Stump stump;
  double error = 0.0;       // weighted misclassification
  bool degenerate = false;  // all values identical; stump is the best constant
};

/// Weighted-error-minimizing stump over midpoint thresholds and both polarities.
///
/// Candidate thresholds are min-1, the midpoints between consecutive distinct
/// sorted values, and max+1. Ties go to the smallest threshold, then to
/// polarity +1.
inline StumpFit train_stump(std::span<const double> values, std::span<const Label> labels,
                            std::span<const double> weights, std::size_t feature = 0) {
  const std::size_t n = values.size();
  if (n < 2) throw DimensionMismatch("train_stump needs at least 2 samples");
  if (labels.size() != n || weights.size() != n) {
    throw DimensionMismatch("train_stump: values, labels and weights differ in length");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  double pos_total = 0.0, neg_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw DomainError("train_stump: negative sample weight");
    (is_positive(labels[i]) ? pos_total : neg_total) += weights[i];
  }
  if (!(pos_total + neg_total > 0.0)) throw DomainError("train_stump: weights sum to zero");
  const double tie_eps = 1e-12 * (pos_total + neg_total);

  const double vmin = values[order.front()];
  const double vmax = values[order.back()];

  StumpFit best;
  best.error = std::numeric_limits<double>::infinity();
  best.degenerate = vmin == vmax;

  double pos_left = 0.0, neg_left = 0.0;  // mass with value <= threshold
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0) {
      const std::size_t idx = order[k - 1];
      (is_positive(labels[idx]) ? pos_left : neg_left) += weights[idx];
    }
    const bool boundary = k == 0 || k == n || values[order[k - 1]] < values[order[k]];
    if (!boundary) continue;
    double thr;
    if (k == 0) {
      thr = vmin - 1.0;
    } else if (k == n) {
      thr = vmax + 1.0;
    } else {
      thr = 0.5 * (values[order[k - 1]] + values[order[k]]);
    }
    // Polarity +1 predicts positive right of the cut, -1 left of it.
    const double err_plus = pos_left + (neg_total - neg_left);
    const double err_minus = neg_left + (pos_total - pos_left);
    if (err_plus < best.error - tie_eps) best = {{feature, thr, 1}, err_plus, best.degenerate};
    if (err_minus < best.error - tie_eps) best = {{feature, thr, -1}, err_minus, best.degenerate};
  }
  return best;
}

/// Binary response lookup table: one row per weak learner, one column per
/// sample, plus the sample labels.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::size_t learners, std::vector<Label> labels)
      : rows_(learners), cols_(labels.size()), labels_(std::move(labels)),
        data_(rows_ * cols_, 0) {}

  std::size_t learners() const { return rows_; }
  std::size_t samples() const { return cols_; }
  const std::vector<Label>& labels() const { return labels_; }

  std::uint8_t operator()(std::size_t learner, std::size_t sample) const {
    return data_[learner * cols_ + sample];
  }
  std::uint8_t& operator()(std::size_t learner, std::size_t sample) {
    return data_[learner * cols_ + sample];
  }
  std::span<const std::uint8_t> row(std::size_t learner) const {
    return {data_.data() + learner * cols_, cols_};
  }
  std::span<std::uint8_t> row(std::size_t learner) {
    return {data_.data() + learner * cols_, cols_};
  }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), l));
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Label> labels_;
  std::vector<std::uint8_t> data_;
};

/// Trains one stump per feature. `value(feature, sample)` supplies raw
/// feature values. Features are trained concurrently; output is in feature
/// order.
template <class ValueFn>
std::vector<StumpFit> train_stumps(std::size_t features, std::span<const Label> labels,
                                   std::span<const double> weights, ValueFn&& value) {
  std::vector<StumpFit> out(features);
  const std::size_t n = labels.size();
  parallel_for(features, [&](std::size_t f) {
    std::vector<double> vals(n);
    for (std::size_t j = 0; j < n; ++j) vals[j] = value(f, j);
    out[f] = train_stump(vals, labels, weights, f);
  });
  return out;
}

/// Uniform-weight convenience overload.
template <class ValueFn>
std::vector<StumpFit> train_stumps(std::size_t features, std::span<const Label> labels,
                                   ValueFn&& value) {
  std::vector<double> w(labels.size(), 1.0);
  return train_stumps(features, labels, std::span<const double>(w), std::forward<ValueFn>(value));
}

/// responses(i, j) = stumps[i] applied to sample j.
template <class ValueFn>
FeatureTable build_feature_table(std::span<const Stump> stumps, std::span<const Label> labels,
                                 ValueFn&& value) {
  FeatureTable table(stumps.size(), std::vector<Label>(labels.begin(), labels.end()));
  parallel_for(stumps.size(), [&](std::size_t i) {
    auto row = table.row(i);
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = static_cast<std::uint8_t>(stumps[i].respond(value(stumps[i].feature, j)));
  });
  return table;
}

}  // namespace oslda
