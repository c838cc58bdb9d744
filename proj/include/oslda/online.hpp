#pragma once

// Online phase: each labeled sample updates the class means, S_b, the class
// scatters and the regularized inverse within-class scatter in O(T^2), then
// the weights and threshold are recomputed. Selected learners never change.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "oslda/error.hpp"
#include "oslda/greedy.hpp"
#include "oslda/linalg.hpp"
#include "oslda/scatter.hpp"
#include "oslda/stump.hpp"
#include "oslda/threshold.hpp"

namespace oslda {

inline constexpr std::size_t kDefaultRefreshInterval = 10000;

/// x = [h_1(I), ..., h_T(I)]; `value(feature)` yields the raw feature value.
template <class ValueFn>
Vec project_sample(std::span<const Stump> stumps, ValueFn&& value) {
  Vec x(static_cast<Eigen::Index>(stumps.size()));
  for (std::size_t i = 0; i < stumps.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = stumps[i].respond(value(stumps[i].feature));
  return x;
}

/// What update_means replaced, needed to build the covariance update.
struct MeanStep {
  Label label = Label::Positive;
  Vec old_mean;
  std::size_t old_count = 0;
};

/// m_c <- m_c + (x - m_c) / (N_c + 1) for the labeled class; N_c += 1.
inline MeanStep update_means(ScatterState& s, const Vec& x, Label label) {
  if (x.size() != s.dim()) throw DimensionMismatch("sample dimension differs from state");
  Vec& m = is_positive(label) ? s.m1 : s.m2;
  std::size_t& n = is_positive(label) ? s.n1 : s.n2;
  MeanStep step{label, m, n};
  m += (x - m) / static_cast<double>(n + 1);
  ++n;
  return step;
}

/// S_b from the current means and counts.
inline void update_sb(ScatterState& s) { s.sb = between_scatter(s.n1, s.n2, s.m1, s.m2); }

struct CovarianceUpdate {
  Vec p1, q1, p2, q2;
};

/// Sigma~ = Sigma + p1 q1^T + p2 q2^T with p1 = q1 = x - m~,
/// p2 = N_c (m~ - m), q2 = m~ - m; N_c is the count before the insert.
inline CovarianceUpdate covariance_update_vectors(const Vec& x, const Vec& old_mean,
                                                  const Vec& new_mean, std::size_t old_count) {
  CovarianceUpdate u;
  u.p1 = x - new_mean;
  u.q1 = u.p1;
  u.q2 = new_mean - old_mean;
  u.p2 = static_cast<double>(old_count) * u.q2;
  return u;
}

inline CovarianceUpdate covariance_update_vectors(const ScatterState& s, const Vec& x,
                                                  const MeanStep& step) {
  const Vec& new_mean = is_positive(step.label) ? s.m1 : s.m2;
  return covariance_update_vectors(x, step.old_mean, new_mean, step.old_count);
}

inline void apply_covariance_update(ScatterState& s, Label label, const CovarianceUpdate& u) {
  SymMat& sigma = is_positive(label) ? s.sigma1 : s.sigma2;
  sigma.noalias() += u.p1 * u.q1.transpose();
  sigma.noalias() += u.p2 * u.q2.transpose();
  symmetrize(sigma);
}

/// Rank-two update of s.sw_inv. Call after apply_covariance_update: on a
/// degenerate update, or every `refresh_interval` updates, the inverse is
/// recomputed directly from the stored class scatters. Returns true when
/// the direct path ran.
inline bool update_sw_inverse(ScatterState& s, const CovarianceUpdate& u,
                              std::size_t refresh_interval = kDefaultRefreshInterval) {
  if (refresh_interval > 0 && s.updates_since_refresh + 1 >= refresh_interval) {
    refresh_inverse(s);
    return true;
  }
  try {
    s.sw_inv = rank_two_inverse_update(s.sw_inv, u.p1, u.q1, u.p2, u.q2);
    ++s.updates_since_refresh;
    return false;
  } catch (const DegenerateUpdate&) {
    refresh_inverse(s);
    return true;
  }
}

/// w = S_w^{-1}(m1 - m2) for the updated state.
inline Vec recompute_weights(const ScatterState& s) { return lda_direction(s); }

/// Single-node online classifier: the selected stumps, the linear model
/// over their responses, the scatter state and the threshold rule.
///
/// Inserts are all-or-nothing: the state is staged on a copy and swapped in
/// only after every step succeeded.
class OnlineClassifier {
 public:
  OnlineClassifier() = default;
  OnlineClassifier(std::vector<Stump> stumps, LinearModel model, ScatterState state,
                   Criterion criterion)
      : stumps_(std::move(stumps)), model_(std::move(model)), state_(std::move(state)),
        criterion_(criterion) {
    if (stumps_.size() != model_.selected.size() ||
        static_cast<Eigen::Index>(stumps_.size()) != model_.w.size() ||
        model_.w.size() != state_.dim()) {
      throw DimensionMismatch("stumps, model and state disagree in dimension");
    }
  }

  const std::vector<Stump>& stumps() const { return stumps_; }
  const LinearModel& model() const { return model_; }
  const ScatterState& state() const { return state_; }
  const Criterion& criterion() const { return criterion_; }
  std::size_t insert_count() const { return insert_count_; }
  std::size_t direct_inversions() const { return direct_inversions_; }
  std::size_t threshold_fallbacks() const { return threshold_fallbacks_; }
  std::size_t refresh_interval() const { return refresh_interval_; }
  std::size_t dim() const { return stumps_.size(); }

  void set_refresh_interval(std::size_t n) { refresh_interval_ = n; }
  void set_criterion(const Criterion& c) {
    const auto t = compute_threshold(state_, model_.w, c);
    criterion_ = c;
    model_.w0 = t.value;
  }
  void set_threshold(double w0) { model_.w0 = w0; }
  void restore_counters(std::size_t inserts, std::size_t direct, std::size_t fallbacks) {
    insert_count_ = inserts;
    direct_inversions_ = direct;
    threshold_fallbacks_ = fallbacks;
  }

  template <class ValueFn>
  Vec project(ValueFn&& value) const {
    return project_sample(std::span<const Stump>(stumps_), std::forward<ValueFn>(value));
  }

  double margin(const Vec& x) const { return model_.margin(x); }
  bool accepts(const Vec& x) const { return model_.accepts(x); }

  /// Inserts a projected sample (responses of the selected stumps).
  void insert(const Vec& x, Label label) {
    ScatterState staged = state_;
    const MeanStep step = update_means(staged, x, label);
    update_sb(staged);
    const CovarianceUpdate u = covariance_update_vectors(staged, x, step);
    apply_covariance_update(staged, label, u);
    const bool direct = update_sw_inverse(staged, u, refresh_interval_);
    Vec w = recompute_weights(staged);
    if (!w.allFinite()) throw DomainError("non-finite weights after insert");
    const ThresholdResult t = compute_threshold(staged, w, criterion_);

    state_ = std::move(staged);
    model_.w = std::move(w);
    model_.w0 = t.value;
    ++insert_count_;
    if (direct) ++direct_inversions_;
    if (t.fell_back) ++threshold_fallbacks_;
  }

  template <class ValueFn>
  void insert_raw(ValueFn&& value, Label label) {
    insert(project(std::forward<ValueFn>(value)), label);
  }

 private:
  std::vector<Stump> stumps_;
  LinearModel model_;
  ScatterState state_;
  Criterion criterion_;
  std::size_t insert_count_ = 0;
  std::size_t direct_inversions_ = 0;
  std::size_t threshold_fallbacks_ = 0;
  std::size_t refresh_interval_ = kDefaultRefreshInterval;
};

/// Offline phase: one stump per feature, the response table, greedy selection
/// of `learners`, and the matching online classifier. `value(feature, sample)`
/// gives raw feature values of the training samples.
template <class ValueFn>
OnlineClassifier train_classifier(std::size_t features, std::span<const Label> labels,
                                  std::size_t learners, const Criterion& criterion,
                                  ValueFn&& value, double lambda = kDefaultRidge) {
  const auto fits = train_stumps(features, labels, value);
  std::vector<Stump> pool;
  pool.reserve(fits.size());
  for (const auto& f : fits) pool.push_back(f.stump);
  const FeatureTable table = build_feature_table(std::span<const Stump>(pool), labels, value);
  GreedyResult g = greedy_select(table, learners, criterion, lambda);
  std::vector<Stump> chosen;
  for (std::size_t id : g.model.selected) chosen.push_back(pool[id]);
  return OnlineClassifier(std::move(chosen), std::move(g.model), std::move(g.state), criterion);
}

}  // namespace oslda
