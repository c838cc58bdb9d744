#pragma once

// Cascade of online classifiers over Haar stumps: stage training to the
// asymmetric node goal, negative bootstrapping, sliding-window scanning,
// detection merging, IoU evaluation, ROC sweeps and online stage updates.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "oslda/error.hpp"
#include "oslda/greedy.hpp"
#include "oslda/haar.hpp"
#include "oslda/image.hpp"
#include "oslda/linalg.hpp"
#include "oslda/online.hpp"
#include "oslda/parallel.hpp"
#include "oslda/scatter.hpp"
#include "oslda/stump.hpp"
#include "oslda/threshold.hpp"

namespace oslda {

/// One base-size window of an integral image. Patch datasets use one window
/// per patch at (0, 0, 1).
struct WindowSample {
  std::shared_ptr<const IntegralImage> ii;
  Window win;
};

inline WindowSample patch_sample(const Image& patch) {
  return {std::make_shared<const IntegralImage>(patch), Window{0, 0, 1.0}};
}

struct StageGoal {
  double min_detection = 0.99;
  double max_false_positive = 0.5;
  std::size_t max_learners = 200;
};

struct StageReport {
  std::size_t learners = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double detection = 0.0;
  double false_positive = 0.0;
  bool goal_met = false;
};

struct Stage {
  OnlineClassifier classifier;
  StageGoal goal;
  StageReport report;
};

/// Throws GoalUnreachable when a stage stopped at its learner cap short of
/// the goal.
inline void require_goal(const Stage& s) {
  if (s.report.goal_met) return;
  throw GoalUnreachable("stage stopped at " + std::to_string(s.report.learners) +
                        " learners with detection " + std::to_string(s.report.detection) +
                        " and false positive rate " + std::to_string(s.report.false_positive));
}

/// Largest threshold that keeps at least `min_detection` of `pos_scores`
/// strictly above it, placed midway into the gap below the cut score.
inline double empirical_threshold(std::vector<double> pos_scores, double min_detection) {
  if (pos_scores.empty()) throw EmptyClass("no positive scores");
  std::sort(pos_scores.begin(), pos_scores.end());
  const std::size_t n = pos_scores.size();
  const auto keep = static_cast<std::size_t>(std::ceil(min_detection * n - 1e-9));
  const std::size_t k = n - std::min(n, std::max<std::size_t>(keep, 1));
  const double v = pos_scores[k];
  const auto below = std::lower_bound(pos_scores.begin(), pos_scores.end(), v);
  if (below != pos_scores.begin()) return 0.5 * (v + *(below - 1));
  return v - 1e-6 * (1.0 + std::abs(v));
}

/// Miss rate for the target-detection rule that reproduces the empirical
/// threshold on the projected positive Gaussian, capped at 1 - min_detection.
inline double calibrated_miss_rate(const std::vector<double>& pos_scores, double mu1, double sigma1,
                                   double min_detection) {
  const double cap = 1.0 - min_detection;
  if (!(sigma1 > 0.0)) return std::clamp(cap, 1e-15, 0.5);
  const double theta = empirical_threshold(pos_scores, min_detection);
  double p = normal_cdf((theta - mu1) / sigma1);
  if (cap > 0.0) p = std::min(p, cap);
  return std::clamp(p, 1e-15, 0.5);
}

namespace detail {

struct Rates {
  double detection = 0.0;
  double false_positive = 0.0;
};

inline Rates rates_of(const std::vector<double>& scores, const std::vector<Label>& labels,
                      double w0) {
  std::size_t tp = 0, fp = 0, n1 = 0, n2 = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const bool acc = scores[j] > w0;
    if (is_positive(labels[j])) {
      ++n1;
      tp += acc;
    } else {
      ++n2;
      fp += acc;
    }
  }
  return {n1 ? static_cast<double>(tp) / n1 : 0.0, n2 ? static_cast<double>(fp) / n2 : 0.0};
}

// Projected statistics straight from scores, matching projected_stats.
inline ProjectedStats stats_of(const std::vector<double>& scores, const std::vector<Label>& labels) {
  ProjectedStats p;
  double n1 = 0, n2 = 0;
  for (std::size_t j = 0; j < scores.size(); ++j)
    (is_positive(labels[j]) ? (p.mu1 += scores[j], n1 += 1) : (p.mu2 += scores[j], n2 += 1));
  p.mu1 /= n1;
  p.mu2 /= n2;
  double v1 = 0, v2 = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double d = scores[j] - (is_positive(labels[j]) ? p.mu1 : p.mu2);
    (is_positive(labels[j]) ? v1 : v2) += d * d;
  }
  p.sigma1 = n1 > 1 ? std::sqrt(v1 / (n1 - 1)) : 0.0;
  p.sigma2 = n2 > 1 ? std::sqrt(v2 / (n2 - 1)) : 0.0;
  return p;
}

inline std::vector<double> positive_scores(const std::vector<double>& scores,
                                           const std::vector<Label>& labels) {
  std::vector<double> out;
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (is_positive(labels[j])) out.push_back(scores[j]);
  return out;
}

}  // namespace detail

/// Trains one stage on pooled samples: one stump per pool feature, then
/// learners are added greedily until the asymmetric-min threshold (with a
/// calibrated miss rate) meets the goal on the training samples or the
/// learner cap is reached. `value(feature, sample)` gives raw feature values.
template <class ValueFn>
Stage train_stage(std::size_t features, std::span<const Label> labels, ValueFn&& value,
                  const StageGoal& goal = {}, double lambda = kDefaultRidge) {
  const std::vector<Label> lab(labels.begin(), labels.end());
  std::size_t n1 = 0;
  for (Label l : lab) n1 += is_positive(l);
  if (n1 == 0 || n1 == lab.size()) throw EmptyClass("stage training needs both pools");
  if (goal.max_learners == 0) throw ConfigError("stage learner cap must be >= 1");

  const auto fits = train_stumps(features, labels, value);
  std::vector<Stump> pool;
  pool.reserve(fits.size());
  for (const auto& f : fits) pool.push_back(f.stump);
  const FeatureTable table = build_feature_table(std::span<const Stump>(pool), labels, value);

  GreedySelector sel(table);
  const auto perfect = sel.perfect_candidate();
  std::vector<double> scores(lab.size());
  auto fill_scores = [&](const Vec& w, std::span<const std::size_t> chosen) {
    std::fill(scores.begin(), scores.end(), 0.0);
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const auto row = table.row(chosen[i]);
      const double wi = w(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < row.size(); ++j)
        if (row[j]) scores[j] += wi;
    }
  };

  Stage stage;
  stage.goal = goal;
  const std::size_t cap = std::min(goal.max_learners, table.learners());
  while (true) {
    std::vector<std::size_t> chosen_ids;
    bool last = true;
    if (perfect) {
      chosen_ids = {*perfect};
    } else {
      const auto best = sel.best_candidate();
      if (best) sel.add(*best);
      last = !best || sel.selected().size() >= cap;
      if (sel.selected().empty()) throw InsufficientRank("no usable weak learner for stage");
      chosen_ids = sel.selected();
    }

    // Cheap screen with the unregularized weights.
    if (!last) {
      Vec w = sel.weights();
      fill_scores(w, sel.selected());
      const auto ps = detail::stats_of(scores, lab);
      if (ps.mu1 < ps.mu2) continue;
      const double p = calibrated_miss_rate(detail::positive_scores(scores, lab), ps.mu1,
                                            ps.sigma1, goal.min_detection);
      const double td = ps.sigma1 > 0 ? threshold_target_detection(ps.mu1, ps.sigma1, p) : ps.mu1;
      const auto r = detail::rates_of(scores, lab, std::min(td, ps.mu2));
      if (r.detection < goal.min_detection || r.false_positive > goal.max_false_positive) continue;
    }

    GreedyResult g = finalize_selection(table, chosen_ids, Criterion::negative_mean(), lambda);
    fill_scores(g.model.w, g.model.selected);
    const auto ps = projected_stats(g.state, g.model.w);
    const double p = calibrated_miss_rate(detail::positive_scores(scores, lab), ps.mu1, ps.sigma1,
                                          goal.min_detection);
    const Criterion crit = Criterion::asymmetric_min(p);
    g.model.w0 = compute_threshold(g.state, g.model.w, crit).value;
    const auto r = detail::rates_of(scores, lab, g.model.w0);
    const bool met = r.detection >= goal.min_detection && r.false_positive <= goal.max_false_positive;
    if (!met && !last) continue;

    std::vector<Stump> chosen;
    for (std::size_t id : g.model.selected) chosen.push_back(pool[id]);
    stage.classifier = OnlineClassifier(std::move(chosen), std::move(g.model), std::move(g.state), crit);
    stage.report = {chosen_ids.size(), n1, lab.size() - n1, r.detection, r.false_positive, met};
    return stage;
  }
}

/// Ordered conjunction of stages over a deterministic Haar pool.
struct Cascade {
  int base = kBaseWindow;
  int pool_stride = 1;
  std::vector<HaarFeature> pool;
  std::vector<Stage> stages;

  Cascade() = default;
  explicit Cascade(int stride, int base_window = kBaseWindow)
      : base(base_window), pool_stride(stride), pool(enumerate_haar_features(base_window, stride)) {}

  std::size_t size() const { return stages.size(); }
  bool empty() const { return stages.empty(); }

  double feature_value(const WindowSample& s, std::size_t feature) const {
    return haar_value(*s.ii, pool[feature], s.win, base);
  }
};

struct ClassifyResult {
  bool accepted = true;
  double score = 0.0;  // final-stage margin when accepted, rejecting margin otherwise
  std::size_t stages_evaluated = 0;
};

/// Evaluates stages in order and stops at the first rejection.
inline ClassifyResult cascade_classify(const Cascade& c, const IntegralImage& ii, const Window& win) {
  ClassifyResult r;
  for (const Stage& st : c.stages) {
    ++r.stages_evaluated;
    const Vec x = st.classifier.project(
        [&](std::size_t f) { return haar_value(ii, c.pool[f], win, c.base); });
    r.score = st.classifier.margin(x);
    if (!(r.score > 0.0)) {
      r.accepted = false;
      return r;
    }
  }
  return r;
}

inline ClassifyResult cascade_classify(const Cascade& c, const WindowSample& s) {
  return cascade_classify(c, *s.ii, s.win);
}

/// Sliding-window scan parameters.
struct ScanParams {
  double scale_factor = 1.2;
  int step = 1;
  bool top1 = false;
};

/// Scales 1, f, f^2, ... whose window fits, with their window size and step.
struct ScanLevel {
  double scale;
  int size;
  int step;
};

inline std::vector<ScanLevel> scan_levels(int width, int height, const ScanParams& p,
                                          int base = kBaseWindow) {
  if (!(p.scale_factor > 1.0)) throw ConfigError("scale factor must exceed 1");
  if (p.step < 1) throw ConfigError("scan step must be >= 1");
  if (width < base || height < base) {
    throw ImageTooSmall(std::to_string(width) + "x" + std::to_string(height) +
                        " image is smaller than the " + std::to_string(base) + "px window");
  }
  std::vector<ScanLevel> out;
  for (double s = 1.0;; s *= p.scale_factor) {
    const int size = scaled_length(base, s);
    if (size > width || size > height) break;
    const int step = std::max(1, static_cast<int>(std::lround(s))) * p.step;
    out.push_back({s, size, step});
  }
  return out;
}

/// Every candidate window of an image, level by level, row-major.
inline std::vector<Window> scan_windows(int width, int height, const ScanParams& p,
                                        int base = kBaseWindow) {
  std::vector<Window> out;
  for (const auto& lv : scan_levels(width, height, p, base))
    for (int y = 0; y + lv.size <= height; y += lv.step)
      for (int x = 0; x + lv.size <= width; x += lv.step) out.push_back({x, y, lv.scale});
  return out;
}

struct Detection {
  int x = 0, y = 0, w = 0, h = 0;
  double score = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

inline double iou(const Detection& a, const Detection& b) {
  const double ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace detail {
// Windows accepted by all stages except possibly the last; the score is the
// final-stage margin. With `all_stages` only fully accepted windows are kept.
inline std::vector<Detection> scan_scores(const Cascade& c, const IntegralImage& ii,
                                          const ScanParams& p, bool all_stages) {
  const auto windows = scan_windows(ii.width(), ii.height(), p, c.base);
  std::vector<std::optional<Detection>> hits(windows.size());
  parallel_for(windows.size(), [&](std::size_t i) {
    const Window& w = windows[i];
    const int size = w.size(c.base);
    if (c.empty()) {
      hits[i] = Detection{w.x, w.y, size, size, 0.0};
      return;
    }
    double score = 0.0;
    for (std::size_t s = 0; s < c.stages.size(); ++s) {
      const auto& clf = c.stages[s].classifier;
      score = clf.margin(clf.project([&](std::size_t f) { return haar_value(ii, c.pool[f], w, c.base); }));
      const bool final_stage = s + 1 == c.stages.size();
      if (!(score > 0.0) && (all_stages || !final_stage)) return;
    }
    hits[i] = Detection{w.x, w.y, size, size, score};
  });
  std::vector<Detection> out;
  for (auto& h : hits)
    if (h) out.push_back(*h);
  return out;
}
}  // namespace detail

/// Accepted windows with their final-stage margins, in scan order. With
/// `top1` only the highest-scoring window is returned.
inline std::vector<Detection> scan_image(const Cascade& c, const Image& img, const ScanParams& p = {}) {
  if (img.width < c.base || img.height < c.base) {
    throw ImageTooSmall(std::to_string(img.width) + "x" + std::to_string(img.height) +
                        " image is smaller than the " + std::to_string(c.base) + "px window");
  }
  auto out = detail::scan_scores(c, IntegralImage(img), p, true);
  if (p.top1 && !out.empty()) {
    const auto best = std::max_element(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
      return a.score < b.score;
    });
    out = {*best};
  }
  return out;
}

inline constexpr double kMergeOverlap = 0.3;

/// Groups detections whose boxes overlap by IoU >= 0.3 and emits, per group
/// of at least `min_neighbors`, the rounded average box with the best score.
/// Groups are seeded in descending score; groups whose averaged boxes still
/// overlap are joined until none do.
inline std::vector<Detection> merge_detections(const std::vector<Detection>& raw,
                                               std::size_t min_neighbors = 2) {
  std::vector<std::size_t> order(raw.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return raw[a].score > raw[b].score; });

  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i : order) {
    bool placed = false;
    for (auto& g : groups) {
      if (iou(raw[g.front()], raw[i]) >= kMergeOverlap) {
        g.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({i});
  }

  auto summarize = [&](const std::vector<std::size_t>& g) {
    double sx = 0, sy = 0, sw = 0, sh = 0, best = -std::numeric_limits<double>::infinity();
    for (std::size_t i : g) {
      sx += raw[i].x;
      sy += raw[i].y;
      sw += raw[i].w;
      sh += raw[i].h;
      best = std::max(best, raw[i].score);
    }
    const double n = static_cast<double>(g.size());
    return Detection{static_cast<int>(std::lround(sx / n)), static_cast<int>(std::lround(sy / n)),
                     static_cast<int>(std::lround(sw / n)), static_cast<int>(std::lround(sh / n)), best};
  };

  std::vector<Detection> boxes;
  for (const auto& g : groups) boxes.push_back(summarize(g));
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t a = 0; a < groups.size() && !changed; ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        if (iou(boxes[a], boxes[b]) >= kMergeOverlap) {
          groups[a].insert(groups[a].end(), groups[b].begin(), groups[b].end());
          groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(b));
          boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(b));
          boxes[a] = summarize(groups[a]);
          changed = true;
          break;
        }
      }
    }
  }

  std::vector<Detection> out;
  for (std::size_t g = 0; g < groups.size(); ++g)
    if (groups[g].size() >= min_neighbors) out.push_back(boxes[g]);
  return out;
}

struct EvalResult {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  double detection_rate = 0.0;
};

inline constexpr double kMatchOverlap = 0.5;

/// One-to-one matching in descending score; a detection is true when its
/// IoU with a still-unmatched ground-truth box exceeds 0.5.
inline EvalResult evaluate_detections(const std::vector<Detection>& dets,
                                      const std::vector<Detection>& truth) {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<bool> used(truth.size(), false);
  EvalResult r;
  for (std::size_t i : order) {
    double best = kMatchOverlap;
    std::optional<std::size_t> match;
    for (std::size_t g = 0; g < truth.size(); ++g) {
      if (used[g]) continue;
      const double o = iou(dets[i], truth[g]);
      if (o > best) {
        best = o;
        match = g;
      }
    }
    if (match) {
      used[*match] = true;
      ++r.true_positives;
    } else {
      ++r.false_positives;
    }
  }
  r.detection_rate = truth.empty() ? 0.0 : static_cast<double>(r.true_positives) / truth.size();
  return r;
}

struct RocPoint {
  double false_positives = 0.0;
  double detection_rate = 0.0;
  double threshold = 0.0;  // shift applied to the final stage's w0
};

namespace detail {
// Sorted by false positives, then detection rate; points dominated by an
// earlier point with the same false-positive count are dropped.
inline std::vector<RocPoint> tidy_roc(std::vector<RocPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const RocPoint& a, const RocPoint& b) {
    return a.false_positives != b.false_positives ? a.false_positives < b.false_positives
                                                  : a.detection_rate > b.detection_rate;
  });
  std::vector<RocPoint> out;
  for (const auto& p : pts) {
    if (!out.empty() && out.back().false_positives == p.false_positives) continue;
    if (!out.empty() && p.detection_rate < out.back().detection_rate) continue;
    out.push_back(p);
  }
  return out;
}
}  // namespace detail

/// ROC over labeled windows by shifting the final stage's threshold; earlier
/// stages stay fixed. False positives are counts of accepted negatives.
inline std::vector<RocPoint> roc_curve(const Cascade& c, const std::vector<WindowSample>& samples,
                                       std::span<const Label> labels) {
  if (samples.empty()) throw EmptyClass("ROC needs evaluation samples");
  if (samples.size() != labels.size()) throw DimensionMismatch("samples and labels differ in count");
  std::vector<double> margin(samples.size(), -std::numeric_limits<double>::infinity());
  std::vector<char> reaches(samples.size(), 0);
  parallel_for(samples.size(), [&](std::size_t j) {
    const auto& s = samples[j];
    if (c.empty()) {
      reaches[j] = 1;
      margin[j] = 0.0;
      return;
    }
    for (std::size_t k = 0; k < c.stages.size(); ++k) {
      const auto& clf = c.stages[k].classifier;
      const double m = clf.margin(clf.project([&](std::size_t f) { return c.feature_value(s, f); }));
      if (k + 1 == c.stages.size()) {
        reaches[j] = 1;
        margin[j] = m;
      } else if (!(m > 0.0)) {
        return;
      }
    }
  });
  std::size_t n1 = 0;
  for (Label l : labels) n1 += is_positive(l);
  std::vector<double> cuts;
  for (std::size_t j = 0; j < samples.size(); ++j)
    if (reaches[j]) cuts.push_back(margin[j]);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Threshold shifts: below everything, at every observed margin (accepting
  // strictly greater ones), and at the maximum (accepting nothing).
  std::vector<double> shifts;
  shifts.push_back(cuts.empty() ? 0.0 : cuts.front() - 1.0);
  shifts.insert(shifts.end(), cuts.begin(), cuts.end());

  std::vector<RocPoint> pts;
  for (double t : shifts) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (!reaches[j] || !(margin[j] > t)) continue;
      (is_positive(labels[j]) ? tp : fp) += 1;
    }
    pts.push_back({static_cast<double>(fp), n1 ? static_cast<double>(tp) / n1 : 0.0, t});
  }
  return detail::tidy_roc(std::move(pts));
}

/// Image-set ROC: scan, merge and match against ground truth for a sweep of
/// final-stage shifts. At most `points` distinct shifts are used.
inline std::vector<RocPoint> roc_curve_images(const Cascade& c, const std::vector<Image>& images,
                                              const std::vector<std::vector<Detection>>& truth,
                                              const ScanParams& scan, std::size_t min_neighbors,
                                              std::size_t points = 200) {
  if (images.empty()) throw EmptyClass("ROC needs evaluation images");
  if (images.size() != truth.size()) throw DimensionMismatch("images and ground truth differ in count");
  std::vector<std::vector<Detection>> raw(images.size());
  std::vector<double> all;
  std::size_t n_truth = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    raw[i] = detail::scan_scores(c, IntegralImage(images[i]), scan, false);
    for (const auto& d : raw[i]) all.push_back(d.score);
    n_truth += truth[i].size();
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> shifts{all.empty() ? 0.0 : all.front() - 1.0};
  const std::size_t take = std::min(points, all.size());
  for (std::size_t q = 0; q < take; ++q) shifts.push_back(all[q * all.size() / take]);
  if (!all.empty()) shifts.push_back(all.back());

  std::vector<RocPoint> pts;
  for (double t : shifts) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      std::vector<Detection> kept;
      for (const auto& d : raw[i])
        if (d.score > t) kept.push_back(d);
      const auto r = evaluate_detections(merge_detections(kept, min_neighbors), truth[i]);
      tp += r.true_positives;
      fp += r.false_positives;
    }
    pts.push_back({static_cast<double>(fp), n_truth ? static_cast<double>(tp) / n_truth : 0.0, t});
  }
  return detail::tidy_roc(std::move(pts));
}

/// Best detection rate at no more than `max_fp` false positives.
inline double detection_at(const std::vector<RocPoint>& roc, double max_fp) {
  double best = 0.0;
  for (const auto& p : roc)
    if (p.false_positives <= max_fp) best = std::max(best, p.detection_rate);
  return best;
}

/// Collects up to `needed` windows from `pool` that the cascade accepts,
/// visiting images in order and windows in scan order. Throws PoolExhausted
/// when nothing is accepted.
inline std::vector<WindowSample> bootstrap_negatives(
    const Cascade& c, const std::vector<std::shared_ptr<const IntegralImage>>& pool,
    std::size_t needed, const ScanParams& scan = {}) {
  if (pool.empty()) throw EmptyClass("negative pool is empty");
  std::vector<WindowSample> out;
  for (const auto& ii : pool) {
    if (out.size() >= needed) break;
    const auto windows = scan_windows(ii->width(), ii->height(), scan, c.base);
    std::vector<char> accepted(windows.size(), 0);
    parallel_for(windows.size(), [&](std::size_t i) {
      accepted[i] = cascade_classify(c, *ii, windows[i]).accepted;
    });
    for (std::size_t i = 0; i < windows.size() && out.size() < needed; ++i)
      if (accepted[i]) out.push_back({ii, windows[i]});
  }
  if (out.empty()) throw PoolExhausted("no negative window passes the current cascade");
  return out;
}

struct CascadeConfig {
  std::size_t stages = 3;
  StageGoal goal;
  std::size_t negatives_per_stage = 1000;
  int pool_stride = 2;  // 10344 features, the densest pool under 20000
  ScanParams scan;
  std::uint64_t seed = 0;
  double lambda = kDefaultRidge;
};

/// Trains stages on `positives` and bootstrapped negatives. Stops early when
/// the negative pool is exhausted. The pool visiting order is shuffled with
/// the configured seed.
inline Cascade train_cascade(const std::vector<WindowSample>& positives,
                             std::vector<std::shared_ptr<const IntegralImage>> negative_pool,
                             const CascadeConfig& cfg) {
  if (positives.empty()) throw EmptyClass("no positive samples");
  if (cfg.stages == 0) throw ConfigError("cascade needs at least one stage");
  Cascade c(cfg.pool_stride);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(negative_pool.begin(), negative_pool.end(), rng);
  for (std::size_t s = 0; s < cfg.stages; ++s) {
    std::vector<WindowSample> negs;
    try {
      negs = bootstrap_negatives(c, negative_pool, cfg.negatives_per_stage, cfg.scan);
    } catch (const PoolExhausted&) {
      break;
    }
    std::vector<WindowSample> samples = positives;
    samples.insert(samples.end(), negs.begin(), negs.end());
    std::vector<Label> labels(positives.size(), Label::Positive);
    labels.resize(samples.size(), Label::Negative);
    c.stages.push_back(train_stage(
        c.pool.size(), labels,
        [&](std::size_t f, std::size_t j) { return c.feature_value(samples[j], f); }, cfg.goal,
        cfg.lambda));
  }
  return c;
}

/// Online update routed by reachability: a positive updates every stage; a
/// negative updates the stages it reaches, up to and including the first
/// stage that rejects it. Each stage update is all-or-nothing. Returns the
/// number of stages updated.
inline std::size_t online_update_cascade(Cascade& c, const IntegralImage& ii, const Window& win,
                                         Label label) {
  auto value = [&](std::size_t f) { return haar_value(ii, c.pool[f], win, c.base); };
  std::size_t reach = c.stages.size();
  if (!is_positive(label)) {
    for (std::size_t s = 0; s < c.stages.size(); ++s) {
      const auto& clf = c.stages[s].classifier;
      if (!(clf.margin(clf.project(value)) > 0.0)) {
        reach = s + 1;
        break;
      }
    }
  }
  for (std::size_t s = 0; s < reach; ++s) c.stages[s].classifier.insert_raw(value, label);
  return reach;
}

inline std::size_t online_update_cascade(Cascade& c, const WindowSample& s, Label label) {
  return online_update_cascade(c, *s.ii, s.win, label);
}

}  // namespace oslda
