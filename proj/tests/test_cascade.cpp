#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oslda/cascade.hpp"
#include "oslda/synthetic.hpp"

using namespace oslda;

namespace {

struct PatchData {
  std::vector<WindowSample> samples;
  std::vector<Label> labels;
  std::vector<WindowSample> positives;
  std::vector<std::shared_ptr<const IntegralImage>> negative_pool;
};

PatchData make_patches(std::size_t faces, std::size_t clutter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto ps = synthetic::patches(faces, clutter, rng);
  PatchData d;
  for (std::size_t i = 0; i < ps.images.size(); ++i) {
    d.samples.push_back(patch_sample(ps.images[i]));
    d.labels.push_back(ps.labels[i]);
    if (is_positive(ps.labels[i]))
      d.positives.push_back(d.samples.back());
    else
      d.negative_pool.push_back(d.samples.back().ii);
  }
  return d;
}

const Cascade& small_cascade() {
  static const Cascade c = [] {
    const PatchData d = make_patches(150, 900, 101);
    CascadeConfig cfg;
    cfg.stages = 3;
    cfg.pool_stride = 6;
    cfg.negatives_per_stage = 300;
    return train_cascade(d.positives, d.negative_pool, cfg);
  }();
  return c;
}

// Stage trained on raw columns; column 0 separates the classes exactly.
template <class Value>
Stage raw_stage(std::size_t m, const std::vector<Label>& labels, Value v, StageGoal goal = {}) {
  return train_stage(m, labels, v, goal);
}

std::size_t closed_form_windows(int w, int h, double factor, int step) {
  std::size_t total = 0;
  for (int k = 0;; ++k) {
    const double s = std::pow(factor, k);
    const int size = static_cast<int>(std::floor(24 * s + 1e-9));
    if (size > w || size > h) break;
    const int st = std::max(1, static_cast<int>(std::lround(s))) * step;
    total += static_cast<std::size_t>((w - size) / st + 1) * static_cast<std::size_t>((h - size) / st + 1);
  }
  return total;
}

Stage reject_all_stage(const Stage& proto) {
  Stage s = proto;
  s.classifier.set_threshold(1e300);
  return s;
}

}  // namespace

TEST(TrainStage, SeparablePoolsNeedOneLearner) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 200, m = 5;
  std::vector<Label> labels(n);
  std::vector<double> raw(m * n);
  for (std::size_t j = 0; j < n; ++j) {
    labels[j] = j % 4 == 0 ? Label::Positive : Label::Negative;
    raw[j] = (is_positive(labels[j]) ? 5.0 : -5.0) + 0.1 * g(rng);
    for (std::size_t f = 1; f < m; ++f) raw[f * n + j] = g(rng);
  }
  const Stage s = raw_stage(m, labels, [&](std::size_t f, std::size_t j) { return raw[f * n + j]; });
  EXPECT_EQ(s.report.learners, 1u);
  EXPECT_EQ(s.report.detection, 1.0);
  EXPECT_EQ(s.report.false_positive, 0.0);
  EXPECT_TRUE(s.report.goal_met);
  EXPECT_NO_THROW(require_goal(s));
}

TEST(TrainStage, ReplayReproducesRecordedRates) {
  const PatchData d = make_patches(120, 400, 2);
  const Cascade pool(6);
  const Stage s = train_stage(pool.pool.size(), d.labels, [&](std::size_t f, std::size_t j) {
    return pool.feature_value(d.samples[j], f);
  });
  std::size_t tp = 0, fp = 0, n1 = 0;
  for (std::size_t j = 0; j < d.samples.size(); ++j) {
    const Vec x = s.classifier.project([&](std::size_t f) { return pool.feature_value(d.samples[j], f); });
    const bool acc = s.classifier.accepts(x);
    if (is_positive(d.labels[j])) {
      ++n1;
      tp += acc;
    } else {
      fp += acc;
    }
  }
  EXPECT_EQ(static_cast<double>(tp) / n1, s.report.detection);
  EXPECT_EQ(static_cast<double>(fp) / (d.samples.size() - n1), s.report.false_positive);
  EXPECT_GE(s.report.detection, 0.99);
  EXPECT_LE(s.report.false_positive, 0.5);
  EXPECT_EQ(s.classifier.criterion().kind, CriterionKind::AsymmetricMin);
}

TEST(TrainStage, FullDetectionGoalNeverLowersFalsePositives) {
  const PatchData d = make_patches(100, 300, 3);
  const Cascade pool(6);
  auto value = [&](std::size_t f, std::size_t j) { return pool.feature_value(d.samples[j], f); };
  const Stage a = train_stage(pool.pool.size(), d.labels, value, StageGoal{0.99, 0.5, 200});
  const Stage b = train_stage(pool.pool.size(), d.labels, value, StageGoal{1.0, 0.5, a.report.learners});
  EXPECT_EQ(a.classifier.model().selected, b.classifier.model().selected);
  EXPECT_GE(b.report.false_positive, a.report.false_positive);
  EXPECT_EQ(b.report.detection, 1.0);
}

TEST(TrainStage, CapHitIsReported) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 300, m = 6;
  std::vector<Label> labels(n);
  std::vector<double> raw(m * n);
  for (std::size_t j = 0; j < n; ++j) labels[j] = j % 2 ? Label::Positive : Label::Negative;
  for (auto& v : raw) v = g(rng);  // no signal at all
  const Stage s = raw_stage(m, labels, [&](std::size_t f, std::size_t j) { return raw[f * n + j]; },
                            StageGoal{0.99, 0.05, 3});
  EXPECT_EQ(s.report.learners, 3u);
  EXPECT_FALSE(s.report.goal_met);
  EXPECT_THROW(require_goal(s), GoalUnreachable);
}

TEST(TrainStage, NeedsBothPools) {
  const std::vector<Label> labels(4, Label::Positive);
  EXPECT_THROW(train_stage(2, labels, [](std::size_t, std::size_t) { return 0.0; }), EmptyClass);
}

TEST(CascadeTraining, EveryStageMeetsGoal) {
  const Cascade& c = small_cascade();
  ASSERT_EQ(c.size(), 3u);
  for (const auto& s : c.stages) {
    EXPECT_TRUE(s.report.goal_met);
    EXPECT_GE(s.report.detection, 0.99);
    EXPECT_LE(s.report.false_positive, 0.5);
  }
}

TEST(CascadeClassify, EmptyCascadeAccepts) {
  const Cascade c(6);
  const IntegralImage ii(Image(24, 24, 3.0));
  const auto r = cascade_classify(c, ii, {0, 0, 1.0});
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(r.score, 0.0);
  EXPECT_EQ(r.stages_evaluated, 0u);
}

TEST(CascadeClassify, ShortCircuitAndConjunction) {
  const Cascade& c = small_cascade();
  const PatchData d = make_patches(100, 400, 5);
  for (const auto& s : d.samples) {
    const auto r = cascade_classify(c, s);
    bool all = true;
    std::size_t first_reject = c.size();
    for (std::size_t k = 0; k < c.size(); ++k) {
      const auto& clf = c.stages[k].classifier;
      const bool acc = clf.accepts(clf.project([&](std::size_t f) { return c.feature_value(s, f); }));
      if (!acc && first_reject == c.size()) first_reject = k;
      all = all && acc;
    }
    ASSERT_EQ(r.accepted, all);
    ASSERT_EQ(r.stages_evaluated, r.accepted ? c.size() : first_reject + 1);
  }
  // A rejecting first stage stops evaluation there.
  Cascade blocked = c;
  blocked.stages[0] = reject_all_stage(blocked.stages[0]);
  const auto r = cascade_classify(blocked, d.samples[0]);
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(r.stages_evaluated, 1u);
}

TEST(CascadeClassify, AcceptanceNonincreasingInStages) {
  const Cascade& c = small_cascade();
  const PatchData d = make_patches(100, 600, 6);
  std::size_t prev = d.samples.size() + 1;
  for (std::size_t k = 0; k <= c.size(); ++k) {
    Cascade prefix = c;
    prefix.stages.resize(k);
    std::size_t acc = 0;
    for (const auto& s : d.samples) acc += cascade_classify(prefix, s).accepted;
    EXPECT_LE(acc, prev);
    prev = acc;
  }
}

TEST(ScanImage, WindowCounts) {
  const Cascade empty(6);
  EXPECT_EQ(scan_image(empty, Image(24, 24, 1.0)).size(), 1u);
  const auto dets = scan_image(empty, Image(48, 48, 1.0));
  EXPECT_EQ(dets.size(), closed_form_windows(48, 48, 1.2, 1));
  EXPECT_EQ(dets.size(), 1307u);
  for (int w : {30, 57, 100})
    for (int h : {24, 41, 75})
      EXPECT_EQ(scan_windows(w, h, {1.2, 2, false}).size(), closed_form_windows(w, h, 1.2, 2));
  for (const auto& d : dets) {
    EXPECT_GE(d.x, 0);
    EXPECT_LE(d.x + d.w, 48);
    EXPECT_LE(d.y + d.h, 48);
    EXPECT_GT(d.w, 0);
  }
  EXPECT_THROW(scan_image(empty, Image(23, 40, 1.0)), ImageTooSmall);
  EXPECT_THROW(scan_windows(48, 48, {1.0, 1, false}), ConfigError);
  EXPECT_THROW(scan_windows(48, 48, {1.2, 0, false}), ConfigError);
}

TEST(ScanImage, TopOneAndDetectionOnScene) {
  const Cascade& c = small_cascade();
  std::mt19937_64 rng(7);
  const auto sc = synthetic::scene(96, 96, 2, rng);
  const auto all = scan_image(c, sc.image);
  const auto top = scan_image(c, sc.image, {1.2, 1, true});
  if (!all.empty()) {
    ASSERT_EQ(top.size(), 1u);
    for (const auto& d : all) EXPECT_LE(d.score, top[0].score);
  }
  for (const auto& d : all) EXPECT_GT(d.score, 0.0);
}

TEST(MergeDetections, Examples) {
  const Detection a{10, 10, 24, 24, 1.5};
  EXPECT_EQ(merge_detections({a}, 1), std::vector<Detection>{a});
  EXPECT_TRUE(merge_detections({a}, 2).empty());
  const auto two = merge_detections({a, a}, 2);
  ASSERT_EQ(two.size(), 1u);
  EXPECT_EQ(two[0], a);
  const Detection b{100, 100, 24, 24, 0.5};
  EXPECT_EQ(merge_detections({a, b}, 1).size(), 2u);
  // Averaging with max score.
  const Detection c{12, 10, 24, 24, 0.7};
  const auto m = merge_detections({a, c}, 2);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].x, 11);
  EXPECT_EQ(m[0].score, 1.5);
}

TEST(MergeDetections, IdempotentOnRandomInput) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pos(0, 120), side(24, 40);
  std::uniform_real_distribution<double> sc(0.0, 3.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<Detection> raw;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      const int s = side(rng);
      raw.push_back({pos(rng), pos(rng), s, s, sc(rng)});
    }
    const auto once = merge_detections(raw, 1);
    ASSERT_EQ(merge_detections(once, 1), once);
    for (std::size_t i = 0; i < once.size(); ++i)
      for (std::size_t j = i + 1; j < once.size(); ++j) ASSERT_LT(iou(once[i], once[j]), 0.3);
  }
}

TEST(EvaluateDetections, Examples) {
  const Detection g{0, 0, 10, 10, 0};
  EXPECT_DOUBLE_EQ(iou(g, g), 1.0);
  auto r = evaluate_detections({g}, {g});
  EXPECT_EQ(r.true_positives, 1u);
  EXPECT_EQ(r.detection_rate, 1.0);
  const Detection far{50, 50, 10, 10, 1};
  EXPECT_EQ(iou(far, g), 0.0);
  r = evaluate_detections({far}, {g});
  EXPECT_EQ(r.false_positives, 1u);
  // Half-width offset: intersection 50, union 150.
  const Detection half{5, 0, 10, 10, 1};
  EXPECT_DOUBLE_EQ(iou(half, g), 1.0 / 3.0);
  EXPECT_EQ(evaluate_detections({half}, {g}).false_positives, 1u);
  // Duplicate detections of one object: one true, one false.
  r = evaluate_detections({g, g}, {g});
  EXPECT_EQ(r.true_positives, 1u);
  EXPECT_EQ(r.false_positives, 1u);
}

TEST(EvaluateDetections, CountsProperty) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> pos(0, 60), side(10, 30);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<Detection> d, g;
    for (int i = 0, n = static_cast<int>(rng() % 8); i < n; ++i) {
      const int s = side(rng);
      d.push_back({pos(rng), pos(rng), s, s, static_cast<double>(rng() % 100)});
    }
    for (int i = 0, n = static_cast<int>(rng() % 5); i < n; ++i) {
      const int s = side(rng);
      g.push_back({pos(rng), pos(rng), s, s, 0});
    }
    const auto r = evaluate_detections(d, g);
    ASSERT_EQ(r.true_positives + r.false_positives, d.size());
    ASSERT_LE(r.true_positives, g.size());
  }
}

TEST(RocCurve, ExtremesAndMonotonicity) {
  const Cascade& c = small_cascade();
  const PatchData d = make_patches(200, 800, 10);
  const auto roc = roc_curve(c, d.samples, d.labels);
  ASSERT_FALSE(roc.empty());
  EXPECT_EQ(roc.front().false_positives, 0.0);
  EXPECT_EQ(roc.front().detection_rate >= 0.0, true);
  // Lowest shift: every sample passing the earlier stages is accepted.
  Cascade prefix = c;
  prefix.stages.pop_back();
  std::size_t pos_reach = 0, neg_reach = 0;
  for (std::size_t j = 0; j < d.samples.size(); ++j) {
    if (!cascade_classify(prefix, d.samples[j]).accepted) continue;
    (is_positive(d.labels[j]) ? pos_reach : neg_reach) += 1;
  }
  EXPECT_EQ(roc.back().false_positives, static_cast<double>(neg_reach));
  EXPECT_DOUBLE_EQ(roc.back().detection_rate, pos_reach / 200.0);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    EXPECT_GT(roc[i].false_positives, roc[i - 1].false_positives);
    EXPECT_GE(roc[i].detection_rate, roc[i - 1].detection_rate);
    // Thresholds fall as the operating point moves right.
    EXPECT_LT(roc[i].threshold, roc[i - 1].threshold);
  }
  EXPECT_THROW(roc_curve(c, {}, {}), EmptyClass);
}

TEST(RocCurve, TopThresholdGivesOrigin) {
  const Cascade& c = small_cascade();
  const PatchData d = make_patches(50, 200, 11);
  const auto roc = roc_curve(c, d.samples, d.labels);
  EXPECT_EQ(roc.front().false_positives, 0.0);
  // With no positive strictly above the top threshold, the first point is (0, 0)
  // or a dominated-free point with zero false positives.
  EXPECT_GE(roc.front().detection_rate, 0.0);
  EXPECT_EQ(detection_at(roc, -1.0), 0.0);
}

TEST(RocCurveImages, ParetoConsistent) {
  const Cascade& c = small_cascade();
  std::mt19937_64 rng(12);
  std::vector<Image> imgs;
  std::vector<std::vector<Detection>> truth;
  for (int i = 0; i < 3; ++i) {
    auto sc = synthetic::scene(80, 80, 2, rng);
    imgs.push_back(sc.image);
    truth.push_back(sc.faces);
  }
  const auto roc = roc_curve_images(c, imgs, truth, {1.2, 2, false}, 1, 30);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    EXPECT_GT(roc[i].false_positives, roc[i - 1].false_positives);
    EXPECT_GE(roc[i].detection_rate, roc[i - 1].detection_rate);
  }
}

TEST(Bootstrap, EmptyCascadeTakesFirstGridWindows) {
  const Cascade c(6);
  std::vector<std::shared_ptr<const IntegralImage>> pool{
      std::make_shared<const IntegralImage>(Image(30, 30, 1.0)),
      std::make_shared<const IntegralImage>(Image(24, 24, 2.0))};
  const auto got = bootstrap_negatives(c, pool, 5);
  const auto grid = scan_windows(30, 30, {});
  ASSERT_EQ(got.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(got[i].ii, pool[0]);
    EXPECT_EQ(got[i].win.x, grid[i].x);
    EXPECT_EQ(got[i].win.y, grid[i].y);
  }
  // Asking for more than the pool holds returns everything.
  EXPECT_EQ(bootstrap_negatives(c, pool, 1000).size(), grid.size() + 1);
}

TEST(Bootstrap, RejectingCascadeExhaustsPool) {
  Cascade c = small_cascade();
  c.stages[0] = reject_all_stage(c.stages[0]);
  std::mt19937_64 rng(13);
  std::vector<std::shared_ptr<const IntegralImage>> pool;
  for (int i = 0; i < 20; ++i) pool.push_back(std::make_shared<const IntegralImage>(synthetic::clutter_patch(rng)));
  EXPECT_THROW(bootstrap_negatives(c, pool, 10), PoolExhausted);
}

TEST(Bootstrap, ReturnedWindowsAreAccepted) {
  const Cascade& c = small_cascade();
  std::mt19937_64 rng(14);
  std::vector<std::shared_ptr<const IntegralImage>> pool;
  for (int i = 0; i < 4; ++i) pool.push_back(std::make_shared<const IntegralImage>(synthetic::scene(72, 72, 1, rng).image));
  const auto got = bootstrap_negatives(c, pool, 50, {1.2, 2, false});
  for (const auto& s : got) EXPECT_TRUE(cascade_classify(c, s).accepted);
}

TEST(OnlineUpdate, Reachability) {
  Cascade c = small_cascade();
  const PatchData d = make_patches(5, 0, 15);
  online_update_cascade(c, d.positives[0], Label::Positive);
  for (const auto& s : c.stages) EXPECT_EQ(s.classifier.insert_count(), 1u);

  // A negative rejected by stage 1 reaches only stage 1.
  Cascade r = small_cascade();
  r.stages[0] = reject_all_stage(r.stages[0]);
  const std::size_t before = r.stages[0].classifier.insert_count();
  EXPECT_EQ(online_update_cascade(r, d.positives[1], Label::Negative), 1u);
  EXPECT_EQ(r.stages[0].classifier.insert_count(), before + 1);
  EXPECT_EQ(r.stages[1].classifier.insert_count(), 0u);
  EXPECT_EQ(r.stages[2].classifier.insert_count(), 0u);

  Cascade e(6);
  EXPECT_EQ(online_update_cascade(e, d.positives[0], Label::Positive), 0u);
}

TEST(OnlineUpdate, NegativeRoutingMatchesTrace) {
  Cascade c = small_cascade();
  const PatchData d = make_patches(0, 200, 16);
  std::vector<std::size_t> expect(c.size(), 0);
  for (const auto& s : d.samples) {
    std::size_t reach = c.size();
    for (std::size_t k = 0; k < c.size(); ++k) {
      const auto& clf = c.stages[k].classifier;
      if (!clf.accepts(clf.project([&](std::size_t f) { return c.feature_value(s, f); }))) {
        reach = k + 1;
        break;
      }
    }
    for (std::size_t k = 0; k < reach; ++k) ++expect[k];
    ASSERT_EQ(online_update_cascade(c, s, Label::Negative), reach);
  }
  for (std::size_t k = 0; k < c.size(); ++k) EXPECT_EQ(c.stages[k].classifier.insert_count(), expect[k]);
}

TEST(EmpiricalThreshold, KeepsRequestedFraction) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(137);
    for (auto& v : s) v = std::round(4 * g(rng)) / 4;  // ties
    for (double goal : {0.9, 0.99, 1.0}) {
      const double t = empirical_threshold(s, goal);
      std::size_t above = 0;
      for (double v : s) above += v > t;
      EXPECT_GE(above, static_cast<std::size_t>(std::ceil(goal * s.size() - 1e-9)));
    }
  }
}
