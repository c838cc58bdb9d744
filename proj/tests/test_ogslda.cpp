#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "oslda/online.hpp"
#include "test_util.hpp"

using namespace oslda;
using oslda::testing::naive_scatter;
using oslda::testing::rel_frobenius;
using oslda::testing::upper_mass;

namespace {

struct Stream {
  Eigen::MatrixXd x;  // T x N binary responses
  std::vector<Label> labels;
};

// Binary responses with class-dependent firing rates.
Stream binary_stream(int t, int n, std::mt19937_64& rng, double sep = 0.25) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> base(t), shift(t);
  for (int i = 0; i < t; ++i) {
    base[i] = 0.2 + 0.6 * u(rng);
    shift[i] = sep * (2 * u(rng) - 1);
  }
  Stream s{Eigen::MatrixXd(t, n), std::vector<Label>(n)};
  for (int j = 0; j < n; ++j) {
    const bool pos = u(rng) < 0.4;
    s.labels[j] = pos ? Label::Positive : Label::Negative;
    for (int i = 0; i < t; ++i) {
      const double p = std::clamp(base[i] + (pos ? shift[i] : -shift[i]), 0.02, 0.98);
      s.x(i, j) = u(rng) < p ? 1.0 : 0.0;
    }
  }
  // Both classes present among the first few samples.
  s.labels[0] = Label::Positive;
  s.labels[1] = Label::Negative;
  s.labels[2] = Label::Positive;
  s.labels[3] = Label::Negative;
  return s;
}

std::vector<Stump> identity_stumps(int t) {
  std::vector<Stump> s;
  for (int i = 0; i < t; ++i) s.push_back({static_cast<std::size_t>(i), 0.5, 1});
  return s;
}

OnlineClassifier initial_classifier(const Stream& s, int n0, const Criterion& c) {
  const int t = static_cast<int>(s.x.rows());
  const std::vector<Label> l0(s.labels.begin(), s.labels.begin() + n0);
  ScatterState st = scatter_from_samples(s.x.leftCols(n0), l0);
  LinearModel m;
  for (int i = 0; i < t; ++i) m.selected.push_back(static_cast<std::size_t>(i));
  m.w = lda_direction(st);
  m.w0 = compute_threshold(st, m.w, c).value;
  return OnlineClassifier(identity_stumps(t), m, st, c);
}

ScatterState batch_state(const Stream& s, int n, double ridge) {
  const std::vector<Label> l(s.labels.begin(), s.labels.begin() + n);
  return scatter_from_samples(s.x.leftCols(n), l, kDefaultRidge, ridge);
}

}  // namespace

TEST(ProjectSample, Examples) {
  const auto stumps = identity_stumps(4);
  auto low = [](std::size_t) { return -10.0; };
  EXPECT_TRUE(project_sample(std::span<const Stump>(stumps), low).isZero());
  const std::vector<Stump> mixed{{2, 1.0, 1}, {0, 0.0, -1}, {1, 3.0, 1}};
  const std::vector<double> raw{-0.5, 4.0, 0.5};
  auto val = [&](std::size_t f) { return raw[f]; };
  const Vec x = project_sample(std::span<const Stump>(mixed), val);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(x(i), mixed[i].respond(raw[mixed[i].feature]));
  EXPECT_EQ(x, project_sample(std::span<const Stump>(mixed), val));
}

TEST(UpdateMeans, Examples) {
  ScatterState s;
  s.n1 = 1;
  s.n2 = 3;
  s.m1 = Vec::Constant(2, 1.0);
  s.m2 = Vec::Constant(2, 0.25);
  Vec x(2);
  x << 3, 3;
  const Vec m2_before = s.m2;
  update_means(s, x, Label::Positive);
  EXPECT_EQ(s.m1, Vec::Constant(2, 2.0));
  EXPECT_EQ(s.n1, 2u);
  EXPECT_EQ(s.m2, m2_before);

  const Vec m1_before = s.m1;
  update_means(s, s.m2, Label::Negative);
  EXPECT_EQ(s.m2, m2_before);
  EXPECT_EQ(s.n2, 4u);
  EXPECT_EQ(std::memcmp(s.m1.data(), m1_before.data(), sizeof(double) * 2), 0);
  EXPECT_THROW(update_means(s, Vec::Zero(3), Label::Positive), DimensionMismatch);
}

TEST(UpdateSb, ZeroRankAndBatch) {
  ScatterState s;
  s.n1 = 3;
  s.n2 = 4;
  s.m1 = s.m2 = Vec::Constant(3, 0.5);
  update_sb(s);
  EXPECT_TRUE(s.sb.isZero());

  std::mt19937_64 rng(41);
  const Stream st = binary_stream(6, 120, rng);
  auto clf = initial_classifier(st, 20, Criterion::fisher());
  for (int j = 20; j < 120; ++j) clf.insert(st.x.col(j), st.labels[j]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(clf.state().sb);
  lu.setThreshold(1e-10);
  EXPECT_LE(lu.rank(), 1);
  const auto oracle = naive_scatter(st.x, st.labels);
  EXPECT_LE(rel_frobenius(clf.state().sb, oracle.sb), 1e-10);
}

TEST(CovarianceUpdate, FirstSampleAndMeanInsertion) {
  ScatterState s;
  s.n1 = 0;
  s.n2 = 0;
  s.m1 = Vec::Zero(2);
  s.m2 = Vec::Zero(2);
  s.sigma1 = s.sigma2 = SymMat::Zero(2, 2);
  Vec x(2);
  x << 0.7, -1.2;
  const MeanStep step = update_means(s, x, Label::Positive);
  const auto u = covariance_update_vectors(s, x, step);
  apply_covariance_update(s, Label::Positive, u);
  EXPECT_TRUE(u.p1.isZero());
  EXPECT_TRUE(u.p2.isZero());  // N_c = 0
  EXPECT_TRUE(s.sigma1.isZero());

  // Inserting the current mean: p1 = 0 and m~ = m, so nothing changes.
  const SymMat before = s.sigma1;
  const MeanStep st2 = update_means(s, s.m1, Label::Positive);
  const auto u2 = covariance_update_vectors(s, st2.old_mean, st2);
  EXPECT_TRUE(u2.p1.isZero());
  EXPECT_TRUE(u2.q2.isZero());
  apply_covariance_update(s, Label::Positive, u2);
  EXPECT_EQ(s.sigma1, before);
}

TEST(CovarianceUpdate, TwoHundredInsertsMatchBatch) {
  std::mt19937_64 rng(42);
  const Stream st = binary_stream(8, 210, rng);
  auto clf = initial_classifier(st, 10, Criterion::fisher());
  for (int j = 10; j < 210; ++j) clf.insert(st.x.col(j), st.labels[j]);
  const auto oracle = naive_scatter(st.x, st.labels);
  EXPECT_LE(rel_frobenius(clf.state().sigma1, oracle.s1), 1e-9);
  EXPECT_LE(rel_frobenius(clf.state().sigma2, oracle.s2), 1e-9);
  EXPECT_LE(rel_frobenius(clf.state().m1, oracle.m1), 1e-12);
  EXPECT_LE(rel_frobenius(clf.state().m2, oracle.m2), 1e-12);
}

TEST(UpdateSwInverse, ZeroPerturbationAndHandInverse) {
  ScatterState s;
  s.m1 = s.m2 = Vec::Zero(3);
  s.sigma1 = SymMat::Identity(3, 3);
  s.sigma2 = SymMat::Zero(3, 3);
  s.sw_inv = SymMat::Identity(3, 3);
  const CovarianceUpdate zero{Vec::Zero(3), Vec::Zero(3), Vec::Zero(3), Vec::Zero(3)};
  EXPECT_FALSE(update_sw_inverse(s, zero));
  EXPECT_EQ(s.sw_inv, SymMat::Identity(3, 3));

  Vec e1 = Vec::Zero(3);
  e1(0) = 1;
  const CovarianceUpdate bump{e1, e1, Vec::Zero(3), Vec::Zero(3)};
  update_sw_inverse(s, bump);
  SymMat expect = SymMat::Identity(3, 3);
  expect(0, 0) = 0.5;
  EXPECT_LE((s.sw_inv - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(UpdateSwInverse, FiveHundredInsertsMatchDirectInverse) {
  std::mt19937_64 rng(43);
  const Stream st = binary_stream(12, 540, rng);
  auto clf = initial_classifier(st, 40, Criterion::fisher());
  for (int j = 40; j < 540; ++j) {
    clf.insert(st.x.col(j), st.labels[j]);
    if (j % 50 == 0 || j == 539) {
      const SymMat direct = mat_inverse(clf.state().regularized_within());
      ASSERT_LE(rel_frobenius(clf.state().sw_inv, direct), 1e-7) << "after insert " << j;
    }
  }
  EXPECT_EQ(clf.direct_inversions(), 0u);
}

TEST(UpdateSwInverse, RefreshCadence) {
  std::mt19937_64 rng(44);
  const Stream st = binary_stream(5, 100, rng);
  auto clf = initial_classifier(st, 20, Criterion::fisher());
  clf.set_refresh_interval(10);
  for (int j = 20; j < 100; ++j) clf.insert(st.x.col(j), st.labels[j]);
  EXPECT_EQ(clf.direct_inversions(), 8u);
  EXPECT_EQ(clf.state().updates_since_refresh, 0u);
  EXPECT_LE(rel_frobenius(clf.state().sw_inv, mat_inverse(clf.state().regularized_within())), 1e-12);
}

TEST(UpdateSwInverse, DegenerateUpdateFallsBackToDirect) {
  // Sw_inv deliberately inconsistent with the stored scatters so that r1 = 0:
  // the fallback must rebuild it from sigma1 + sigma2.
  ScatterState s;
  s.n1 = 2;
  s.n2 = 2;
  s.m1 = s.m2 = Vec::Zero(2);
  s.sigma1 = SymMat::Identity(2, 2);
  s.sigma2 = SymMat::Identity(2, 2);
  s.ridge = 0.0;
  s.sw_inv = SymMat::Identity(2, 2);
  Vec v(2);
  v << 1, 0;
  const CovarianceUpdate u{-v, v, Vec::Zero(2), Vec::Zero(2)};
  EXPECT_TRUE(update_sw_inverse(s, u));
  EXPECT_TRUE(s.sw_inv.isApprox(0.5 * SymMat::Identity(2, 2)));
}

TEST(RecomputeWeights, NoInsertsIsBitwiseBatch) {
  std::mt19937_64 rng(45);
  const Stream st = binary_stream(7, 60, rng);
  const auto clf = initial_classifier(st, 60, Criterion::fisher());
  EXPECT_EQ(recompute_weights(clf.state()), lda_direction(batch_state(st, 60, clf.state().ridge)));
}

TEST(RecomputeWeights, AfterHundredInsertsMatchesBatch) {
  std::mt19937_64 rng(46);
  const Stream st = binary_stream(9, 150, rng);
  auto clf = initial_classifier(st, 50, Criterion::fisher());
  for (int j = 50; j < 150; ++j) clf.insert(st.x.col(j), st.labels[j]);
  const Vec batch = lda_direction(batch_state(st, 150, clf.state().ridge));
  EXPECT_LE(rel_frobenius(clf.model().w, batch), 1e-7);
}

TEST(RecomputeWeights, DuplicatingInitialSetKeepsDirection) {
  std::mt19937_64 rng(47);
  const Stream st = binary_stream(6, 80, rng);
  // Ridge zero so that the scatter scales exactly uniformly.
  const std::vector<Label> l(st.labels.begin(), st.labels.end());
  ScatterState s0 = scatter_from_samples(st.x, l, kDefaultRidge, 0.0);
  LinearModel m;
  for (int i = 0; i < 6; ++i) m.selected.push_back(i);
  m.w = lda_direction(s0);
  OnlineClassifier clf(identity_stumps(6), m, s0, Criterion::fisher());
  for (int j = 0; j < 80; ++j) clf.insert(st.x.col(j), st.labels[j]);
  EXPECT_LE(rel_frobenius(clf.model().w.normalized(), m.w.normalized()), 1e-7);
}

TEST(EqualDensity, SymmetricGaussiansGiveMidpoint) {
  const auto r = threshold_equal_density(3.0, 1.5, -1.0, 1.5);
  EXPECT_FALSE(r.fell_back);
  EXPECT_NEAR(r.value, 1.0, 1e-14);
}

TEST(EqualDensity, UnequalVariancesEqualizeDensities) {
  const auto r = threshold_equal_density(2.0, 1.0, 0.0, 2.0);
  EXPECT_FALSE(r.fell_back);
  EXPECT_GT(r.value, 0.0);
  EXPECT_LT(r.value, 2.0);
  using oslda::testing::normal_density;
  EXPECT_LE(std::abs(normal_density(r.value, 2, 1) - normal_density(r.value, 0, 2)), 1e-9);
  // Bisection on the density difference between the means.
  double lo = 0.0, hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_density(mid, 2, 1) - normal_density(mid, 0, 2) < 0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(r.value, 0.5 * (lo + hi), 1e-9);
  // Class order does not matter.
  EXPECT_NEAR(threshold_equal_density(0.0, 2.0, 2.0, 1.0).value, r.value, 1e-14);
}

TEST(EqualDensity, FallbackToMidpoint) {
  // Very unequal spreads: both roots of the quadratic lie outside [mu2, mu1].
  const auto r = threshold_equal_density(0.1, 0.01, 0.0, 100.0);
  if (r.fell_back) EXPECT_DOUBLE_EQ(r.value, 0.05);
  const auto z = threshold_equal_density(1.0, 0.0, 0.0, 1.0);
  EXPECT_TRUE(z.fell_back);
  EXPECT_DOUBLE_EQ(z.value, 0.5);
}

TEST(EqualDensity, RootStrictlyBetweenMeansOnRandomStates) {
  std::mt19937_64 rng(48);
  std::uniform_real_distribution<double> u(-5.0, 5.0), sd(0.1, 4.0);
  for (int rep = 0; rep < 2000; ++rep) {
    const double m1 = u(rng), m2 = u(rng), s1 = sd(rng), s2 = sd(rng);
    const auto r = threshold_equal_density(m1, s1, m2, s2);
    if (r.fell_back) continue;
    EXPECT_GT(r.value, std::min(m1, m2));
    EXPECT_LT(r.value, std::max(m1, m2));
    using oslda::testing::normal_density;
    const double d1 = normal_density(r.value, m1, s1), d2 = normal_density(r.value, m2, s2);
    EXPECT_LE(std::abs(d1 - d2), 1e-9 * std::max(1.0, std::max(d1, d2)));
  }
}

TEST(TargetDetection, Examples) {
  EXPECT_DOUBLE_EQ(threshold_target_detection(1.7, 0.4, 0.5), 1.7);
  EXPECT_NEAR(threshold_target_detection(0.0, 1.0, 0.01), -2.3263478740408408, 1e-9);
  for (double p : {0.5, 0.1, 0.01}) {
    const double w0 = threshold_target_detection(0.3, 1.7, p);
    EXPECT_NEAR(upper_mass(w0, 0.3, 1.7), 1.0 - p, 1e-6) << p;
  }
  EXPECT_THROW(threshold_target_detection(0.0, 1.0, 0.0), DomainError);
  EXPECT_THROW(threshold_target_detection(0.0, 1.0, 1.0), DomainError);
}

TEST(NegativeMean, Examples) {
  ScatterState s;
  s.n1 = s.n2 = 3;
  s.m1 = Vec::Constant(2, 1.0);
  s.m2 = Vec::Zero(2);
  Vec w(2);
  w << 0.3, -2.0;
  EXPECT_EQ(threshold_negative_mean(s, w), 0.0);
  s.m2 << 0.25, 0.5;
  EXPECT_EQ(threshold_negative_mean(s, w), w.dot(s.m2));
  // A symmetric projected negative distribution is split in half.
  EXPECT_NEAR(upper_mass(threshold_negative_mean(s, w), w.dot(s.m2), 0.8), 0.5, 1e-9);
  s.n2 = 0;
  EXPECT_THROW(threshold_negative_mean(s, w), EmptyClass);
}

TEST(AsymmetricMin, NeverAboveNegativeMean) {
  std::mt19937_64 rng(49);
  for (int rep = 0; rep < 30; ++rep) {
    const Stream st = binary_stream(5, 80, rng);
    const auto s = batch_state(st, 80, -1.0);
    const Vec w = lda_direction(s);
    for (double p : {0.5, 0.1, 0.01}) {
      const auto a = compute_threshold(s, w, Criterion::asymmetric_min(p));
      EXPECT_LE(a.value, threshold_negative_mean(s, w));
      EXPECT_EQ(a.value, std::min(threshold_target_detection(s, w, p), threshold_negative_mean(s, w)));
    }
  }
}

TEST(CriterionParse, RoundTrip) {
  for (const char* text : {"fisher", "equal-density", "neg-mean", "target-detect:0.01",
                           "asym-min:0.05"}) {
    EXPECT_EQ(Criterion::parse(text).to_string(), text);
  }
  EXPECT_EQ(Criterion::parse("asym-min"), Criterion::asymmetric_min(0.01));
  for (const char* bad : {"", "target-detect", "target-detect:2", "neg-mean:0.1", "asym-min:x", "bayes"})
    EXPECT_THROW(Criterion::parse(bad), ConfigError) << bad;
}

TEST(OnlineInsert, SeparableStreamClassifiesInsertedSample) {
  // Positives fire learners 0-1, negatives fire 2-3, with a little noise.
  std::mt19937_64 rng(50);
  std::uniform_real_distribution<double> u(0, 1);
  Stream st{Eigen::MatrixXd(4, 200), std::vector<Label>(200)};
  for (int j = 0; j < 200; ++j) {
    const bool pos = j % 2 == 0;
    st.labels[j] = pos ? Label::Positive : Label::Negative;
    for (int i = 0; i < 4; ++i) st.x(i, j) = ((i < 2) == pos) == (u(rng) < 0.9) ? 1.0 : 0.0;
  }
  auto clf = initial_classifier(st, 20, Criterion::equal_density());
  Vec pos(4), neg(4);
  pos << 1, 1, 0, 0;
  neg << 0, 0, 1, 1;
  for (int j = 20; j < 200; ++j) {
    clf.insert(st.x.col(j), st.labels[j]);
    ASSERT_TRUE(clf.accepts(pos));
    ASSERT_FALSE(clf.accepts(neg));
  }
  clf.insert(pos, Label::Positive);
  EXPECT_TRUE(clf.accepts(pos));
}

TEST(OnlineInsert, ThreeHundredInsertsMatchBatch) {
  std::mt19937_64 rng(51);
  for (int rep = 0; rep < 5; ++rep) {
    const Stream st = binary_stream(15, 400, rng);
    auto clf = initial_classifier(st, 100, Criterion::asymmetric_min());
    for (int j = 100; j < 400; ++j) clf.insert(st.x.col(j), st.labels[j]);
    const auto batch = batch_state(st, 400, clf.state().ridge);
    const Vec w = lda_direction(batch);
    EXPECT_LE(rel_frobenius(clf.model().w, w), 1e-6);
    EXPECT_LE(rel_frobenius(clf.state().sb, batch.sb), 1e-6);
    EXPECT_LE(rel_frobenius(clf.state().sw_inv, batch.sw_inv), 1e-6);
    EXPECT_NEAR(clf.model().w0, compute_threshold(batch, w, Criterion::asymmetric_min()).value,
                1e-6 * (1 + std::abs(clf.model().w0)));
    EXPECT_EQ(clf.insert_count(), 300u);
  }
}

TEST(OnlineInsert, EmptyStreamIsBitwiseNoOp) {
  std::mt19937_64 rng(52);
  const Stream st = binary_stream(5, 40, rng);
  const auto a = initial_classifier(st, 40, Criterion::fisher());
  const auto b = initial_classifier(st, 40, Criterion::fisher());
  EXPECT_EQ(a.model().w, b.model().w);
  EXPECT_EQ(a.model().w0, b.model().w0);
  EXPECT_EQ(a.state().sw_inv, b.state().sw_inv);
  EXPECT_EQ(a.insert_count(), 0u);
}

TEST(OnlineInsert, FailedInsertLeavesStateUntouched) {
  std::mt19937_64 rng(53);
  const Stream st = binary_stream(4, 50, rng);
  auto clf = initial_classifier(st, 50, Criterion::fisher());
  const ScatterState before = clf.state();
  const LinearModel mbefore = clf.model();
  EXPECT_THROW(clf.insert(Vec::Zero(3), Label::Positive), DimensionMismatch);
  Vec bad = Vec::Zero(4);
  bad(1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_ANY_THROW(clf.insert(bad, Label::Negative));
  EXPECT_EQ(clf.state().m1, before.m1);
  EXPECT_EQ(clf.state().m2, before.m2);
  EXPECT_EQ(clf.state().n2, before.n2);
  EXPECT_EQ(clf.state().sigma2, before.sigma2);
  EXPECT_EQ(clf.state().sw_inv, before.sw_inv);
  EXPECT_EQ(clf.model().w, mbefore.w);
  EXPECT_EQ(clf.insert_count(), 0u);
}

TEST(OnlineInsert, StreamOrderInvariance) {
  std::mt19937_64 rng(54);
  const Stream st = binary_stream(10, 260, rng);
  auto a = initial_classifier(st, 60, Criterion::fisher());
  auto b = initial_classifier(st, 60, Criterion::fisher());
  std::vector<int> order;
  for (int j = 60; j < 260; ++j) order.push_back(j);
  for (int j : order) a.insert(st.x.col(j), st.labels[j]);
  std::shuffle(order.begin(), order.end(), rng);
  for (int j : order) b.insert(st.x.col(j), st.labels[j]);
  EXPECT_LE(rel_frobenius(a.state().sb, b.state().sb), 1e-8);
  EXPECT_LE(rel_frobenius(a.state().sigma1, b.state().sigma1), 1e-8);
  EXPECT_LE(rel_frobenius(a.state().sigma2, b.state().sigma2), 1e-8);
}

TEST(OnlineInsert, TrainClassifierContinuesOnline) {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t m = 40, n = 300;
  std::vector<double> raw(m * n);
  std::vector<Label> labels(n);
  for (std::size_t j = 0; j < n; ++j) labels[j] = j % 3 == 0 ? Label::Positive : Label::Negative;
  for (std::size_t f = 0; f < m; ++f)
    for (std::size_t j = 0; j < n; ++j)
      raw[f * n + j] = g(rng) + (is_positive(labels[j]) ? 0.05 * f : 0.0);
  const std::size_t n0 = 100;
  auto clf = train_classifier(m, std::span<const Label>(labels.data(), n0), 10,
                              Criterion::equal_density(),
                              [&](std::size_t f, std::size_t j) { return raw[f * n + j]; });
  for (std::size_t j = n0; j < n; ++j)
    clf.insert_raw([&](std::size_t f) { return raw[f * n + j]; }, labels[j]);
  // Oracle: batch scatter of the fixed stumps over every sample seen.
  Eigen::MatrixXd x(10, n);
  for (std::size_t j = 0; j < n; ++j)
    x.col(j) = clf.project([&](std::size_t f) { return raw[f * n + j]; });
  const auto batch = scatter_from_samples(x, labels, kDefaultRidge, clf.state().ridge);
  EXPECT_LE(rel_frobenius(clf.model().w, lda_direction(batch)), 1e-6);
}
