#pragma once

// Benchmark harness: batch vs online error curves on a train/test pair and
// per-insert timing of the online update against a scratch recompute.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "oslda/dataset.hpp"
#include "oslda/online.hpp"
#include "oslda/parallel.hpp"

#ifndef OSLDA_BUILD_FLAGS
#define OSLDA_BUILD_FLAGS "unknown"
#endif

namespace oslda::bench {

struct BenchConfig {
  std::size_t max_learners = 100;
  double initial_fraction = 0.3;
  std::vector<double> fractions{0.3, 0.5, 0.7};
  Criterion criterion = Criterion::fisher();
  std::uint64_t seed = 1;
  std::size_t repeats = 10;
  std::size_t interval = 50;  // inserts between error samples
  std::vector<std::size_t> time_sizes{500, 1000, 2000, 5000};
  std::size_t time_learners = 100;
  std::size_t time_reps = 5;
  std::size_t time_block = 100;
  double lambda = kDefaultRidge;

  /// Learner counts for the error-vs-k table.
  std::vector<std::size_t> k_grid() const {
    std::vector<std::size_t> ks;
    for (std::size_t k : {1, 2, 5, 10, 25, 50, 100, 200})
      if (k < max_learners) ks.push_back(k);
    ks.push_back(max_learners);
    return ks;
  }

  std::string canonical() const {
    std::ostringstream s;
    s << "T=" << max_learners << ";init=" << format_double(initial_fraction) << ";fr=";
    for (double f : fractions) s << format_double(f) << ' ';
    s << ";crit=" << criterion.to_string() << ";rep=" << repeats << ";int=" << interval << ";N=";
    for (std::size_t n : time_sizes) s << n << ' ';
    s << ";tT=" << time_learners << ";treps=" << time_reps << ";blk=" << time_block
      << ";lambda=" << format_double(lambda);
    return s.str();
  }
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash(const BenchConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.canonical())));
  return buf;
}

/// Comma-separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out << str();
  }
};

inline std::string fmt(double v) { return format_double(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }

inline double error_rate(const OnlineClassifier& c, const Dataset& test) {
  if (test.size() == 0) throw EmptyClass("empty test set");
  std::size_t wrong = 0;
  for (std::size_t j = 0; j < test.size(); ++j) {
    const bool acc = c.accepts(c.project([&](std::size_t f) { return test.at(j, f); }));
    wrong += acc != is_positive(test.labels[j]);
  }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

/// Stumps, greedy selection and LDA over the raw columns of `d`.
inline OnlineClassifier train_batch(const Dataset& d, std::size_t learners, const Criterion& crit,
                                    double lambda = kDefaultRidge) {
  return train_classifier(d.dim, d.labels, learners, crit,
                          [&](std::size_t f, std::size_t j) { return d.at(j, f); }, lambda);
}

struct CurvePoint {
  std::size_t inserted = 0;
  std::size_t seen = 0;  // initial + inserted
  double error = 0.0;
};

struct OnlineTrace {
  OnlineClassifier classifier;
  double initial_error = 0.0;
  std::vector<CurvePoint> curve;        // every `interval` inserts and at the end
  std::vector<CurvePoint> checkpoints;  // at the requested seen counts
};

/// Trains on `initial`, then inserts `stream` one sample at a time.
inline OnlineTrace train_online(const Dataset& train, const Dataset& test, std::span<const std::size_t> initial,
                                std::span<const std::size_t> stream, std::size_t learners,
                                const Criterion& crit, std::size_t interval,
                                std::span<const std::size_t> checkpoint_seen = {},
                                double lambda = kDefaultRidge) {
  OnlineTrace t{train_batch(train.subset(initial), learners, crit, lambda), 0.0, {}, {}};
  t.initial_error = error_rate(t.classifier, test);
  auto record = [&](std::size_t i) {
    const std::size_t seen = initial.size() + i;
    const bool at_interval = interval > 0 && i % interval == 0;
    const bool at_end = i == stream.size();
    const bool at_check = std::find(checkpoint_seen.begin(), checkpoint_seen.end(), seen) != checkpoint_seen.end();
    if (!at_interval && !at_end && !at_check) return;
    const CurvePoint p{i, seen, i == 0 ? t.initial_error : error_rate(t.classifier, test)};
    if (at_interval || at_end) t.curve.push_back(p);
    if (at_check) t.checkpoints.push_back(p);
  };
  record(0);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const std::size_t j = stream[i];
    t.classifier.insert_raw([&](std::size_t f) { return train.at(j, f); }, train.labels[j]);
    record(i + 1);
  }
  return t;
}

inline std::size_t count_for(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

struct ErrorReport {
  Table error_vs_k;
  Table error_vs_fraction;
  Table online_curve;
};

/// Error tables for one train/test pair. Repeat i uses seed + i; repeats run
/// concurrently, each owning its classifiers.
inline ErrorReport error_benchmark(const Dataset& train, const Dataset& test, const BenchConfig& cfg) {
  if (cfg.repeats == 0) throw ConfigError("repeats must be >= 1");
  if (cfg.max_learners == 0) throw ConfigError("learner count must be >= 1");
  if (train.dim != test.dim) throw DimensionMismatch("train and test dimensions differ");
  for (double f : cfg.fractions)
    if (!(f >= cfg.initial_fraction && f <= 1.0))
      throw ConfigError("checkpoint fractions must lie in [initial fraction, 1]");
  const std::string hash = config_hash(cfg);
  const std::string seed = std::to_string(cfg.seed);
  const std::size_t n = train.size();
  const auto ks = cfg.k_grid();

  std::vector<std::size_t> check_seen;
  for (double f : cfg.fractions) check_seen.push_back(count_for(f, n));

  // Batch on all training data: greedy order is prefix-consistent, so the
  // k-learner model is the leading block of the largest selection.
  std::vector<double> batch_k(ks.size());
  {
    const auto fits = train_stumps(train.dim, train.labels,
                                   [&](std::size_t f, std::size_t j) { return train.at(j, f); });
    std::vector<Stump> pool;
    for (const auto& f : fits) pool.push_back(f.stump);
    const FeatureTable table = build_feature_table(std::span<const Stump>(pool), train.labels,
                                                   [&](std::size_t f, std::size_t j) { return train.at(j, f); });
    const GreedyResult full = greedy_select(table, cfg.max_learners, cfg.criterion, cfg.lambda);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      std::vector<std::size_t> head(full.model.selected.begin(),
                                    full.model.selected.begin() + static_cast<std::ptrdiff_t>(ks[i]));
      GreedyResult g = finalize_selection(table, head, cfg.criterion, cfg.lambda);
      std::vector<Stump> chosen;
      for (std::size_t id : g.model.selected) chosen.push_back(pool[id]);
      const OnlineClassifier c(std::move(chosen), std::move(g.model), std::move(g.state), cfg.criterion);
      batch_k[i] = error_rate(c, test);
    }
  }

  struct Trial {
    std::vector<double> online_k;
    std::vector<double> online_frac, batch_frac;
    std::vector<CurvePoint> curve;
  };
  std::vector<Trial> trials(cfg.repeats);
  parallel_for(cfg.repeats, [&](std::size_t r) {
    Trial& tr = trials[r];
    const StreamSplit s = split_stream(n, cfg.initial_fraction, cfg.seed + r);
    std::vector<std::size_t> order = s.initial;
    order.insert(order.end(), s.stream.begin(), s.stream.end());
    for (std::size_t k : ks) {
      const bool main = k == cfg.max_learners;
      const auto t = train_online(train, test, s.initial, s.stream, k, cfg.criterion,
                                  main ? cfg.interval : 0, main ? std::span<const std::size_t>(check_seen)
                                                                : std::span<const std::size_t>{},
                                  cfg.lambda);
      tr.online_k.push_back(t.curve.back().error);
      if (!main) continue;
      tr.curve = t.curve;
      for (std::size_t seen : check_seen) {
        const auto it = std::find_if(t.checkpoints.begin(), t.checkpoints.end(),
                                     [&](const CurvePoint& p) { return p.seen == seen; });
        tr.online_frac.push_back(it == t.checkpoints.end() ? t.initial_error : it->error);
        const std::span<const std::size_t> prefix(order.data(), seen);
        tr.batch_frac.push_back(error_rate(train_batch(train.subset(prefix), k, cfg.criterion, cfg.lambda), test));
      }
    }
  });

  auto mean = [&](auto get) {
    double s = 0.0;
    for (const auto& t : trials) s += get(t);
    return s / static_cast<double>(trials.size());
  };

  ErrorReport rep;
  rep.error_vs_k.header = {"config_hash", "seed", "learners", "batch_error", "online_error"};
  for (std::size_t i = 0; i < ks.size(); ++i)
    rep.error_vs_k.rows.push_back(
        {hash, seed, fmt(ks[i]), fmt(batch_k[i]), fmt(mean([&](const Trial& t) { return t.online_k[i]; }))});

  rep.error_vs_fraction.header = {"config_hash", "seed", "fraction", "samples", "online_error", "batch_error"};
  for (std::size_t i = 0; i < cfg.fractions.size(); ++i)
    rep.error_vs_fraction.rows.push_back({hash, seed, fmt(cfg.fractions[i]), fmt(check_seen[i]),
                                          fmt(mean([&](const Trial& t) { return t.online_frac[i]; })),
                                          fmt(mean([&](const Trial& t) { return t.batch_frac[i]; }))});

  rep.online_curve.header = {"config_hash", "seed", "inserted", "seen", "error"};
  for (std::size_t i = 0; i < trials[0].curve.size(); ++i)
    rep.online_curve.rows.push_back({hash, seed, fmt(trials[0].curve[i].inserted), fmt(trials[0].curve[i].seen),
                                     fmt(mean([&](const Trial& t) { return t.curve[i].error; }))});
  return rep;
}

// ---- timing ----

struct TimingPoint {
  std::size_t n = 0;
  double online_us = 0.0;  // median per-insert time
  double batch_us = 0.0;   // median scratch recompute time
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Binary responses of `t` learners; learner i fires with probability
/// depending on the class, so the scatter is well conditioned.
inline Eigen::MatrixXd synthetic_responses(std::size_t t, std::size_t n, std::vector<Label>& labels,
                                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p1(t), p2(t);
  for (std::size_t i = 0; i < t; ++i) {
    p1[i] = 0.3 + 0.4 * u(rng);
    p2[i] = 0.3 + 0.4 * u(rng);
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n));
  labels.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    labels[j] = j % 2 ? Label::Positive : Label::Negative;
    const auto& p = is_positive(labels[j]) ? p1 : p2;
    for (std::size_t i = 0; i < t; ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u(rng) < p[i];
  }
  return x;
}

/// Online per-insert time and scratch recompute time (scatter, inverse,
/// weights and threshold over all accumulated samples) at accumulated size n.
inline TimingPoint time_at(std::size_t n, std::size_t learners, std::size_t reps, std::size_t block,
                           const Criterion& crit, std::uint64_t seed, double lambda = kDefaultRidge) {
  using clock = std::chrono::steady_clock;
  std::mt19937_64 rng(seed);
  std::vector<Label> labels;
  const Eigen::MatrixXd x = synthetic_responses(learners, n + block, labels, rng);
  const Eigen::MatrixXd head = x.leftCols(static_cast<Eigen::Index>(n));
  const std::span<const Label> head_labels(labels.data(), n);

  ScatterState st = scatter_from_samples(head, head_labels, lambda);
  LinearModel model;
  for (std::size_t i = 0; i < learners; ++i) model.selected.push_back(i);
  model.w = lda_direction(st);
  model.w0 = compute_threshold(st, model.w, crit).value;
  std::vector<Stump> stumps;
  for (std::size_t i = 0; i < learners; ++i) stumps.push_back({i, 0.5, 1});
  const OnlineClassifier base(std::move(stumps), std::move(model), std::move(st), crit);

  TimingPoint tp;
  tp.n = n;
  std::vector<double> online, batch;
  double sink = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    OnlineClassifier c = base;
    const auto t0 = clock::now();
    for (std::size_t b = 0; b < block; ++b) {
      const Eigen::Index col = static_cast<Eigen::Index>(n + b);
      c.insert(x.col(col), labels[static_cast<std::size_t>(col)]);
    }
    const auto t1 = clock::now();
    online.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count() / static_cast<double>(block));
    sink += c.model().w0;

    const Eigen::MatrixXd all = x.leftCols(static_cast<Eigen::Index>(n + 1));
    const auto t2 = clock::now();
    const ScatterState s = scatter_from_samples(all, std::span<const Label>(labels.data(), n + 1), lambda);
    const Vec w = lda_direction(s);
    sink += compute_threshold(s, w, crit).value;
    const auto t3 = clock::now();
    batch.push_back(std::chrono::duration<double, std::micro>(t3 - t2).count());
  }
  if (!std::isfinite(sink)) throw DomainError("non-finite result in timing run");
  tp.online_us = median(online);
  tp.batch_us = median(batch);
  return tp;
}

inline Table timing_benchmark(const BenchConfig& cfg) {
  if (cfg.time_reps < 5) throw ConfigError("timing needs at least 5 repetitions");
  const std::string hash = config_hash(cfg);
  Table t;
  t.header = {"config_hash", "seed",      "n",    "learners", "online_us_median",
              "batch_us_median", "reps", "cpus", "build_flags"};
  for (std::size_t n : cfg.time_sizes) {
    const auto p = time_at(n, cfg.time_learners, cfg.time_reps, cfg.time_block, cfg.criterion, cfg.seed, cfg.lambda);
    t.rows.push_back({hash, std::to_string(cfg.seed), fmt(n), fmt(cfg.time_learners), fmt(p.online_us),
                      fmt(p.batch_us), fmt(cfg.time_reps), std::to_string(std::thread::hardware_concurrency()),
                      std::string("\"") + OSLDA_BUILD_FLAGS + "\""});
  }
  return t;
}

}  // namespace oslda::bench
