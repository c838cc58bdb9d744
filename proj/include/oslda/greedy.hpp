#pragma once

// Greedy forward selection of weak learners by maximal two-class Fisher
// separation. The selected block of the within-class scatter is kept as an
// explicit inverse and grown by Schur-complement extension, so scoring a
// candidate costs O(k^2) and committing one costs O(k^2 + M N / 64).

#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oslda/error.hpp"
#include "oslda/linalg.hpp"
#include "oslda/parallel.hpp"
#include "oslda/scatter.hpp"
#include "oslda/stump.hpp"
#include "oslda/threshold.hpp"

namespace oslda {

/// Relative Schur-complement floor below which a candidate is treated as
/// linearly dependent on the selected set.
inline constexpr double kDependenceTolerance = 1e-9;

/// Sparse linear discriminant: positive iff w^T x > w0, x being the
/// responses of the selected learners in selection order.
struct LinearModel {
  std::vector<std::size_t> selected;
  Vec w;
  double w0 = 0.0;

  double margin(const Vec& x) const { return w.dot(x) - w0; }
  bool accepts(const Vec& x) const { return w.dot(x) > w0; }
};

class GreedySelector {
 public:
  explicit GreedySelector(const FeatureTable& table) : table_(table) {
    const std::size_t n = table.samples();
    for (Label l : table.labels()) (is_positive(l) ? n1_ : n2_) += 1;
    if (n1_ == 0 || n2_ == 0) throw EmptyClass("greedy selection needs both classes");
    words_ = (n + 63) / 64;
    const std::size_t m = table.learners();
    bits1_.assign(m * words_, 0);
    bits2_.assign(m * words_, 0);
    count1_.assign(m, 0.0);
    count2_.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const auto row = table.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (!row[j]) continue;
        auto& bits = is_positive(table.labels()[j]) ? bits1_ : bits2_;
        bits[i * words_ + j / 64] |= std::uint64_t{1} << (j % 64);
        (is_positive(table.labels()[j]) ? count1_ : count2_)[i] += 1.0;
      }
    }
    cross_.assign(m, {});
    chosen_.assign(m, false);
    inv_.resize(0, 0);
    w_.resize(0);
  }

  std::size_t learners() const { return table_.learners(); }
  const std::vector<std::size_t>& selected() const { return selected_; }
  /// S_w^{-1} d over the selected block, unregularized.
  const Vec& weights() const { return w_; }

  /// Fisher separation of the current set, (N1 N2 / N) d^T S_w^{-1} d.
  double score() const { return prefactor() * quad_; }
  const std::vector<double>& score_trace() const { return trace_; }

  double mean_difference(std::size_t i) const { return count1_[i] / n1_ - count2_[i] / n2_; }

  /// Smallest id of a learner that splits the classes exactly (zero
  /// within-class scatter, distinct means). Its separation is unbounded, so
  /// the Schur extension cannot score it.
  std::optional<std::size_t> perfect_candidate() const {
    for (std::size_t i = 0; i < learners(); ++i)
      if (!chosen_[i] && within_scatter(i, i) == 0.0 && mean_difference(i) != 0.0) return i;
    return std::nullopt;
  }

  /// Within-class scatter entry between learners i and j from class-wise
  /// co-occurrence counts.
  double within_scatter(std::size_t i, std::size_t j) const {
    std::size_t c1 = 0, c2 = 0;
    const std::uint64_t* a1 = &bits1_[i * words_];
    const std::uint64_t* b1 = &bits1_[j * words_];
    const std::uint64_t* a2 = &bits2_[i * words_];
    const std::uint64_t* b2 = &bits2_[j * words_];
    for (std::size_t k = 0; k < words_; ++k) {
      c1 += static_cast<std::size_t>(std::popcount(a1[k] & b1[k]));
      c2 += static_cast<std::size_t>(std::popcount(a2[k] & b2[k]));
    }
    return (static_cast<double>(c1) - count1_[i] * count1_[j] / n1_) +
           (static_cast<double>(c2) - count2_[i] * count2_[j] / n2_);
  }

  /// Best separation reachable by adding `candidate` with re-optimized
  /// weights, or nullopt when it is already selected or linearly dependent.
  std::optional<double> candidate_score(std::size_t candidate) const {
    if (candidate >= learners()) throw OutOfBounds("candidate id out of range");
    if (chosen_[candidate]) return std::nullopt;
    const auto ext = extension(candidate);
    if (!ext) return std::nullopt;
    return prefactor() * (quad_ + ext->e * ext->e / ext->schur);
  }

  /// Argmax of candidate_score over unselected learners; ties go to the
  /// smallest id. Candidates are scored concurrently.
  std::optional<std::size_t> best_candidate() const {
    const std::size_t m = learners();
    std::vector<double> scores(m, -std::numeric_limits<double>::infinity());
    std::vector<char> valid(m, 0);
    parallel_for(m, [&](std::size_t i) {
      if (auto s = candidate_score(i)) {
        scores[i] = *s;
        valid[i] = 1;
      }
    });
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < m; ++i)
      if (valid[i] && (!best || scores[i] > scores[*best])) best = i;
    return best;
  }

  /// Commits `candidate`: extends the block inverse and the weight vector.
  void add(std::size_t candidate) {
    if (candidate >= learners()) throw OutOfBounds("candidate id out of range");
    if (chosen_[candidate]) throw ConfigError("learner already selected");
    const auto ext = extension(candidate);
    if (!ext) throw InsufficientRank("candidate is linearly dependent on the selected set");

    const Eigen::Index k = static_cast<Eigen::Index>(selected_.size());
    const double inv_s = 1.0 / ext->schur;
    Eigen::MatrixXd grown(k + 1, k + 1);
    grown.topLeftCorner(k, k) = inv_ + inv_s * ext->ab * ext->ab.transpose();
    grown.topRightCorner(k, 1) = -inv_s * ext->ab;
    grown.bottomLeftCorner(1, k) = -inv_s * ext->ab.transpose();
    grown(k, k) = inv_s;
    symmetrize(grown);
    inv_ = std::move(grown);

    Vec w(k + 1);
    w.head(k) = w_ - ext->ab * (ext->e * inv_s);
    w(k) = ext->e * inv_s;
    w_ = std::move(w);
    quad_ += ext->e * ext->e * inv_s;

    selected_.push_back(candidate);
    chosen_[candidate] = true;
    // Every remaining candidate gains one cross-scatter entry with the newcomer.
    parallel_for(learners(), [&](std::size_t j) {
      if (!chosen_[j]) cross_[j].push_back(within_scatter(j, candidate));
    });
    cross_[candidate].clear();
    trace_.push_back(score());
  }

 private:
  struct Extension {
    Vec ab;        // A^{-1} b
    double schur;  // c - b^T A^{-1} b
    double e;      // d_j - b^T A^{-1} d_S
  };

  double prefactor() const { return n1_ * n2_ / (n1_ + n2_); }

  std::optional<Extension> extension(std::size_t j) const {
    const double c = within_scatter(j, j);
    if (!(c > 0.0)) return std::nullopt;
    const auto& b_raw = cross_[j];
    const Eigen::Index k = static_cast<Eigen::Index>(selected_.size());
    Extension ext;
    if (k == 0) {
      ext.ab.resize(0);
      ext.schur = c;
      ext.e = mean_difference(j);
    } else {
      const Eigen::Map<const Vec> b(b_raw.data(), k);
      ext.ab = inv_ * b;
      ext.schur = c - b.dot(ext.ab);
      ext.e = mean_difference(j) - b.dot(w_);
    }
    if (!(ext.schur > kDependenceTolerance * c)) return std::nullopt;
    return ext;
  }

  const FeatureTable& table_;
  double n1_ = 0.0, n2_ = 0.0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits1_, bits2_;
  std::vector<double> count1_, count2_;
  std::vector<std::vector<double>> cross_;  // cross_[j][t] = S_w(j, selected_[t])
  std::vector<bool> chosen_;
  std::vector<std::size_t> selected_;
  Eigen::MatrixXd inv_;  // inverse of the selected block of S_w
  Vec w_;                // inv_ * d_S
  double quad_ = 0.0;    // d_S^T inv_ d_S
  std::vector<double> trace_;
};

struct GreedyResult {
  LinearModel model;
  ScatterState state;
  std::vector<double> score_trace;  // separation after each addition
};

/// Finalizes a selection: batch scatter over the selected rows, LDA weights
/// and a threshold from `criterion`.
inline GreedyResult finalize_selection(const FeatureTable& table,
                                       std::vector<std::size_t> selected,
                                       const Criterion& criterion, double lambda = kDefaultRidge) {
  GreedyResult out;
  out.state = scatter_from_data(table, selected, lambda);
  out.model.selected = std::move(selected);
  out.model.w = lda_direction(out.state);
  out.model.w0 = compute_threshold(out.state, out.model.w, criterion).value;
  return out;
}

/// Adds the best-separating learner `count` times. Throws InsufficientRank
/// when fewer than `count` non-degenerate learners exist.
inline GreedyResult greedy_select(const FeatureTable& table, std::size_t count,
                                  const Criterion& criterion = Criterion::fisher(),
                                  double lambda = kDefaultRidge) {
  if (count == 0) throw ConfigError("learner count must be >= 1");
  if (count > table.learners()) {
    throw InsufficientRank("asked for " + std::to_string(count) + " learners, table has " +
                           std::to_string(table.learners()));
  }
  GreedySelector sel(table);
  while (sel.selected().size() < count) {
    const auto best = sel.best_candidate();
    if (!best) {
      throw InsufficientRank("only " + std::to_string(sel.selected().size()) +
                             " non-degenerate learners available, " + std::to_string(count) +
                             " requested");
    }
    sel.add(*best);
  }
  GreedyResult out = finalize_selection(table, sel.selected(), criterion, lambda);
  out.score_trace = sel.score_trace();
  return out;
}

}  // namespace oslda
