#include "apeloss/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace apeloss {

namespace {

void require_positive_anchor(const ScoreSet& set, std::size_t u) {
  if (!set.is_positive(u)) {
    throw std::invalid_argument("index " + std::to_string(u) +
                                " is not a positive sample");
  }
}

void require_threshold(double threshold) {
  if (!std::isfinite(threshold) || threshold < 0.0) {
    throw std::invalid_argument("threshold must be finite and >= 0");
  }
}

}  // namespace

RankPair compute_ranks(const ScoreSet& set, std::size_t u, double rank_delta) {
  require_positive_anchor(set, u);
  if (!std::isfinite(rank_delta) || !(rank_delta > 0.0)) {
    throw std::invalid_argument("rank_delta must be positive");
  }
  const auto scores = set.scores();
  const auto labels = set.labels();
  const double p_u = scores[u];
  RankPair r;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j == u) continue;
    switch (labels[j]) {
      case Label::Positive:
        r.rank_plus += step_distance(scores[j] - p_u, rank_delta);
        break;
      case Label::Negative:
        r.rank_minus += step_distance(scores[j] - p_u, rank_delta);
        break;
      case Label::Ignore:
        break;
    }
  }
  return r;
}

bool valid_pair_indicator(double p_u, double p_v, double threshold) {
  if (!std::isfinite(p_u) || !std::isfinite(p_v)) {
    throw std::invalid_argument("scores must be finite");
  }
  require_threshold(threshold);
  return p_v - p_u > threshold;
}

std::size_t valid_negative_count(const ScoreSet& set, std::size_t u,
                                 double threshold) {
  require_positive_anchor(set, u);
  require_threshold(threshold);
  const auto scores = set.scores();
  const auto labels = set.labels();
  std::size_t count = 0;
  for (std::size_t v = 0; v < scores.size(); ++v) {
    if (labels[v] == Label::Negative && scores[v] - scores[u] > threshold) {
      ++count;
    }
  }
  return count;
}

std::vector<std::size_t> select_top_q_negatives(const ScoreSet& set,
                                                const PairBudget& budget) {
  budget.validate();
  std::vector<std::size_t> negatives = set.negative_indices();
  const std::size_t keep = budget.admitted(negatives.size());
  if (keep == negatives.size()) return negatives;

  const auto scores = set.scores();
  const auto higher = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::nth_element(negatives.begin(), negatives.begin() + keep,
                   negatives.end(), higher);
  negatives.resize(keep);
  std::sort(negatives.begin(), negatives.end());
  return negatives;
}

std::optional<double> balance_constant(const ScoreSet& set, std::size_t u,
                                       const LossConfig& config) {
  if (config.filter.mode == FilterMode::RankSum) {
    const RankPair r = compute_ranks(set, u, config.rank_delta);
    return r.rank_plus + r.rank_minus;
  }
  const std::size_t n_neg =
      valid_negative_count(set, u, config.filter.threshold);
  if (n_neg == 0) return std::nullopt;
  return static_cast<double>(n_neg);
}

}  // namespace apeloss
