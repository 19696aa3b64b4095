#ifndef APELOSS_RANKING_HPP_
#define APELOSS_RANKING_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "apeloss/core.hpp"

namespace apeloss {

struct RankPair {
  double rank_plus = 1.0;
  double rank_minus = 0.0;
};

/// Per-anchor diagnostics gathered while evaluating the loss.
struct RankStats {
  std::size_t anchor_index = 0;
  double rank_plus = 1.0;
  double rank_minus = 0.0;
  // Absent when the anchor has no valid negatives under ValidNegCount.
  std::optional<double> balance_constant;
  std::size_t n_neg = 0;
  std::size_t active_pairs = 0;
};

/// Smoothed rank of positive `u`: rank_plus counts the other positives
/// through H(P_j - P_u; rank_delta) plus one for u itself, rank_minus counts
/// negatives the same way. Ignored samples take no part.
RankPair compute_ranks(const ScoreSet& set, std::size_t u, double rank_delta);

/// Hard-pair indicator: true iff p_v - p_u > threshold (strict).
bool valid_pair_indicator(double p_u, double p_v, double threshold);

/// Number of negatives v for which valid_pair_indicator(P_u, P_v, T) holds.
std::size_t valid_negative_count(const ScoreSet& set, std::size_t u,
                                 double threshold);

/// Indices of the budget.q highest scoring negatives, ties broken towards
/// the smaller index. The result is sorted by ascending index.
std::vector<std::size_t> select_top_q_negatives(const ScoreSet& set,
                                                const PairBudget& budget);

/// Normaliser for anchor u. RankSum: rank_plus + rank_minus (>= 1).
/// ValidNegCount: N_neg, or nullopt when no negative qualifies.
std::optional<double> balance_constant(const ScoreSet& set, std::size_t u,
                                       const LossConfig& config);

}  // namespace apeloss

#endif  // APELOSS_RANKING_HPP_
