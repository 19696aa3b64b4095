#ifndef APELOSS_LOSS_HPP_
#define APELOSS_LOSS_HPP_

#include <cstddef>
#include <map>
#include <vector>

#include "apeloss/core.hpp"
#include "apeloss/ranking.hpp"

namespace apeloss {

struct ExecutionOptions {
  // Anchors are split into this many contiguous chunks. 1 is the
  // bit-reproducible sequential reference.
  unsigned threads = 1;
};

struct LossResult {
  double total_loss = 0.0;
  // Unreduced loss of every positive anchor, keyed by its index.
  std::map<std::size_t, double> per_anchor_loss;
  // d total_loss / d score, aligned with the ScoreSet. Empty for a
  // forward-only evaluation.
  std::vector<double> gradient;
  std::vector<RankStats> stats;
  // The pair budget dropped at least one negative.
  bool truncated = false;
  // The set had no positive sample; everything is zero.
  bool no_anchor = false;

  bool has_gradient() const { return !gradient.empty(); }
  std::size_t active_pairs() const;
};

/// Loss only. For every positive u the pair set is the top-Q negatives,
/// narrowed by the hard-pair indicator under ValidNegCount with
/// filter_numerator; l(u) = sum D(P_v - P_u) / BC(u). Anchors without a
/// balance constant or pairs contribute zero.
LossResult ape_loss_forward(const ScoreSet& set, const LossConfig& config,
                            const ExecutionOptions& exec = {});

/// Error-driven update: each pair hands its sigmoid error S(P_v - P_u)/BC(u)
/// to the negative and takes it from the anchor. Needs a lambda-based
/// distance; loss fields use the configured distance.
LossResult ape_loss_gradient_error_driven(const ScoreSet& set,
                                          const LossConfig& config,
                                          const ExecutionOptions& exec = {});

/// Analytic derivative of the cross-entropy pair loss with BC held
/// constant. Requires distance.kind == CESigmoid.
LossResult ape_loss_gradient_autodiff_ce(const ScoreSet& set,
                                         const LossConfig& config,
                                         const ExecutionOptions& exec = {});

/// Dispatches on config.gradient_form.
LossResult ape_loss_gradient(const ScoreSet& set, const LossConfig& config,
                             const ExecutionOptions& exec = {});

}  // namespace apeloss

#endif  // APELOSS_LOSS_HPP_
