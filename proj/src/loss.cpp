#include "apeloss/loss.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include "compensated_sum.hpp"

namespace apeloss {

namespace {

enum class GradMode { None, ErrorDriven, AutodiffCE };

struct AnchorOutcome {
  double loss = 0.0;
  double anchor_grad = 0.0;
  RankStats stats;
};

// Gradient accumulator over the whole set for one worker.
struct GradientBuffer {
  explicit GradientBuffer(std::size_t n) : entries(n) {}
  std::vector<detail::CompensatedSum> entries;
};

// -d l / d P_u contribution of one pair before the BC division, which is
// also +d l / d P_v.
double pair_error(GradMode mode, double x, double lambda) {
  if (mode == GradMode::ErrorDriven) return sigmoid_distance(x, lambda);
  return -ce_distance_grad_wrt_u(x, lambda);
}

AnchorOutcome evaluate_anchor(const ScoreSet& set, std::size_t u,
                              const LossConfig& config,
                              const std::vector<std::size_t>& candidates,
                              GradMode mode, GradientBuffer* grad) {
  const auto scores = set.scores();
  const double p_u = scores[u];
  const double threshold = config.filter.threshold;
  const bool negcount = config.filter.mode == FilterMode::ValidNegCount;
  const bool filter_pairs = negcount && config.filter.filter_numerator;

  AnchorOutcome out;
  const RankPair ranks = compute_ranks(set, u, config.rank_delta);
  out.stats.anchor_index = u;
  out.stats.rank_plus = ranks.rank_plus;
  out.stats.rank_minus = ranks.rank_minus;
  out.stats.n_neg = valid_negative_count(set, u, threshold);
  if (negcount) {
    if (out.stats.n_neg > 0) {
      out.stats.balance_constant = static_cast<double>(out.stats.n_neg);
    }
  } else {
    out.stats.balance_constant = ranks.rank_plus + ranks.rank_minus;
  }
  if (!out.stats.balance_constant) return out;
  const double bc = *out.stats.balance_constant;

  detail::CompensatedSum loss_sum;
  detail::CompensatedSum anchor_grad;
  for (const std::size_t v : candidates) {
    const double x = scores[v] - p_u;
    if (filter_pairs && !(x > threshold)) continue;
    ++out.stats.active_pairs;
    loss_sum.add(distance_value(config.distance, x));
    if (grad != nullptr) {
      const double g = pair_error(mode, x, config.distance.parameter) / bc;
      anchor_grad.add(-g);
      grad->entries[v].add(g);
    }
  }
  out.loss = loss_sum.value() / bc;
  out.anchor_grad = anchor_grad.value();
  return out;
}

LossResult evaluate(const ScoreSet& set, const LossConfig& config,
                    const ExecutionOptions& exec, GradMode mode) {
  config.validate();
  if (mode != GradMode::None && !config.distance.has_lambda()) {
    throw std::invalid_argument(
        "gradient evaluation needs a lambda-based distance (sigmoid or "
        "ce-sigmoid)");
  }
  if (mode == GradMode::AutodiffCE &&
      config.distance.kind != DistanceKind::CESigmoid) {
    throw std::invalid_argument(
        "autodiff-ce gradient requires the ce-sigmoid distance");
  }

  LossResult result;
  const bool want_grad = mode != GradMode::None;
  if (want_grad) result.gradient.assign(set.size(), 0.0);

  const std::vector<std::size_t> positives = set.positive_indices();
  if (positives.empty()) {
    result.no_anchor = true;
    return result;
  }
  const std::size_t n_negatives = set.negative_indices().size();
  const std::vector<std::size_t> candidates =
      select_top_q_negatives(set, config.budget);
  result.truncated = candidates.size() < n_negatives;

  const std::size_t n_anchor = positives.size();
  const std::size_t n_workers = std::clamp<std::size_t>(
      exec.threads == 0 ? 1 : exec.threads, 1, n_anchor);
  std::vector<AnchorOutcome> outcomes(n_anchor);
  std::vector<GradientBuffer> buffers;
  if (want_grad) buffers.assign(n_workers, GradientBuffer(set.size()));

  const auto run_chunk = [&](std::size_t w) {
    const std::size_t begin = n_anchor * w / n_workers;
    const std::size_t end = n_anchor * (w + 1) / n_workers;
    GradientBuffer* grad = want_grad ? &buffers[w] : nullptr;
    for (std::size_t a = begin; a < end; ++a) {
      outcomes[a] =
          evaluate_anchor(set, positives[a], config, candidates, mode, grad);
    }
  };
  if (n_workers == 1) {
    run_chunk(0);
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
      workers.emplace_back(run_chunk, w);
    }
  }

  const double scale = config.reduction == Reduction::MeanOverPositives
                           ? 1.0 / static_cast<double>(n_anchor)
                           : 1.0;
  detail::CompensatedSum total;
  result.stats.reserve(n_anchor);
  for (const AnchorOutcome& o : outcomes) {
    total.add(o.loss);
    result.per_anchor_loss.emplace(o.stats.anchor_index, o.loss);
    result.stats.push_back(o.stats);
  }
  result.total_loss = total.value() * scale;

  if (want_grad) {
    for (std::size_t w = 1; w < n_workers; ++w) {
      for (std::size_t i = 0; i < set.size(); ++i) {
        buffers[0].entries[i].merge(buffers[w].entries[i]);
      }
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
      result.gradient[i] = buffers[0].entries[i].value() * scale;
    }
    for (const AnchorOutcome& o : outcomes) {
      result.gradient[o.stats.anchor_index] = o.anchor_grad * scale;
    }
  }
  return result;
}

}  // namespace

std::size_t LossResult::active_pairs() const {
  std::size_t n = 0;
  for (const RankStats& s : stats) n += s.active_pairs;
  return n;
}

LossResult ape_loss_forward(const ScoreSet& set, const LossConfig& config,
                            const ExecutionOptions& exec) {
  return evaluate(set, config, exec, GradMode::None);
}

LossResult ape_loss_gradient_error_driven(const ScoreSet& set,
                                          const LossConfig& config,
                                          const ExecutionOptions& exec) {
  return evaluate(set, config, exec, GradMode::ErrorDriven);
}

LossResult ape_loss_gradient_autodiff_ce(const ScoreSet& set,
                                         const LossConfig& config,
                                         const ExecutionOptions& exec) {
  return evaluate(set, config, exec, GradMode::AutodiffCE);
}

LossResult ape_loss_gradient(const ScoreSet& set, const LossConfig& config,
                             const ExecutionOptions& exec) {
  return config.gradient_form == GradientForm::ErrorDriven
             ? ape_loss_gradient_error_driven(set, config, exec)
             : ape_loss_gradient_autodiff_ce(set, config, exec);
}

}  // namespace apeloss
