#include "apeloss/oracle.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace apeloss::oracle {

namespace {

using Real = long double;

struct AnchorRef {
  std::size_t u = 0;
  Real rank_plus = 1;
  Real rank_minus = 0;
  std::size_t n_neg = 0;
  std::optional<Real> bc;
  std::size_t active = 0;
  Real loss = 0;
};

Real ramp(Real x, Real delta) {
  if (x < -delta) return 0;
  if (x > delta) return 1;
  return (x + delta) / (2 * delta);
}

Real logistic(Real z) { return 1 / (1 + std::exp(-z)); }

Real pair_distance(const DistanceSpec& d, Real x) {
  const Real p = d.parameter;
  switch (d.kind) {
    case DistanceKind::Step:
      return ramp(x, p);
    case DistanceKind::Sigmoid:
      return logistic(p * x);
    case DistanceKind::CESigmoid:
      return std::log1p(std::exp(p * x)) / p;
  }
  return 0;
}

// True when fewer than q negatives outrank v (higher score, or equal score
// at a smaller index).
bool admitted(std::span<const double> scores, std::span<const Label> labels,
              std::size_t v, const PairBudget& budget) {
  if (budget.is_unlimited()) return true;
  std::size_t above = 0;
  for (std::size_t w = 0; w < scores.size(); ++w) {
    if (labels[w] != Label::Negative || w == v) continue;
    if (scores[w] > scores[v] || (scores[w] == scores[v] && w < v)) ++above;
  }
  return above < *budget.q;
}

std::vector<bool> admitted_negatives(std::span<const double> scores,
                                     std::span<const Label> labels,
                                     const PairBudget& budget) {
  std::vector<bool> in(scores.size(), false);
  for (std::size_t v = 0; v < scores.size(); ++v) {
    if (labels[v] == Label::Negative) {
      in[v] = admitted(scores, labels, v, budget);
    }
  }
  return in;
}

// One AnchorRef per positive, in index order. With `frozen` given, the
// balance constants are taken from it instead of being recomputed.
std::vector<AnchorRef> reference_anchors(
    std::span<const double> scores, std::span<const Label> labels,
    const LossConfig& config,
    const std::vector<AnchorRef>* frozen = nullptr) {
  const std::vector<bool> in_budget =
      admitted_negatives(scores, labels, config.budget);
  const bool negcount = config.filter.mode == FilterMode::ValidNegCount;
  const Real threshold = config.filter.threshold;

  std::vector<AnchorRef> anchors;
  for (std::size_t u = 0; u < scores.size(); ++u) {
    if (labels[u] != Label::Positive) continue;
    AnchorRef a;
    a.u = u;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      const Real diff = static_cast<Real>(scores[j]) - scores[u];
      if (labels[j] == Label::Positive && j != u) {
        a.rank_plus += ramp(diff, config.rank_delta);
      } else if (labels[j] == Label::Negative) {
        a.rank_minus += ramp(diff, config.rank_delta);
        if (diff > threshold) ++a.n_neg;
      }
    }
    if (frozen != nullptr) {
      a.bc = (*frozen)[anchors.size()].bc;
    } else if (negcount) {
      if (a.n_neg > 0) a.bc = static_cast<Real>(a.n_neg);
    } else {
      a.bc = a.rank_plus + a.rank_minus;
    }
    if (a.bc) {
      Real sum = 0;
      for (std::size_t v = 0; v < scores.size(); ++v) {
        if (labels[v] != Label::Negative || !in_budget[v]) continue;
        const Real diff = static_cast<Real>(scores[v]) - scores[u];
        if (negcount && config.filter.filter_numerator && !(diff > threshold)) {
          continue;
        }
        ++a.active;
        sum += pair_distance(config.distance, diff);
      }
      a.loss = sum / *a.bc;
    }
    anchors.push_back(a);
  }
  return anchors;
}

Real reduction_scale(const LossConfig& config, std::size_t n_anchor) {
  if (config.reduction == Reduction::Sum || n_anchor == 0) return 1;
  return Real(1) / static_cast<Real>(n_anchor);
}

Real reduced_loss(const std::vector<AnchorRef>& anchors,
                  const LossConfig& config) {
  Real total = 0;
  for (const AnchorRef& a : anchors) total += a.loss;
  return total * reduction_scale(config, anchors.size());
}

void require_size(const ScoreSet& set) {
  if (set.size() > kMaxBruteForceSize) {
    throw std::length_error("oracle refuses sets larger than " +
                            std::to_string(kMaxBruteForceSize) +
                            " elements (got " + std::to_string(set.size()) +
                            ")");
  }
}

}  // namespace

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

std::vector<double> finite_difference_gradient(const ScoreSet& set,
                                               const LossConfig& config,
                                               double epsilon) {
  if (!(epsilon >= kMinEpsilon && epsilon <= kMaxEpsilon)) {
    throw std::invalid_argument("epsilon must lie in [1e-9, 1e-3]");
  }
  config.validate();
  require_size(set);

  const auto labels = set.labels();
  const std::vector<AnchorRef> frozen =
      reference_anchors(set.scores(), labels, config);

  std::vector<double> probe(set.scores().begin(), set.scores().end());
  std::vector<double> grad(set.size(), 0.0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (labels[i] == Label::Ignore) continue;
    const double original = probe[i];
    const double up = original + epsilon;
    const double down = original - epsilon;
    probe[i] = up;
    const Real loss_up =
        reduced_loss(reference_anchors(probe, labels, config, &frozen), config);
    probe[i] = down;
    const Real loss_down =
        reduced_loss(reference_anchors(probe, labels, config, &frozen), config);
    probe[i] = original;
    grad[i] = static_cast<double>((loss_up - loss_down) /
                                  (static_cast<Real>(up) - down));
  }
  return grad;
}

GradCheckReport check_gradient(const ScoreSet& set, const LossConfig& config,
                               double epsilon, double tolerance) {
  if (config.distance.kind != DistanceKind::CESigmoid) {
    throw std::invalid_argument(
        "gradient check needs the ce-sigmoid distance; the error-driven "
        "update is not the derivative of other distances");
  }
  if (!std::isfinite(tolerance) || tolerance < 0.0) {
    throw std::invalid_argument("tolerance must be finite and >= 0");
  }
  GradCheckReport report;
  report.epsilon = epsilon;
  report.tolerance = tolerance;
  report.numeric = finite_difference_gradient(set, config, epsilon);
  report.analytic = ape_loss_gradient(set, config).gradient;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double err = relative_error(report.analytic[i], report.numeric[i]);
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = i;
    }
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

LossResult brute_force_loss(const ScoreSet& set, const LossConfig& config) {
  config.validate();
  require_size(set);
  const auto scores = set.scores();
  const auto labels = set.labels();

  LossResult result;
  const std::vector<AnchorRef> anchors =
      reference_anchors(scores, labels, config);
  const bool with_grad = config.distance.has_lambda();
  if (with_grad) result.gradient.assign(set.size(), 0.0);
  if (anchors.empty()) {
    result.no_anchor = true;
    return result;
  }

  const std::vector<bool> in_budget =
      admitted_negatives(scores, labels, config.budget);
  std::size_t n_negatives = 0;
  std::size_t n_admitted = 0;
  for (std::size_t v = 0; v < scores.size(); ++v) {
    if (labels[v] != Label::Negative) continue;
    ++n_negatives;
    if (in_budget[v]) ++n_admitted;
  }
  result.truncated = n_admitted < n_negatives;

  const Real scale = reduction_scale(config, anchors.size());
  result.total_loss = static_cast<double>(reduced_loss(anchors, config));

  std::vector<Real> grad(set.size(), 0);
  const bool negcount = config.filter.mode == FilterMode::ValidNegCount;
  for (const AnchorRef& a : anchors) {
    result.per_anchor_loss[a.u] = static_cast<double>(a.loss);
    RankStats s;
    s.anchor_index = a.u;
    s.rank_plus = static_cast<double>(a.rank_plus);
    s.rank_minus = static_cast<double>(a.rank_minus);
    s.n_neg = a.n_neg;
    if (a.bc) s.balance_constant = static_cast<double>(*a.bc);
    s.active_pairs = a.active;
    result.stats.push_back(s);

    if (!with_grad || !a.bc) continue;
    for (std::size_t v = 0; v < scores.size(); ++v) {
      if (labels[v] != Label::Negative || !in_budget[v]) continue;
      const Real diff = static_cast<Real>(scores[v]) - scores[a.u];
      if (negcount && config.filter.filter_numerator &&
          !(diff > config.filter.threshold)) {
        continue;
      }
      const Real g = logistic(config.distance.parameter * diff) / *a.bc;
      grad[v] += g;
      grad[a.u] -= g;
    }
  }
  if (with_grad) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
      result.gradient[i] = static_cast<double>(grad[i] * scale);
    }
  }
  return result;
}

}  // namespace apeloss::oracle
