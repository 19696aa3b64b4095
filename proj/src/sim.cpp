#include "apeloss/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace apeloss::sim {

namespace {

// Uniform in (0, 1] from the top 53 bits.
double open_unit(std::mt19937_64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = open_unit(rng);
  const double u2 = open_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

StepRecord record(std::size_t step, const ScoreSet& set,
                  const LossResult& result) {
  StepRecord r;
  r.step = step;
  r.total_loss = result.total_loss;
  r.ranking_ap = ranking_ap(set);
  r.gradient_norm = l2_norm(result.gradient);
  r.active_pairs = result.active_pairs();
  return r;
}

}  // namespace

void GeneratorSpec::validate() const {
  if (n_pos + n_neg == 0) {
    throw std::invalid_argument("generator needs at least one sample");
  }
  for (const double v : {pos_mean, pos_std, neg_mean, neg_std}) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("generator parameters must be finite");
    }
  }
  if (pos_std < 0.0 || neg_std < 0.0) {
    throw std::invalid_argument("standard deviations must be >= 0");
  }
  if (clamp && !(std::isfinite(clamp->first) && std::isfinite(clamp->second) &&
                 clamp->first < clamp->second)) {
    throw std::invalid_argument("clamp interval needs finite lo < hi");
  }
}

ScoreSet generate_scores(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = spec.n_pos + spec.n_neg;
  std::vector<double> scores(n);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i < spec.n_pos;
    double s = pos ? spec.pos_mean + spec.pos_std * standard_normal(rng)
                   : spec.neg_mean + spec.neg_std * standard_normal(rng);
    if (spec.clamp) s = std::clamp(s, spec.clamp->first, spec.clamp->second);
    scores[i] = s;
    labels[i] = pos ? Label::Positive : Label::Negative;
  }
  return ScoreSet(std::move(scores), std::move(labels));
}

double ranking_ap(const ScoreSet& set) {
  const auto scores = set.scores();
  const auto labels = set.labels();
  std::vector<std::size_t> order;
  order.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (labels[i] != Label::Ignore) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  double precision_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] != Label::Positive) continue;
    ++hits;
    precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  if (hits == 0) {
    throw UndefinedMetricError("ranking AP is undefined without positives");
  }
  return precision_sum / static_cast<double>(hits);
}

Trajectory simulate_training(const ScoreSet& initial, const LossConfig& config,
                             std::size_t steps, double learning_rate,
                             const ExecutionOptions& exec) {
  if (steps == 0) throw std::invalid_argument("steps must be >= 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw std::invalid_argument("learning rate must be finite and >= 0");
  }
  if (initial.positive_indices().empty()) {
    throw std::invalid_argument("simulation needs at least one positive");
  }

  Trajectory traj{{}, initial};
  traj.records.reserve(steps + 1);
  std::vector<double> scores(initial.scores().begin(), initial.scores().end());
  for (std::size_t step = 0;; ++step) {
    const LossResult result = ape_loss_gradient(traj.final_set, config, exec);
    if (!std::isfinite(result.total_loss)) {
      throw DivergenceError(step, "total loss became non-finite at step " +
                                      std::to_string(step));
    }
    traj.records.push_back(record(step, traj.final_set, result));
    if (step == steps) break;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] -= learning_rate * result.gradient[i];
    }
    try {
      traj.final_set = traj.final_set.with_scores(scores);
    } catch (const std::invalid_argument& e) {
      throw DivergenceError(step + 1, e.what());
    }
  }
  return traj;
}

Trajectory simulate_training(const GeneratorSpec& spec,
                             const LossConfig& config, std::size_t steps,
                             double learning_rate,
                             const ExecutionOptions& exec) {
  return simulate_training(generate_scores(spec), config, steps, learning_rate,
                           exec);
}

}  // namespace apeloss::sim
