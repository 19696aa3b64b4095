#ifndef APELOSS_SIM_HPP_
#define APELOSS_SIM_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "apeloss/core.hpp"
#include "apeloss/loss.hpp"

namespace apeloss::sim {

/// Gaussian score generator. Draws come from std::mt19937_64 seeded with
/// `seed`, turned into normals by the Box-Muller transform (one uniform pair
/// per normal, cosine branch). Positives are drawn first.
struct GeneratorSpec {
  std::uint64_t seed = 0;
  std::size_t n_pos = 50;
  std::size_t n_neg = 500;
  double pos_mean = 0.6;
  double pos_std = 0.1;
  double neg_mean = 0.4;
  double neg_std = 0.1;
  std::optional<std::pair<double, double>> clamp;

  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  double total_loss = 0.0;
  double ranking_ap = 0.0;
  double gradient_norm = 0.0;
  std::size_t active_pairs = 0;
};

struct Trajectory {
  std::vector<StepRecord> records;  // steps + 1 entries, step 0 first
  ScoreSet final_set;
};

/// Raised when the loss stops being finite during training.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Raised by ranking_ap on a set without positives.
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

ScoreSet generate_scores(const GeneratorSpec& spec);

/// Score-level average precision. Samples are ranked by descending score
/// (ties: ascending index), ignored samples are dropped, and the precision
/// at each positive's rank is averaged over positives.
double ranking_ap(const ScoreSet& set);

/// Plain gradient descent on the scores themselves:
/// scores <- scores - learning_rate * gradient, using config.gradient_form.
Trajectory simulate_training(const ScoreSet& initial, const LossConfig& config,
                             std::size_t steps, double learning_rate,
                             const ExecutionOptions& exec = {});

Trajectory simulate_training(const GeneratorSpec& spec,
                             const LossConfig& config, std::size_t steps,
                             double learning_rate,
                             const ExecutionOptions& exec = {});

}  // namespace apeloss::sim

#endif  // APELOSS_SIM_HPP_
