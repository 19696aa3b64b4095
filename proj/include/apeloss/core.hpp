#ifndef APELOSS_CORE_HPP_
#define APELOSS_CORE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace apeloss {

enum class Label { Positive, Negative, Ignore };

/// Confidence scores paired with positive/negative/ignore labels.
///
/// Construction validates that the two vectors have equal, non-zero length
/// and that every score is finite; a ScoreSet is therefore always usable as
/// the universe over which anchor/negative pairs are formed.
class ScoreSet {
 public:
  ScoreSet(std::vector<double> scores, std::vector<Label> labels);

  std::size_t size() const { return scores_.size(); }
  std::span<const double> scores() const { return scores_; }
  std::span<const Label> labels() const { return labels_; }
  double score(std::size_t i) const { return scores_[i]; }
  Label label(std::size_t i) const { return labels_[i]; }

  bool is_positive(std::size_t i) const {
    return i < size() && labels_[i] == Label::Positive;
  }

  std::vector<std::size_t> positive_indices() const;
  std::vector<std::size_t> negative_indices() const;

  /// Returns a copy with replaced scores; labels are kept. Throws if the new
  /// scores break the invariants.
  ScoreSet with_scores(std::vector<double> scores) const;

 private:
  std::vector<double> scores_;
  std::vector<Label> labels_;
};

enum class DistanceKind { Step, Sigmoid, CESigmoid };

inline constexpr double kDefaultLambda = 8.0;
inline constexpr double kDefaultDelta = 0.5;
inline constexpr double kDefaultThreshold = 0.25;
inline constexpr std::size_t kDefaultPairBudget = 100000;

struct DistanceSpec {
  DistanceKind kind = DistanceKind::CESigmoid;
  // delta for Step, lambda for Sigmoid and CESigmoid.
  double parameter = kDefaultLambda;

  static DistanceSpec step(double delta) { return {DistanceKind::Step, delta}; }
  static DistanceSpec sigmoid(double lambda) {
    return {DistanceKind::Sigmoid, lambda};
  }
  static DistanceSpec ce_sigmoid(double lambda) {
    return {DistanceKind::CESigmoid, lambda};
  }

  bool has_lambda() const { return kind != DistanceKind::Step; }
  void validate() const;
};

enum class FilterMode { RankSum, ValidNegCount };

struct FilterSpec {
  FilterMode mode = FilterMode::RankSum;
  double threshold = kDefaultThreshold;
  // ValidNegCount only: also drop pairs failing the indicator from the loss sum.
  bool filter_numerator = true;

  void validate() const;
};

struct PairBudget {
  std::optional<std::size_t> q = kDefaultPairBudget;

  static PairBudget unlimited() { return PairBudget{std::nullopt}; }
  static PairBudget bounded(std::size_t q) { return PairBudget{q}; }

  bool is_unlimited() const { return !q.has_value(); }
  /// Number of negatives admitted out of `available`.
  std::size_t admitted(std::size_t available) const {
    return q && *q < available ? *q : available;
  }
  void validate() const;
};

enum class GradientForm { ErrorDriven, AutodiffCE };
enum class Reduction { MeanOverPositives, Sum };

struct LossConfig {
  DistanceSpec distance;
  FilterSpec filter;
  PairBudget budget;
  GradientForm gradient_form = GradientForm::ErrorDriven;
  Reduction reduction = Reduction::MeanOverPositives;
  double rank_delta = kDefaultDelta;

  void validate() const;
};

// Distance functions. x is always the score difference P_v - P_u of a
// (positive u, negative v) pair. All throw std::invalid_argument on a
// non-finite x or a non-positive parameter.

/// Symmetric linear ramp clamp((x + delta) / (2 delta), 0, 1).
double step_distance(double x, double delta);

/// Logistic 1 / (1 + exp(-lambda x)).
double sigmoid_distance(double x, double lambda);

/// d/dP_u of sigmoid_distance(P_v - P_u) = -lambda S (1 - S).
double sigmoid_distance_grad_wrt_u(double x, double lambda);

/// Cross-entropy wrapper -(1/lambda) log(1 - S(x)), evaluated as
/// softplus(lambda x) / lambda.
double ce_distance(double x, double lambda);

/// d/dP_u of ce_distance(P_v - P_u). The 1/(1 - S) factor of the outer
/// derivative cancels against S (1 - S) of the inner one, leaving -S(x).
double ce_distance_grad_wrt_u(double x, double lambda);

/// Evaluates whichever distance `spec` selects.
double distance_value(const DistanceSpec& spec, double x);

std::string_view to_string(DistanceKind kind);
std::string_view to_string(FilterMode mode);
std::string_view to_string(GradientForm form);
std::string_view to_string(Reduction reduction);
std::string_view to_string(Label label);

}  // namespace apeloss

#endif  // APELOSS_CORE_HPP_
