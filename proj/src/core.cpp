#include "apeloss/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace apeloss {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

void require_positive(double p, const char* what) {
  if (!std::isfinite(p) || !(p > 0.0)) {
    throw std::invalid_argument(std::string(what) +
                                " must be a positive finite number");
  }
}

// Logistic of an already scaled argument, without overflow in exp.
double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)).
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

ScoreSet::ScoreSet(std::vector<double> scores, std::vector<Label> labels)
    : scores_(std::move(scores)), labels_(std::move(labels)) {
  if (scores_.empty()) {
    throw std::invalid_argument("score set must not be empty");
  }
  if (scores_.size() != labels_.size()) {
    throw std::invalid_argument("scores and labels differ in length (" +
                                std::to_string(scores_.size()) + " vs " +
                                std::to_string(labels_.size()) + ")");
  }
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    if (!std::isfinite(scores_[i])) {
      throw std::invalid_argument("score at index " + std::to_string(i) +
                                  " is not finite");
    }
  }
}

std::vector<std::size_t> ScoreSet::positive_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (labels_[i] == Label::Positive) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> ScoreSet::negative_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (labels_[i] == Label::Negative) out.push_back(i);
  }
  return out;
}

ScoreSet ScoreSet::with_scores(std::vector<double> scores) const {
  return ScoreSet(std::move(scores), labels_);
}

void DistanceSpec::validate() const {
  require_positive(parameter, kind == DistanceKind::Step ? "delta" : "lambda");
}

void FilterSpec::validate() const {
  if (!std::isfinite(threshold) || threshold < 0.0) {
    throw std::invalid_argument("threshold must be finite and >= 0");
  }
}

void PairBudget::validate() const {
  if (q && *q == 0) {
    throw std::invalid_argument("pair budget q must be >= 1");
  }
}

void LossConfig::validate() const {
  distance.validate();
  filter.validate();
  budget.validate();
  require_positive(rank_delta, "rank_delta");
  if (gradient_form == GradientForm::AutodiffCE &&
      distance.kind != DistanceKind::CESigmoid) {
    throw std::invalid_argument(
        "autodiff-ce gradient form requires the ce-sigmoid distance");
  }
}

double step_distance(double x, double delta) {
  require_finite(x, "x");
  require_positive(delta, "delta");
  if (x < -delta) return 0.0;
  if (x > delta) return 1.0;
  return (x + delta) / (2.0 * delta);
}

double sigmoid_distance(double x, double lambda) {
  require_finite(x, "x");
  require_positive(lambda, "lambda");
  return logistic(lambda * x);
}

double sigmoid_distance_grad_wrt_u(double x, double lambda) {
  require_finite(x, "x");
  require_positive(lambda, "lambda");
  // 1 - S(x) == S(-x), which keeps precision when S is close to 1.
  return -lambda * logistic(lambda * x) * logistic(-lambda * x);
}

double ce_distance(double x, double lambda) {
  require_finite(x, "x");
  require_positive(lambda, "lambda");
  return softplus(lambda * x) / lambda;
}

double ce_distance_grad_wrt_u(double x, double lambda) {
  require_finite(x, "x");
  require_positive(lambda, "lambda");
  return -logistic(lambda * x);
}

double distance_value(const DistanceSpec& spec, double x) {
  switch (spec.kind) {
    case DistanceKind::Step:
      return step_distance(x, spec.parameter);
    case DistanceKind::Sigmoid:
      return sigmoid_distance(x, spec.parameter);
    case DistanceKind::CESigmoid:
      return ce_distance(x, spec.parameter);
  }
  throw std::invalid_argument("unknown distance kind");
}

std::string_view to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::Step:
      return "step";
    case DistanceKind::Sigmoid:
      return "sigmoid";
    case DistanceKind::CESigmoid:
      return "ce-sigmoid";
  }
  return "?";
}

std::string_view to_string(FilterMode mode) {
  return mode == FilterMode::RankSum ? "ranksum" : "negcount";
}

std::string_view to_string(GradientForm form) {
  return form == GradientForm::ErrorDriven ? "error-driven" : "autodiff-ce";
}

std::string_view to_string(Reduction reduction) {
  return reduction == Reduction::MeanOverPositives ? "mean" : "sum";
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Positive:
      return "positive";
    case Label::Negative:
      return "negative";
    case Label::Ignore:
      return "ignore";
  }
  return "?";
}

}  // namespace apeloss
