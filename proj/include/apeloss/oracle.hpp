#ifndef APELOSS_ORACLE_HPP_
#define APELOSS_ORACLE_HPP_

#include <cstddef>
#include <vector>

#include "apeloss/core.hpp"
#include "apeloss/loss.hpp"

// Reference implementations for checking the loss module. Nothing in here
// calls into loss.cpp or ranking.cpp for summation, pair selection or
// distance evaluation; the arithmetic is naive double loops carried out in
// long double.

namespace apeloss::oracle {

inline constexpr double kDefaultEpsilon = 1e-6;
inline constexpr double kDefaultTolerance = 1e-5;
inline constexpr double kMinEpsilon = 1e-9;
inline constexpr double kMaxEpsilon = 1e-3;
inline constexpr std::size_t kMaxBruteForceSize = 2000;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double epsilon = kDefaultEpsilon;
  double tolerance = kDefaultTolerance;
  bool passed = true;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Central differences of the loss, one coordinate at a time, with every
/// anchor's balance constant frozen at its unperturbed value. Ignored
/// coordinates are left at zero. epsilon must lie in [1e-9, 1e-3].
std::vector<double> finite_difference_gradient(const ScoreSet& set,
                                               const LossConfig& config,
                                               double epsilon = kDefaultEpsilon);

/// Compares the configured analytic gradient against
/// finite_difference_gradient. Only the ce-sigmoid loss has the analytic
/// gradient as its derivative, so other distances are rejected.
GradCheckReport check_gradient(const ScoreSet& set, const LossConfig& config,
                               double epsilon = kDefaultEpsilon,
                               double tolerance = kDefaultTolerance);

/// Naive O(n^2) evaluation of loss, stats and (for lambda-based distances)
/// gradient. Refuses sets larger than kMaxBruteForceSize.
LossResult brute_force_loss(const ScoreSet& set, const LossConfig& config);

/// |a - b| / max(|a|, |b|), zero when both are zero.
double relative_error(double a, double b);

}  // namespace apeloss::oracle

#endif  // APELOSS_ORACLE_HPP_
