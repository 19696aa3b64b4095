#ifndef APELOSS_IO_HPP_
#define APELOSS_IO_HPP_

#include <cstddef>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "apeloss/core.hpp"
#include "apeloss/loss.hpp"
#include "apeloss/oracle.hpp"
#include "apeloss/sim.hpp"

namespace apeloss::io {

/// Malformed input text. line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what);
  // Input that could not be read at all; line and column are 0.
  explicit ParseError(const std::string& what)
      : std::runtime_error(what), line_(0), column_(0) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed input that breaks a domain invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::string_view kScoreFileHeader = "index,score,label";
inline constexpr std::string_view kConfigEnvVar = "APELOSS_CONFIG";
inline constexpr int kReportDigits = 15;

/// Score file: the header `index,score,label`, then one row per sample with
/// index counting up from 0 and label 1 (positive), 0 (negative) or -1
/// (ignore). Blank trailing lines are allowed.
ScoreSet parse_score_file(std::istream& in);
ScoreSet load_score_file(const std::string& path);
std::string format_score_file(const ScoreSet& set);

/// Everything a run can be configured with. The JSON form uses the member
/// names below (q accepts an integer or "unlimited"); every key is optional
/// and unknown keys are rejected.
struct RunConfig {
  DistanceKind distance = DistanceKind::CESigmoid;
  double lambda = kDefaultLambda;
  double delta = kDefaultDelta;
  // Falls back to delta when unset.
  std::optional<double> rank_delta;
  FilterMode mode = FilterMode::RankSum;
  double threshold = kDefaultThreshold;
  bool filter_numerator = true;
  PairBudget budget;
  GradientForm grad_form = GradientForm::ErrorDriven;
  Reduction reduction = Reduction::MeanOverPositives;

  sim::GeneratorSpec generator;
  std::size_t steps = 200;
  double lr = 0.5;

  double epsilon = oracle::kDefaultEpsilon;
  double tolerance = oracle::kDefaultTolerance;
  unsigned threads = 1;

  /// Builds and validates the loss configuration (throws ValidationError).
  LossConfig loss_config() const;
  ExecutionOptions execution() const { return {threads}; }
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);
nlohmann::json to_json(const RunConfig& config);

// Enum spellings shared by the config file and the CLI flags.
DistanceKind parse_distance_kind(std::string_view s);
FilterMode parse_filter_mode(std::string_view s);
GradientForm parse_gradient_form(std::string_view s);
Reduction parse_reduction(std::string_view s);
PairBudget parse_pair_budget(std::string_view s);

/// Rounds to kReportDigits significant digits so that reports print at
/// most that many.
double round_for_report(double x);

nlohmann::json to_json(const LossResult& result);
nlohmann::json to_json(const oracle::GradCheckReport& report);
nlohmann::json to_json(const sim::Trajectory& trajectory);

}  // namespace apeloss::io

#endif  // APELOSS_IO_HPP_
