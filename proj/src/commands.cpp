#include "apeloss/commands.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <string_view>

#include "apeloss/loss.hpp"
#include "apeloss/oracle.hpp"
#include "apeloss/sim.hpp"

namespace apeloss::cli {

using nlohmann::json;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const io::ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParseError;
  } catch (const sim::DivergenceError& e) {
    err << "simulation diverged: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const std::logic_error& e) {
    // invalid_argument, domain_error and length_error all land here.
    err << "validation error: " << e.what() << '\n';
    return kValidationError;
  }
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", io::kReportDigits, x);
  return buf;
}

ScoreSet starting_set(const std::optional<std::string>& scores_path,
                      const io::RunConfig& config) {
  return scores_path ? io::load_score_file(*scores_path)
                     : sim::generate_scores(config.generator);
}

LossResult evaluate(const ScoreSet& set, const LossConfig& lc,
                    const ExecutionOptions& exec) {
  return lc.distance.has_lambda() ? ape_loss_gradient(set, lc, exec)
                                  : ape_loss_forward(set, lc, exec);
}

double parse_real(std::string_view name, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || used == 0) {
    throw io::ValidationError(std::string(name) + " value '" + text +
                              "' is not a number");
  }
  return v;
}

io::RunConfig with_parameter(io::RunConfig config, const std::string& parameter,
                             const std::string& value) {
  if (parameter == "lambda") {
    if (config.distance == DistanceKind::Step) {
      throw io::ValidationError("lambda has no effect with the step distance");
    }
    config.lambda = parse_real(parameter, value);
  } else if (parameter == "delta") {
    config.delta = parse_real(parameter, value);
  } else if (parameter == "T" || parameter == "threshold") {
    config.threshold = parse_real(parameter, value);
  } else if (parameter == "Q" || parameter == "q") {
    config.budget = io::parse_pair_budget(value);
  } else {
    throw io::ValidationError("unknown sweep parameter '" + parameter +
                              "' (expected lambda, delta, T or Q)");
  }
  return config;
}

}  // namespace

int cmd_eval(const std::string& scores_path, const io::RunConfig& config,
             std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScoreSet set = io::load_score_file(scores_path);
    const LossConfig lc = config.loss_config();
    const LossResult result = evaluate(set, lc, config.execution());

    json warnings = json::array();
    if (result.no_anchor) {
      warnings.push_back("no positive samples; loss and gradient are zero");
    }
    if (set.negative_indices().empty()) {
      warnings.push_back("no negative samples; loss and gradient are zero");
    }
    if (!result.has_gradient()) {
      warnings.push_back("step distance has no gradient form; gradient omitted");
    }
    for (const auto& w : warnings) {
      err << "warning: " << w.get<std::string>() << '\n';
    }

    json doc = io::to_json(result);
    doc["command"] = "eval";
    doc["config"] = io::to_json(config);
    doc["warnings"] = std::move(warnings);
    out << doc.dump(2) << '\n';
    return kSuccess;
  });
}

int cmd_gradcheck(const std::string& scores_path, const io::RunConfig& config,
                  std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScoreSet set = io::load_score_file(scores_path);
    const LossConfig lc = config.loss_config();
    const oracle::GradCheckReport report =
        oracle::check_gradient(set, lc, config.epsilon, config.tolerance);
    json doc = io::to_json(report);
    doc["command"] = "gradcheck";
    doc["config"] = io::to_json(config);
    out << doc.dump(2) << '\n';
    if (!report.passed) {
      err << "gradient check failed: max relative error "
          << fmt(report.max_rel_error) << " at index " << report.worst_index
          << '\n';
      return kCheckFailed;
    }
    return kSuccess;
  });
}

int cmd_sweep(const std::optional<std::string>& scores_path,
              const io::RunConfig& config, const std::string& parameter,
              const std::vector<std::string>& values, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    if (values.empty()) throw io::ValidationError("sweep needs values");
    std::vector<io::RunConfig> configs;
    for (const std::string& v : values) {
      configs.push_back(with_parameter(config, parameter, v));
      configs.back().loss_config();
    }
    const ScoreSet set = starting_set(scores_path, config);

    out << "parameter,value,total_loss,ranking_ap,active_pairs,"
           "valid_negatives,truncated\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      const io::RunConfig& rc = configs[i];
      const LossConfig lc = rc.loss_config();
      const LossResult result = evaluate(set, lc, rc.execution());
      std::size_t valid_negatives = 0;
      for (const RankStats& s : result.stats) valid_negatives += s.n_neg;
      const double ap =
          lc.distance.has_lambda()
              ? sim::ranking_ap(sim::simulate_training(set, lc, rc.steps,
                                                       rc.lr, rc.execution())
                                    .final_set)
              : sim::ranking_ap(set);
      out << parameter << ',' << values[i] << ',' << fmt(result.total_loss)
          << ',' << fmt(ap) << ',' << result.active_pairs() << ','
          << valid_negatives << ',' << (result.truncated ? "true" : "false")
          << '\n';
    }
    return kSuccess;
  });
}

int cmd_curve(const std::string& function, double parameter, double lo,
              double hi, std::size_t samples, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const DistanceKind kind = io::parse_distance_kind(function);
    const DistanceSpec spec{kind, parameter};
    spec.validate();
    if (samples < 2) throw io::ValidationError("samples must be >= 2");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw io::ValidationError("range needs finite lo < hi");
    }
    out << "x," << (kind == DistanceKind::Step      ? "H"
                    : kind == DistanceKind::Sigmoid ? "S"
                                                    : "CE")
        << '\n';
    const double step = (hi - lo) / static_cast<double>(samples - 1);
    for (std::size_t i = 0; i < samples; ++i) {
      const double x = i + 1 == samples ? hi : lo + step * static_cast<double>(i);
      out << fmt(x) << ',' << fmt(distance_value(spec, x)) << '\n';
    }
    return kSuccess;
  });
}

int cmd_simulate(const std::optional<std::string>& scores_path,
                 const io::RunConfig& config, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    const LossConfig lc = config.loss_config();
    const ScoreSet set = starting_set(scores_path, config);
    const sim::Trajectory traj = sim::simulate_training(
        set, lc, config.steps, config.lr, config.execution());
    json doc = io::to_json(traj);
    doc["command"] = "simulate";
    doc["config"] = io::to_json(config);
    out << doc.dump(2) << '\n';
    return kSuccess;
  });
}

}  // namespace apeloss::cli
