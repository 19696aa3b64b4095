// apeloss: evaluate, check and explore the pairwise-error ranking loss.
//
//   apeloss eval --scores scores.csv [--lambda 8 --mode negcount ...]
//   apeloss gradcheck --scores scores.csv [--epsilon 1e-6]
//   apeloss sweep --param lambda --values 2,4,8,16 [--scores scores.csv]
//   apeloss curve --function S --param-value 8 --min -1 --max 1 --samples 5
//   apeloss simulate --config run.json
//
// Settings are layered: built-in defaults, then the JSON config named by
// --config (or $APELOSS_CONFIG), then individual flags.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apeloss/commands.hpp"

namespace {

using apeloss::io::RunConfig;

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> distance;
  std::optional<double> lambda;
  std::optional<double> delta;
  std::optional<double> rank_delta;
  std::optional<double> threshold;
  std::optional<std::string> q;
  std::optional<std::string> mode;
  std::optional<std::string> grad_form;
  std::optional<std::string> reduction;
  std::optional<bool> filter_numerator;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<double> lr;
  std::optional<double> epsilon;
  std::optional<double> tolerance;
  std::optional<unsigned> threads;
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--distance", o.distance, "step, sigmoid or ce-sigmoid");
  cmd->add_option("--lambda", o.lambda, "sigmoid sharpness (default 8)");
  cmd->add_option("--delta", o.delta, "step half-width (default 0.5)");
  cmd->add_option("--rank-delta", o.rank_delta,
                  "ramp half-width inside rank counts (default: --delta)");
  cmd->add_option("--threshold", o.threshold,
                  "hard-pair margin T (default 0.25)");
  cmd->add_option("--q", o.q, "pair budget, integer or 'unlimited'");
  cmd->add_option("--mode", o.mode, "balance constant: ranksum or negcount");
  cmd->add_option("--grad-form", o.grad_form, "error-driven or autodiff-ce");
  cmd->add_option("--reduction", o.reduction, "mean or sum");
  cmd->add_option("--filter-numerator", o.filter_numerator,
                  "negcount: drop easy pairs from the loss sum (default true)");
  cmd->add_option("--seed", o.seed, "generator seed");
  cmd->add_option("--steps", o.steps, "training steps");
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--epsilon", o.epsilon, "finite-difference step");
  cmd->add_option("--tolerance", o.tolerance, "gradcheck tolerance");
  cmd->add_option("--threads", o.threads, "worker threads for anchors");
}

RunConfig resolve(const Overrides& o) {
  using namespace apeloss::io;
  RunConfig c;
  if (o.config_path) {
    c = load_run_config(*o.config_path);
  } else if (const char* env = std::getenv(std::string(kConfigEnvVar).c_str());
             env != nullptr && *env != '\0') {
    c = load_run_config(env);
  }
  if (o.distance) c.distance = parse_distance_kind(*o.distance);
  if (o.lambda) c.lambda = *o.lambda;
  if (o.delta) c.delta = *o.delta;
  if (o.rank_delta) c.rank_delta = *o.rank_delta;
  if (o.threshold) c.threshold = *o.threshold;
  if (o.q) c.budget = parse_pair_budget(*o.q);
  if (o.mode) c.mode = parse_filter_mode(*o.mode);
  if (o.grad_form) c.grad_form = parse_gradient_form(*o.grad_form);
  if (o.reduction) c.reduction = parse_reduction(*o.reduction);
  if (o.filter_numerator) c.filter_numerator = *o.filter_numerator;
  if (o.seed) c.generator.seed = *o.seed;
  if (o.steps) c.steps = *o.steps;
  if (o.lr) c.lr = *o.lr;
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.tolerance) c.tolerance = *o.tolerance;
  if (o.threads) c.threads = *o.threads;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = apeloss::cli;
  CLI::App app{"Pairwise-error ranking loss: evaluation, checks and sweeps"};
  app.require_subcommand(1);

  Overrides o;
  std::string scores;
  std::optional<std::string> scores_opt;

  auto* eval = app.add_subcommand("eval", "loss, gradient and rank stats");
  eval->add_option("--scores", scores, "score file")->required();
  add_config_flags(eval, o);

  auto* gradcheck =
      app.add_subcommand("gradcheck", "analytic vs finite-difference gradient");
  gradcheck->add_option("--scores", scores, "score file")->required();
  add_config_flags(gradcheck, o);

  std::string parameter;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "vary one hyperparameter");
  sweep->add_option("--scores", scores_opt,
                    "score file (default: generated from config)");
  sweep->add_option("--param", parameter, "lambda, delta, T or Q")->required();
  sweep->add_option("--values", values, "comma-separated values")
      ->required()
      ->delimiter(',');
  add_config_flags(sweep, o);

  std::string function;
  double param_value = 0.0;
  double lo = -1.0;
  double hi = 1.0;
  std::size_t samples = 101;
  auto* curve = app.add_subcommand("curve", "sample H, S or CE");
  curve->add_option("--function", function, "H, S or CE")->required();
  curve->add_option("--param-value", param_value, "delta for H, lambda else")
      ->required();
  curve->add_option("--min", lo, "range start")->capture_default_str();
  curve->add_option("--max", hi, "range end")->capture_default_str();
  curve->add_option("--samples", samples, "number of points")
      ->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "gradient descent on scores");
  simulate->add_option("--scores", scores_opt,
                       "score file (default: generated from config)");
  add_config_flags(simulate, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kParseError;
  }

  if (*curve) {
    return cli::cmd_curve(function, param_value, lo, hi, samples, std::cout,
                          std::cerr);
  }

  RunConfig config;
  try {
    config = resolve(o);
  } catch (const apeloss::io::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return cli::kParseError;
  } catch (const std::logic_error& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return cli::kValidationError;
  }

  if (*eval) return cli::cmd_eval(scores, config, std::cout, std::cerr);
  if (*gradcheck) {
    return cli::cmd_gradcheck(scores, config, std::cout, std::cerr);
  }
  if (*sweep) {
    return cli::cmd_sweep(scores_opt, config, parameter, values, std::cout,
                          std::cerr);
  }
  return cli::cmd_simulate(scores_opt, config, std::cout, std::cerr);
}
