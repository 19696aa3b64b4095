#ifndef APELOSS_COMMANDS_HPP_
#define APELOSS_COMMANDS_HPP_

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "apeloss/io.hpp"

// Subcommands of the apeloss tool. Each writes its document to `out`,
// diagnostics to `err`, and returns the process exit code.

namespace apeloss::cli {

enum ExitCode : int {
  kSuccess = 0,
  kCheckFailed = 1,  // gradcheck mismatch or a diverged simulation
  kParseError = 2,
  kValidationError = 3,
};

int cmd_eval(const std::string& scores_path, const io::RunConfig& config,
             std::ostream& out, std::ostream& err);

int cmd_gradcheck(const std::string& scores_path, const io::RunConfig& config,
                  std::ostream& out, std::ostream& err);

/// One CSV row per value of `parameter` (lambda, delta, T or Q): loss and
/// pair counts on the starting set, ranking AP after config.steps of
/// training. Starts from the score file when given, else from the generator.
int cmd_sweep(const std::optional<std::string>& scores_path,
              const io::RunConfig& config, const std::string& parameter,
              const std::vector<std::string>& values, std::ostream& out,
              std::ostream& err);

/// CSV samples of H, S or CE at `samples` evenly spaced points of [lo, hi].
int cmd_curve(const std::string& function, double parameter, double lo,
              double hi, std::size_t samples, std::ostream& out,
              std::ostream& err);

int cmd_simulate(const std::optional<std::string>& scores_path,
                 const io::RunConfig& config, std::ostream& out,
                 std::ostream& err);

}  // namespace apeloss::cli

#endif  // APELOSS_COMMANDS_HPP_
