#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "condot/datasets.hpp"
#include "condot/training.hpp"

namespace condot::cli {

// Process exit codes.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNonFinite = 4;
constexpr int kExitDimMismatch = 5;
constexpr int kExitRunDir = 6;

/// A command failure with its exit code.
class Failure : public std::runtime_error {
 public:
  Failure(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

/// Exit code for a library error raised while running a command.
int exit_code_for(Errc code);

struct Invocation {
  std::string command;
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
};

// Each command reads its JSON config, validates it completely and only then
// touches the output directory. Relative paths inside a config are resolved
// against the config file's directory.
void cmd_simulate(const Invocation& inv);
void cmd_train(const Invocation& inv);
void cmd_eval(const Invocation& inv);
void cmd_embed_moa(const Invocation& inv);
void cmd_report(const Invocation& inv);

/// Parses argv (without the program name handling done by the caller),
/// runs the command and returns the exit code. Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Evaluation metrics shared by `eval` and the acceptance suite.

const std::vector<std::string>& all_metrics();

struct MetricInputs {
  const Matrix* source = nullptr;
  const Matrix* target = nullptr;
  const Matrix* predicted = nullptr;
  /// Ground-truth image of the source samples, when known.
  const Matrix* oracle = nullptr;
};

/// Values keyed by metric name, in the order requested. A metric that cannot
/// be computed (map_mse without an oracle) maps to null.
nlohmann::json compute_metrics(const MetricInputs& in, const std::vector<std::string>& metrics,
                               double eps);

}  // namespace condot::cli
