#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace surf::cli {

enum class Subcommand { simulate, exact, oracle, experiment, verify };
enum class Format { json, csv };

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitError = 2;

/// Bad command line: unknown flag, missing value, value out of range.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandPlan {
  Subcommand command = Subcommand::simulate;
  std::string dist;
  std::optional<std::uint64_t> n;
  std::vector<std::uint64_t> sizes;
  std::uint64_t seed = 0;  // set to kDefaultSeed by parse_args
  std::uint64_t reps = 0;
  std::string out;  // empty = stdout
  Format format = Format::json;
  unsigned threads = 0;
  double epsilon = 0.0;
  std::string config;       // experiment
  std::string trace;        // simulate: write the realization here
  std::string replay;       // simulate: analyze this trace instead of sampling
  std::uint64_t budget = 0; // oracle enumeration budget
};

/// argv without the program name. Throws UsageError; `--help` throws
/// HelpRequested carrying the usage text.
CommandPlan parse_args(const std::vector<std::string>& args);

class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs the plan, writing the payload to plan.out (or `out` when empty) and a
/// one-line summary to `log`. Returns the process exit code.
int execute(const CommandPlan& plan, std::ostream& out, std::ostream& log);

/// parse_args + execute with error reporting; the body of main().
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace surf::cli
