#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trackcert/schedule.hpp"
#include "trackcert/simulate.hpp"

namespace trackcert {

enum class OracleMode { Off, Reduced, Generic, Both };

// Exit codes shared by every command.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int runtime_error = 1;
inline constexpr int config_error = 2;
inline constexpr int validate_failed = 3;
inline constexpr int oracle_gap = 4;
inline constexpr int unsound = 5;
inline constexpr int regret_violation = 6;
}  // namespace exit_code

// Negative controls used by the test suite.
struct TestHooks {
  bool corrupt_closed_form = false;     // oracle: inflate the closed form by 1%
  bool force_soundness_breach = false;  // simulate: halve the bound before checking
};

struct RunConfig {
  AnalysisKind analysis = AnalysisTag::ExactOgd;
  ParamTrack schedule;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  OracleMode oracle = OracleMode::Both;
  int dimension = 1;
  int components = 4;
  DriftPolicy drift = DriftPolicy::AlignedAway;
  std::optional<std::string> out;
  std::optional<std::string> svg;
  TestHooks hooks;
};

// Parses a JSON config document and checks the schedule's structural invariants.
// Throws Error(BadConfig) or Error(BadModuli). Stepsize and delta ranges are left to the commands.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

struct CommandResult {
  int exit_code = exit_code::ok;
  std::string csv;
  std::string svg;      // simulate only, when requested
  std::string message;  // human-readable diagnostic for stderr
};

CommandResult cmd_certify(const RunConfig& cfg);
CommandResult cmd_oracle(const RunConfig& cfg);
CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_regret(const RunConfig& cfg);

// Shortest decimal that parses back to the same double; NaN prints as an empty field.
std::string format_double(double x);

// SVG line chart of sqrt(U_hat) and the measured error on a log-y axis.
std::string render_svg(const std::vector<double>& bound, const std::vector<double>& measured);

// Entry point of the trackcert executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trackcert
