#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mimosa/em.hpp"
#include "mimosa/mcmc.hpp"
#include "mimosa/simulate.hpp"

namespace mimosa {

inline constexpr const char* kToolVersion = "1.0.0";

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // unexpected error
  kExitValidation = 2,  // bad input, schema or configuration
  kExitDiagnostic = 3,  // fit ran but did not converge or mixed poorly
};

struct RunConfig {
  std::string command;          // fit, simulate, evaluate, baseline
  std::string model = "betabin";  // betabin, dirmult
  std::string method;           // fit: em, mcmc; baseline: fisher, lrt, lfc
  Sidedness sidedness = Sidedness::TwoSided;
  bool sidedness_set = false;   // simulate keeps its own default otherwise
  std::filesystem::path input;
  std::filesystem::path labels;  // evaluate only
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 1;
  int threads = 1;
  EmConfig em;
  McmcConfig mcmc;
  SimSpec sim;
  MultiSimSpec multi_sim = fixture_multi_spec();
};

/// Parses argv (config file first, flags override it), fills defaults and
/// validates. Throws ConfigError; `--help` output goes to stdout and sets
/// `help_shown`.
RunConfig parse_command_line(int argc, const char* const* argv, bool* help_shown = nullptr);

/// Applies a JSON config document (same keys as the flags, underscores for
/// dashes, plus "em", "mcmc" and "simulate" blocks). Unknown keys throw
/// ConfigError.
void apply_config_text(RunConfig& cfg, const std::string& json_text);

/// Canonical JSON echo of the effective configuration.
std::string config_echo(const RunConfig& cfg);

/// Runs one command and writes its artifacts into cfg.output_dir. Failures
/// are reported in error.json there, and as the returned exit code.
int run(const RunConfig& cfg);

/// Full entry point: parse, run, map exceptions to exit codes.
int cli_main(int argc, const char* const* argv);

}  // namespace mimosa
