#pragma once

// Command table, validation and execution for the pdlab command-line tool.
// Every command validates all of its parameters before computing, writes its
// artifacts only under the output directory, and records a manifest.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pdlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitVerdict = 2;

/// Raw command line: command name plus key -> value strings (keys without
/// the leading dashes).
struct ExperimentSpec {
  std::string command;
  std::map<std::string, std::string> params;
};

using Value = std::variant<double, long long, std::string, std::vector<double>, std::vector<long long>>;

/// Parameters after validation, with defaults filled in.
struct ValidatedSpec {
  std::string command;
  std::map<std::string, Value> values;
  std::optional<std::filesystem::path> out;
  std::uint64_t seed = 0;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const std::vector<double>& reals(const std::string& key) const;
  const std::vector<long long>& integers(const std::string& key) const;
};

const std::vector<std::string>& command_names();

/// Parses argv[1..]: a command followed by --key value or --key=value pairs.
/// Syntax problems are appended to `errors`; parsing continues past them.
ExperimentSpec parse_command_line(const std::vector<std::string>& args, std::vector<std::string>& errors);

/// Schema and range checks. Never computes. Returns every problem found.
std::vector<std::string> validate(const ExperimentSpec& spec);

/// validate() and conversion; throws std::invalid_argument carrying all
/// errors joined by newlines when the spec is invalid.
ValidatedSpec resolve(const ExperimentSpec& spec);

/// Reads a manifest written by run() back into a spec. `out_override`
/// replaces the recorded output directory when given.
ExperimentSpec spec_from_manifest(const std::filesystem::path& manifest,
                                  const std::optional<std::string>& out_override);

/// Executes a validated spec. Artifacts go under spec.out when present,
/// otherwise the primary artifact is written to `out`. Diagnostics go to
/// `err`. Returns kExitOk, or kExitVerdict when a verification failed.
/// Throws on numeric or domain errors.
int run(const ValidatedSpec& spec, std::ostream& out, std::ostream& err);

/// Full entry point: parse, validate, run, map exceptions to exit codes.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string usage();

}  // namespace pdlab::cli
