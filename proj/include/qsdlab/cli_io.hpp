#pragma once

#include "qsdlab/kernel.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qsdlab {

inline constexpr const char* kReportSchema = "qsd-lab/1";

struct ChainSpec {
  AbsorbedKernel kernel;
  /// V on E, when the spec carries one.
  std::optional<StateFunction> v_weights;
  std::map<std::string, double> tolerances;
  /// Raw JSON text of the `metadata` member, if any.
  std::string metadata;
};

/// Dense CSV (header of labels, then one row per state) or JSON
/// {states, transitions: [[from, to, prob], ...], metadata?, v_weights?, tolerances?}.
/// Duplicate edges and malformed fields raise ParseError with a line or field location.
ChainSpec parse_chain_spec_text(const std::string& text, const std::string& origin = "<text>");
ChainSpec load_chain_spec(const std::string& path);

/// Convenience: just the kernel.
AbsorbedKernel parse_chain_spec(const std::string& text);

/// V from a JSON array over E or an object {label: value} (missing labels get 1).
StateFunction parse_v_weights(const std::string& text, const AbsorbedKernel& kernel);

struct RunOptions {
  std::string command;
  std::optional<std::string> chain_path;
  std::optional<std::string> chain_text;  // used instead of chain_path when set
  std::optional<std::string> out_path;
  std::uint64_t seed = 42;
  int n_max = 40;
  int big_n_max = 1000;
  std::optional<std::string> tsv_dir;
  std::vector<std::string> tolerance_overrides;  // KEY=VAL
  std::optional<std::string> v_weights_path;
  int threads = 1;
  int paths = 20000;
};

struct RunResult {
  int exit_code = 0;  // 0 all pass, 2 verification failure, 1 input error
  std::string json;   // the report or error object
};

/// Tolerances used by the checks in a report, keyed as accepted by --tolerance.
std::map<std::string, double> default_tolerances();

/// Executes one subcommand. Never throws: failures become error objects.
/// Writes `json` to out_path when set and TSV side-files to tsv_dir when set.
RunResult run(const RunOptions& options);

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> names = {"validate", "period",    "spectral", "qsd",   "limits",
                                                 "qprocess", "ergodic",   "simulate", "report"};
  return names;
}

}  // namespace qsdlab
