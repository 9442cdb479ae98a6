#pragma once

#include <string>
#include <vector>

#include "sundman/fields.hpp"

namespace sundman {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct EmittedFile {
  std::string path;    // relative to the output directory
  std::string digest;  // FNV-1a 64-bit hash of the bytes, hex
};

struct Report {
  std::string scenario;
  bool pass = true;
  std::vector<CheckResult> checks;
  IntegrateStats stats;
  std::vector<EmittedFile> files;

  /// Deterministic JSON serialization (no clocks, no host state).
  std::string to_json() const;
};

/// A validated scenario: expressions compiled, invariants checked. The
/// canonical JSON source is retained for execution and round trips.
struct Scenario {
  std::string name;
  std::string kind;
  std::string text;
};

/// Shortest decimal form that round-trips the exact double.
std::string format_double(double x);

/// Validates structure, kind, tolerances, and all embedded expressions.
/// Throws DomainError / DimensionError / ExprError with the offending detail.
Scenario parse_scenario(const std::string& text);
Scenario parse_scenario_file(const std::string& path);

/// Executes the scenario's checks. When out_dir is nonempty, trajectory CSVs
/// are written there after execution succeeds and their digests recorded.
/// The seed drives the quasi-random sample sets of residual checks.
Report run_scenario(const Scenario& sc, const std::string& out_dir = "",
                    unsigned seed = 0);

std::vector<std::string> builtin_names();

/// Scenario source text by name; throws DomainError for unknown names.
std::string builtin_scenario(const std::string& name);

}  // namespace sundman
