#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radforce/field_config.hpp"
#include "radforce/floquet_solver.hpp"
#include "radforce/transition.hpp"

namespace radforce {

/// One [section] of a config file. Keys keep their first line number for
/// error messages.
struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, int> key_lines;

  const std::string* find(const std::string& key) const;
};

/// Parses the INI-like text. Throws Error(Parse) with the line number on
/// malformed lines, duplicate keys or keys outside a section.
std::vector<ConfigSection> parse_config_text(const std::string& text);

struct ScanSpec {
  std::string variable;       // velocity | detuning | rabi | Jg
  std::vector<double> values;
  Vec3 direction{0.0, 0.0, 1.0};  // velocity scans
  std::vector<std::size_t> waves;  // detuning / rabi scans, 0-based; empty = all
  int delta_J = 0;            // Jg scans: Je = Jg + delta_J
  bool two_level_override = false;
};

struct PhaseAverage {
  bool enabled = false;
  int points = 16;
  std::vector<std::size_t> waves;  // 0-based; the phase is added to these
};

struct GaoTableSpec {
  double jg_max = 4.0;
  std::vector<int> delta_J{1, 0};
  int q = 0;
  std::vector<double> fit_s{0.5, 5.0};
};

struct Scenario {
  AtomicTransition transition;
  std::vector<PlaneWave> waves;
  std::vector<double> kappa;
  CommensurabilityOptions commensurability;
  SolverOptions solver;
  Vec3 velocity = Vec3::Zero();
  std::optional<ScanSpec> scan;
  PhaseAverage phase_average;
  GaoTableSpec gao;
  std::string source_text;  // canonical input, hashed for metadata

  /// Throws Error(Validation / Domain) when transition or field is invalid.
  void validate() const;
  /// Field at the scenario velocity and extra phase on the averaged waves.
  FieldSet field(double phase = 0.0) const;
  std::uint64_t hash() const;
};

/// Builds a scenario from parsed sections. Unknown sections or keys are
/// parse errors. `partial` allows a missing [transition] (gao-table).
Scenario scenario_from_sections(const std::vector<ConfigSection>& sections, const std::string& source_text = {},
                                bool partial = false);
/// Parse and validate; `partial` skips both the transition requirement and
/// validation.
Scenario parse_scenario(const std::string& text, bool partial = false);
Scenario load_scenario(const std::string& path, bool partial = false);

/// Rectangular table of reals. Rows carry an optional label and a status
/// ("ok", "PASS", "FAIL" or an error code name); failed values are NaN.
struct ResultTable {
  std::string label_column;  // empty: no label column
  std::vector<std::string> columns;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> status;
  std::vector<std::pair<std::string, std::string>> metadata;

  void add_row(std::vector<double> values, std::string row_status = "ok", std::string label = {});
  bool all_ok() const;
};

/// '#' metadata lines, header, then rows with 17 significant digits.
void write_table(std::ostream& out, const ResultTable& table);
std::string format_number(double value);

struct RunOptions {
  int threads = 1;
  std::uint64_t seed = 12345;
};

/// Per-wave mean rates, forces and rate harmonics plus a total row.
ResultTable run_force(const Scenario& scenario);

/// One row per scan value; failures are recorded per row.
ResultTable run_scan(const Scenario& scenario, const RunOptions& options = {});

/// a, b from the determinant formula and b refitted from the full solver.
ResultTable run_gao_table(const Scenario& scenario);

/// Names accepted by run_check.
const std::vector<std::string>& check_suite_names();

/// Runs a builtin suite, or the "scenario" suite on the given scenario.
/// Throws Error(Validation) for an unknown suite name.
ResultTable run_check(const std::string& suite, const Scenario* scenario, const RunOptions& options = {});

}  // namespace radforce
