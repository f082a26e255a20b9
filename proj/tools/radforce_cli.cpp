#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "radforce/cli_runner.hpp"
#include "radforce/errors.hpp"

using namespace radforce;

namespace {

enum Exit { kOk = 0, kUsage = 1, kSolver = 2, kCheck = 3 };

struct Common {
  std::string config;
  std::string out;
  std::optional<int> harmonics;
  std::optional<double> tol;
  int threads = 1;
  std::uint64_t seed = 12345;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "scenario file");
  if (config_required) opt->required();
  opt->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output file (default stdout)");
  sub->add_option("--harmonics", c.harmonics, "rate harmonics to report")->check(CLI::Range(0, 64));
  sub->add_option("--tol", c.tol, "solver convergence tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--threads", c.threads, "worker threads for scans")->check(CLI::Range(1, 1024));
  sub->add_option("--seed", c.seed, "seed for randomized suites");
}

Scenario scenario_for(const Common& c, bool partial = false) {
  Scenario sc = c.config.empty() ? Scenario{} : load_scenario(c.config, partial);
  if (c.harmonics) sc.solver.harmonics = *c.harmonics;
  if (c.tol) sc.solver.tol = *c.tol;
  return sc;
}

int emit(const Common& c, const ResultTable& t) {
  if (c.out.empty()) {
    write_table(std::cout, t);
    std::cout.flush();
    return std::cout ? kOk : kUsage;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot write '" << c.out << "'\n";
    return kUsage;
  }
  write_table(f, t);
  return f ? kOk : kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radiation-pressure forces on multilevel atoms"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "radforce 0.1.0");

  Common force_c, scan_c, gao_c, check_c;
  std::string suite;
  auto* force = app.add_subcommand("force", "mean rates, forces and rate harmonics at one point");
  add_common(force, force_c, true);
  auto* scan = app.add_subcommand("scan", "one row per value of the [scan] variable");
  add_common(scan, scan_c, true);
  auto* gao = app.add_subcommand("gao-table", "single-wave saturation parameters a and b versus Jg");
  add_common(gao, gao_c, false);
  auto* check = app.add_subcommand("check", "builtin verification suites");
  add_common(check, check_c, false);
  check->add_option("suite", suite, "two-level-limit | rotation-covariance | appendix-b | scenario | all")
      ->check(CLI::IsMember(check_suite_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (force->parsed()) {
      const ResultTable t = run_force(scenario_for(force_c));
      const int rc = emit(force_c, t);
      return rc != kOk ? rc : (t.all_ok() ? kOk : kSolver);
    }
    if (scan->parsed()) {
      const ResultTable t = run_scan(scenario_for(scan_c), {scan_c.threads, scan_c.seed});
      const int rc = emit(scan_c, t);
      return rc != kOk ? rc : (t.all_ok() ? kOk : kSolver);
    }
    if (gao->parsed()) {
      const Scenario sc = scenario_for(gao_c, true);
      const ResultTable t = run_gao_table(sc);
      const int rc = emit(gao_c, t);
      return rc != kOk ? rc : (t.all_ok() ? kOk : kSolver);
    }
    if (check->parsed()) {
      std::optional<Scenario> sc;
      if (!check_c.config.empty()) sc = scenario_for(check_c);
      if (suite.empty()) suite = sc ? "scenario" : "all";
      const ResultTable t = run_check(suite, sc ? &*sc : nullptr, {check_c.threads, check_c.seed});
      const int rc = emit(check_c, t);
      int failed = 0;
      for (const auto& s : t.status) failed += s != "PASS";
      std::cerr << suite << ": " << (t.rows.size() - failed) << "/" << t.rows.size() << " passed\n";
      return rc != kOk ? rc : (failed == 0 ? kOk : kCheck);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::Parse:
      case ErrorCode::Validation:
      case ErrorCode::Domain:
      case ErrorCode::IndexOutOfRange:
        return kUsage;
      default:
        return kSolver;
    }
  }
  return kUsage;
}
