#include "radforce/cli_runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "radforce/errors.hpp"
#include "radforce/frame_rotation.hpp"
#include "radforce/obe_matrices.hpp"
#include "radforce/regimes.hpp"
#include "radforce/time_oracle.hpp"

namespace radforce {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) {
    // commas act as whitespace in lists
    std::string part;
    for (char c : tok) {
      if (c == ',') {
        if (!part.empty()) out.push_back(part);
        part.clear();
      } else {
        part += c;
      }
    }
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

// Strict number: the whole token must be consumed. Accepts p/q fractions.
double to_number(const std::string& tok, int line) {
  const auto slash = tok.find('/');
  if (slash != std::string::npos) {
    return to_number(tok.substr(0, slash), line) / to_number(tok.substr(slash + 1), line);
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    parse_fail(line, "not a number: '" + tok + "'");
  }
  if (used != tok.size() || !std::isfinite(v)) parse_fail(line, "not a number: '" + tok + "'");
  return v;
}

int to_int(const std::string& tok, int line) {
  const double v = to_number(tok, line);
  if (v != std::floor(v) || std::abs(v) > 1e9) parse_fail(line, "not an integer: '" + tok + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& tok, int line) {
  const std::string t = lower(tok);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  parse_fail(line, "not a boolean: '" + tok + "'");
}

std::vector<double> to_numbers(const std::string& s, int line) {
  std::vector<double> out;
  for (const auto& t : split_ws(s)) out.push_back(to_number(t, line));
  return out;
}

Vec3 to_vec3(const std::string& s, int line) {
  const auto v = to_numbers(s, line);
  if (v.size() != 3) parse_fail(line, "expected three numbers");
  return {v[0], v[1], v[2]};
}

HalfInt to_halfint(const std::string& s, int line) {
  const double v = to_number(trim(s), line);
  const double tw = 2.0 * v;
  if (std::abs(tw - std::round(tw)) > 1e-9 || v < 0) parse_fail(line, "not a non-negative half-integer: '" + s + "'");
  return HalfInt::from_twice(static_cast<int>(std::lround(tw)));
}

// 1-based wave list or "all" -> 0-based indices (empty = all).
std::vector<std::size_t> to_wave_list(const std::string& s, int line) {
  if (lower(trim(s)) == "all") return {};
  std::vector<std::size_t> out;
  for (const auto& t : split_ws(s)) {
    const int k = to_int(t, line);
    if (k < 1) parse_fail(line, "wave indices start at 1");
    out.push_back(static_cast<std::size_t>(k - 1));
  }
  return out;
}

Polarization to_polarization(const std::string& s, int line) {
  const auto tok = split_ws(s);
  if (tok.empty()) parse_fail(line, "empty polarization");
  const std::string head = lower(tok[0]);
  if (tok.size() == 1) {
    if (head == "pi") return polarization::pi();
    if (head == "sigma+") return polarization::sigma_plus();
    if (head == "sigma-") return polarization::sigma_minus();
    parse_fail(line, "unknown polarization '" + tok[0] + "'");
  }
  std::vector<double> v;
  for (std::size_t i = 1; i < tok.size(); ++i) v.push_back(to_number(tok[i], line));
  if (head == "elliptical") {
    if (v.size() != 2) parse_fail(line, "elliptical takes theta phi");
    return polarization::elliptical(v[0], v[1]);
  }
  if (head == "spherical" || head == "cartesian") {
    if (v.size() != 6) parse_fail(line, head + " takes six numbers (re im per component)");
    const cplx a(v[0], v[1]), b(v[2], v[3]), c(v[4], v[5]);
    if (head == "spherical") return {a, b, c};
    return polarization::from_cartesian(CVec3(a, b, c));
  }
  parse_fail(line, "unknown polarization '" + tok[0] + "'");
}

std::string vec_str(const Vec3& v) {
  return format_number(v[0]) + " " + format_number(v[1]) + " " + format_number(v[2]);
}

std::string canonical(const Scenario& s) {
  std::ostringstream o;
  o << "Jg=" << s.transition.Jg.str() << ";Je=" << s.transition.Je.str() << ";gamma=" << format_number(s.transition.gamma)
    << ";override=" << s.transition.two_level_override << ";";
  for (const auto& w : s.waves) {
    o << "wave:" << format_number(w.rabi.real()) << "," << format_number(w.rabi.imag()) << ","
      << format_number(w.detuning) << "," << vec_str(w.k_dir) << "," << format_number(w.k_mag);
    for (const auto& c : w.pol) o << "," << format_number(c.real()) << "," << format_number(c.imag());
    o << ";";
  }
  o << "kappa:";
  for (double k : s.kappa) o << format_number(k) << ",";
  o << ";comm=" << s.commensurability.max_denominator << "," << format_number(s.commensurability.tol);
  o << ";solver=" << s.solver.n_max_init << "," << s.solver.n_max_cap << "," << format_number(s.solver.tol) << ","
    << format_number(s.solver.cond_limit) << "," << s.solver.harmonics << "," << s.solver.reduce_pure_polarization;
  o << ";velocity=" << vec_str(s.velocity);
  if (s.scan) {
    o << ";scan=" << s.scan->variable << "," << vec_str(s.scan->direction) << "," << s.scan->delta_J << ","
      << s.scan->two_level_override << ":";
    for (double v : s.scan->values) o << format_number(v) << ",";
    for (auto j : s.scan->waves) o << "w" << j;
  }
  o << ";phase=" << s.phase_average.enabled << "," << s.phase_average.points;
  for (auto j : s.phase_average.waves) o << "w" << j;
  o << ";gao=" << format_number(s.gao.jg_max) << "," << s.gao.q;
  for (int d : s.gao.delta_J) o << "d" << d;
  for (double v : s.gao.fit_s) o << "s" << format_number(v);
  return o.str();
}

// Solves one scenario point with optional phase averaging.
struct PointResult {
  std::vector<double> mean_rate;
  std::vector<Vec3> force;
  Vec3 total = Vec3::Zero();
  std::vector<std::vector<cplx>> harmonics;  // [j][n-1], n = 1..H
  int n_max = 0;
};

PointResult solve_point(const Scenario& sc) {
  const StateLayout L(sc.transition);
  const int P = sc.phase_average.enabled ? std::max(1, sc.phase_average.points) : 1;
  const std::size_t N = sc.waves.size();
  const int H = sc.solver.harmonics;
  PointResult out;
  out.mean_rate.assign(N, 0.0);
  out.force.assign(N, Vec3::Zero());
  out.harmonics.assign(N, std::vector<cplx>(static_cast<std::size_t>(std::max(H, 0)), 0.0));
  for (int k = 0; k < P; ++k) {
    const double phase = P == 1 ? 0.0 : 2.0 * M_PI * k / P;
    const FieldSet field = sc.field(phase);
    const ObeMatrices M = build_obe_matrices(L, field);
    const PeriodicSolution s = solve_periodic(field, M, sc.solver);
    out.n_max = std::max(out.n_max, s.n_max);
    for (std::size_t j = 0; j < N; ++j) {
      out.mean_rate[j] += s.mean_rate(j) / P;
      out.force[j] += s.mean_force[j] / P;
      for (int n = 1; n <= H; ++n) out.harmonics[j][static_cast<std::size_t>(n - 1)] += s.rate(j, n) / double(P);
    }
    out.total += s.total_force / P;
  }
  return out;
}

std::string hash_str(const Scenario& sc) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(sc.hash()));
  return hash;
}

void add_common_metadata(ResultTable& t, const Scenario& sc, const std::string& command) {
  t.metadata.emplace_back("command", command);
  t.metadata.emplace_back("scenario_hash", hash_str(sc));
  t.metadata.emplace_back("transition", "Jg=" + sc.transition.Jg.str() + " Je=" + sc.transition.Je.str() +
                                            (sc.transition.two_level_override ? " two_level" : ""));
  t.metadata.emplace_back("waves", std::to_string(sc.waves.size()));
  t.metadata.emplace_back("solver", "tol=" + format_number(sc.solver.tol) +
                                        " harmonics=" + std::to_string(sc.solver.harmonics) +
                                        " n_max_init=" + std::to_string(sc.solver.n_max_init) +
                                        " n_max_cap=" + std::to_string(sc.solver.n_max_cap));
  t.metadata.emplace_back("phase_average", sc.phase_average.enabled
                                               ? "points=" + std::to_string(sc.phase_average.points)
                                               : std::string("off"));
  t.metadata.emplace_back("units", "rates in gamma, forces in hbar k0 gamma");
}

// Random commensurate field for the builtin suites.
FieldSet random_field(std::mt19937_64& rng, int N, double max_rabi, double max_det) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> G;
  std::uniform_int_distribution<int> kd(-3, 3);
  // rational step keeps the detunings commensurate; |detuning| <= max_det
  const double step = 0.25 * std::uniform_int_distribution<int>(1, 4)(rng);
  const double base = (max_det - 3 * step) * (2 * U(rng) - 1);
  std::vector<PlaneWave> waves;
  for (int j = 0; j < N; ++j) {
    PlaneWave w;
    w.rabi = std::polar(max_rabi * (0.2 + 0.8 * U(rng)), 2 * M_PI * U(rng));
    w.detuning = base + kd(rng) * step;
    Polarization p{cplx(G(rng), G(rng)), cplx(G(rng), G(rng)), cplx(G(rng), G(rng))};
    const double n = std::sqrt(polarization::norm2(p));
    for (auto& c : p) c /= n;
    w.pol = p;
    Vec3 k(G(rng), G(rng), G(rng));
    w.k_dir = k.normalized();
    waves.push_back(w);
  }
  return FieldSet(std::move(waves));
}

std::vector<AtomicTransition> transitions_up_to(int max_twice, bool include_minus) {
  std::vector<AtomicTransition> out{AtomicTransition::two_level()};
  for (int tg = 0; tg <= max_twice; ++tg) {
    for (int dj = include_minus ? -1 : 0; dj <= 1; ++dj) {
      const int te = tg + 2 * dj;
      if (te < 0 || (tg == 0 && te == 0)) continue;
      out.push_back({HalfInt::from_twice(tg), HalfInt::from_twice(te)});
    }
  }
  return out;
}

void check_row(ResultTable& t, const std::string& label, double residual, double tol) {
  const bool ok = std::isfinite(residual) && residual < tol;
  t.add_row({residual, tol}, ok ? "PASS" : "FAIL", label);
}

ResultTable check_table(const std::string& suite) {
  ResultTable t;
  t.label_column = "case";
  t.columns = {"residual", "tolerance"};
  t.metadata.emplace_back("command", "check");
  t.metadata.emplace_back("suite", suite);
  return t;
}

void suite_two_level(ResultTable& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const StateLayout L(AtomicTransition::two_level());
  for (int k = 0; k < 20; ++k) {
    PlaneWave w;
    w.rabi = std::polar(5.0 * U(rng), 2 * M_PI * U(rng));
    w.detuning = 20.0 * (2 * U(rng) - 1);
    const FieldSet f({w});
    const double s = saturation_parameter(w.rabi, w.detuning, 1.0);
    const double expect = 0.5 * s / (1 + s);
    const double got = solve_periodic(f, build_obe_matrices(L, f)).mean_rate(0);
    check_row(t, "two-level wave " + std::to_string(k + 1), std::abs(got - expect) / std::max(expect, 1e-300), 1e-9);
  }
  // circular light on Delta J = 1 behaves as a two-level atom
  for (int tg = 1; tg <= 4; ++tg) {
    const AtomicTransition tr{HalfInt::from_twice(tg), HalfInt::from_twice(tg + 2)};
    const StateLayout Lm(tr);
    PlaneWave w;
    w.rabi = 1.7;
    w.detuning = 0.8;
    w.pol = polarization::sigma_plus();
    const FieldSet f({w});
    const double s = saturation_parameter(w.rabi, w.detuning, 1.0);
    const double got = solve_periodic(f, build_obe_matrices(Lm, f)).mean_rate(0);
    check_row(t, "sigma+ Jg=" + tr.Jg.str(), std::abs(got - 0.5 * s / (1 + s)) / (0.5 * s / (1 + s)), 1e-9);
  }
}

void suite_rotation(ResultTable& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  // the 0-0 override is not a spherical structure, so it is left out
  auto transitions = transitions_up_to(3, true);
  transitions.erase(transitions.begin());
  for (int k = 0; k < 25; ++k) {
    const AtomicTransition tr = transitions[static_cast<std::size_t>(k) % transitions.size()];
    // Delta J = -1 keeps a stationary dark state unless enough waves are present
    const int N = tr.delta_J() < 0 ? 3 : 1 + k % 2;
    const EulerAngles e{2 * M_PI * U(rng), M_PI * U(rng), 2 * M_PI * U(rng)};
    const std::string name =
        "Jg=" + tr.Jg.str() + " Je=" + tr.Je.str() + " N=" + std::to_string(N) + " #" + std::to_string(k + 1);
    try {
      const FieldSet f = random_field(rng, N, 2.0, 3.0);
      const StateLayout L(tr);
      check_row(t, name, verify_covariance(f, build_obe_matrices(L, f), e).max(), 1e-9);
    } catch (const Error& err) {
      t.add_row({kNaN, 1e-9}, "FAIL", name + " (" + std::string(error_code_name(err.code())) + ")");
    }
  }
}

void suite_appendix_b(ResultTable& t) {
  for (const auto& tr : transitions_up_to(4, true)) {
    const StateLayout L(tr);
    const ObeMatrices M = build_obe_matrices(L, 0.0);
    const int p = L.dim_p(), z = L.dim_Z();
    double closed = 0.0, dagger = 0.0, trace_imag = 0.0, pz = 0.0;
    ComplexMatrix sum_zz = ComplexMatrix::Zero(z, z);
    for (int q = -1; q <= 1; ++q) {
      for (int qp = -1; qp <= 1; ++qp) {
        const ComplexMatrix d = build_C_xixi(L, q, qp) - appendixB_blocks(L, q, qp);
        if (d.size() > 0) closed = std::max(closed, d.cwiseAbs().maxCoeff());
        if (z > 0) {
          const ComplexMatrix a = M.Cxx(q, qp).bottomRightCorner(z, z);
          const ComplexMatrix b = M.Cxx(qp, q).bottomRightCorner(z, z);
          dagger = std::max(dagger, (a - b.adjoint()).cwiseAbs().maxCoeff());
        }
      }
      if (z > 0) {
        sum_zz += M.Cxx(q, q).bottomRightCorner(z, z);
        pz = std::max({pz, M.Cxx(q, q).topRightCorner(p, z).cwiseAbs().maxCoeff(),
                       M.Cxx(q, q).bottomLeftCorner(z, p).cwiseAbs().maxCoeff()});
      }
    }
    if (z > 0) trace_imag = sum_zz.imag().cwiseAbs().maxCoeff();
    const std::string name = "Jg=" + tr.Jg.str() + " Je=" + tr.Je.str() + (tr.two_level_override ? " override" : "");
    check_row(t, name + " closed form", closed, 1e-14);
    check_row(t, name + " ZZ dagger symmetry", dagger, 1e-14);
    check_row(t, name + " ZZ diagonal sum real", trace_imag, 1e-14);
    check_row(t, name + " pZ diagonal zero", pz, 1e-14);
  }
}

void suite_scenario(ResultTable& t, const Scenario& sc, std::uint64_t seed) {
  const FieldSet f = sc.field();
  const StateLayout L(sc.transition);
  const ObeMatrices M = build_obe_matrices(L, f);
  const PeriodicSolution s = solve_periodic(f, M, sc.solver);
  check_row(t, "harmonic system residual", s.residual, std::max(1e-8, 100 * sc.solver.tol));
  const OracleHarmonics o = oracle_harmonics(f, M, 0);
  double worst = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double a = s.mean_rate(j), b = o.rate(j, 0).real();
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-3));
  }
  check_row(t, "mean rates vs time oracle", worst, 1e-6);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const EulerAngles e{2 * M_PI * U(rng), M_PI * U(rng), 2 * M_PI * U(rng)};
  if (!sc.transition.two_level_override) check_row(t, "rotation covariance", verify_covariance(f, M, e).max(), 1e-9);
}

}  // namespace

const std::string* ConfigSection::find(const std::string& key) const {
  for (const auto& kv : entries) {
    if (kv.first == key) return &kv.second;
  }
  return nullptr;
}

std::vector<ConfigSection> parse_config_text(const std::string& text) {
  std::vector<ConfigSection> out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    // inline comment needs a preceding space so '#' inside values is rare
    for (const char* mark : {" #", "\t#", " ;", "\t;"}) {
      const auto p = s.find(mark);
      if (p != std::string::npos) s = trim(s.substr(0, p));
    }
    if (s.front() == '[') {
      if (s.back() != ']') parse_fail(line, "unterminated section header");
      const std::string name = lower(trim(s.substr(1, s.size() - 2)));
      if (name.empty()) parse_fail(line, "empty section name");
      out.push_back({name, line, {}, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) parse_fail(line, "expected 'key = value'");
    if (out.empty()) parse_fail(line, "entry outside any section");
    const std::string key = lower(trim(s.substr(0, eq)));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) parse_fail(line, "empty key");
    if (value.empty()) parse_fail(line, "empty value for '" + key + "'");
    ConfigSection& sec = out.back();
    if (sec.key_lines.count(key)) parse_fail(line, "duplicate key '" + key + "'");
    sec.entries.emplace_back(key, value);
    sec.key_lines[key] = line;
  }
  return out;
}

Scenario scenario_from_sections(const std::vector<ConfigSection>& sections, const std::string& source_text,
                                bool partial) {
  Scenario sc;
  sc.source_text = source_text;
  bool have_transition = false;
  std::vector<std::size_t> scan_waves, phase_waves;
  std::set<std::string> seen;
  for (const ConfigSection& sec : sections) {
    if (sec.name != "wave" && !seen.insert(sec.name).second) parse_fail(sec.line, "duplicate [" + sec.name + "]");
    auto line_of = [&](const std::string& k) { return sec.key_lines.at(k); };
    auto unknown = [&](const std::string& k) { parse_fail(line_of(k), "unknown key '" + k + "' in [" + sec.name + "]"); };
    if (sec.name == "transition") {
      if (have_transition) parse_fail(sec.line, "duplicate [transition]");
      have_transition = true;
      std::optional<HalfInt> jg, je;
      std::optional<int> dj;
      for (const auto& [k, v] : sec.entries) {
        if (k == "jg") jg = to_halfint(v, line_of(k));
        else if (k == "je") je = to_halfint(v, line_of(k));
        else if (k == "delta_j") dj = to_int(v, line_of(k));
        else if (k == "gamma") sc.transition.gamma = to_number(v, line_of(k));
        else if (k == "two_level") sc.transition.two_level_override = to_bool(v, line_of(k));
        else unknown(k);
      }
      if (sc.transition.two_level_override) {
        jg = jg.value_or(HalfInt::from_int(0));
        je = je.value_or(HalfInt::from_int(0));
      }
      if (!jg) parse_fail(sec.line, "[transition] needs Jg");
      if (je && dj) parse_fail(sec.line, "[transition] takes Je or delta_J, not both");
      if (!je && !dj) parse_fail(sec.line, "[transition] needs Je or delta_J");
      sc.transition.Jg = *jg;
      sc.transition.Je = je ? *je : HalfInt::from_twice(jg->twice() + 2 * *dj);
    } else if (sec.name == "wave") {
      PlaneWave w;
      double mag = 0.0, phase = 0.0;
      bool have_rabi = false, have_phase = false;
      for (const auto& [k, v] : sec.entries) {
        const int ln = line_of(k);
        if (k == "rabi") {
          mag = to_number(v, ln);
          have_rabi = true;
        } else if (k == "phase" || k == "phase_pi") {
          if (have_phase) parse_fail(ln, "give phase or phase_pi, not both");
          phase = to_number(v, ln) * (k == "phase_pi" ? M_PI : 1.0);
          have_phase = true;
        } else if (k == "detuning") {
          w.detuning = to_number(v, ln);
        } else if (k == "direction") {
          const Vec3 d = to_vec3(v, ln);
          if (d.norm() == 0.0) parse_fail(ln, "zero propagation direction");
          w.k_dir = d.normalized();
        } else if (k == "k") {
          w.k_mag = to_number(v, ln);
        } else if (k == "polarization") {
          w.pol = to_polarization(v, ln);
        } else {
          unknown(k);
        }
      }
      if (!have_rabi) parse_fail(sec.line, "[wave] needs rabi");
      if (mag < 0) parse_fail(line_of("rabi"), "rabi is a magnitude; use phase for the sign");
      w.rabi = std::polar(mag, phase);
      sc.waves.push_back(w);
    } else if (sec.name == "field") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "kappa") sc.kappa = to_numbers(v, line_of(k));
        else if (k == "max_denominator") sc.commensurability.max_denominator = to_int(v, line_of(k));
        else if (k == "commensurability_tol") sc.commensurability.tol = to_number(v, line_of(k));
        else unknown(k);
      }
    } else if (sec.name == "atom") {
      for (const auto& [k, v] : sec.entries) {
        if (k == "velocity") sc.velocity = to_vec3(v, line_of(k));
        else unknown(k);
      }
    } else if (sec.name == "solver") {
      for (const auto& [k, v] : sec.entries) {
        const int ln = line_of(k);
        if (k == "harmonics") sc.solver.harmonics = to_int(v, ln);
        else if (k == "tol") sc.solver.tol = to_number(v, ln);
        else if (k == "n_max_init") sc.solver.n_max_init = to_int(v, ln);
        else if (k == "n_max_cap") sc.solver.n_max_cap = to_int(v, ln);
        else if (k == "cond_limit") sc.solver.cond_limit = to_number(v, ln);
        else if (k == "reduce_pure_polarization") sc.solver.reduce_pure_polarization = to_bool(v, ln);
        else unknown(k);
      }
    } else if (sec.name == "scan") {
      if (sc.scan) parse_fail(sec.line, "duplicate [scan]");
      ScanSpec scan;
      std::optional<double> from, to;
      std::optional<int> points;
      bool have_dj = false;
      for (const auto& [k, v] : sec.entries) {
        const int ln = line_of(k);
        if (k == "variable") {
          scan.variable = lower(v);
          if (scan.variable == "j_g") scan.variable = "jg";
          if (scan.variable != "velocity" && scan.variable != "detuning" && scan.variable != "rabi" &&
              scan.variable != "jg") {
            parse_fail(ln, "scan variable must be velocity, detuning, rabi or Jg");
          }
        } else if (k == "values") {
          scan.values = to_numbers(v, ln);
        } else if (k == "from") {
          from = to_number(v, ln);
        } else if (k == "to") {
          to = to_number(v, ln);
        } else if (k == "points") {
          points = to_int(v, ln);
          if (*points < 1) parse_fail(ln, "points must be positive");
        } else if (k == "direction") {
          const Vec3 d = to_vec3(v, ln);
          if (d.norm() == 0.0) parse_fail(ln, "zero scan direction");
          scan.direction = d.normalized();
        } else if (k == "waves") {
          scan_waves = to_wave_list(v, ln);
        } else if (k == "delta_j") {
          scan.delta_J = to_int(v, ln);
          have_dj = true;
        } else if (k == "two_level") {
          scan.two_level_override = to_bool(v, ln);
        } else {
          unknown(k);
        }
      }
      if (scan.variable.empty()) parse_fail(sec.line, "[scan] needs variable");
      const bool range = from || to || points;
      if (range && !scan.values.empty()) parse_fail(sec.line, "[scan] takes values or from/to/points, not both");
      if (range) {
        if (!from || !to || !points) parse_fail(sec.line, "[scan] range needs from, to and points");
        for (int i = 0; i < *points; ++i) {
          scan.values.push_back(*points == 1 ? *from : *from + (*to - *from) * i / (*points - 1));
        }
      }
      if (scan.values.empty()) parse_fail(sec.line, "[scan] has no values");
      if (!have_dj) scan.delta_J = std::numeric_limits<int>::min();
      scan.waves = scan_waves;
      sc.scan = scan;
    } else if (sec.name == "phase_average") {
      for (const auto& [k, v] : sec.entries) {
        const int ln = line_of(k);
        if (k == "enabled") sc.phase_average.enabled = to_bool(v, ln);
        else if (k == "points") sc.phase_average.points = to_int(v, ln);
        else if (k == "waves") phase_waves = to_wave_list(v, ln);
        else unknown(k);
      }
      if (sc.phase_average.points < 1) parse_fail(sec.line, "phase_average points must be positive");
    } else if (sec.name == "gao") {
      for (const auto& [k, v] : sec.entries) {
        const int ln = line_of(k);
        if (k == "jg_max") sc.gao.jg_max = to_number(v, ln);
        else if (k == "q") sc.gao.q = to_int(v, ln);
        else if (k == "delta_j") {
          sc.gao.delta_J.clear();
          for (double d : to_numbers(v, ln)) sc.gao.delta_J.push_back(static_cast<int>(d));
        } else if (k == "fit_s") sc.gao.fit_s = to_numbers(v, ln);
        else unknown(k);
      }
      if (sc.gao.fit_s.size() < 2) parse_fail(sec.line, "[gao] fit_s needs at least two values");
    } else {
      parse_fail(sec.line, "unknown section [" + sec.name + "]");
    }
  }
  if (!have_transition && !partial) throw Error(ErrorCode::Parse, "missing [transition] section");
  if (sc.scan && sc.scan->delta_J == std::numeric_limits<int>::min()) sc.scan->delta_J = sc.transition.delta_J();
  if (sc.scan && sc.scan->variable == "jg" && !sc.scan->two_level_override) {
    sc.scan->two_level_override = sc.transition.two_level_override;
  }
  const std::size_t N = sc.waves.size();
  for (auto j : scan_waves) {
    if (j >= N) throw Error(ErrorCode::Parse, "[scan] waves refers to wave " + std::to_string(j + 1));
  }
  for (auto j : phase_waves) {
    if (j >= N) throw Error(ErrorCode::Parse, "[phase_average] waves refers to wave " + std::to_string(j + 1));
  }
  sc.phase_average.waves = phase_waves;
  if (sc.phase_average.enabled && phase_waves.empty()) {
    throw Error(ErrorCode::Parse, "[phase_average] needs the waves that carry the phase");
  }
  return sc;
}

Scenario parse_scenario(const std::string& text, bool partial) {
  Scenario sc = scenario_from_sections(parse_config_text(text), text, partial);
  if (!partial) sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path, bool partial) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Parse, "cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), partial);
}

void Scenario::validate() const {
  transition.validate();
  if (waves.empty()) throw Error(ErrorCode::Validation, "scenario has no [wave] sections");
  (void)field();
}

FieldSet Scenario::field(double phase) const {
  std::vector<PlaneWave> w = waves;
  if (phase != 0.0) {
    for (auto j : phase_average.waves) w.at(j).rabi *= std::polar(1.0, phase);
  }
  FieldSet f(std::move(w), kappa, commensurability);
  if (velocity.squaredNorm() > 0.0) return doppler_shift(f, velocity);
  return f;
}

std::uint64_t Scenario::hash() const {
  // FNV-1a over the canonical form, stable across platforms
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical(*this)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void ResultTable::add_row(std::vector<double> values, std::string row_status, std::string label) {
  if (values.size() != columns.size()) throw Error(ErrorCode::Validation, "row width does not match the header");
  rows.push_back(std::move(values));
  status.push_back(std::move(row_status));
  labels.push_back(std::move(label));
}

bool ResultTable::all_ok() const {
  return std::all_of(status.begin(), status.end(), [](const std::string& s) { return s == "ok" || s == "PASS"; });
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table(std::ostream& out, const ResultTable& t) {
  for (const auto& [k, v] : t.metadata) out << "# " << k << ": " << v << "\n";
  bool first = true;
  auto sep = [&] {
    if (!first) out << ",";
    first = false;
  };
  if (!t.label_column.empty()) {
    sep();
    out << t.label_column;
  }
  for (const auto& c : t.columns) {
    sep();
    out << c;
  }
  sep();
  out << "status\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    first = true;
    if (!t.label_column.empty()) {
      sep();
      out << t.labels[r];
    }
    for (double v : t.rows[r]) {
      sep();
      out << format_number(v);
    }
    sep();
    out << t.status[r] << "\n";
  }
}

ResultTable run_force(const Scenario& sc) {
  ResultTable t;
  add_common_metadata(t, sc, "force");
  t.label_column = "wave";
  t.columns = {"R_mean", "F_x", "F_y", "F_z"};
  const int H = sc.solver.harmonics;
  for (int n = 1; n <= H; ++n) {
    t.columns.push_back("R" + std::to_string(n) + "_re");
    t.columns.push_back("R" + std::to_string(n) + "_im");
  }
  t.columns.push_back("n_max");
  const std::size_t N = sc.waves.size();
  try {
    const PointResult p = solve_point(sc);
    std::vector<double> total_row(t.columns.size(), 0.0);
    for (std::size_t j = 0; j < N; ++j) {
      std::vector<double> row{p.mean_rate[j], p.force[j].x(), p.force[j].y(), p.force[j].z()};
      for (const cplx& r : p.harmonics[j]) {
        row.push_back(r.real());
        row.push_back(r.imag());
      }
      row.push_back(p.n_max);
      for (std::size_t c = 0; c + 1 < row.size(); ++c) total_row[c] += row[c];
      t.add_row(row, "ok", std::to_string(j + 1));
    }
    total_row[1] = p.total.x();
    total_row[2] = p.total.y();
    total_row[3] = p.total.z();
    total_row.back() = p.n_max;
    t.add_row(total_row, "ok", "total");
  } catch (const Error& e) {
    for (std::size_t j = 0; j <= N; ++j) {
      t.add_row(std::vector<double>(t.columns.size(), kNaN), std::string(error_code_name(e.code())),
                j < N ? std::to_string(j + 1) : "total");
    }
    t.metadata.emplace_back("error", e.what());
  }
  return t;
}

ResultTable run_scan(const Scenario& sc, const RunOptions& opts) {
  if (!sc.scan) throw Error(ErrorCode::Validation, "scenario has no [scan] section");
  const ScanSpec& scan = *sc.scan;
  ResultTable t;
  add_common_metadata(t, sc, "scan");
  t.metadata.emplace_back("scan", scan.variable + " points=" + std::to_string(scan.values.size()));
  const std::size_t N = sc.waves.size();
  t.columns = {scan.variable == "jg" ? std::string("Jg") : scan.variable, "F_x", "F_y", "F_z"};
  for (std::size_t j = 0; j < N; ++j) t.columns.push_back("R_" + std::to_string(j + 1));
  t.columns.push_back("n_max");

  const std::size_t P = scan.values.size();
  std::vector<std::vector<double>> rows(P);
  std::vector<std::string> status(P, "ok");
  auto compute = [&](std::size_t i) {
    const double v = scan.values[i];
    std::vector<double> row(t.columns.size(), kNaN);
    row[0] = v;
    try {
      Scenario p = sc;
      p.scan.reset();
      auto selected = [&](std::size_t j) {
        return scan.waves.empty() || std::find(scan.waves.begin(), scan.waves.end(), j) != scan.waves.end();
      };
      if (scan.variable == "velocity") {
        p.velocity = v * scan.direction;
      } else if (scan.variable == "detuning") {
        for (std::size_t j = 0; j < N; ++j) {
          if (selected(j)) p.waves[j].detuning += v;
        }
      } else if (scan.variable == "rabi") {
        if (v < 0) throw Error(ErrorCode::Domain, "negative Rabi magnitude");
        for (std::size_t j = 0; j < N; ++j) {
          if (selected(j)) p.waves[j].rabi = std::polar(v, std::arg(p.waves[j].rabi));
        }
      } else {
        const double tw = 2.0 * v;
        if (std::abs(tw - std::round(tw)) > 1e-9 || v < 0) throw Error(ErrorCode::Domain, "Jg must be a half-integer");
        const int tg = static_cast<int>(std::lround(tw));
        p.transition.Jg = HalfInt::from_twice(tg);
        p.transition.Je = HalfInt::from_twice(tg + 2 * scan.delta_J);
        p.transition.two_level_override = scan.two_level_override && tg == 0 && scan.delta_J == 0;
      }
      p.validate();
      const PointResult r = solve_point(p);
      row[1] = r.total.x();
      row[2] = r.total.y();
      row[3] = r.total.z();
      for (std::size_t j = 0; j < N; ++j) row[4 + j] = r.mean_rate[j];
      row.back() = r.n_max;
    } catch (const Error& e) {
      status[i] = std::string(error_code_name(e.code()));
    }
    rows[i] = std::move(row);
  };

  const int T = std::max(1, std::min<int>(opts.threads, static_cast<int>(P)));
  if (T == 1) {
    for (std::size_t i = 0; i < P; ++i) compute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int k = 0; k < T; ++k) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < P; i = next++) compute(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < P; ++i) t.add_row(rows[i], status[i]);
  return t;
}

ResultTable run_gao_table(const Scenario& sc) {
  ResultTable t;
  t.metadata.emplace_back("command", "gao-table");
  t.metadata.emplace_back("polarization_q", std::to_string(sc.gao.q));
  std::string fit = "s=";
  for (double s : sc.gao.fit_s) fit += format_number(s) + " ";
  t.metadata.emplace_back("solver_fit", trim(fit));
  t.columns = {"Jg", "delta_J", "q", "a", "b", "a_fit", "b_fit", "max_residual"};
  if (sc.gao.q < -1 || sc.gao.q > 1) throw Error(ErrorCode::Domain, "q must be -1, 0 or 1");
  const int tmax = static_cast<int>(std::floor(2.0 * sc.gao.jg_max + 1e-9));
  for (int dj : sc.gao.delta_J) {
    for (int tg = 1; tg <= tmax; ++tg) {
      const AtomicTransition tr{HalfInt::from_twice(tg), HalfInt::from_twice(tg + 2 * dj)};
      std::vector<double> row(t.columns.size(), kNaN);
      row[0] = 0.5 * tg;
      row[1] = dj;
      row[2] = sc.gao.q;
      std::string st = "ok";
      try {
        tr.validate();
        const GaoParams g = gao_params(tr, sc.gao.q);
        row[3] = g.a;
        row[4] = g.b;
        const StateLayout L(tr);
        std::vector<double> s_val, r_val;
        for (double s : sc.gao.fit_s) {
          PlaneWave w;
          w.rabi = std::sqrt(0.5 * s) * tr.gamma;  // delta = 0: s = 2 |Omega|^2 / gamma^2
          w.pol = sc.gao.q == 0 ? polarization::pi()
                                : (sc.gao.q > 0 ? polarization::sigma_plus() : polarization::sigma_minus());
          const FieldSet f({w});
          s_val.push_back(s);
          r_val.push_back(solve_periodic(f, build_obe_matrices(L, f), sc.solver).mean_rate(0));
        }
        double resid = 0.0;
        for (std::size_t k = 0; k < s_val.size(); ++k) {
          const double model = g.a == 0.0 ? 0.0 : 0.5 * tr.gamma * s_val[k] * g.a / (g.b + s_val[k]);
          resid = std::max(resid, std::abs(r_val[k] - model));
        }
        row[7] = resid;
        // s / R = (2/(gamma a)) (b + s) is linear in s
        if (std::abs(r_val[0]) > 1e-12 && std::abs(r_val[1]) > 1e-12) {
          const double y0 = s_val[0] / r_val[0], y1 = s_val[1] / r_val[1];
          const double slope = (y1 - y0) / (s_val[1] - s_val[0]);
          row[5] = 2.0 / (tr.gamma * slope);
          row[6] = y0 / slope - s_val[0];
        }
      } catch (const Error& e) {
        st = std::string(error_code_name(e.code()));
      }
      t.add_row(row, st);
    }
  }
  return t;
}

const std::vector<std::string>& check_suite_names() {
  static const std::vector<std::string> names{"two-level-limit", "rotation-covariance", "appendix-b", "scenario", "all"};
  return names;
}

ResultTable run_check(const std::string& suite, const Scenario* sc, const RunOptions& opts) {
  const auto& names = check_suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw Error(ErrorCode::Validation, "unknown check suite '" + suite + "'");
  }
  ResultTable t = check_table(suite);
  t.metadata.emplace_back("seed", std::to_string(opts.seed));
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      t.add_row({kNaN, kNaN}, "FAIL", name + " (" + std::string(error_code_name(e.code())) + ")");
    }
  };
  if (suite == "two-level-limit" || suite == "all") guarded("two-level-limit", [&] { suite_two_level(t, opts.seed); });
  if (suite == "rotation-covariance" || suite == "all") {
    guarded("rotation-covariance", [&] { suite_rotation(t, opts.seed); });
  }
  if (suite == "appendix-b" || suite == "all") guarded("appendix-b", [&] { suite_appendix_b(t); });
  if (suite == "scenario") {
    if (!sc) throw Error(ErrorCode::Validation, "the scenario suite needs a config");
    t.metadata.emplace_back("scenario_hash", hash_str(*sc));
    guarded("scenario", [&] { suite_scenario(t, *sc, opts.seed); });
  }
  return t;
}

}  // namespace radforce
