#include "radforce/field_config.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "radforce/errors.hpp"

namespace radforce {

namespace polarization {

Polarization pi() { return {cplx(0.0), cplx(1.0), cplx(0.0)}; }
Polarization sigma_plus() { return {cplx(0.0), cplx(0.0), cplx(1.0)}; }
Polarization sigma_minus() { return {cplx(1.0), cplx(0.0), cplx(0.0)}; }

Polarization elliptical(double theta, double phi) {
  return {std::polar(std::sin(0.5 * theta), phi), cplx(0.0), cplx(std::cos(0.5 * theta))};
}

Polarization from_cartesian(const CVec3& eps) {
  // e_q = (e^q)^*, eps_q = e_q . eps with e^{+1} = -(x + i y)/sqrt2, e^{-1} = (x - i y)/sqrt2
  const double r = 1.0 / std::sqrt(2.0);
  const cplx plus = -r * (eps[0] - kI * eps[1]);
  const cplx minus = r * (eps[0] + kI * eps[1]);
  return {minus, eps[2], plus};
}

CVec3 to_cartesian(const Polarization& p) {
  const double r = 1.0 / std::sqrt(2.0);
  const cplx minus = p[0], zero = p[1], plus = p[2];
  return {r * (minus - plus), -kI * r * (minus + plus), zero};
}

double norm2(const Polarization& p) {
  return std::norm(p[0]) + std::norm(p[1]) + std::norm(p[2]);
}

}  // namespace polarization

namespace {

struct Fraction {
  long long num;
  long long den;
};

// Best rational approximation with den <= max_den via continued fractions.
Fraction rationalize(double x, int max_den, double tol) {
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  Fraction best{std::llround(x), 1};
  for (int iter = 0; iter < 64; ++iter) {
    const double a_real = std::floor(r);
    if (std::abs(a_real) > 1e15) break;
    const long long a = static_cast<long long>(a_real);
    const long long h2 = a * h1 + h0;
    const long long k2 = a * k1 + k0;
    if (k2 > max_den) break;
    best = {h2, k2};
    if (std::abs(x - static_cast<double>(h2) / static_cast<double>(k2)) <= tol) break;
    const double frac = r - a_real;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
  }
  return best;
}

}  // namespace

Commensurability analyze_commensurability(const std::vector<double>& detunings,
                                          const std::vector<double>& kappa,
                                          const CommensurabilityOptions& options) {
  if (detunings.empty()) throw Error(ErrorCode::Domain, "at least one wave is required");
  if (kappa.size() != detunings.size()) {
    throw Error(ErrorCode::Domain, "kappa and detuning lists differ in length");
  }
  if (options.tol <= 0.0 || options.max_denominator < 1) {
    throw Error(ErrorCode::Domain, "invalid commensurability options");
  }
  Commensurability out;
  out.deltabar = 0.0;
  for (std::size_t j = 0; j < detunings.size(); ++j) out.deltabar += kappa[j] * detunings[j];
  const std::size_t n = detunings.size();
  out.m.assign(n, 0);

  std::vector<double> offset(n);
  double ref = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    offset[j] = detunings[j] - out.deltabar;
    if (std::abs(offset[j]) > options.tol && (ref == 0.0 || std::abs(offset[j]) < std::abs(ref))) {
      ref = offset[j];
    }
  }
  if (ref == 0.0) {
    out.stationary = true;
    return out;
  }

  std::vector<Fraction> ratio(n, Fraction{0, 1});
  long long lcm = 1;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(offset[j]) <= options.tol) continue;
    const double r = offset[j] / ref;
    ratio[j] = rationalize(r, options.max_denominator, options.tol / std::abs(ref));
    if (std::abs(r - static_cast<double>(ratio[j].num) / static_cast<double>(ratio[j].den)) * std::abs(ref) >
        options.tol) {
      std::ostringstream msg;
      msg << "frequency offset ratio " << r << " has no rational form with denominator <= "
          << options.max_denominator;
      throw Error(ErrorCode::IncommensurableFrequencies, msg.str());
    }
    lcm = std::lcm(lcm, ratio[j].den);
  }
  std::vector<long long> ints(n, 0);
  long long g = 0;
  for (std::size_t j = 0; j < n; ++j) {
    ints[j] = ratio[j].num * (lcm / ratio[j].den);
    g = std::gcd(g, std::llabs(ints[j]));
  }
  out.stationary = false;
  out.omega_c = std::abs(ref) * static_cast<double>(g) / static_cast<double>(lcm);
  const long long sign = ref > 0 ? 1 : -1;
  for (std::size_t j = 0; j < n; ++j) {
    out.m[j] = static_cast<int>(sign * ints[j] / g);
    if (std::abs(offset[j] - out.m[j] * out.omega_c) > options.tol * std::max(1.0, static_cast<double>(std::abs(out.m[j])))) {
      throw Error(ErrorCode::IncommensurableFrequencies, "rationalized harmonics do not reproduce the offsets");
    }
  }
  std::set<int> diffs;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      const int d = out.m[l] - out.m[j];
      if (d != 0) diffs.insert(d);
    }
  }
  out.M0.assign(diffs.begin(), diffs.end());
  return out;
}

FieldSet::FieldSet(std::vector<PlaneWave> waves, std::vector<double> kappa,
                   CommensurabilityOptions options)
    : waves_(std::move(waves)), kappa_(std::move(kappa)), options_(options) {
  if (waves_.empty()) throw Error(ErrorCode::Domain, "a field needs at least one plane wave");
  const std::size_t n = waves_.size();
  if (kappa_.empty()) kappa_.assign(n, 1.0 / static_cast<double>(n));
  if (kappa_.size() != n) throw Error(ErrorCode::Validation, "kappa must have one weight per wave");
  double sum = 0.0;
  for (double k : kappa_) {
    if (k < 0.0 || !std::isfinite(k)) throw Error(ErrorCode::Validation, "kappa weights must be >= 0");
    sum += k;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorCode::Validation, "kappa weights must sum to 1");
  std::vector<double> det(n);
  for (std::size_t j = 0; j < n; ++j) {
    const PlaneWave& w = waves_[j];
    if (std::abs(polarization::norm2(w.pol) - 1.0) > 1e-6) {
      throw Error(ErrorCode::Validation, "polarization vector of wave " + std::to_string(j) + " is not normalized");
    }
    if (std::abs(w.k_dir.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::Validation, "propagation direction of wave " + std::to_string(j) + " is not a unit vector");
    }
    if (!std::isfinite(w.detuning) || !std::isfinite(w.rabi.real()) || !std::isfinite(w.rabi.imag())) {
      throw Error(ErrorCode::Validation, "non-finite wave parameter");
    }
    det[j] = w.detuning;
  }
  comm_ = analyze_commensurability(det, kappa_, options_);
}

int FieldSet::max_abs_m() const noexcept {
  int r = 0;
  for (int v : comm_.m) r = std::max(r, std::abs(v));
  return r;
}

double FieldSet::period() const noexcept {
  return comm_.stationary ? 0.0 : 2.0 * M_PI / comm_.omega_c;
}

double FieldSet::detuning(std::size_t j) const {
  if (j >= waves_.size()) throw Error(ErrorCode::IndexOutOfRange, "wave index out of range");
  return comm_.deltabar + comm_.m[j] * comm_.omega_c;
}

cplx FieldSet::rabi_component(std::size_t j, int q) const {
  if (j >= waves_.size()) throw Error(ErrorCode::IndexOutOfRange, "wave index out of range");
  if (q < -1 || q > 1) throw Error(ErrorCode::Domain, "spherical index must be in {-1, 0, 1}");
  return waves_[j].rabi * waves_[j].component(q);
}

cplx FieldSet::omega_q(int q, double t) const {
  cplx sum = 0.0;
  for (std::size_t j = 0; j < waves_.size(); ++j) {
    const cplx c = rabi_component(j, q);
    if (c == cplx(0.0)) continue;
    sum += c * std::polar(1.0, comm_.m[j] * comm_.omega_c * t);
  }
  return sum;
}

FieldSet doppler_shift(const FieldSet& field, const Vec3& velocity) {
  std::vector<PlaneWave> waves = field.waves();
  for (PlaneWave& w : waves) w.detuning -= w.k_mag * w.k_dir.dot(velocity);
  return FieldSet(std::move(waves), field.kappa(), field.options());
}

FieldSet with_kappa(const FieldSet& field, std::vector<double> kappa) {
  return FieldSet(field.waves(), std::move(kappa), field.options());
}

cplx rabi_component(const FieldSet& field, std::size_t j, int q) { return field.rabi_component(j, q); }

double saturation_parameter(cplx rabi, double detuning, double gamma) {
  return 0.5 * std::norm(rabi) / (0.25 * gamma * gamma + detuning * detuning);
}

}  // namespace radforce
