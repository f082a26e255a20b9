#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "radforce/types.hpp"

namespace radforce {

/// Spherical polarization components, indexed by q_slot(q): slot 0 is q = -1,
/// slot 1 is pi (q = 0), slot 2 is sigma+ (q = +1).
using Polarization = std::array<cplx, 3>;

namespace polarization {
Polarization pi();
Polarization sigma_plus();
Polarization sigma_minus();
/// cos(theta/2) sigma+ + e^{i phi} sin(theta/2) sigma-.
Polarization elliptical(double theta, double phi);
/// Spherical components of a Cartesian (complex) unit vector, using
/// e^{+-1} = -+(x +- i y)/sqrt(2), e^0 = z and eps_q = e_q . eps.
Polarization from_cartesian(const CVec3& eps);
/// Inverse of from_cartesian: eps = sum_q eps_q e^q.
CVec3 to_cartesian(const Polarization& p);
double norm2(const Polarization& p);
}  // namespace polarization

struct PlaneWave {
  cplx rabi{0.0, 0.0};   // complex Rabi amplitude, same unit as gamma
  double detuning = 0.0;  // omega_j - omega_eg
  Vec3 k_dir{0.0, 0.0, 1.0};
  double k_mag = 1.0;
  Polarization pol = polarization::pi();

  cplx component(int q) const { return pol[static_cast<std::size_t>(q_slot(q))]; }
};

struct CommensurabilityOptions {
  int max_denominator = 64;
  double tol = 1e-9;
};

struct Commensurability {
  /// All frequencies equal: omega_c undefined (stored as 0), every m_j = 0.
  bool stationary = true;
  double omega_c = 0.0;
  std::vector<int> m;
  /// Distinct nonzero m_l - m_j, ascending.
  std::vector<int> M0;
  double deltabar = 0.0;
};

/// Finds omega_c and the integer harmonics m_j = (delta_j - deltabar)/omega_c.
/// Offset ratios are rationalized by continued fractions with a bounded
/// denominator; throws IncommensurableFrequencies when that fails.
Commensurability analyze_commensurability(const std::vector<double>& detunings,
                                          const std::vector<double>& kappa,
                                          const CommensurabilityOptions& options = {});

class FieldSet {
 public:
  FieldSet() = default;
  /// Empty kappa means uniform weights 1/N. Validates polarizations
  /// (|eps| = 1 within 1e-6), k directions and weights.
  FieldSet(std::vector<PlaneWave> waves, std::vector<double> kappa = {},
           CommensurabilityOptions options = {});

  const std::vector<PlaneWave>& waves() const noexcept { return waves_; }
  const std::vector<double>& kappa() const noexcept { return kappa_; }
  const Commensurability& commensurability() const noexcept { return comm_; }
  const CommensurabilityOptions& options() const noexcept { return options_; }
  std::size_t size() const noexcept { return waves_.size(); }

  double deltabar() const noexcept { return comm_.deltabar; }
  double omega_c() const noexcept { return comm_.omega_c; }
  bool stationary() const noexcept { return comm_.stationary; }
  int m(std::size_t j) const { return comm_.m.at(j); }
  const std::vector<int>& M0() const noexcept { return comm_.M0; }
  int max_abs_m() const noexcept;
  /// Period 2 pi / omega_c; 0 when stationary.
  double period() const noexcept;

  /// deltabar + m_j omega_c: the detuning consistent with the harmonic grid.
  double detuning(std::size_t j) const;

  /// Omega_{j,q} = Omega_j eps_{j,q}.
  cplx rabi_component(std::size_t j, int q) const;
  /// Omega_q(t) = sum_j Omega_{j,q} exp(i m_j omega_c t).
  cplx omega_q(int q, double t) const;

 private:
  std::vector<PlaneWave> waves_;
  std::vector<double> kappa_;
  CommensurabilityOptions options_;
  Commensurability comm_;
};

/// Shifts every detuning by -k_j . v and re-analyzes commensurability with
/// the same weights.
FieldSet doppler_shift(const FieldSet& field, const Vec3& velocity);

/// Same waves, new weights.
FieldSet with_kappa(const FieldSet& field, std::vector<double> kappa);

/// Omega_{j,q}; throws IndexOutOfRange for a bad j and Domain for |q| > 1.
cplx rabi_component(const FieldSet& field, std::size_t j, int q);

/// Standard saturation parameter (|Omega|^2/2)/(gamma^2/4 + delta^2).
double saturation_parameter(cplx rabi, double detuning, double gamma);

}  // namespace radforce
