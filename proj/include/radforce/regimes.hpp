#pragma once

#include <map>
#include <vector>

#include "radforce/floquet_solver.hpp"

namespace radforce {

struct LowIntensityDiagnostics {
  bool low_intensity = false;
  double rabi_sum = 0.0;        // sum_j |Omega_j| / gamma
  double max_row_sum = 0.0;     // max over n != 0 and rows of sum_m sum_col |W^(n,m)|
  double rabi_threshold = 0.1;
  double row_threshold = 0.0;   // 0.1 / sqrt(dim x_xi)
  int n_checked = 0;            // |n| range scanned for the row sums
};

/// Both low-intensity conditions with fixed 0.1 factors; rows are scanned
/// for 0 < |n| <= n_check (0 picks max(4, 4 max|m_j|)).
LowIntensityDiagnostics low_intensity_check(const FieldSet& field, const ObeMatrices& matrices, int n_check = 0);

/// Per-wave low-intensity saturation matrix for distinct frequencies:
/// Re[sum_qq' (Omega_jq Omega*_jq' / gamma) / (gamma/2 - i delta_j) (C)^q_q'].
RealMatrix low_intensity_saturation(const FieldSet& field, const ObeMatrices& matrices, std::size_t j);

/// gamma N_J^{-1} u^T s_j (A + s)^{-1} A u with low-intensity s_j. Requires
/// distinct frequencies. Throws DegenerateRegime if A + s is singular.
double low_intensity_rate(const FieldSet& field, const ObeMatrices& matrices, std::size_t j);

/// Phase-averaged rates for a sigma+ / sigma- pair, from the pp blocks only.
std::vector<double> incoherent_sigma_pm(const FieldSet& field, const ObeMatrices& matrices);

/// Stationary rates when every wave has the same detuning: one linear solve
/// with s_j = Re[sum_qq' (Omega_jq Omega*_q' / gamma)/(gamma/2 - i delta) (C)^q_q'].
std::vector<double> same_frequency_rate(const FieldSet& field, const ObeMatrices& matrices);

/// Single wave of fixed saturation s, polarization and detuning.
double single_wave_rate(const StateLayout& layout, double s, const Polarization& pol, double delta);

/// u' = I(eps) X(s, eps, 0)^{-1} A u, whose vanishing makes the single-wave
/// rate independent of the detuning at fixed s.
RealVector detuning_sensitivity(const StateLayout& layout, double s, const Polarization& pol);

struct GaoParams {
  double a = 0.0;
  double b = 0.0;
  int delta_J = 0;
  HalfInt Jg;
  int q = 0;
};

/// a and b of R = (gamma/2) s a / (b + s) for waves of one frequency and one
/// pure polarization q. Throws UnsupportedTransition for Delta J = -1.
GaoParams gao_params(const AtomicTransition& transition, int q);

/// Population-sector solve for a field of one pure polarization. Throws
/// ConfigurationMismatch when the polarizations are mixed.
PeriodicSolution pure_polarization_reduced(const FieldSet& field, const ObeMatrices& matrices,
                                           const SolverOptions& options = {});

/// Low-intensity rate for one pure polarization and distinct frequencies:
/// gamma N_J^{-1} s_j u_p^T C_pp (A_pp + s C_pp)^{-1} A_pp u_p.
double pure_polarization_low_intensity_rate(const FieldSet& field, const ObeMatrices& matrices, std::size_t j);

struct ContinuedFractionResult {
  int n_s = 0;
  int depth_used = 0;
  ComplexMatrix Q_ns;                 // maps x^(0) onto x^(n_s)
  std::vector<ComplexMatrix> higher_Q;  // Q^(k n_s) for k = 1..harmonics
  ComplexVector x0;                   // x_xi^(0)
  std::vector<double> mean_rate;      // per wave
  double residual = 0.0;              // of the coupled n = k n_s equations
};

/// N = 2 bichromatic field: matrix continued fraction evaluated bottom-up,
/// depth doubled from 8 until Q^(n_s) changes by less than tol.
ContinuedFractionResult n2_continued_fraction(const FieldSet& field, const ObeMatrices& matrices,
                                              int depth_cap = 4096, double tol = 1e-12, int harmonics = 4);

}  // namespace radforce
