#pragma once

#include <map>
#include <vector>

#include "radforce/field_config.hpp"
#include "radforce/obe_matrices.hpp"

namespace radforce {

struct SolverOptions {
  /// Initial truncation |n| <= n_max_init; 0 picks 4 max|m_j| (at least 4).
  int n_max_init = 0;
  int n_max_cap = 512;
  double tol = 1e-10;
  double tol_zero = 1e-12;
  double tol_parallel = 1e-10;
  /// A^(n) + B^(n,0) with a condition estimate above this is singular.
  double cond_limit = 1e12;
  /// Rate harmonics kept in the solution, |n| <= harmonics.
  int harmonics = 3;
  /// Solve only the population sector when every wave carries the same pure
  /// spherical polarization (the Zeeman sector then vanishes identically).
  bool reduce_pure_polarization = true;
};

/// Spherical index q shared by every wave as a pure polarization, or 2 when
/// the polarizations are mixed.
int common_pure_polarization(const FieldSet& field, double tol = 1e-14);

/// Harmonic-system ingredients. Matrices act on the leading `sector` entries
/// of x_xi (dim_xi for the full problem, dim_p for the population sector).
class HarmonicSystem {
 public:
  HarmonicSystem(const FieldSet& field, const ObeMatrices& matrices, int sector);

  int sector() const noexcept { return sector_; }
  const FieldSet& field() const noexcept { return *field_; }
  const ObeMatrices& matrices() const noexcept { return *matrices_; }

  /// tau_n^+- = 1/(gamma + 2i(n omega_c +- deltabar)).
  cplx tau_plus(int n) const;
  cplx tau_minus(int n) const;

  /// A_xixi + (i n omega_c / gamma) 1.
  ComplexMatrix A_n(int n) const;
  /// B^(n,m); zero matrix when m is not 0 and not in M0.
  ComplexMatrix B(int n, int m) const;
  /// (A^(n) + B^(n,0))^{-1} B^(n,m). Throws SingularHarmonicMatrix.
  ComplexMatrix W(int n, int m) const;
  /// Sum over waves of the per-wave s-tilde matrices.
  const ComplexMatrix& s_tilde() const noexcept { return s_tilde_; }
  ComplexMatrix s_tilde_j(std::size_t j) const;
  /// d_xi = -N_J^{-1} (A + s~)^{-1} A u.
  ComplexVector d_xi() const;
  /// -N_J^{-1} A u: right-hand side of the n = 0 row in unnormalized form.
  ComplexVector rhs0() const;

  /// Shifts m with a nonzero B^(n,m) (0 first, then M0 ascending).
  const std::vector<int>& shifts() const noexcept { return shifts_; }

 private:
  struct Pair {
    std::size_t j, l;
    int m;                // m_l - m_j
    ComplexMatrix K1;     // sum_qq' O_jq O*_lq' (C)^q_q'
    ComplexMatrix K2;     // sum_qq' O_jq O*_lq' conj((C)_q^q')
  };

  const FieldSet* field_;
  const ObeMatrices* matrices_;
  int sector_;
  ComplexMatrix A_;
  std::vector<Pair> pairs_;
  std::vector<int> shifts_;
  ComplexMatrix s_tilde_;
};

/// Dense snapshot of the blocks for |n| <= n_max, for tests and diagnostics.
struct HarmonicBlocks {
  int n_max = 0;
  int sector = 0;
  std::vector<int> shifts;
  std::map<int, ComplexMatrix> A_n;
  std::map<std::pair<int, int>, ComplexMatrix> B;
  std::map<std::pair<int, int>, ComplexMatrix> W;
  std::map<int, cplx> tau_plus, tau_minus;
  ComplexVector d_xi;
  ComplexMatrix s_tilde;
};

HarmonicBlocks build_harmonics(const FieldSet& field, const ObeMatrices& matrices, int n_max, int sector = -1);

struct PeriodicSolution {
  int n_max = 0;         // truncation used
  int sector = 0;        // dim of the solved xi sector
  int harmonics = 0;     // rate harmonics kept
  double omega_c = 0.0;
  double residual = 0.0;  // ||(I + W) y - c||_inf
  int refinements = 0;
  std::vector<ComplexVector> x_xi;  // full dim_xi, index n + n_max
  std::vector<ComplexVector> x_o;   // dim_o, index n + n_max
  std::vector<std::vector<cplx>> R;  // [j][n + harmonics]
  std::vector<Vec3> mean_force;      // per wave, units hbar k gamma
  Vec3 total_force = Vec3::Zero();

  const ComplexVector& xi(int n) const { return x_xi[static_cast<std::size_t>(n + n_max)]; }
  const ComplexVector& o(int n) const { return x_o[static_cast<std::size_t>(n + n_max)]; }
  bool in_range(int n) const noexcept { return n >= -n_max && n <= n_max; }
  cplx rate(std::size_t j, int n) const { return R.at(j).at(static_cast<std::size_t>(n + harmonics)); }
  double mean_rate(std::size_t j) const { return rate(j, 0).real(); }
};

PeriodicSolution solve_periodic(const FieldSet& field, const ObeMatrices& matrices,
                                const SolverOptions& options = {});

/// x_o^(n) from the optical elimination, given x_xi harmonics (full dim_xi,
/// index n + n_max; entries outside the range are zero).
std::vector<ComplexVector> optical_harmonics(const FieldSet& field, const ObeMatrices& matrices,
                                             const std::vector<ComplexVector>& x_xi, int n_max);

/// chi^(q) = -sum_m C_m^(q) (u - i v) over the dm = q optical block; slot q_slot(q).
CVec3 absorption_vector(const ComplexVector& x_o, const StateLayout& layout);

/// R_j^(n) for |n| <= harmonics through chi: R^(n) = (psi^(n) - conj psi^(-n)) / 2i.
std::vector<cplx> rate_harmonics(const FieldSet& field, const ObeMatrices& matrices,
                                 const PeriodicSolution& solution, std::size_t j, int harmonics);

/// Maps x0 onto xn: zero, scalar multiple or scaled Householder reflection.
ComplexMatrix q_matrix(const ComplexVector& x0, const ComplexVector& xn, double tol_zero = 1e-12,
                       double tol_parallel = 1e-10);
/// Q^(n) for |n| <= n_max on the solved sector; Q beyond the truncation is zero.
std::map<int, ComplexMatrix> q_matrices(const PeriodicSolution& solution, const SolverOptions& options = {});

struct SaturationMatrices {
  std::vector<ComplexMatrix> s;                         // s_j (real-valued, stored complex)
  std::vector<std::map<int, ComplexMatrix>> s_n;        // s_j^(n)
  ComplexMatrix s_total;                                // sum_j s_j
};
SaturationMatrices saturation_matrices(const FieldSet& field, const ObeMatrices& matrices,
                                       const std::map<int, ComplexMatrix>& Q, int sector, int harmonics);

/// -gamma u^T s_j^(n) x^(0), the saturation-matrix form of the rates.
std::vector<std::vector<cplx>> rates_from_saturation(const ObeMatrices& matrices, const SaturationMatrices& sat,
                                                     const ComplexVector& x0_sector, int harmonics);

/// x^(0) = -(1/N_J)(A + s)^{-1} A u on the sector.
ComplexVector x0_from_saturation(const ObeMatrices& matrices, const ComplexMatrix& s_total, int sector);

/// R_j(t) = Im[sum_q Omega_jq e^{i m_j omega_c t} chi^(q)(t)] for a real state x(t).
double instantaneous_rate(const FieldSet& field, const StateLayout& layout, const RealVector& x, double t,
                          std::size_t j);

/// Real x(t) = sum_n x^(n) e^{i n omega_c t}.
RealVector state_at(const PeriodicSolution& solution, double t);

}  // namespace radforce
