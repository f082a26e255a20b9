#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <vector>

#include <Eigen/Sparse>

#include "radforce/field_config.hpp"
#include "radforce/obe_matrices.hpp"

namespace radforce {

struct OdeOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  /// Steps shorter than this (times the integration span) count as underflow.
  double min_step_fraction = 1e-13;
  /// Initial Fourier samples per period; doubled up to max_samples.
  int samples = 256;
  int max_samples = 8192;
  double sample_tol = 1e-9;
  double period_tol = 1e-6;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<RealVector> states;
};

struct FloquetSpectrum {
  std::vector<cplx> exponents;  // units of gamma, sorted by descending real part
  double lambda_max = 0.0;
  double period = 0.0;
};

/// Right-hand side x' = A(t) x + b with sparse real pieces of C^(q).
class ObeSystem {
 public:
  ObeSystem(const FieldSet& field, const ObeMatrices& matrices);

  /// Restricts to the given x indices (ascending); b is restricted as well.
  ObeSystem restricted(const std::vector<int>& indices) const;

  int dim() const noexcept { return static_cast<int>(b_.size()); }
  const RealVector& b() const noexcept { return b_; }
  bool homogeneous() const noexcept { return homogeneous_; }
  void set_homogeneous(bool h) noexcept { homogeneous_ = h; }

  /// dX = A(t) X (+ b on every column unless homogeneous, or on the last
  /// column only when `b_last_column`).
  void apply(const RealMatrix& X, RealMatrix& dX, double t) const;
  RealMatrix A(double t) const;
  bool b_last_column = false;

 private:
  ObeSystem() = default;
  const FieldSet* field_ = nullptr;
  double gamma_ = 1.0;
  Eigen::SparseMatrix<double> A0_;
  std::array<Eigen::SparseMatrix<double>, 3> reC_, imC_;
  std::array<bool, 3> active_{};
  RealVector b_;
  bool homogeneous_ = false;
};

/// x(t) at each requested time (ascending, first >= t0) starting from x0 at t0.
Trajectory integrate(const FieldSet& field, const ObeMatrices& matrices, const RealVector& x0, double t0,
                     const std::vector<double>& sample_times, const OdeOptions& options = {});
/// Uniform sampling of [t0, t1] with `samples` intervals (samples + 1 points).
Trajectory integrate(const FieldSet& field, const ObeMatrices& matrices, const RealVector& x0, double t0,
                     double t1, int samples, const OdeOptions& options = {});

/// Period used by the oracle: 2 pi / omega_c, or 2 pi / gamma for a stationary field.
double oracle_period(const FieldSet& field, const ObeMatrices& matrices);

/// Indices of x reachable from b through the sparsity of A(t).
std::vector<int> reachable_indices(const FieldSet& field, const ObeMatrices& matrices);

/// Periodic initial state x(0) = (1 - Phi)^{-1} p on the reachable subspace,
/// with Phi the monodromy matrix and p the response over one period from 0.
RealVector periodic_initial_state(const FieldSet& field, const ObeMatrices& matrices,
                                  const OdeOptions& options = {});

/// Integrates from x0 for `duration`, then whole periods until the endpoint
/// mismatch is below options.period_tol (at most `max_periods` extra).
/// Returns the state at a multiple of the period.
RealVector settle(const FieldSet& field, const ObeMatrices& matrices, const RealVector& x0, double duration,
                  const OdeOptions& options = {}, int max_periods = 4096);

/// Settling time max(10/gamma, 20/|lambda_max|).
double settling_time(const FloquetSpectrum& spectrum, double gamma);

FloquetSpectrum monodromy(const FieldSet& field, const ObeMatrices& matrices, const OdeOptions& options = {});

/// Harmonics of a trajectory sampled uniformly over one period (first and
/// last samples at t and t + T). Throws PeriodMismatch when the endpoints
/// differ by more than period_tol.
std::map<int, ComplexVector> fourier_extract(const Trajectory& traj, double omega, int n_max,
                                             double period_tol = 1e-6);

struct OracleHarmonics {
  std::map<int, ComplexVector> x;     // |n| <= n_max
  std::vector<std::vector<cplx>> R;   // [j][n + n_max]
  int samples = 0;
  double period_mismatch = 0.0;

  cplx rate(std::size_t j, int n) const;
};

/// Harmonics of the periodic regime starting from a state on the periodic
/// orbit at t = 0; samples doubled until the change is below sample_tol.
OracleHarmonics oracle_harmonics(const FieldSet& field, const ObeMatrices& matrices, const RealVector& x_start,
                                 int n_max, const OdeOptions& options = {});

/// Shooting plus extraction in one call.
OracleHarmonics oracle_harmonics(const FieldSet& field, const ObeMatrices& matrices, int n_max,
                                 const OdeOptions& options = {});

/// R_j(t_k) for every wave: result[j][k].
std::vector<std::vector<double>> rate_timeseries(const Trajectory& traj, const FieldSet& field,
                                                 const StateLayout& layout);

/// Delimited dump: time, then x components in layout order.
void write_trajectory(std::ostream& out, const Trajectory& traj, char delimiter = ',');

}  // namespace radforce
