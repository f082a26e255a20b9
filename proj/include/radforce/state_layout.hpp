#pragma once

#include <vector>

#include "radforce/transition.hpp"
#include "radforce/types.hpp"

namespace radforce {

enum class Manifold { Excited, Ground };

/// One optical-coherence block x_o^{(dm)}: ground projections m in
/// [m_lo, m_hi] coupled to excited m + dm. Values are doubled.
struct OpticalBlock {
  int dm_twice;
  int m_lo_twice;
  int m_hi_twice;
  int offset;  // index of the first u component in x
  int size() const { return (m_hi_twice - m_lo_twice) / 2 + 1; }
};

/// One Zeeman-coherence block x_{Z_k}^{(dm)}: rho_{(k,m),(k,m+dm)} for
/// m = -J_k .. J_k - dm, dm >= 1.
struct ZeemanBlock {
  Manifold manifold;
  int dm;  // integer, 1..2J_k
  int offset;
  int size() const;  // number of (u, v) pairs
  int m_lo_twice;
};

/// Canonical flattening of the real OBE variables
///   x = (x_o, x_pe, x_pg, x_Ze, x_Zg)
/// Optical blocks ascend in dm, then in m, u before v. Populations hold
/// w = rho_mm - 1/N_J; the ground population m = -Jg is dependent and
/// omitted. Zeeman blocks ascend in dm then m, excited before ground.
///
/// Density matrices use rows (Je, -Je..Je) followed by (Jg, -Jg..Jg).
class StateLayout {
 public:
  explicit StateLayout(const AtomicTransition& transition);

  const AtomicTransition& transition() const noexcept { return transition_; }

  int dim_o() const noexcept { return dim_o_; }
  int dim_pe() const noexcept { return dim_pe_; }
  int dim_pg() const noexcept { return dim_pg_; }
  int dim_p() const noexcept { return dim_pe_ + dim_pg_; }
  int dim_Ze() const noexcept { return dim_Ze_; }
  int dim_Zg() const noexcept { return dim_Zg_; }
  int dim_Z() const noexcept { return dim_Ze_ + dim_Zg_; }
  int dim_xi() const noexcept { return dim_p() + dim_Z(); }
  int dim_x() const noexcept { return dim_o_ + dim_xi(); }
  /// Total number of sublevels, 2(Je + Jg + 1).
  int N_J() const noexcept { return n_e_ + n_g_; }
  int n_excited() const noexcept { return n_e_; }
  int n_ground() const noexcept { return n_g_; }

  int offset_pe() const noexcept { return dim_o_; }
  int offset_pg() const noexcept { return dim_o_ + dim_pe_; }
  int offset_Ze() const noexcept { return dim_o_ + dim_p(); }
  int offset_Zg() const noexcept { return offset_Ze() + dim_Ze_; }

  const std::vector<OpticalBlock>& optical_blocks() const noexcept { return optical_; }
  const std::vector<ZeemanBlock>& zeeman_blocks() const noexcept { return zeeman_; }

  /// Optical block for dm (integer), or nullptr outside +-(Je+Jg).
  const OpticalBlock* optical_block(int dm) const noexcept;
  const ZeemanBlock* zeeman_block(Manifold k, int dm) const noexcept;

  /// Index of u_{o,m}^{(dm)} (v is +1), or -1 if out of range.
  int optical_index(int dm, int m_twice) const noexcept;
  /// Index of w_{k,m}, or -1 (including the dependent ground population).
  int population_index(Manifold k, int m_twice) const noexcept;
  /// Index of u_{Z_k,m}^{(dm)} (v is +1), or -1.
  int zeeman_index(Manifold k, int dm, int m_twice) const noexcept;

  /// Row of |J_k, m> in the density matrix.
  int level_index(Manifold k, int m_twice) const noexcept;

  /// C_m^{(q)} with m doubled; 0 when m or m+q is out of range.
  double cg(int m_twice, int q) const noexcept;

  HalfInt J(Manifold k) const noexcept { return k == Manifold::Excited ? transition_.Je : transition_.Jg; }

 private:
  AtomicTransition transition_;
  int n_e_ = 0, n_g_ = 0;
  int dim_o_ = 0, dim_pe_ = 0, dim_pg_ = 0, dim_Ze_ = 0, dim_Zg_ = 0;
  int dm_max_ = 0;
  std::vector<OpticalBlock> optical_;
  std::vector<ZeemanBlock> zeeman_;
  std::vector<double> cg_table_;  // [(m_twice + Jg_twice)/2][q+1]
};

/// Density matrix in the rotating frame (optical coherences carry the
/// exp(-i omega_bar t) factor).
using DensityMatrix = ComplexMatrix;

/// Builds the layout after validating the transition.
StateLayout build_layout(const AtomicTransition& transition);

/// rho -> x. Throws ErrorCode::Validation unless rho is Hermitian with unit
/// trace within `tol`.
RealVector pack(const DensityMatrix& rho, const StateLayout& layout, double tol = 1e-10);

/// x -> rho with the dependent population restored from the trace.
DensityMatrix unpack(const RealVector& x, const StateLayout& layout);

/// Complex variant used for Fourier components: the linear part of unpack
/// (no 1/N_J offset, no dependent-population constant). Components of a
/// harmonic n != 0 map to the n-th harmonic of rho(t).
ComplexMatrix unpack_linear(const ComplexVector& x, const StateLayout& layout);

/// Linear part of pack: maps a traceless Hermitian direction d(rho) to dx.
RealVector pack_linear(const DensityMatrix& drho, const StateLayout& layout);

}  // namespace radforce
