#pragma once

#include <array>

#include "radforce/field_config.hpp"
#include "radforce/state_layout.hpp"

namespace radforce {

using QArray = std::array<ComplexMatrix, 3>;
using QQArray = std::array<std::array<ComplexMatrix, 3>, 3>;

/// Constant matrices of the OBEs  dx/dt = A(t) x + b  with
///   A(t) = -gamma A0 + sum_q Im(Omega_q(t) C^(q)).
/// Index conventions: QArray slot q_slot(q); xi-local indices start at the
/// first population (global index - dim_o).
struct ObeMatrices {
  StateLayout layout;
  double gamma = 1.0;
  double deltabar = 0.0;

  RealMatrix A0;      // dim_x x dim_x
  RealMatrix A_xixi;  // dim_xi x dim_xi
  RealVector b;       // dim_x
  RealVector u_xi;    // dim_xi, ones on excited populations

  /// C^(q), dim_x x dim_x. Complex because of the (1, -i) factors.
  QArray C;
  /// Compact blocks: C_oxi (dim_o/2 x dim_xi) and C_xio (dim_xi x dim_o/2).
  QArray C_oxi;
  QArray C_xio;
  /// (C_xixi)^q_{q'} = -C_xio^(q) conj(C_oxi^(q')), at [q_slot(q)][q_slot(q')].
  QQArray C_xixi;

  const ComplexMatrix& Cq(int q) const { return C[static_cast<std::size_t>(q_slot(q))]; }
  const ComplexMatrix& Cxx(int q, int qp) const {
    return C_xixi[static_cast<std::size_t>(q_slot(q))][static_cast<std::size_t>(q_slot(qp))];
  }
};

RealMatrix build_A0(const StateLayout& layout, double deltabar_over_gamma);
RealMatrix build_A_xixi(const StateLayout& layout);
RealVector build_u_xi(const StateLayout& layout);
/// b = -gamma N_J^{-1} (0, A_xixi u_xi).
RealVector build_b(const StateLayout& layout);

ComplexMatrix build_C_oxi(const StateLayout& layout, int q);
ComplexMatrix build_C_xio(const StateLayout& layout, int q);
/// Full dim_x x dim_x C^(q) with the (u, v) factors expanded.
ComplexMatrix build_Cq(const StateLayout& layout, int q);
/// Direct product -C_xio^(q) conj(C_oxi^(qp)).
ComplexMatrix build_C_xixi(const StateLayout& layout, int q, int qp);
/// Same matrix assembled from the closed-form block expressions.
ComplexMatrix appendixB_blocks(const StateLayout& layout, int q, int qp);

ObeMatrices build_obe_matrices(const StateLayout& layout, double deltabar);
ObeMatrices build_obe_matrices(const StateLayout& layout, const FieldSet& field);

/// A(t). Throws ConfigurationMismatch if the field's deltabar differs from
/// the one the matrices were built with.
RealMatrix assemble_A_of_t(const ObeMatrices& matrices, const FieldSet& field, double t);

/// Index of xi-local population/Zeeman slots inside x.
inline int xi_local(const StateLayout& layout, int global_index) { return global_index - layout.dim_o(); }

}  // namespace radforce
