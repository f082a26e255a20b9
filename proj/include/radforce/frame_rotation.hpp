#pragma once

#include "radforce/field_config.hpp"
#include "radforce/obe_matrices.hpp"
#include "radforce/state_layout.hpp"

namespace radforce {

/// z-y-z Euler angles of the frame rotation R = Rz(alpha) Ry(beta) Rz(gamma).
struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Linear map x -> T x between the state vectors of two frames. Block
/// accessors follow the layout ordering (o, p, Z).
class FrameTransform {
 public:
  FrameTransform(const StateLayout& layout, EulerAngles angles, RealMatrix T);

  const RealMatrix& T() const noexcept { return T_; }
  const EulerAngles& angles() const noexcept { return angles_; }
  int dim() const noexcept { return static_cast<int>(T_.rows()); }

  RealMatrix T_oo() const { return T_.topLeftCorner(dim_o_, dim_o_); }
  RealMatrix T_pp() const { return T_.block(dim_o_, dim_o_, dim_p_, dim_p_); }
  RealMatrix T_pZ() const { return T_.block(dim_o_, dim_o_ + dim_p_, dim_p_, dim_Z_); }
  RealMatrix T_Zp() const { return T_.block(dim_o_ + dim_p_, dim_o_, dim_Z_, dim_p_); }
  RealMatrix T_ZZ() const { return T_.bottomRightCorner(dim_Z_, dim_Z_); }

 private:
  EulerAngles angles_;
  RealMatrix T_;
  int dim_o_, dim_p_, dim_Z_;
};

/// T assembled from the closed-form blocks (Wigner small-d products).
FrameTransform build_T(const StateLayout& layout, const EulerAngles& angles);

/// x in the rotated frame. Throws Validation on a dimension mismatch.
RealVector rotate_state(const RealVector& x, const FrameTransform& transform);

/// Rotation matrix R = Rz(alpha) Ry(beta) Rz(gamma).
Eigen::Matrix3d rotation_matrix(const EulerAngles& angles);

/// Components of a Cartesian vector in the rotated frame, R^T v.
Vec3 rotate_vector(const Vec3& v, const EulerAngles& angles);

/// Spherical components of a polarization in the rotated frame,
/// eps' = D^(1)(alpha, beta, gamma)^T eps, slots ordered q = -1, 0, +1.
Polarization rotate_polarization(const Polarization& pol, const EulerAngles& angles);

/// Field with polarizations and propagation directions expressed in the
/// rotated frame; Rabi amplitudes, detunings and weights unchanged.
FieldSet rotate_field(const FieldSet& field, const EulerAngles& angles);

struct CovarianceReport {
  double A_residual = 0.0;      // A(rotated field) - T A T^{-1}
  double b_residual = 0.0;      // T b - b
  double rate_residual = 0.0;   // mean rates, rotated vs original
  double chi_residual = 0.0;    // chi(T x_o) - D^(1)† chi(x_o)
  double force_residual = 0.0;  // mean force vs R^T force

  double max() const;
};

/// Residuals of the frame-covariance laws for one configuration.
CovarianceReport verify_covariance(const FieldSet& field, const ObeMatrices& matrices, const EulerAngles& angles);

}  // namespace radforce
