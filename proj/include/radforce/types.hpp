#pragma once

#include <complex>

#include <Eigen/Dense>

namespace radforce {

using cplx = std::complex<double>;

using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr cplx kI{0.0, 1.0};

/// Spherical polarization index q in {-1, 0, +1} mapped to array slots.
inline constexpr int q_slot(int q) noexcept { return q + 1; }
inline constexpr int slot_q(int slot) noexcept { return slot - 1; }

}  // namespace radforce
