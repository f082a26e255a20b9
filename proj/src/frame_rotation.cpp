#include "radforce/frame_rotation.hpp"

#include <algorithm>
#include <cmath>

#include "radforce/angular.hpp"
#include "radforce/errors.hpp"
#include "radforce/floquet_solver.hpp"

namespace radforce {

namespace {

// Small-d lookup with doubled projections.
struct SmallD {
  RealMatrix d;
  int twice_j;
  double operator()(int m_twice, int mp_twice) const {
    return d((m_twice + twice_j) / 2, (mp_twice + twice_j) / 2);
  }
};

// Writes a 2x2 (u, v) block scaled by t.
void add_uv(RealMatrix& T, int r, int c, double t, double a00, double a01, double a10, double a11) {
  T(r, c) += t * a00;
  T(r, c + 1) += t * a01;
  T(r + 1, c) += t * a10;
  T(r + 1, c + 1) += t * a11;
}

}  // namespace

FrameTransform::FrameTransform(const StateLayout& layout, EulerAngles angles, RealMatrix T)
    : angles_(angles),
      T_(std::move(T)),
      dim_o_(layout.dim_o()),
      dim_p_(layout.dim_p()),
      dim_Z_(layout.dim_Z()) {}

FrameTransform build_T(const StateLayout& L, const EulerAngles& ang) {
  const int n = L.dim_x();
  RealMatrix T = RealMatrix::Zero(n, n);
  const HalfInt Jg = L.J(Manifold::Ground), Je = L.J(Manifold::Excited);
  const int tg = Jg.twice(), te = Je.twice();
  const SmallD dg{wigner_small_d_matrix(Jg, ang.beta), tg};
  const SmallD de{wigner_small_d_matrix(Je, ang.beta), te};
  const double a = ang.alpha, g = ang.gamma;

  // optical: (d^g_{m',m} d^e_{m'+dm', m+dm}) x U_+
  for (const OpticalBlock& B : L.optical_blocks()) {
    const int dm = B.dm_twice / 2;
    for (const OpticalBlock& Bp : L.optical_blocks()) {
      const int dmp = Bp.dm_twice / 2;
      const double c = std::cos(dmp * a + dm * g), s = std::sin(dmp * a + dm * g);
      for (int m = B.m_lo_twice; m <= B.m_hi_twice; m += 2) {
        const int r = L.optical_index(dm, m);
        for (int mp = Bp.m_lo_twice; mp <= Bp.m_hi_twice; mp += 2) {
          const double t = dg(mp, m) * de(mp + Bp.dm_twice, m + B.dm_twice);
          if (t == 0.0) continue;
          add_uv(T, r, L.optical_index(dmp, mp), t, c, s, -s, c);
        }
      }
    }
  }

  // populations
  const int g0 = -tg;
  for (int me = -te; me <= te; me += 2) {
    const int r = L.population_index(Manifold::Excited, me);
    for (int mep = -te; mep <= te; mep += 2) {
      T(r, L.population_index(Manifold::Excited, mep)) = de(mep, me) * de(mep, me);
    }
  }
  for (int mg = -tg + 2; mg <= tg; mg += 2) {
    const int r = L.population_index(Manifold::Ground, mg);
    const double drop = dg(g0, mg) * dg(g0, mg);
    for (int mep = -te; mep <= te; mep += 2) T(r, L.population_index(Manifold::Excited, mep)) = -drop;
    for (int mgp = -tg + 2; mgp <= tg; mgp += 2) {
      T(r, L.population_index(Manifold::Ground, mgp)) = dg(mgp, mg) * dg(mgp, mg) - drop;
    }
  }

  for (Manifold k : {Manifold::Excited, Manifold::Ground}) {
    const SmallD& d = k == Manifold::Excited ? de : dg;
    const int tk = k == Manifold::Excited ? te : tg;
    const int mk_lo = k == Manifold::Ground ? -tk + 2 : -tk;
    for (int dm = 1; dm <= tk; ++dm) {
      // populations <- Zeeman: 2 d_{m',m} d_{m'+dm,m} x (cos dm a, sin dm a)
      const double ca = std::cos(dm * a), sa = std::sin(dm * a);
      for (int m = mk_lo; m <= tk; m += 2) {
        const int r = L.population_index(k, m);
        for (int mp = -tk; mp <= tk - 2 * dm; mp += 2) {
          const double t = 2.0 * d(mp, m) * d(mp + 2 * dm, m);
          const int c = L.zeeman_index(k, dm, mp);
          T(r, c) += t * ca;
          T(r, c + 1) += t * sa;
        }
      }
      // Zeeman <- populations: (d_{m',m} d_{m',m+dm}) x (cos dm g, -sin dm g)^T
      const double cg = std::cos(dm * g), sg = std::sin(dm * g);
      for (int m = -tk; m <= tk - 2 * dm; m += 2) {
        const int r = L.zeeman_index(k, dm, m);
        if (k == Manifold::Excited) {
          for (int mp = -te; mp <= te; mp += 2) {
            const double t = de(mp, m) * de(mp, m + 2 * dm);
            const int c = L.population_index(Manifold::Excited, mp);
            T(r, c) += t * cg;
            T(r + 1, c) -= t * sg;
          }
        } else {
          const double drop = dg(g0, m) * dg(g0, m + 2 * dm);
          for (int mp = -te; mp <= te; mp += 2) {
            const int c = L.population_index(Manifold::Excited, mp);
            T(r, c) -= drop * cg;
            T(r + 1, c) += drop * sg;
          }
          for (int mp = -tg + 2; mp <= tg; mp += 2) {
            const double t = dg(mp, m) * dg(mp, m + 2 * dm) - drop;
            const int c = L.population_index(Manifold::Ground, mp);
            T(r, c) += t * cg;
            T(r + 1, c) -= t * sg;
          }
        }
      }
      // Zeeman <- Zeeman: T+ x U_+ + T- x U_-
      for (int dmp = 1; dmp <= tk; ++dmp) {
        const double cp = std::cos(dmp * a + dm * g), sp = std::sin(dmp * a + dm * g);
        const double cm = std::cos(dmp * a - dm * g), sm = std::sin(dmp * a - dm * g);
        for (int m = -tk; m <= tk - 2 * dm; m += 2) {
          const int r = L.zeeman_index(k, dm, m);
          for (int mp = -tk; mp <= tk - 2 * dmp; mp += 2) {
            const int c = L.zeeman_index(k, dmp, mp);
            const double tp = d(mp, m) * d(mp + 2 * dmp, m + 2 * dm);
            const double tm = d(mp + 2 * dmp, m) * d(mp, m + 2 * dm);
            add_uv(T, r, c, tp, cp, sp, -sp, cp);
            add_uv(T, r, c, tm, cm, sm, sm, -cm);
          }
        }
      }
    }
  }
  return FrameTransform(L, ang, std::move(T));
}

RealVector rotate_state(const RealVector& x, const FrameTransform& tr) {
  if (x.size() != tr.dim()) throw Error(ErrorCode::Validation, "state vector length does not match the transform");
  return tr.T() * x;
}

Eigen::Matrix3d rotation_matrix(const EulerAngles& e) {
  using Eigen::AngleAxisd;
  return (AngleAxisd(e.alpha, Vec3::UnitZ()) * AngleAxisd(e.beta, Vec3::UnitY()) * AngleAxisd(e.gamma, Vec3::UnitZ()))
      .toRotationMatrix();
}

Vec3 rotate_vector(const Vec3& v, const EulerAngles& angles) { return rotation_matrix(angles).transpose() * v; }

Polarization rotate_polarization(const Polarization& pol, const EulerAngles& angles) {
  // contravariant components: the conjugate of the passive Cartesian law
  const ComplexMatrix D = wigner_D_matrix(HalfInt::from_int(1), angles.alpha, angles.beta, angles.gamma);
  const CVec3 r = D.transpose() * CVec3(pol[0], pol[1], pol[2]);
  return {r[0], r[1], r[2]};
}

FieldSet rotate_field(const FieldSet& field, const EulerAngles& angles) {
  std::vector<PlaneWave> waves = field.waves();
  for (PlaneWave& w : waves) {
    w.pol = rotate_polarization(w.pol, angles);
    w.k_dir = rotate_vector(w.k_dir, angles);
  }
  return FieldSet(std::move(waves), field.kappa(), field.options());
}

double CovarianceReport::max() const {
  return std::max({A_residual, b_residual, rate_residual, chi_residual, force_residual});
}

CovarianceReport verify_covariance(const FieldSet& field, const ObeMatrices& M, const EulerAngles& angles) {
  const StateLayout& L = M.layout;
  const FrameTransform tr = build_T(L, angles);
  const FieldSet rotated = rotate_field(field, angles);
  CovarianceReport rep;

  Eigen::PartialPivLU<RealMatrix> lu(tr.T());
  const RealMatrix Tinv = lu.inverse();
  const double T_period = field.stationary() ? 1.0 : field.period();
  for (double f : {0.0, 0.31, 0.77}) {
    const double t = f * T_period;
    const RealMatrix lhs = assemble_A_of_t(M, rotated, t);
    const RealMatrix rhs = tr.T() * assemble_A_of_t(M, field, t) * Tinv;
    rep.A_residual = std::max(rep.A_residual, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  rep.b_residual = (tr.T() * M.b - M.b).cwiseAbs().maxCoeff();

  const PeriodicSolution s0 = solve_periodic(field, M);
  const PeriodicSolution s1 = solve_periodic(rotated, M);
  for (std::size_t j = 0; j < field.size(); ++j) {
    rep.rate_residual = std::max(rep.rate_residual, std::abs(s0.mean_rate(j) - s1.mean_rate(j)));
  }
  rep.force_residual = (s1.total_force - rotate_vector(s0.total_force, angles)).cwiseAbs().maxCoeff();

  const ComplexMatrix D1 = wigner_D_matrix(HalfInt::from_int(1), angles.alpha, angles.beta, angles.gamma);
  for (double f : {0.0, 0.45}) {
    const RealVector x = state_at(s0, f * T_period);
    const RealVector y = rotate_state(x, tr);
    const CVec3 chi = absorption_vector(x.head(L.dim_o()).cast<cplx>(), L);
    const CVec3 chi_r = absorption_vector(y.head(L.dim_o()).cast<cplx>(), L);
    rep.chi_residual = std::max(rep.chi_residual, (chi_r - D1.adjoint() * chi).cwiseAbs().maxCoeff());
  }
  return rep;
}

}  // namespace radforce
