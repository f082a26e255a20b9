#include "radforce/floquet_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "radforce/errors.hpp"

namespace radforce {

namespace {

double inf_norm(const ComplexVector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

const ComplexMatrix& cxx(const ObeMatrices& M, int q, int qp) { return M.Cxx(q, qp); }

Eigen::PartialPivLU<ComplexMatrix> checked_lu(const ComplexMatrix& D, int n, double cond_limit) {
  Eigen::PartialPivLU<ComplexMatrix> lu(D);
  const double rc = lu.rcond();
  if (!(rc * cond_limit > 1.0)) {
    throw Error(ErrorCode::SingularHarmonicMatrix,
                "A^(n) + B^(n,0) is singular at n = " + std::to_string(n) +
                    " (reciprocal condition " + std::to_string(rc) + "); the periodic regime is not unique");
  }
  return lu;
}

}  // namespace

int common_pure_polarization(const FieldSet& field, double tol) {
  int common = 2;
  for (const PlaneWave& w : field.waves()) {
    int found = 2;
    for (int q = -1; q <= 1; ++q) {
      if (std::abs(w.component(q)) > tol) {
        if (found != 2) return 2;
        found = q;
      }
    }
    if (found == 2) continue;  // zero wave
    if (common != 2 && common != found) return 2;
    common = found;
  }
  return common;
}

HarmonicSystem::HarmonicSystem(const FieldSet& field, const ObeMatrices& matrices, int sector)
    : field_(&field), matrices_(&matrices), sector_(sector) {
  const StateLayout& L = matrices.layout;
  if (sector_ <= 0 || sector_ > L.dim_xi()) sector_ = L.dim_xi();
  if (std::abs(field.deltabar() - matrices.deltabar) > 1e-12 * std::max(1.0, std::abs(matrices.deltabar))) {
    throw Error(ErrorCode::ConfigurationMismatch, "matrices were built for a different mean detuning");
  }
  const int S = sector_;
  A_ = matrices.A_xixi.topLeftCorner(S, S).cast<cplx>();
  const std::size_t N = field.size();
  std::set<int> shift_set;
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t l = 0; l < N; ++l) {
      Pair p{j, l, field.m(l) - field.m(j), ComplexMatrix::Zero(S, S), ComplexMatrix::Zero(S, S)};
      bool any = false;
      for (int q = -1; q <= 1; ++q) {
        const cplx oj = field.rabi_component(j, q);
        if (oj == cplx(0.0)) continue;
        for (int qp = -1; qp <= 1; ++qp) {
          const cplx ol = field.rabi_component(l, qp);
          if (ol == cplx(0.0)) continue;
          const cplx w = oj * std::conj(ol);
          p.K1 += w * cxx(matrices, q, qp).topLeftCorner(S, S);
          p.K2 += w * cxx(matrices, qp, q).topLeftCorner(S, S).conjugate();
          any = true;
        }
      }
      if (!any) continue;
      if (p.m != 0) shift_set.insert(p.m);
      pairs_.push_back(std::move(p));
    }
  }
  shifts_.push_back(0);
  shifts_.insert(shifts_.end(), shift_set.begin(), shift_set.end());

  s_tilde_ = ComplexMatrix::Zero(S, S);
  for (std::size_t j = 0; j < N; ++j) s_tilde_ += s_tilde_j(j);
}

cplx HarmonicSystem::tau_plus(int n) const {
  const double g = matrices_->gamma;
  return 1.0 / cplx(g, 2.0 * (n * field_->omega_c() + field_->deltabar()));
}

cplx HarmonicSystem::tau_minus(int n) const {
  const double g = matrices_->gamma;
  return 1.0 / cplx(g, 2.0 * (n * field_->omega_c() - field_->deltabar()));
}

ComplexMatrix HarmonicSystem::A_n(int n) const {
  ComplexMatrix A = A_;
  A.diagonal().array() += kI * (n * field_->omega_c() / matrices_->gamma);
  return A;
}

ComplexMatrix HarmonicSystem::B(int n, int m) const {
  ComplexMatrix out = ComplexMatrix::Zero(sector_, sector_);
  const double g = matrices_->gamma;
  for (const Pair& p : pairs_) {
    if (p.m != m) continue;
    const int mj = field_->m(p.j), ml = field_->m(p.l);
    out += (tau_minus(n - mj) / g) * p.K1 + (tau_plus(n + ml) / g) * p.K2;
  }
  return out;
}

ComplexMatrix HarmonicSystem::W(int n, int m) const {
  const ComplexMatrix D = A_n(n) + B(n, 0);
  auto lu = checked_lu(D, n, 1e12);
  return lu.solve(B(n, m));
}

ComplexMatrix HarmonicSystem::s_tilde_j(std::size_t j) const {
  ComplexMatrix out = ComplexMatrix::Zero(sector_, sector_);
  const double g = matrices_->gamma;
  const cplx denom = g * cplx(0.5 * g, -field_->detuning(j));
  for (const Pair& p : pairs_) {
    if (p.j != j || p.m != 0) continue;
    out += p.K1 / denom;
  }
  return out.real().cast<cplx>();
}

ComplexVector HarmonicSystem::rhs0() const {
  const StateLayout& L = matrices_->layout;
  const RealVector Au = matrices_->A_xixi.topLeftCorner(sector_, sector_) * matrices_->u_xi.head(sector_);
  return (-1.0 / L.N_J()) * Au.cast<cplx>();
}

ComplexVector HarmonicSystem::d_xi() const {
  Eigen::PartialPivLU<ComplexMatrix> lu(A_ + s_tilde_);
  return lu.solve(rhs0());
}

HarmonicBlocks build_harmonics(const FieldSet& field, const ObeMatrices& matrices, int n_max, int sector) {
  HarmonicSystem sys(field, matrices, sector);
  HarmonicBlocks out;
  out.n_max = n_max;
  out.sector = sys.sector();
  out.shifts = sys.shifts();
  out.s_tilde = sys.s_tilde();
  for (int n = -n_max; n <= n_max; ++n) {
    out.A_n[n] = sys.A_n(n);
    out.tau_plus[n] = sys.tau_plus(n);
    out.tau_minus[n] = sys.tau_minus(n);
    const ComplexMatrix D = out.A_n[n] + sys.B(n, 0);
    auto lu = checked_lu(D, n, 1e12);
    for (int m : sys.shifts()) {
      out.B[{n, m}] = sys.B(n, m);
      if (m != 0) out.W[{n, m}] = lu.solve(out.B[{n, m}]);
    }
  }
  out.d_xi = sys.d_xi();
  return out;
}

namespace {

struct TruncatedSolve {
  std::vector<ComplexVector> x;  // sector vectors, index n + N
  double residual = 0.0;
  int refinements = 0;
};

TruncatedSolve solve_truncated(const HarmonicSystem& sys, int N, double cond_limit) {
  const int S = sys.sector();
  const int nb = 2 * N + 1;
  const Eigen::Index dim = static_cast<Eigen::Index>(nb) * S;
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<Eigen::PartialPivLU<ComplexMatrix>> diag_lu;
  diag_lu.reserve(static_cast<std::size_t>(nb));
  for (int n = -N; n <= N; ++n) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(n + N) * S;
    for (int m : sys.shifts()) {
      if (n + m < -N || n + m > N) continue;
      ComplexMatrix blk = sys.B(n, m);
      if (m == 0) {
        blk += sys.A_n(n);
        diag_lu.push_back(checked_lu(blk, n, cond_limit));
      }
      const Eigen::Index c0 = static_cast<Eigen::Index>(n + m + N) * S;
      for (Eigen::Index c = 0; c < S; ++c) {
        for (Eigen::Index r = 0; r < S; ++r) {
          const cplx v = blk(r, c);
          if (v != cplx(0.0)) trip.emplace_back(r0 + r, c0 + c, v);
        }
      }
    }
  }
  Eigen::SparseMatrix<cplx> K(dim, dim);
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();
  ComplexVector rhs = ComplexVector::Zero(dim);
  rhs.segment(static_cast<Eigen::Index>(N) * S, S) = sys.rhs0();

  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(K);
  lu.factorize(K);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularHarmonicMatrix, "truncated harmonic system is singular: " + lu.lastErrorMessage());
  }
  ComplexVector y = lu.solve(rhs);
  ComplexVector r = rhs - K * y;
  double rn = inf_norm(r);
  TruncatedSolve out;
  for (int it = 0; it < 3 && rn > 0.0; ++it) {
    const ComplexVector y2 = y + lu.solve(r);
    const ComplexVector r2 = rhs - K * y2;
    const double rn2 = inf_norm(r2);
    if (!(rn2 < rn)) break;
    y = y2;
    r = r2;
    rn = rn2;
    ++out.refinements;
  }
  // residual of the normalized system (I + W) y = c
  double res = 0.0;
  for (int n = -N; n <= N; ++n) {
    const ComplexVector rb = r.segment(static_cast<Eigen::Index>(n + N) * S, S);
    res = std::max(res, inf_norm(diag_lu[static_cast<std::size_t>(n + N)].solve(rb)));
  }
  out.residual = res;
  out.x.resize(static_cast<std::size_t>(nb));
  for (int n = -N; n <= N; ++n) out.x[static_cast<std::size_t>(n + N)] = y.segment(static_cast<Eigen::Index>(n + N) * S, S);
  return out;
}

}  // namespace

std::vector<ComplexVector> optical_harmonics(const FieldSet& field, const ObeMatrices& matrices,
                                             const std::vector<ComplexVector>& x_xi, int n_max) {
  const StateLayout& L = matrices.layout;
  const int o = L.dim_o(), xi = L.dim_xi();
  const double g = matrices.gamma, w = field.omega_c();
  auto xi_at = [&](int n) -> const ComplexVector* {
    if (n < -n_max || n > n_max) return nullptr;
    return &x_xi[static_cast<std::size_t>(n + n_max)];
  };
  struct Term {
    int m;
    cplx a;  // coefficient of C x^(n - m)
    int q;
  };
  std::vector<Term> terms;
  for (std::size_t j = 0; j < field.size(); ++j) {
    for (int q = -1; q <= 1; ++q) {
      const cplx om = field.rabi_component(j, q);
      if (om != cplx(0.0)) terms.push_back({field.m(j), om, q});
    }
  }
  // columns beyond the last nonzero xi entry never contribute
  int used = 0;
  for (const ComplexVector& v : x_xi) {
    for (int i = xi - 1; i >= used; --i) {
      if (v(i) != cplx(0.0)) {
        used = i + 1;
        break;
      }
    }
  }
  std::array<ComplexMatrix, 3> Cox;
  for (int q = -1; q <= 1; ++q) Cox[static_cast<std::size_t>(q_slot(q))] = matrices.Cq(q).block(0, o, o, used);

  std::vector<ComplexVector> out(static_cast<std::size_t>(2 * n_max + 1), ComplexVector::Zero(o));
  for (int n = -n_max; n <= n_max; ++n) {
    ComplexVector src = ComplexVector::Zero(o);
    for (const Term& t : terms) {
      const ComplexMatrix& C = Cox[static_cast<std::size_t>(q_slot(t.q))];
      if (const ComplexVector* a = xi_at(n - t.m)) src += (t.a / (2.0 * kI)) * (C * a->head(used));
      if (const ComplexVector* b = xi_at(n + t.m)) src -= (std::conj(t.a) / (2.0 * kI)) * (C.conjugate() * b->head(used));
    }
    ComplexVector& x = out[static_cast<std::size_t>(n + n_max)];
    for (int i = 0; i < o; i += 2) {
      // (i n w + g A_oo) on one (u, v) pair
      const cplx a11 = kI * (n * w) + g * matrices.A0(i, i);
      const cplx a12 = g * matrices.A0(i, i + 1);
      const cplx a21 = g * matrices.A0(i + 1, i);
      const cplx a22 = kI * (n * w) + g * matrices.A0(i + 1, i + 1);
      const cplx det = a11 * a22 - a12 * a21;
      x(i) = (a22 * src(i) - a12 * src(i + 1)) / det;
      x(i + 1) = (-a21 * src(i) + a11 * src(i + 1)) / det;
    }
  }
  return out;
}

CVec3 absorption_vector(const ComplexVector& x_o, const StateLayout& layout) {
  CVec3 chi = CVec3::Zero();
  for (int q = -1; q <= 1; ++q) {
    const OpticalBlock* blk = layout.optical_block(q);
    if (blk == nullptr) continue;
    cplx sum = 0.0;
    for (int m = blk->m_lo_twice; m <= blk->m_hi_twice; m += 2) {
      const int i = layout.optical_index(q, m);
      sum += layout.cg(m, q) * (x_o(i) - kI * x_o(i + 1));
    }
    chi(q_slot(q)) = -sum;
  }
  return chi;
}

std::vector<cplx> rate_harmonics(const FieldSet& field, const ObeMatrices& matrices,
                                 const PeriodicSolution& sol, std::size_t j, int harmonics) {
  const StateLayout& L = matrices.layout;
  auto psi = [&](int n) {
    const int k = n - field.m(j);
    if (!sol.in_range(k)) return cplx(0.0);
    const CVec3 chi = absorption_vector(sol.o(k), L);
    cplx s = 0.0;
    for (int q = -1; q <= 1; ++q) s += field.rabi_component(j, q) * chi(q_slot(q));
    return s;
  };
  std::vector<cplx> out;
  for (int n = -harmonics; n <= harmonics; ++n) out.push_back((psi(n) - std::conj(psi(-n))) / (2.0 * kI));
  return out;
}

PeriodicSolution solve_periodic(const FieldSet& field, const ObeMatrices& matrices, const SolverOptions& options) {
  const StateLayout& L = matrices.layout;
  int sector = L.dim_xi();
  if (options.reduce_pure_polarization && common_pure_polarization(field) != 2) sector = L.dim_p();
  HarmonicSystem sys(field, matrices, sector);
  if (sector < L.dim_xi()) {
    // the discarded Zeeman sector still has to be uniquely determined
    HarmonicSystem full(field, matrices, L.dim_xi());
    checked_lu(full.A_n(0) + full.B(0, 0), 0, options.cond_limit);
  }

  int bw = 0;
  for (int m : sys.shifts()) bw = std::max(bw, std::abs(m));
  int N = 0;
  if (!field.stationary() && bw > 0) {
    N = options.n_max_init > 0 ? options.n_max_init : std::max(4, 4 * field.max_abs_m());
    N = std::min(N, options.n_max_cap);
  }

  TruncatedSolve cur = solve_truncated(sys, N, options.cond_limit);
  if (N > 0) {
    ComplexVector prev0;
    bool have_prev = false;
    while (true) {
      const ComplexVector& x0 = cur.x[static_cast<std::size_t>(N)];
      const double scale = std::max(inf_norm(x0), 1e-300);
      double boundary = 0.0;
      for (int n = N - bw + 1; n <= N; ++n) {
        boundary = std::max(boundary, inf_norm(cur.x[static_cast<std::size_t>(n + N)]));
        boundary = std::max(boundary, inf_norm(cur.x[static_cast<std::size_t>(-n + N)]));
      }
      const bool tail_ok = boundary < options.tol * scale;
      const bool stable = have_prev && inf_norm(x0 - prev0) < options.tol * scale;
      if (tail_ok && stable) break;
      if (N >= options.n_max_cap) {
        throw Error(ErrorCode::TruncationNotConverged,
                    "harmonic truncation did not converge up to |n| = " + std::to_string(options.n_max_cap));
      }
      prev0 = x0;
      have_prev = true;
      N = std::min(2 * N, options.n_max_cap);
      cur = solve_truncated(sys, N, options.cond_limit);
    }
  }

  PeriodicSolution sol;
  sol.n_max = N;
  sol.sector = sector;
  sol.harmonics = options.harmonics;
  sol.omega_c = field.omega_c();
  sol.residual = cur.residual;
  sol.refinements = cur.refinements;
  sol.x_xi.assign(static_cast<std::size_t>(2 * N + 1), ComplexVector::Zero(L.dim_xi()));
  for (std::size_t i = 0; i < sol.x_xi.size(); ++i) sol.x_xi[i].head(sector) = cur.x[i];
  sol.x_o = optical_harmonics(field, matrices, sol.x_xi, N);
  sol.mean_force.assign(field.size(), Vec3::Zero());
  for (std::size_t j = 0; j < field.size(); ++j) {
    sol.R.push_back(rate_harmonics(field, matrices, sol, j, options.harmonics));
    const PlaneWave& w = field.waves()[j];
    sol.mean_force[j] = sol.mean_rate(j) * w.k_mag * w.k_dir;
    sol.total_force += sol.mean_force[j];
  }
  return sol;
}

ComplexMatrix q_matrix(const ComplexVector& x0, const ComplexVector& xn, double tol_zero, double tol_parallel) {
  const Eigen::Index d = x0.size();
  const double n0 = x0.norm(), nn = xn.norm();
  if (n0 == 0.0) throw Error(ErrorCode::Domain, "x^(0) must be nonzero");
  if (nn < tol_zero * n0) return ComplexMatrix::Zero(d, d);
  const cplx overlap = x0.dot(xn);  // conj(x0) . xn
  const double phi = std::abs(overlap) == 0.0 ? 0.0 : std::arg(overlap);
  const cplx ph = std::polar(1.0, phi);
  if ((xn / nn - ph * x0 / n0).norm() < tol_parallel) {
    return (ph * nn / n0) * ComplexMatrix::Identity(d, d);
  }
  const ComplexVector z = ph * x0 - (n0 / nn) * xn;
  const ComplexMatrix V = ComplexMatrix::Identity(d, d) - (2.0 / z.squaredNorm()) * (z * z.adjoint());
  return (ph * nn / n0) * V;
}

std::map<int, ComplexMatrix> q_matrices(const PeriodicSolution& sol, const SolverOptions& options) {
  std::map<int, ComplexMatrix> Q;
  const ComplexVector x0 = sol.xi(0).head(sol.sector);
  for (int n = -sol.n_max; n <= sol.n_max; ++n) {
    if (n == 0) {
      Q[0] = ComplexMatrix::Identity(sol.sector, sol.sector);
    } else {
      Q[n] = q_matrix(x0, sol.xi(n).head(sol.sector), options.tol_zero, options.tol_parallel);
    }
  }
  return Q;
}

SaturationMatrices saturation_matrices(const FieldSet& field, const ObeMatrices& M,
                                       const std::map<int, ComplexMatrix>& Q, int sector, int harmonics) {
  const int S = sector;
  const double g = M.gamma, w = field.omega_c();
  const std::size_t N = field.size();
  auto Qat = [&](int n) -> const ComplexMatrix* {
    auto it = Q.find(n);
    return it == Q.end() ? nullptr : &it->second;
  };
  // K_jl = sum_qq' O_jq O*_lq' (C)^q_q'
  std::vector<std::vector<ComplexMatrix>> K(N, std::vector<ComplexMatrix>(N));
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t l = 0; l < N; ++l) {
      K[j][l] = ComplexMatrix::Zero(S, S);
      for (int q = -1; q <= 1; ++q) {
        for (int qp = -1; qp <= 1; ++qp) {
          const cplx c = field.rabi_component(j, q) * std::conj(field.rabi_component(l, qp));
          if (c != cplx(0.0)) K[j][l] += c * M.Cxx(q, qp).topLeftCorner(S, S);
        }
      }
    }
  }
  SaturationMatrices out;
  out.s_total = ComplexMatrix::Zero(S, S);
  out.s.resize(N);
  out.s_n.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    auto sigma = [&](int n) {
      ComplexMatrix s = ComplexMatrix::Zero(S, S);
      const cplx denom = g * cplx(0.5 * g, n * w - field.detuning(j));
      for (std::size_t l = 0; l < N; ++l) {
        const ComplexMatrix* q = Qat(n + field.m(l) - field.m(j));
        if (q == nullptr) continue;
        s += (K[j][l] * *q) / denom;
      }
      return s;
    };
    for (int n = -harmonics; n <= harmonics; ++n) {
      out.s_n[j][n] = 0.5 * (sigma(n) + sigma(-n).conjugate());
    }
    out.s[j] = out.s_n[j][0];
    out.s_total += out.s[j];
  }
  return out;
}

std::vector<std::vector<cplx>> rates_from_saturation(const ObeMatrices& M, const SaturationMatrices& sat,
                                                     const ComplexVector& x0, int harmonics) {
  const Eigen::Index S = x0.size();
  const ComplexVector u = M.u_xi.head(S).cast<cplx>();
  std::vector<std::vector<cplx>> out;
  for (const auto& sj : sat.s_n) {
    std::vector<cplx> r;
    for (int n = -harmonics; n <= harmonics; ++n) {
      r.push_back(-M.gamma * u.dot(sj.at(n) * x0));
    }
    out.push_back(std::move(r));
  }
  return out;
}

ComplexVector x0_from_saturation(const ObeMatrices& M, const ComplexMatrix& s_total, int sector) {
  const int S = sector;
  const ComplexMatrix A = M.A_xixi.topLeftCorner(S, S).cast<cplx>();
  const ComplexVector Au = A * M.u_xi.head(S).cast<cplx>();
  Eigen::PartialPivLU<ComplexMatrix> lu(A + s_total);
  return (-1.0 / M.layout.N_J()) * lu.solve(Au);
}

double instantaneous_rate(const FieldSet& field, const StateLayout& layout, const RealVector& x, double t,
                          std::size_t j) {
  const CVec3 chi = absorption_vector(x.head(layout.dim_o()).cast<cplx>(), layout);
  const cplx phase = std::polar(1.0, field.m(j) * field.omega_c() * t);
  cplx s = 0.0;
  for (int q = -1; q <= 1; ++q) s += field.rabi_component(j, q) * chi(q_slot(q));
  return (phase * s).imag();
}

RealVector state_at(const PeriodicSolution& sol, double t) {
  const Eigen::Index o = sol.x_o.front().size(), xi = sol.x_xi.front().size();
  ComplexVector x = ComplexVector::Zero(o + xi);
  for (int n = -sol.n_max; n <= sol.n_max; ++n) {
    const cplx e = std::polar(1.0, n * sol.omega_c * t);
    x.head(o) += e * sol.o(n);
    x.tail(xi) += e * sol.xi(n);
  }
  return x.real();
}

}  // namespace radforce
