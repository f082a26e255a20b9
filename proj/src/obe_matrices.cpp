#include "radforce/obe_matrices.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "radforce/errors.hpp"

namespace radforce {

namespace {

void check_q(int q) {
  if (q < -1 || q > 1) throw Error(ErrorCode::Domain, "spherical index must be in {-1, 0, 1}");
}

int n_of(Manifold k) { return k == Manifold::Excited ? 1 : 0; }
int nt_of(Manifold k) { return k == Manifold::Excited ? 1 : -1; }

// Doubled projections of the independent populations of manifold k.
std::vector<int> population_ms(const StateLayout& layout, Manifold k) {
  const int tk = layout.J(k).twice();
  std::vector<int> out;
  for (int m = (k == Manifold::Ground ? -tk + 2 : -tk); m <= tk; m += 2) out.push_back(m);
  return out;
}

constexpr Manifold kManifolds[2] = {Manifold::Excited, Manifold::Ground};

// Optical-coherence couplings to the Zeeman sector (compact, before the
// (1, -i) row factor). Columns are xi-local.
void add_C_oZ(const StateLayout& layout, int q, ComplexMatrix& out) {
  const int o = layout.dim_o();
  for (Manifold k : kManifolds) {
    const int tk = layout.J(k).twice();
    const int nk = n_of(k), ntk = nt_of(k);
    for (int dmk = 1; dmk <= tk; ++dmk) {
      for (int eps : {1, -1}) {
        const int dm_opt = q + eps * dmk;
        const OpticalBlock* blk = layout.optical_block(dm_opt);
        if (blk == nullptr) continue;
        for (int m = blk->m_lo_twice; m <= blk->m_hi_twice; m += 2) {
          const int mk = m + nk * 2 * q - (1 - eps) * dmk;
          const int col = layout.zeeman_index(k, dmk, mk);
          if (col < 0) continue;
          const double c = layout.cg(m - eps * (nk - 1) * 2 * dmk, q);
          if (c == 0.0) continue;
          const double val = 0.5 * ntk * c;
          const int a = layout.optical_index(dm_opt, m) / 2;
          out(a, col - o) += val;
          out(a, col - o + 1) += static_cast<double>(eps) * kI * val;
        }
      }
    }
  }
}

}  // namespace

RealMatrix build_A_xixi(const StateLayout& layout) {
  const int o = layout.dim_o();
  const int n = layout.dim_xi();
  RealMatrix A = RealMatrix::Zero(n, n);
  const int te = layout.transition().Je.twice();
  const int tg = layout.transition().Jg.twice();
  for (int me = -te; me <= te; me += 2) {
    const int r = layout.population_index(Manifold::Excited, me) - o;
    A(r, r) = 1.0;
  }
  for (int mg = -tg + 2; mg <= tg; mg += 2) {
    const int r = layout.population_index(Manifold::Ground, mg) - o;
    for (int me = -te; me <= te; me += 2) {
      const int q2 = me - mg;
      if (std::abs(q2) > 2) continue;
      const double c = layout.cg(mg, q2 / 2);
      A(r, layout.population_index(Manifold::Excited, me) - o) = -c * c;
    }
  }
  for (const ZeemanBlock& blk : layout.zeeman_blocks()) {
    if (blk.manifold != Manifold::Excited) continue;
    for (int i = 0; i < 2 * blk.size(); ++i) A(blk.offset + i - o, blk.offset + i - o) = 1.0;
  }
  for (int dm = 1; dm <= std::min(tg, te); ++dm) {
    for (int mg = -tg; mg <= tg - 2 * dm; mg += 2) {
      const int r = layout.zeeman_index(Manifold::Ground, dm, mg) - o;
      for (int me = -te; me <= te - 2 * dm; me += 2) {
        const int q2 = me - mg;
        if (std::abs(q2) > 2) continue;
        const double val = -layout.cg(mg, q2 / 2) * layout.cg(mg + 2 * dm, q2 / 2);
        const int c = layout.zeeman_index(Manifold::Excited, dm, me) - o;
        A(r, c) = val;
        A(r + 1, c + 1) = val;
      }
    }
  }
  return A;
}

RealMatrix build_A0(const StateLayout& layout, double deltabar_over_gamma) {
  const int n = layout.dim_x();
  const int o = layout.dim_o();
  RealMatrix A0 = RealMatrix::Zero(n, n);
  for (int i = 0; i < o; i += 2) {
    A0(i, i) = 0.5;
    A0(i + 1, i + 1) = 0.5;
    A0(i, i + 1) = -deltabar_over_gamma;
    A0(i + 1, i) = deltabar_over_gamma;
  }
  A0.bottomRightCorner(layout.dim_xi(), layout.dim_xi()) = build_A_xixi(layout);
  return A0;
}

RealVector build_u_xi(const StateLayout& layout) {
  RealVector u = RealVector::Zero(layout.dim_xi());
  u.head(layout.dim_pe()).setOnes();
  return u;
}

RealVector build_b(const StateLayout& layout) {
  RealVector b = RealVector::Zero(layout.dim_x());
  const double g = layout.transition().gamma;
  b.tail(layout.dim_xi()) = -(g / layout.N_J()) * (build_A_xixi(layout) * build_u_xi(layout));
  return b;
}

ComplexMatrix build_C_oxi(const StateLayout& layout, int q) {
  check_q(q);
  const int o = layout.dim_o();
  const int tg = layout.transition().Jg.twice();
  ComplexMatrix C = ComplexMatrix::Zero(o / 2, layout.dim_xi());
  if (const OpticalBlock* blk = layout.optical_block(q)) {
    const auto pe = population_ms(layout, Manifold::Excited);
    const auto pg = population_ms(layout, Manifold::Ground);
    for (int m = blk->m_lo_twice; m <= blk->m_hi_twice; m += 2) {
      const int a = layout.optical_index(q, m) / 2;
      const double c = layout.cg(m, q);
      const double lowest = (m == -tg) ? 1.0 : 0.0;
      for (int me : pe) {
        const double val = c * (lowest + (me == m + 2 * q ? 1.0 : 0.0)) / 2.0;
        if (val != 0.0) C(a, layout.population_index(Manifold::Excited, me) - o) += val;
      }
      for (int mg : pg) {
        const double val = c * (lowest - (mg == m ? 1.0 : 0.0)) / 2.0;
        if (val != 0.0) C(a, layout.population_index(Manifold::Ground, mg) - o) += val;
      }
    }
  }
  add_C_oZ(layout, q, C);
  return C;
}

ComplexMatrix build_C_xio(const StateLayout& layout, int q) {
  check_q(q);
  const int o = layout.dim_o();
  const int tg = layout.transition().Jg.twice();
  const int te = layout.transition().Je.twice();
  ComplexMatrix C = ComplexMatrix::Zero(layout.dim_xi(), o / 2);
  if (const OpticalBlock* blk = layout.optical_block(q)) {
    for (int m = blk->m_lo_twice; m <= blk->m_hi_twice; m += 2) {
      const int a = layout.optical_index(q, m) / 2;
      const double c = layout.cg(m, q);
      if (std::abs(m + 2 * q) <= te) {
        C(layout.population_index(Manifold::Excited, m + 2 * q) - o, a) += -c;
      }
      if (m > -tg) C(layout.population_index(Manifold::Ground, m) - o, a) += c;
    }
  }
  ComplexMatrix oz = ComplexMatrix::Zero(o / 2, layout.dim_xi());
  add_C_oZ(layout, q, oz);
  C.bottomRows(layout.dim_Z()) = -oz.rightCols(layout.dim_Z()).transpose();
  return C;
}

ComplexMatrix build_Cq(const StateLayout& layout, int q) {
  const ComplexMatrix oxi = build_C_oxi(layout, q);
  const ComplexMatrix xio = build_C_xio(layout, q);
  const int o = layout.dim_o();
  const int n = layout.dim_x();
  ComplexMatrix C = ComplexMatrix::Zero(n, n);
  for (int a = 0; a < o / 2; ++a) {
    for (int j = 0; j < layout.dim_xi(); ++j) {
      const cplx c = oxi(a, j);
      if (c != cplx(0.0)) {
        C(2 * a, o + j) = c;
        C(2 * a + 1, o + j) = -kI * c;
      }
      const cplx d = xio(j, a);
      if (d != cplx(0.0)) {
        C(o + j, 2 * a) = d;
        C(o + j, 2 * a + 1) = -kI * d;
      }
    }
  }
  return C;
}

ComplexMatrix build_C_xixi(const StateLayout& layout, int q, int qp) {
  return -build_C_xio(layout, q) * build_C_oxi(layout, qp).conjugate();
}

ComplexMatrix appendixB_blocks(const StateLayout& layout, int q, int qp) {
  check_q(q);
  check_q(qp);
  const int o = layout.dim_o();
  const int tg = layout.transition().Jg.twice();
  const int te = layout.transition().Je.twice();
  const int dq = qp - q;
  const int sdq = (dq > 0) - (dq < 0);
  ComplexMatrix C = ComplexMatrix::Zero(layout.dim_xi(), layout.dim_xi());

  // population-population: diagonal in q
  if (dq == 0) {
    if (const OpticalBlock* blk = layout.optical_block(q)) {
      for (Manifold k : kManifolds) {
        for (Manifold l : kManifolds) {
          const int nk = n_of(k), ntk = nt_of(k), nl = n_of(l), ntl = nt_of(l);
          for (int m : population_ms(layout, k)) {
            const int x = m - nk * 2 * q;
            if (x < blk->m_lo_twice || x > blk->m_hi_twice) continue;
            const double c = layout.cg(x, q);
            for (int mp : population_ms(layout, l)) {
              const double d = (m == -tg + nk * 2 * q ? 1.0 : 0.0) +
                               ntl * (mp == m + (nl - nk) * 2 * q ? 1.0 : 0.0);
              const double val = ntk * c * c * d / 2.0;
              if (val != 0.0) {
                C(layout.population_index(k, m) - o, layout.population_index(l, mp) - o) += val;
              }
            }
          }
        }
      }
    }
  }

  const int j = std::abs(dq);
  // population-Zeeman and Zeeman-population: only |dq| = 1, 2
  if (j == 1 || j == 2) {
    const OpticalBlock* bq = layout.optical_block(q);
    const OpticalBlock* bqp = layout.optical_block(qp);
    for (Manifold k : kManifolds) {
      for (Manifold l : kManifolds) {
        const int nk = n_of(k), ntk = nt_of(k), nl = n_of(l), ntl = nt_of(l);
        // (C_{p_k Z_l})
        if (bq != nullptr && layout.zeeman_block(l, j) != nullptr) {
          const int tl = layout.J(l).twice();
          for (int m : population_ms(layout, k)) {
            const int x = m - nk * 2 * q;
            if (x < bq->m_lo_twice || x > bq->m_hi_twice) continue;
            const int mp = m + ntl * qp - ntk * q - j;
            if (mp < -tl || mp > tl - 2 * j) continue;
            const double val =
                ntk * ntl * layout.cg(x, q) * layout.cg(x + (nl - 1) * 2 * dq, qp) / 2.0;
            if (val == 0.0) continue;
            const int r = layout.population_index(k, m) - o;
            const int c = layout.zeeman_index(l, j, mp) - o;
            C(r, c) += val;
            C(r, c + 1) += static_cast<double>(sdq) * kI * val;
          }
        }
        // (C_{Z_k p_l})
        if (bqp != nullptr && layout.zeeman_block(k, j) != nullptr) {
          const int tk = layout.J(k).twice();
          for (int m = -tk; m <= tk - 2 * j; m += 2) {
            const int x = m - nk * 2 * q - (1 - sdq) * dq;
            if (x < bqp->m_lo_twice || x > bqp->m_hi_twice) continue;
            const int r = layout.zeeman_index(k, j, m) - o;
            const double t1 = (m == -tg + qp + ntk * q - j)
                                  ? ntk * layout.cg(-tg, qp) * layout.cg(-tg - (nk - 1) * 2 * dq, q)
                                  : 0.0;
            for (int mp : population_ms(layout, l)) {
              double t2 = 0.0;
              if (mp == m + ntl * qp - ntk * q + j) {
                const int y = mp - nl * 2 * qp;
                t2 = ntk * ntl * layout.cg(y, qp) * layout.cg(y - (nk - 1) * 2 * dq, q);
              }
              const double val = (t1 + t2) / 4.0;
              if (val == 0.0) continue;
              const int c = layout.population_index(l, mp) - o;
              C(r, c) += val;
              C(r + 1, c) += static_cast<double>(sdq) * kI * val;
            }
          }
        }
      }
    }
  }

  // Zeeman-Zeeman
  // dm_lo + 2 min(Je, Jg) - 1 misses blocks when Je != Jg; scan every Zeeman order
  const int max_t = std::max(te, tg);
  for (Manifold k : kManifolds) {
    for (Manifold l : kManifolds) {
      const int ntk = nt_of(k), ntl = nt_of(l);
      const int tk = layout.J(k).twice(), tl = layout.J(l).twice();
      for (int eps : {1, -1}) {
        const int dm_lo = std::max(1, 1 + eps * dq);
        const int dm_hi = max_t;
        for (int dm = dm_lo; dm <= dm_hi; ++dm) {
          if (2 * (dm + eps * q) > te + tg) continue;
          const int dmc = dm - eps * dq;
          if (layout.zeeman_block(k, dm) == nullptr || layout.zeeman_block(l, dmc) == nullptr) continue;
          for (int m = -tk; m <= tk - 2 * dm; m += 2) {
            const int mu = m + ntl * qp - ntk * q + eps * dq;
            if (mu < -tl || mu > tl - 2 * dmc) continue;
            const double c1 = layout.cg(m - (1 + ntk) * q + (1 - eps * ntk) * dm, q);
            const double c2 = layout.cg(m + (1 - eps * ntl) * dm - (ntk * q - ntl * dq + qp), qp);
            const double val = ntk * ntl * c1 * c2 / 4.0;
            if (val == 0.0) continue;
            const int r = layout.zeeman_index(k, dm, m) - o;
            const int c = layout.zeeman_index(l, dmc, mu) - o;
            C(r, c) += val;
            C(r, c + 1) += -static_cast<double>(eps) * kI * val;
            C(r + 1, c) += static_cast<double>(eps) * kI * val;
            C(r + 1, c + 1) += val;
          }
        }
      }
      if (q != 0 && qp == -q && layout.zeeman_block(k, 1) != nullptr && layout.zeeman_block(l, 1) != nullptr) {
        for (int m = -tk; m <= tk - 2; m += 2) {
          const int mp = m - (ntk + ntl) * q;
          if (mp < -tl || mp > tl - 2) continue;
          const double val =
              ntk * ntl * layout.cg(m + (1 - q), q) * layout.cg(mp + (1 + q), -q) / 4.0;
          if (val == 0.0) continue;
          const int r = layout.zeeman_index(k, 1, m) - o;
          const int c = layout.zeeman_index(l, 1, mp) - o;
          C(r, c) += val;
          C(r, c + 1) += -static_cast<double>(q) * kI * val;
          C(r + 1, c) += -static_cast<double>(q) * kI * val;
          C(r + 1, c + 1) += -val;
        }
      }
    }
  }
  return C;
}

ObeMatrices build_obe_matrices(const StateLayout& layout, double deltabar) {
  ObeMatrices M{layout, 1.0, 0.0, {}, {}, {}, {}, {}, {}, {}, {}};
  M.gamma = layout.transition().gamma;
  M.deltabar = deltabar;
  M.A0 = build_A0(layout, deltabar / M.gamma);
  M.A_xixi = M.A0.bottomRightCorner(layout.dim_xi(), layout.dim_xi());
  M.u_xi = build_u_xi(layout);
  M.b = RealVector::Zero(layout.dim_x());
  M.b.tail(layout.dim_xi()) = -(M.gamma / layout.N_J()) * (M.A_xixi * M.u_xi);
  for (int q = -1; q <= 1; ++q) {
    const auto s = static_cast<std::size_t>(q_slot(q));
    M.C_oxi[s] = build_C_oxi(layout, q);
    M.C_xio[s] = build_C_xio(layout, q);
    M.C[s] = build_Cq(layout, q);
  }
  for (int q = -1; q <= 1; ++q) {
    for (int qp = -1; qp <= 1; ++qp) {
      M.C_xixi[static_cast<std::size_t>(q_slot(q))][static_cast<std::size_t>(q_slot(qp))] =
          -M.C_xio[static_cast<std::size_t>(q_slot(q))] * M.C_oxi[static_cast<std::size_t>(q_slot(qp))].conjugate();
    }
  }
  return M;
}

ObeMatrices build_obe_matrices(const StateLayout& layout, const FieldSet& field) {
  return build_obe_matrices(layout, field.deltabar());
}

RealMatrix assemble_A_of_t(const ObeMatrices& matrices, const FieldSet& field, double t) {
  if (std::abs(field.deltabar() - matrices.deltabar) > 1e-12 * std::max(1.0, std::abs(matrices.deltabar))) {
    throw Error(ErrorCode::ConfigurationMismatch, "matrices were built for a different mean detuning");
  }
  RealMatrix A = -matrices.gamma * matrices.A0;
  for (int q = -1; q <= 1; ++q) {
    const cplx w = field.omega_q(q, t);
    if (w == cplx(0.0)) continue;
    A += (w * matrices.Cq(q)).imag();
  }
  return A;
}

}  // namespace radforce
