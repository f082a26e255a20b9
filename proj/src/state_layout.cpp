#include "radforce/state_layout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "radforce/errors.hpp"

namespace radforce {

int ZeemanBlock::size() const { return -m_lo_twice - dm + 1; }

StateLayout::StateLayout(const AtomicTransition& transition) : transition_(transition) {
  transition_.validate();
  const int tg = transition_.Jg.twice();
  const int te = transition_.Je.twice();
  n_e_ = te + 1;
  n_g_ = tg + 1;
  dm_max_ = (te + tg) / 2;

  int offset = 0;
  for (int dm = -dm_max_; dm <= dm_max_; ++dm) {
    // m_-(dm) = max(-Jg, -Je - dm), m_+(dm) = min(Jg, Je - dm)
    const int lo = std::max(-tg, -te - 2 * dm);
    const int hi = std::min(tg, te - 2 * dm);
    OpticalBlock block{2 * dm, lo, hi, offset};
    optical_.push_back(block);
    offset += 2 * block.size();
  }
  dim_o_ = offset;
  dim_pe_ = n_e_;
  dim_pg_ = n_g_ - 1;
  offset += dim_pe_ + dim_pg_;

  for (Manifold k : {Manifold::Excited, Manifold::Ground}) {
    const int tk = (k == Manifold::Excited) ? te : tg;
    const int start = offset;
    for (int dm = 1; dm <= tk; ++dm) {
      ZeemanBlock block{k, dm, offset, -tk};
      zeeman_.push_back(block);
      offset += 2 * block.size();
    }
    (k == Manifold::Excited ? dim_Ze_ : dim_Zg_) = offset - start;
  }

  cg_table_.assign(static_cast<std::size_t>(3 * n_g_), 0.0);
  for (int i = 0; i < n_g_; ++i) {
    for (int q = -1; q <= 1; ++q) {
      const int m_twice = -tg + 2 * i;
      const int me_twice = m_twice + 2 * q;
      if (std::abs(me_twice) > te) continue;
      cg_table_[3 * i + (q + 1)] = cg_transition(transition_, HalfInt::from_twice(m_twice), q);
    }
  }
}

const OpticalBlock* StateLayout::optical_block(int dm) const noexcept {
  if (dm < -dm_max_ || dm > dm_max_) return nullptr;
  return &optical_[static_cast<std::size_t>(dm + dm_max_)];
}

const ZeemanBlock* StateLayout::zeeman_block(Manifold k, int dm) const noexcept {
  const int tk = J(k).twice();
  if (dm < 1 || dm > tk) return nullptr;
  const std::size_t base = (k == Manifold::Excited) ? 0 : static_cast<std::size_t>(transition_.Je.twice());
  return &zeeman_[base + static_cast<std::size_t>(dm - 1)];
}

int StateLayout::optical_index(int dm, int m_twice) const noexcept {
  const OpticalBlock* b = optical_block(dm);
  if (b == nullptr || m_twice < b->m_lo_twice || m_twice > b->m_hi_twice) return -1;
  if ((m_twice - b->m_lo_twice) % 2 != 0) return -1;
  return b->offset + (m_twice - b->m_lo_twice);
}

int StateLayout::population_index(Manifold k, int m_twice) const noexcept {
  if (k == Manifold::Excited) {
    const int te = transition_.Je.twice();
    if (m_twice < -te || m_twice > te || (m_twice + te) % 2 != 0) return -1;
    return offset_pe() + (m_twice + te) / 2;
  }
  const int tg = transition_.Jg.twice();
  if (m_twice <= -tg || m_twice > tg || (m_twice + tg) % 2 != 0) return -1;
  return offset_pg() + (m_twice + tg) / 2 - 1;
}

int StateLayout::zeeman_index(Manifold k, int dm, int m_twice) const noexcept {
  const ZeemanBlock* b = zeeman_block(k, dm);
  if (b == nullptr) return -1;
  const int tk = J(k).twice();
  if (m_twice < -tk || m_twice > tk - 2 * dm || (m_twice + tk) % 2 != 0) return -1;
  return b->offset + (m_twice + tk);
}

int StateLayout::level_index(Manifold k, int m_twice) const noexcept {
  if (k == Manifold::Excited) return (m_twice + transition_.Je.twice()) / 2;
  return n_e_ + (m_twice + transition_.Jg.twice()) / 2;
}

double StateLayout::cg(int m_twice, int q) const noexcept {
  const int tg = transition_.Jg.twice();
  if (q < -1 || q > 1 || m_twice < -tg || m_twice > tg || (m_twice + tg) % 2 != 0) return 0.0;
  return cg_table_[static_cast<std::size_t>(3 * ((m_twice + tg) / 2) + (q + 1))];
}

StateLayout build_layout(const AtomicTransition& transition) { return StateLayout(transition); }

namespace {

template <typename Scalar, typename MatrixT>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pack_impl(const MatrixT& rho, const StateLayout& layout,
                                                   bool subtract_offset) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(layout.dim_x());
  const int te = layout.transition().Je.twice();
  const double offset = subtract_offset ? 1.0 / layout.N_J() : 0.0;
  for (const OpticalBlock& b : layout.optical_blocks()) {
    for (int m = b.m_lo_twice; m <= b.m_hi_twice; m += 2) {
      const int idx = b.offset + (m - b.m_lo_twice);
      const int rg = layout.level_index(Manifold::Ground, m);
      const int re = layout.level_index(Manifold::Excited, m + b.dm_twice);
      x[idx] = static_cast<Scalar>(rho(rg, re).real());
      x[idx + 1] = static_cast<Scalar>(rho(rg, re).imag());
    }
  }
  for (int m = -te; m <= te; m += 2) {
    const int r = layout.level_index(Manifold::Excited, m);
    x[layout.population_index(Manifold::Excited, m)] = static_cast<Scalar>(rho(r, r).real() - offset);
  }
  const int tg = layout.transition().Jg.twice();
  for (int m = -tg + 2; m <= tg; m += 2) {
    const int r = layout.level_index(Manifold::Ground, m);
    x[layout.population_index(Manifold::Ground, m)] = static_cast<Scalar>(rho(r, r).real() - offset);
  }
  for (const ZeemanBlock& b : layout.zeeman_blocks()) {
    const int tk = layout.J(b.manifold).twice();
    for (int m = -tk; m <= tk - 2 * b.dm; m += 2) {
      const int idx = b.offset + (m + tk);
      const int r1 = layout.level_index(b.manifold, m);
      const int r2 = layout.level_index(b.manifold, m + 2 * b.dm);
      x[idx] = static_cast<Scalar>(rho(r1, r2).real());
      x[idx + 1] = static_cast<Scalar>(rho(r1, r2).imag());
    }
  }
  return x;
}

template <typename Scalar>
ComplexMatrix unpack_impl(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
                          const StateLayout& layout, bool add_offset) {
  const int n = layout.N_J();
  ComplexMatrix rho = ComplexMatrix::Zero(n, n);
  for (const OpticalBlock& b : layout.optical_blocks()) {
    for (int m = b.m_lo_twice; m <= b.m_hi_twice; m += 2) {
      const int idx = b.offset + (m - b.m_lo_twice);
      const int rg = layout.level_index(Manifold::Ground, m);
      const int re = layout.level_index(Manifold::Excited, m + b.dm_twice);
      const cplx u = x[idx], v = x[idx + 1];
      rho(rg, re) = u + kI * v;
      rho(re, rg) = u - kI * v;
    }
  }
  const double offset = add_offset ? 1.0 / n : 0.0;
  cplx sum = 0.0;
  const int te = layout.transition().Je.twice();
  for (int m = -te; m <= te; m += 2) {
    const int r = layout.level_index(Manifold::Excited, m);
    const cplx w = x[layout.population_index(Manifold::Excited, m)];
    rho(r, r) = w + offset;
    sum += w;
  }
  const int tg = layout.transition().Jg.twice();
  for (int m = -tg + 2; m <= tg; m += 2) {
    const int r = layout.level_index(Manifold::Ground, m);
    const cplx w = x[layout.population_index(Manifold::Ground, m)];
    rho(r, r) = w + offset;
    sum += w;
  }
  const int r0 = layout.level_index(Manifold::Ground, -tg);
  rho(r0, r0) = -sum + offset;
  for (const ZeemanBlock& b : layout.zeeman_blocks()) {
    const int tk = layout.J(b.manifold).twice();
    for (int m = -tk; m <= tk - 2 * b.dm; m += 2) {
      const int idx = b.offset + (m + tk);
      const int r1 = layout.level_index(b.manifold, m);
      const int r2 = layout.level_index(b.manifold, m + 2 * b.dm);
      const cplx u = x[idx], v = x[idx + 1];
      rho(r1, r2) = u + kI * v;
      rho(r2, r1) = u - kI * v;
    }
  }
  return rho;
}

}  // namespace

RealVector pack(const DensityMatrix& rho, const StateLayout& layout, double tol) {
  const int n = layout.N_J();
  if (rho.rows() != n || rho.cols() != n) {
    throw Error(ErrorCode::Validation, "density matrix has the wrong dimension");
  }
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) {
    throw Error(ErrorCode::Validation, "density matrix is not Hermitian");
  }
  if (std::abs(rho.trace() - cplx(1.0)) > tol) {
    throw Error(ErrorCode::Validation, "density matrix trace differs from 1");
  }
  return pack_impl<double>(rho, layout, true);
}

RealVector pack_linear(const DensityMatrix& drho, const StateLayout& layout) {
  return pack_impl<double>(drho, layout, false);
}

DensityMatrix unpack(const RealVector& x, const StateLayout& layout) {
  if (x.size() != layout.dim_x()) {
    throw Error(ErrorCode::Validation, "state vector length does not match the layout");
  }
  return unpack_impl<double>(x, layout, true);
}

ComplexMatrix unpack_linear(const ComplexVector& x, const StateLayout& layout) {
  if (x.size() != layout.dim_x()) {
    throw Error(ErrorCode::Validation, "state vector length does not match the layout");
  }
  return unpack_impl<cplx>(x, layout, false);
}

}  // namespace radforce
