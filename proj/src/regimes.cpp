#include "radforce/regimes.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "radforce/errors.hpp"

namespace radforce {

namespace {

constexpr double kRcondFloor = 1e-13;

// gamma N_J^{-1} u^T s_j (A + s)^{-1} A u for real matrices.
double rate_formula(const ObeMatrices& M, const RealMatrix& s_j, const RealMatrix& s_total, const RealMatrix& A,
                    const RealVector& u) {
  const RealMatrix X = A + s_total;
  Eigen::PartialPivLU<RealMatrix> lu(X);
  if (!(lu.rcond() > kRcondFloor)) throw Error(ErrorCode::DegenerateRegime, "A + s is singular");
  const RealVector y = lu.solve(A * u);
  return M.gamma / M.layout.N_J() * u.dot(s_j * y);
}

bool distinct_frequencies(const FieldSet& field) {
  if (field.stationary()) return field.size() == 1;
  std::set<int> ms;
  for (std::size_t j = 0; j < field.size(); ++j) ms.insert(field.m(j));
  return ms.size() == field.size();
}

int pure_q(const Polarization& p, double tol = 1e-14) {
  int found = 2;
  for (int q = -1; q <= 1; ++q) {
    if (std::abs(p[static_cast<std::size_t>(q_slot(q))]) <= tol) continue;
    if (found != 2) return 2;
    found = q;
  }
  return found;
}

RealMatrix C_pp(const ObeMatrices& M, int q) {
  const int P = M.layout.dim_p();
  return M.Cxx(q, q).topLeftCorner(P, P).real();
}

}  // namespace

LowIntensityDiagnostics low_intensity_check(const FieldSet& field, const ObeMatrices& matrices, int n_check) {
  LowIntensityDiagnostics d;
  for (const PlaneWave& w : field.waves()) d.rabi_sum += std::abs(w.rabi) / matrices.gamma;
  const int dim = matrices.layout.dim_xi();
  d.row_threshold = 0.1 / std::sqrt(static_cast<double>(dim));
  if (n_check <= 0) n_check = std::max(4, 4 * field.max_abs_m());
  d.n_checked = field.stationary() ? 0 : n_check;
  if (!field.stationary()) {
    const HarmonicSystem H(field, matrices, dim);
    for (int n = -n_check; n <= n_check; ++n) {
      if (n == 0) continue;
      RealVector rows = RealVector::Zero(dim);
      for (int m : H.shifts()) {
        if (m == 0) continue;
        rows += H.W(n, m).cwiseAbs().rowwise().sum();
      }
      d.max_row_sum = std::max(d.max_row_sum, rows.maxCoeff());
    }
  }
  d.low_intensity = d.rabi_sum < d.rabi_threshold && d.max_row_sum < d.row_threshold;
  return d;
}

RealMatrix low_intensity_saturation(const FieldSet& field, const ObeMatrices& M, std::size_t j) {
  const double g = M.gamma;
  const cplx denom = cplx(0.5 * g, -field.detuning(j));
  ComplexMatrix s = ComplexMatrix::Zero(M.layout.dim_xi(), M.layout.dim_xi());
  for (int q = -1; q <= 1; ++q) {
    for (int qp = -1; qp <= 1; ++qp) {
      const cplx c = field.rabi_component(j, q) * std::conj(field.rabi_component(j, qp)) / g / denom;
      if (c != cplx(0.0)) s += c * M.Cxx(q, qp);
    }
  }
  return s.real();
}

double low_intensity_rate(const FieldSet& field, const ObeMatrices& M, std::size_t j) {
  if (j >= field.size()) throw Error(ErrorCode::IndexOutOfRange, "wave index out of range");
  if (!distinct_frequencies(field)) {
    throw Error(ErrorCode::ConfigurationMismatch, "low-intensity form needs distinct frequencies");
  }
  RealMatrix total = RealMatrix::Zero(M.layout.dim_xi(), M.layout.dim_xi());
  RealMatrix sj;
  for (std::size_t l = 0; l < field.size(); ++l) {
    RealMatrix s = low_intensity_saturation(field, M, l);
    total += s;
    if (l == j) sj = std::move(s);
  }
  return rate_formula(M, sj, total, M.A_xixi, M.u_xi);
}

std::vector<double> incoherent_sigma_pm(const FieldSet& field, const ObeMatrices& M) {
  if (field.size() != 2) throw Error(ErrorCode::ConfigurationMismatch, "sigma+/sigma- averaging needs two waves");
  const int q0 = pure_q(field.waves()[0].pol), q1 = pure_q(field.waves()[1].pol);
  if (std::abs(q0) != 1 || std::abs(q1) != 1 || q0 == q1) {
    throw Error(ErrorCode::ConfigurationMismatch, "waves must be one sigma+ and one sigma-");
  }
  const int P = M.layout.dim_p();
  const RealMatrix A = M.A_xixi.topLeftCorner(P, P);
  const RealVector u = M.u_xi.head(P);
  const std::array<int, 2> q{q0, q1};
  std::array<double, 2> s{};
  RealMatrix X = A;
  for (std::size_t j = 0; j < 2; ++j) {
    s[j] = saturation_parameter(field.waves()[j].rabi, field.detuning(j), M.gamma);
    X += s[j] * C_pp(M, q[j]);
  }
  Eigen::PartialPivLU<RealMatrix> lu(X);
  if (!(lu.rcond() > kRcondFloor)) throw Error(ErrorCode::DegenerateRegime, "A_pp + s C_pp is singular");
  const RealVector y = lu.solve(A * u);
  std::vector<double> out(2);
  for (std::size_t j = 0; j < 2; ++j) {
    const double f = u.dot(C_pp(M, q[j]) * y);
    out[j] = M.gamma / M.layout.N_J() * s[j] * f;
  }
  return out;
}

std::vector<double> same_frequency_rate(const FieldSet& field, const ObeMatrices& M) {
  if (!field.stationary()) throw Error(ErrorCode::ConfigurationMismatch, "waves do not share one frequency");
  const double g = M.gamma;
  const std::size_t N = field.size();
  const cplx denom = cplx(0.5 * g, -field.deltabar());
  std::array<cplx, 3> total{};
  for (int q = -1; q <= 1; ++q) {
    for (std::size_t j = 0; j < N; ++j) total[static_cast<std::size_t>(q_slot(q))] += field.rabi_component(j, q);
  }
  const int D = M.layout.dim_xi();
  std::vector<RealMatrix> s(N);
  RealMatrix s_total = RealMatrix::Zero(D, D);
  for (std::size_t j = 0; j < N; ++j) {
    ComplexMatrix c = ComplexMatrix::Zero(D, D);
    for (int q = -1; q <= 1; ++q) {
      for (int qp = -1; qp <= 1; ++qp) {
        const cplx w = field.rabi_component(j, q) * std::conj(total[static_cast<std::size_t>(q_slot(qp))]) / g / denom;
        if (w != cplx(0.0)) c += w * M.Cxx(q, qp);
      }
    }
    s[j] = c.real();
    s_total += s[j];
  }
  std::vector<double> out(N);
  for (std::size_t j = 0; j < N; ++j) out[j] = rate_formula(M, s[j], s_total, M.A_xixi, M.u_xi);
  return out;
}

double single_wave_rate(const StateLayout& layout, double s, const Polarization& pol, double delta) {
  if (s < 0.0) throw Error(ErrorCode::Domain, "saturation parameter must be >= 0");
  const double g = layout.transition().gamma;
  const double rabi = std::sqrt(2.0 * s * (0.25 * g * g + delta * delta));
  PlaneWave w;
  w.rabi = rabi;
  w.detuning = delta;
  w.pol = pol;
  const FieldSet field({w});
  return same_frequency_rate(field, build_obe_matrices(layout, field))[0];
}

RealVector detuning_sensitivity(const StateLayout& layout, double s, const Polarization& pol) {
  const ObeMatrices M = build_obe_matrices(layout, 0.0);
  const int D = layout.dim_xi();
  ComplexMatrix c = ComplexMatrix::Zero(D, D);
  for (int q = -1; q <= 1; ++q) {
    for (int qp = -1; qp <= 1; ++qp) {
      const cplx w = pol[static_cast<std::size_t>(q_slot(q))] * std::conj(pol[static_cast<std::size_t>(q_slot(qp))]);
      if (w != cplx(0.0)) c += w * M.Cxx(q, qp);
    }
  }
  const RealMatrix X = M.A_xixi + s * c.real();
  Eigen::PartialPivLU<RealMatrix> lu(X);
  if (!(lu.rcond() > kRcondFloor)) throw Error(ErrorCode::DegenerateRegime, "A + f is singular");
  return c.imag() * lu.solve(M.A_xixi * M.u_xi);
}

GaoParams gao_params(const AtomicTransition& transition, int q) {
  transition.validate();
  if (q < -1 || q > 1) throw Error(ErrorCode::Domain, "spherical index must be in {-1, 0, 1}");
  GaoParams p;
  p.delta_J = transition.delta_J();
  p.Jg = transition.Jg;
  p.q = q;
  if (p.delta_J == -1) {
    throw Error(ErrorCode::UnsupportedTransition, "same-polarization closed form does not apply for Delta J = -1");
  }
  const bool integer_jg = transition.Jg.twice() % 2 == 0;
  if (p.delta_J == 0 && !transition.two_level_override && (q != 0 || integer_jg)) return p;
  const StateLayout L(transition);
  const ObeMatrices M = build_obe_matrices(L, 0.0);
  const int P = L.dim_p();
  const RealMatrix A = M.A_xixi.topLeftCorner(P, P);
  const RealMatrix C = C_pp(M, q);
  const double dp = (A + C).fullPivLu().determinant();
  const double dm = (A - C).fullPivLu().determinant();
  const double sign = integer_jg ? 1.0 : -1.0;
  const double den = dp - sign * dm;
  if (std::abs(den) <= 1e-300 || std::abs(den) < 1e-13 * (std::abs(dp) + std::abs(dm))) {
    throw Error(ErrorCode::DegenerateRegime, "b denominator vanishes");
  }
  p.a = 1.0;
  p.b = (dp + sign * dm) / den;
  return p;
}

PeriodicSolution pure_polarization_reduced(const FieldSet& field, const ObeMatrices& matrices,
                                           const SolverOptions& options) {
  if (common_pure_polarization(field) == 2) {
    throw Error(ErrorCode::ConfigurationMismatch, "waves do not share one pure polarization");
  }
  SolverOptions opt = options;
  opt.reduce_pure_polarization = true;
  return solve_periodic(field, matrices, opt);
}

double pure_polarization_low_intensity_rate(const FieldSet& field, const ObeMatrices& M, std::size_t j) {
  if (j >= field.size()) throw Error(ErrorCode::IndexOutOfRange, "wave index out of range");
  const int q = common_pure_polarization(field);
  if (q == 2) throw Error(ErrorCode::ConfigurationMismatch, "waves do not share one pure polarization");
  if (!distinct_frequencies(field)) {
    throw Error(ErrorCode::ConfigurationMismatch, "low-intensity form needs distinct frequencies");
  }
  const int P = M.layout.dim_p();
  const RealMatrix C = C_pp(M, q);
  double s = 0.0, sj = 0.0;
  for (std::size_t l = 0; l < field.size(); ++l) {
    const double sl = saturation_parameter(field.waves()[l].rabi, field.detuning(l), M.gamma);
    s += sl;
    if (l == j) sj = sl;
  }
  return rate_formula(M, sj * C, s * C, M.A_xixi.topLeftCorner(P, P), M.u_xi.head(P));
}

ContinuedFractionResult n2_continued_fraction(const FieldSet& field, const ObeMatrices& M, int depth_cap,
                                              double tol, int harmonics) {
  if (field.size() != 2 || field.stationary() || field.m(0) == field.m(1)) {
    throw Error(ErrorCode::ConfigurationMismatch, "continued fraction needs two waves of distinct frequencies");
  }
  if (depth_cap < 1 || tol <= 0.0 || harmonics < 1) throw Error(ErrorCode::Domain, "invalid continued-fraction options");
  const int D = M.layout.dim_xi();
  const HarmonicSystem H(field, M, D);
  ContinuedFractionResult out;
  out.n_s = std::abs(field.m(1) - field.m(0));
  const int ns = out.n_s;

  std::map<int, ComplexMatrix> w_up, w_down;  // W^(k ns, +ns), W^(k ns, -ns)
  auto W = [&](std::map<int, ComplexMatrix>& cache, int k, int m) -> const ComplexMatrix& {
    auto it = cache.find(k);
    if (it != cache.end()) return it->second;
    try {
      return cache.emplace(k, H.W(k * ns, m)).first->second;
    } catch (const Error& e) {
      throw Error(ErrorCode::SingularContinuedFraction, e.what());
    }
  };
  const ComplexMatrix I = ComplexMatrix::Identity(D, D);

  // G_k maps x^((k-1) ns) onto x^(k ns); tail G_{d+1} = 0.
  auto evaluate = [&](int depth) {
    std::vector<ComplexMatrix> G(static_cast<std::size_t>(depth) + 2, ComplexMatrix::Zero(D, D));
    for (int k = depth; k >= 1; --k) {
      const ComplexMatrix den = I + W(w_up, k, ns) * G[static_cast<std::size_t>(k + 1)];
      Eigen::PartialPivLU<ComplexMatrix> lu(den);
      if (!(lu.rcond() > kRcondFloor)) {
        throw Error(ErrorCode::SingularContinuedFraction, "continued-fraction denominator is singular");
      }
      G[static_cast<std::size_t>(k)] = -lu.solve(W(w_down, k, -ns));
    }
    return G;
  };

  std::vector<ComplexMatrix> G;
  ComplexMatrix prev;
  int depth = std::max(8, harmonics + 1);
  for (;;) {
    G = evaluate(depth);
    if (prev.size() != 0) {
      const double scale = std::max(1.0, G[1].cwiseAbs().maxCoeff());
      if ((G[1] - prev).cwiseAbs().maxCoeff() < tol * scale) break;
    }
    prev = G[1];
    if (depth >= depth_cap) throw Error(ErrorCode::DepthNotConverged, "continued fraction did not converge");
    depth = std::min(2 * depth, depth_cap);
  }
  out.depth_used = depth;
  out.Q_ns = G[1];
  ComplexMatrix acc = I;
  for (int k = 1; k <= harmonics; ++k) {
    acc = G[static_cast<std::size_t>(k)] * acc;
    out.higher_Q.push_back(acc);
  }

  // x^(0) + W^(0,ns) Q x^(0) + W^(0,-ns) conj(Q) x^(0) = d
  const ComplexMatrix lhs = I + H.W(0, ns) * out.Q_ns + H.W(0, -ns) * out.Q_ns.conjugate();
  Eigen::PartialPivLU<ComplexMatrix> lu(lhs);
  if (!(lu.rcond() > kRcondFloor)) throw Error(ErrorCode::SingularContinuedFraction, "x^(0) system is singular");
  out.x0 = lu.solve(H.d_xi());

  auto x_at = [&](int k) -> ComplexVector {
    if (k == 0) return out.x0;
    const ComplexMatrix& Q = out.higher_Q[static_cast<std::size_t>(std::abs(k) - 1)];
    return k > 0 ? ComplexVector(Q * out.x0) : ComplexVector(Q.conjugate() * out.x0);
  };
  for (int k = 0; k < harmonics; ++k) {
    ComplexVector r = x_at(k) + H.W(k * ns, ns) * x_at(k + 1) + H.W(k * ns, -ns) * x_at(k - 1);
    if (k == 0) r -= H.d_xi();
    out.residual = std::max(out.residual, r.cwiseAbs().maxCoeff());
  }

  std::map<int, ComplexMatrix> Q{{0, I}};
  Q[ns] = out.Q_ns;
  Q[-ns] = out.Q_ns.conjugate();
  const SaturationMatrices sat = saturation_matrices(field, M, Q, D, 0);
  const auto R = rates_from_saturation(M, sat, out.x0, 0);
  for (const auto& r : R) out.mean_rate.push_back(r[0].real());
  return out;
}

}  // namespace radforce
