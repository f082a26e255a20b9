#include <random>

#include "doctest.h"
#include "fields.hpp"
#include "oracles.hpp"
#include "radforce/errors.hpp"
#include "radforce/floquet_solver.hpp"

using namespace radforce;
using testfields::wave;

namespace {

HalfInt h(int twice) { return HalfInt::from_twice(twice); }

double rel_err(cplx a, cplx b, double floor = 1e-12) { return std::abs(a - b) / std::max(std::abs(b), floor); }

}  // namespace

TEST_CASE("two-level single wave gives the textbook rate") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const StateLayout L(AtomicTransition::two_level());
  for (int trial = 0; trial < 20; ++trial) {
    const cplx rabi = std::polar(5.0 * std::abs(U(rng)), M_PI * U(rng));
    const double det = 20.0 * U(rng);
    const FieldSet field({wave(rabi, det, polarization::pi())});
    const ObeMatrices M = build_obe_matrices(L, field);
    const PeriodicSolution sol = solve_periodic(field, M);
    const double s = saturation_parameter(rabi, det, 1.0);
    CHECK(sol.mean_rate(0) == doctest::Approx(0.5 * s / (1.0 + s)).epsilon(1e-10));
    CHECK(std::abs(sol.rate(0, 0).imag()) < 1e-14);
  }
}

TEST_CASE("solver harmonics match the full Fourier system") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 8; ++trial) {
    const AtomicTransition t = testfields::random_transition(rng, 2, false);
    const StateLayout L(t);
    const FieldSet field = testfields::random_commensurate_field(rng, 1 + trial % 3, 2.0, 5.0);
    const ObeMatrices M = build_obe_matrices(L, field);
    SolverOptions opt;
    opt.reduce_pure_polarization = false;
    const PeriodicSolution sol = solve_periodic(field, M, opt);
    const int N = field.stationary() ? 0 : std::min(sol.n_max, 12);
    const auto full = oracle::full_fourier_solution(field, M, N);
    const int o = L.dim_o();
    double worst = 0.0, scale = 0.0;
    for (int n = -std::min(N, 3); n <= std::min(N, 3); ++n) {
      const ComplexVector& ref = full[static_cast<std::size_t>(n + N)];
      worst = std::max(worst, (ref.tail(L.dim_xi()) - sol.xi(n)).cwiseAbs().maxCoeff());
      worst = std::max(worst, (ref.head(o) - sol.o(n)).cwiseAbs().maxCoeff());
      scale = std::max(scale, ref.cwiseAbs().maxCoeff());
    }
    INFO("trial ", trial, " N ", N, " n_max ", sol.n_max);
    CHECK(worst < 1e-8 * std::max(scale, 1e-3));
  }
}

TEST_CASE("conjugation symmetries of the harmonic blocks") {
  std::mt19937_64 rng(8);
  const StateLayout L(AtomicTransition{h(1), h(3)});
  const FieldSet field = testfields::random_commensurate_field(rng, 3, 1.5, 4.0);
  const ObeMatrices M = build_obe_matrices(L, field);
  const HarmonicBlocks H = build_harmonics(field, M, 5);
  for (int n = -3; n <= 3; ++n) {
    CHECK(std::abs(H.tau_plus.at(-n) - std::conj(H.tau_minus.at(n))) < 1e-15);
    CHECK((H.A_n.at(-n) - H.A_n.at(n).conjugate()).cwiseAbs().maxCoeff() < 1e-15);
    for (int m : H.shifts) {
      if (H.B.count({-n, -m}) == 0) continue;
      CHECK((H.B.at({-n, -m}) - H.B.at({n, m}).conjugate()).cwiseAbs().maxCoeff() < 1e-14);
      if (m != 0) CHECK((H.W.at({-n, -m}) - H.W.at({n, m}).conjugate()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  CHECK(H.W.count({0, 0}) == 0);
}

TEST_CASE("solution symmetries and rate forms agree") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    const StateLayout L(testfields::random_transition(rng, 3, false));
    const FieldSet field = testfields::random_commensurate_field(rng, 2 + trial % 2, 2.5, 6.0);
    const ObeMatrices M = build_obe_matrices(L, field);
    SolverOptions opt;
    const PeriodicSolution sol = solve_periodic(field, M, opt);
    for (int n = 1; n <= sol.n_max; ++n) {
      CHECK((sol.xi(-n) - sol.xi(n).conjugate()).cwiseAbs().maxCoeff() < 1e-12);
    }
    for (std::size_t j = 0; j < field.size(); ++j) {
      for (int n = 1; n <= 3; ++n) CHECK(std::abs(sol.rate(j, -n) - std::conj(sol.rate(j, n))) < 1e-14);
      CHECK(std::abs(sol.rate(j, 0).imag()) < 1e-12);
    }
    CHECK(sol.residual < opt.tol);

    const auto Q = q_matrices(sol, opt);
    const ComplexVector x0 = sol.xi(0).head(sol.sector);
    for (const auto& [n, q] : Q) {
      CHECK((q * x0 - sol.xi(n).head(sol.sector)).norm() <= 1e-12 * std::max(1.0, sol.xi(n).norm()) + 1e-13);
    }
    const SaturationMatrices sat = saturation_matrices(field, M, Q, sol.sector, 3);
    const auto R = rates_from_saturation(M, sat, x0, 3);
    for (std::size_t j = 0; j < field.size(); ++j) {
      for (int n = -3; n <= 3; ++n) {
        CHECK(std::abs(R[j][static_cast<std::size_t>(n + 3)] - sol.rate(j, n)) < 1e-9);
      }
      CHECK((sat.s[j].imag()).cwiseAbs().maxCoeff() < 1e-14);
    }
    const ComplexVector x0s = x0_from_saturation(M, sat.s_total, sol.sector);
    CHECK((x0s - x0).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("reconstructed density matrix is physical") {
  std::mt19937_64 rng(99);
  const StateLayout L(AtomicTransition{h(2), h(4)});
  const FieldSet field = testfields::random_commensurate_field(rng, 2, 3.0, 5.0);
  const ObeMatrices M = build_obe_matrices(L, field);
  const PeriodicSolution sol = solve_periodic(field, M);
  const double T = field.period();
  for (int k = 0; k < 16; ++k) {
    const ComplexMatrix rho = unpack(state_at(sol, T * k / 16.0), L);
    CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("kappa weights do not change the physics") {
  std::mt19937_64 rng(3);
  const StateLayout L(AtomicTransition{h(1), h(3)});
  const FieldSet a = testfields::random_commensurate_field(rng, 3, 2.0, 5.0);
  const FieldSet b = with_kappa(a, {0.5, 0.3, 0.2});
  const PeriodicSolution sa = solve_periodic(a, build_obe_matrices(L, a));
  const PeriodicSolution sb = solve_periodic(b, build_obe_matrices(L, b));
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(sa.mean_rate(j) - sb.mean_rate(j)) < 1e-8);
  // R_j(t) is an observable, so the time series agree too
  for (double t : {0.1, 0.77, 2.3}) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double ra = instantaneous_rate(a, L, state_at(sa, t), t, j);
      const double rb = instantaneous_rate(b, L, state_at(sb, t), t, j);
      CHECK(std::abs(ra - rb) < 1e-8);
    }
  }
}

TEST_CASE("stationary field has no harmonics") {
  const StateLayout L(AtomicTransition{h(2), h(4)});
  const FieldSet field({wave(1.0, 0.5, polarization::sigma_plus()), wave(cplx(0.3, 0.8), 0.5, polarization::pi())});
  CHECK(field.stationary());
  const PeriodicSolution sol = solve_periodic(field, build_obe_matrices(L, field));
  CHECK(sol.n_max == 0);
  CHECK(sol.rate(0, 1) == cplx(0.0));
}

TEST_CASE("population-sector reduction matches the full solve") {
  const StateLayout L(AtomicTransition{h(3), h(5)});
  const FieldSet field({wave(2.0, 3.0, polarization::pi()), wave(cplx(0, 1.5), -1.0, polarization::pi())});
  const ObeMatrices M = build_obe_matrices(L, field);
  SolverOptions full;
  full.reduce_pure_polarization = false;
  const PeriodicSolution a = solve_periodic(field, M);
  const PeriodicSolution b = solve_periodic(field, M, full);
  CHECK(a.sector == L.dim_p());
  CHECK(b.sector == L.dim_xi());
  for (std::size_t j = 0; j < 2; ++j)
    for (int n = -3; n <= 3; ++n) CHECK(std::abs(a.rate(j, n) - b.rate(j, n)) < 1e-10);
  for (int n = -3; n <= 3; ++n) CHECK(b.xi(n).tail(L.dim_Z()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("non-unique regimes are rejected") {
  const StateLayout L(AtomicTransition{h(2), h(0)});
  const FieldSet same({wave(1.0, 1.0, polarization::pi()), wave(1.0, -1.0, polarization::pi())});
  const ObeMatrices M = build_obe_matrices(L, same);
  try {
    solve_periodic(same, M);
    FAIL("expected SingularHarmonicMatrix");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularHarmonicMatrix);
  }
  const StateLayout L2(AtomicTransition{h(1), h(3)});
  const FieldSet dark({wave(0.0, 0.0, polarization::pi())});
  CHECK_THROWS_AS(solve_periodic(dark, build_obe_matrices(L2, dark)), Error);
}

TEST_CASE("Q matrix branches") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  ComplexVector x0(6), x1(6);
  for (int i = 0; i < 6; ++i) {
    x0(i) = cplx(g(rng), g(rng));
    x1(i) = cplx(g(rng), g(rng));
  }
  CHECK(q_matrix(x0, ComplexVector::Zero(6)).cwiseAbs().maxCoeff() == 0.0);
  const cplx c = 2.0 * std::polar(1.0, M_PI / 3);
  const ComplexMatrix Qs = q_matrix(x0, c * x0);
  CHECK((Qs - c * ComplexMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-14);
  const ComplexMatrix Qh = q_matrix(x0, x1);
  CHECK((Qh * x0 - x1).norm() < 1e-12 * x1.norm());
  // scaled unitary
  const ComplexMatrix U = Qh * (x0.norm() / x1.norm());
  CHECK((U.adjoint() * U - ComplexMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(q_matrix(ComplexVector::Zero(6), x1), Error);
}

TEST_CASE("absorption vector") {
  const StateLayout two(AtomicTransition::two_level());
  ComplexVector xo(2);
  xo << cplx(0.3, 0.1), cplx(-0.2, 0.4);
  const CVec3 chi = absorption_vector(xo, two);
  CHECK(std::abs(chi(1) + (xo(0) - kI * xo(1))) < 1e-15);
  CHECK(chi(0) == cplx(0.0));
  CHECK(absorption_vector(ComplexVector::Zero(2), two).norm() == 0.0);
}

TEST_CASE("counterpropagating identical waves give no net force at rest") {
  const StateLayout L(AtomicTransition{h(1), h(3)});
  const FieldSet field({wave(1.3, -2.0, polarization::sigma_plus(), Vec3(0, 0, 1)),
                        wave(1.3, -2.0, polarization::sigma_plus(), Vec3(0, 0, -1))});
  const PeriodicSolution sol = solve_periodic(field, build_obe_matrices(L, field));
  CHECK(std::abs(sol.total_force.z()) < 1e-10);
}

TEST_CASE("single sigma+ wave on a stretched transition saturates like two levels") {
  for (int tg : {1, 2, 3}) {
    const StateLayout L(AtomicTransition{h(tg), h(tg + 2)});
    for (double det : {0.0, -1.5}) {
      const cplx rabi(1.7, -0.4);
      const FieldSet field({wave(rabi, det, polarization::sigma_plus())});
      const PeriodicSolution sol = solve_periodic(field, build_obe_matrices(L, field));
      const double s = saturation_parameter(rabi, det, 1.0);
      CHECK(sol.mean_rate(0) == doctest::Approx(0.5 * s / (1.0 + s)).epsilon(1e-9));
    }
  }
}
