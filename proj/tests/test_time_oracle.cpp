#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fields.hpp"
#include "radforce/errors.hpp"
#include "radforce/floquet_solver.hpp"
#include "radforce/time_oracle.hpp"

using namespace radforce;
using testfields::wave;

namespace {

HalfInt h(int twice) { return HalfInt::from_twice(twice); }

double excited_population(const RealVector& x, const StateLayout& L) {
  const DensityMatrix rho = unpack(x, L);
  double p = 0.0;
  for (int i = 0; i < L.n_excited(); ++i) p += rho(i, i).real();
  return p;
}

}  // namespace

TEST_CASE("free decay of the excited two-level atom") {
  const StateLayout L(AtomicTransition::two_level());
  const FieldSet field({wave(0.0, 0.0, polarization::pi())});
  const ObeMatrices M = build_obe_matrices(L, field);
  DensityMatrix rho = DensityMatrix::Zero(2, 2);
  rho(L.level_index(Manifold::Excited, 0), L.level_index(Manifold::Excited, 0)) = 1.0;
  const Trajectory tr = integrate(field, M, pack(rho, L), 0.0, 8.0, 80);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    CHECK(std::abs(excited_population(tr.states[k], L) - std::exp(-tr.times[k])) < 1e-8);
  }
}

TEST_CASE("driven two-level atom relaxes to the saturated population") {
  const StateLayout L(AtomicTransition::two_level());
  for (double det : {0.0, 1.3}) {
    const cplx rabi = std::polar(2.0, 0.4);
    const FieldSet field({wave(rabi, det, polarization::pi())});
    const ObeMatrices M = build_obe_matrices(L, field);
    const Trajectory tr = integrate(field, M, RealVector::Zero(L.dim_x()), 0.0, 40.0, 400);
    const double s = saturation_parameter(rabi, det, 1.0);
    const double target = 0.5 * s / (1.0 + s);
    CHECK(std::abs(excited_population(tr.states.back(), L) - target) < 1e-9);
    // transient bounded by exp(-t/2)
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      const double dev = std::abs(excited_population(tr.states[k], L) - target);
      CHECK(dev <= 2.0 * std::exp(-0.5 * tr.times[k]) + 1e-9);
    }
    const auto R = rate_timeseries(tr, field, L);
    CHECK(std::abs(R[0].back() - target) < 1e-9);
  }
}

TEST_CASE("trace and hermiticity are preserved") {
  std::mt19937_64 rng(3);
  const StateLayout L(AtomicTransition{h(2), h(4)});
  const FieldSet field = testfields::random_commensurate_field(rng, 3, 2.0, 4.0);
  const ObeMatrices M = build_obe_matrices(L, field);
  const Trajectory tr = integrate(field, M, RealVector::Zero(L.dim_x()), 0.0, 50.0, 200);
  for (const RealVector& x : tr.states) {
    const DensityMatrix rho = unpack(x, L);
    CHECK(std::abs(rho.trace() - 1.0) < 1e-9);
    CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<ComplexMatrix>(rho).eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("the affine flow is linear in the initial state") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  const StateLayout L(AtomicTransition{h(1), h(3)});
  const FieldSet field = testfields::random_commensurate_field(rng, 2, 2.0, 3.0);
  const ObeMatrices M = build_obe_matrices(L, field);
  const RealVector zero = RealVector::Zero(L.dim_x());
  const RealVector base = integrate(field, M, zero, 0.0, {3.0}).states.back();
  for (int pair = 0; pair < 5; ++pair) {
    RealVector a(L.dim_x()), b(L.dim_x());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a(i) = 0.05 * g(rng);
      b(i) = 0.05 * g(rng);
    }
    const double alpha = g(rng), beta = g(rng);
    const RealVector xa = integrate(field, M, a, 0.0, {3.0}).states.back();
    const RealVector xb = integrate(field, M, b, 0.0, {3.0}).states.back();
    const RealVector xab = integrate(field, M, RealVector(alpha * a + beta * b), 0.0, {3.0}).states.back();
    const RealVector expect = alpha * (xa - base) + beta * (xb - base) + base;
    CHECK((xab - expect).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("right-hand side reproduces A(t)") {
  std::mt19937_64 rng(4);
  const StateLayout L(AtomicTransition{h(2), h(2)});
  const FieldSet field = testfields::random_commensurate_field(rng, 3, 2.0, 4.0);
  const ObeMatrices M = build_obe_matrices(L, field);
  const ObeSystem sys(field, M);
  for (double t : {0.0, 0.37, 2.1}) {
    CHECK((sys.A(t) - assemble_A_of_t(M, field, t)).cwiseAbs().maxCoeff() < 1e-13);
  }
  const ObeMatrices other = build_obe_matrices(L, field.deltabar() + 1.0);
  CHECK_THROWS_AS(ObeSystem(field, other), Error);
}

TEST_CASE("fourier extraction of simple signals") {
  const double T = 2.0, w = 2.0 * M_PI / T;
  const int K = 256;
  Trajectory c, s;
  for (int k = 0; k <= K; ++k) {
    const double t = 0.3 + T * k / K;
    c.times.push_back(t);
    c.states.push_back(RealVector::Constant(2, 1.5));
    s.times.push_back(t);
    RealVector v(2);
    v << std::cos(w * (t - 0.3)), 0.0;
    s.states.push_back(0.7 * v);
  }
  const auto hc = fourier_extract(c, w, 3);
  CHECK(std::abs(hc.at(0)(0) - 1.5) < 1e-15);
  for (int n : {-3, -1, 1, 2}) CHECK(hc.at(n).cwiseAbs().maxCoeff() < 1e-14);
  const auto hs = fourier_extract(s, w, 3);
  CHECK(std::abs(hs.at(1)(0) - 0.35) < 1e-14);
  CHECK(std::abs(hs.at(-1)(0) - 0.35) < 1e-14);
  CHECK(std::abs(hs.at(0)(0)) < 1e-14);
  CHECK(std::abs(hs.at(2)(0)) < 1e-14);

  Trajectory bad = c;
  bad.states.back()(0) += 1e-3;
  CHECK_THROWS_AS(fourier_extract(bad, w, 1), Error);
}

TEST_CASE("oracle harmonics agree with the harmonic solver") {
  std::mt19937_64 rng(17);
  struct Case {
    AtomicTransition t;
    int N;
  };
  std::vector<Case> cases{{AtomicTransition::two_level(), 2},
                          {AtomicTransition{h(1), h(3)}, 2},
                          {AtomicTransition{h(2), h(2)}, 3},
                          {AtomicTransition{h(2), h(4)}, 2},
                          {AtomicTransition{h(3), h(1)}, 2}};
  for (const Case& cs : cases) {
    const StateLayout L(cs.t);
    const FieldSet field = testfields::random_commensurate_field(rng, cs.N, 2.0, 4.0);
    const ObeMatrices M = build_obe_matrices(L, field);
    const PeriodicSolution sol = solve_periodic(field, M);
    const OracleHarmonics orc = oracle_harmonics(field, M, 3);
    const int nmax = field.stationary() ? 0 : 3;
    double worst = 0.0, scale = 1e-6;
    for (int n = -nmax; n <= nmax; ++n) {
      if (!sol.in_range(n)) continue;
      ComplexVector ref(L.dim_x());
      ref << sol.o(n), sol.xi(n);
      worst = std::max(worst, (orc.x.at(n) - ref).cwiseAbs().maxCoeff());
      scale = std::max(scale, ref.cwiseAbs().maxCoeff());
      for (std::size_t j = 0; j < field.size(); ++j) {
        CHECK(std::abs(orc.rate(j, n) - sol.rate(j, n)) < 1e-6 * std::max(std::abs(sol.rate(j, n)), 1e-3));
      }
    }
    INFO(cs.t.Jg.str(), " -> ", cs.t.Je.str(), " samples ", orc.samples);
    CHECK(worst < 1e-6 * scale);
  }
}

TEST_CASE("shooting and settling reach the same periodic state") {
  std::mt19937_64 rng(21);
  const StateLayout L(AtomicTransition{h(1), h(3)});
  const FieldSet field = testfields::random_commensurate_field(rng, 2, 2.0, 3.0);
  const ObeMatrices M = build_obe_matrices(L, field);
  const RealVector shot = periodic_initial_state(field, M);
  const FloquetSpectrum sp = monodromy(field, M);
  const RealVector settled = settle(field, M, RealVector::Zero(L.dim_x()), settling_time(sp, 1.0));
  CHECK((shot - settled).cwiseAbs().maxCoeff() < 1e-7);
  const Trajectory tr = integrate(field, M, shot, 0.0, {oracle_period(field, M)});
  CHECK((tr.states.back() - shot).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("reachable subspace is closed under the dynamics") {
  const StateLayout L(AtomicTransition{h(8), h(10)});
  const FieldSet field({wave(3.0, 2.0, polarization::pi()), wave(3.0, -2.0, polarization::pi(), Vec3(0, 0, -1))});
  const ObeMatrices M = build_obe_matrices(L, field);
  const std::vector<int> idx = reachable_indices(field, M);
  CHECK(static_cast<int>(idx.size()) < L.dim_x());
  // pi light keeps every Zeeman coherence at zero
  for (int i : idx) CHECK(i < L.offset_Ze());
  const RealMatrix A = assemble_A_of_t(M, field, 0.3);
  std::vector<char> in(static_cast<std::size_t>(L.dim_x()), 0);
  for (int i : idx) in[static_cast<std::size_t>(i)] = 1;
  for (int i = 0; i < L.dim_x(); ++i) {
    if (in[static_cast<std::size_t>(i)]) continue;
    for (int j : idx) CHECK(A(i, j) == 0.0);
  }
}

TEST_CASE("Floquet exponents") {
  SUBCASE("two-level exponents lie in [-gamma, -gamma/2]") {
    const StateLayout L(AtomicTransition::two_level());
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 4; ++trial) {
      const FieldSet field = testfields::random_commensurate_field(rng, 1 + trial % 2, 3.0, 4.0);
      const ObeMatrices M = build_obe_matrices(L, field);
      const FloquetSpectrum sp = monodromy(field, M);
      REQUIRE(sp.exponents.size() == 3);
      for (const cplx& e : sp.exponents) {
        CHECK(e.real() <= -0.5 + 1e-6);
        CHECK(e.real() >= -1.0 - 1e-6);
      }
    }
  }
  SUBCASE("dark states give a zero exponent") {
    const StateLayout L(AtomicTransition{h(4), h(2)});
    const FieldSet field({wave(2.0, 1.0, polarization::sigma_plus()),
                          wave(1.5, -1.0, polarization::sigma_plus(), Vec3(0, 0, -1))});
    const ObeMatrices M = build_obe_matrices(L, field);
    CHECK(std::abs(monodromy(field, M).lambda_max) < 1e-6);
  }
  SUBCASE("no exponent has a positive real part") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 4; ++trial) {
      const StateLayout L(testfields::random_transition(rng, 3));
      const FieldSet field = testfields::random_commensurate_field(rng, 2, 2.0, 3.0);
      const ObeMatrices M = build_obe_matrices(L, field);
      CHECK(monodromy(field, M).lambda_max <= 1e-8);
    }
  }
}

TEST_CASE("approach to the periodic regime follows the leading exponent") {
  const StateLayout L(AtomicTransition::two_level());
  const FieldSet field({wave(1.0, 0.5, polarization::pi()), wave(1.0, -0.5, polarization::pi())});
  const ObeMatrices M = build_obe_matrices(L, field);
  const FloquetSpectrum sp = monodromy(field, M);
  REQUIRE(sp.lambda_max < -0.01);
  const double T = oracle_period(field, M);
  std::vector<double> times;
  for (int k = 1; k <= 6; ++k) times.push_back(k * T);
  const Trajectory tr = integrate(field, M, RealVector::Zero(L.dim_x()), 0.0, times);
  const double expected = std::exp(sp.lambda_max * T);
  for (std::size_t k = 2; k + 1 < tr.states.size(); ++k) {
    const double d0 = (tr.states[k] - tr.states[k - 1]).norm();
    const double d1 = (tr.states[k + 1] - tr.states[k]).norm();
    if (d0 < 1e-7) break;
    CHECK(d1 / d0 <= 2.0 * expected);
    CHECK(d1 / d0 >= 0.5 * expected);
  }
}

TEST_CASE("bichromatic rates carry only even harmonics") {
  const StateLayout L(AtomicTransition{h(1), h(3)});
  const FieldSet field({wave(2.0, 1.5, polarization::pi()),
                        wave(std::polar(1.5, 0.3), -1.5, polarization::pi(), Vec3(0, 0, -1))});
  REQUIRE(field.m(0) - field.m(1) == 2);
  const ObeMatrices M = build_obe_matrices(L, field);
  const OracleHarmonics orc = oracle_harmonics(field, M, 4);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(std::abs(orc.rate(j, 1)) < 1e-9);
    CHECK(std::abs(orc.rate(j, 3)) < 1e-9);
    CHECK(std::abs(orc.rate(j, 2)) > 1e-4);
  }
}

TEST_CASE("zero coherences give zero rates") {
  const StateLayout L(AtomicTransition{h(1), h(1)});
  const FieldSet field({wave(1.0, 0.5, polarization::sigma_plus())});
  Trajectory tr;
  tr.times = {0.0, 1.0};
  RealVector x = RealVector::Zero(L.dim_x());
  x(L.offset_pe()) = 0.1;
  tr.states = {x, x};
  const auto R = rate_timeseries(tr, field, L);
  for (double r : R[0]) CHECK(r == 0.0);
}

TEST_CASE("trajectory dump and argument checks") {
  const StateLayout L(AtomicTransition::two_level());
  const FieldSet field({wave(1.0, 0.0, polarization::pi())});
  const ObeMatrices M = build_obe_matrices(L, field);
  const Trajectory tr = integrate(field, M, RealVector::Zero(3), 0.0, 1.0, 2);
  std::ostringstream os;
  write_trajectory(os, tr);
  const std::string text = os.str();
  CHECK(text.substr(0, text.find('\n')) == "0,0,0,0");
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK_THROWS_AS(integrate(field, M, RealVector::Zero(3), 1.0, 0.5, 4), Error);
  CHECK_THROWS_AS(integrate(field, M, RealVector::Zero(4), 0.0, 1.0, 4), Error);
  OdeOptions bad;
  bad.abs_tol = 0.0;
  CHECK_THROWS_AS(integrate(field, M, RealVector::Zero(3), 0.0, 1.0, 4, bad), Error);
}
