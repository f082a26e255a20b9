#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "radforce/errors.hpp"
#include "radforce/state_layout.hpp"

using namespace radforce;

namespace {

HalfInt h(int twice) { return HalfInt::from_twice(twice); }

std::vector<AtomicTransition> transitions_up_to(int max_twice) {
  std::vector<AtomicTransition> out{AtomicTransition::two_level()};
  for (int tg = 0; tg <= max_twice; ++tg) {
    for (int dJ = -1; dJ <= 1; ++dJ) {
      const int te = tg + 2 * dJ;
      if (te < 0 || te > max_twice || (tg == 0 && te == 0)) continue;
      out.push_back(AtomicTransition{h(tg), h(te)});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("layout dimensions") {
  const StateLayout two(AtomicTransition::two_level());
  CHECK(two.dim_x() == 3);
  CHECK(two.dim_o() == 2);
  CHECK(two.dim_pe() == 1);
  CHECK(two.dim_pg() == 0);

  const StateLayout l(AtomicTransition{h(1), h(3)});
  CHECK(l.dim_x() == 35);
  CHECK(l.dim_o() == 16);
  CHECK(l.dim_p() == 5);
  CHECK(l.dim_Z() == 14);

  CHECK(StateLayout(AtomicTransition{h(2), h(2)}).N_J() == 6);

  for (const auto& t : transitions_up_to(8)) {
    const StateLayout L(t);
    const int te = t.Je.twice(), tg = t.Jg.twice();
    const int n = te + tg + 2;
    CHECK(L.dim_x() == n * n - 1);
    CHECK(L.dim_o() == 2 * (tg + 1) * (te + 1));
    CHECK(L.dim_pe() == te + 1);
    CHECK(L.dim_pg() == tg);
    CHECK(L.dim_Ze() == te * (te + 1) / 2 * 2);
    CHECK(L.dim_Zg() == tg * (tg + 1) / 2 * 2);
    CHECK(L.N_J() == n);
  }
}

TEST_CASE("invalid transitions are rejected") {
  CHECK_THROWS_AS(StateLayout(AtomicTransition{h(0), h(4)}), Error);
  CHECK_THROWS_AS(StateLayout(AtomicTransition{h(1), h(2)}), Error);
  CHECK_THROWS_AS(StateLayout(AtomicTransition{h(2), h(2), -1.0}), Error);
  CHECK_THROWS_AS(StateLayout(AtomicTransition{h(2), h(2), 1.0, true}), Error);
}

TEST_CASE("index maps are a bijection onto [0, dim_x)") {
  for (const auto& t : transitions_up_to(8)) {
    const StateLayout L(t);
    const int te = t.Je.twice(), tg = t.Jg.twice();
    std::set<int> seen;
    int count = 0;
    auto add = [&](int idx) {
      REQUIRE(idx >= 0);
      REQUIRE(idx < L.dim_x());
      seen.insert(idx);
      seen.insert(idx + 1);
      count += 2;
    };
    for (int dm = -(te + tg) / 2; dm <= (te + tg) / 2; ++dm) {
      for (int m = -tg; m <= tg; m += 2) {
        if (std::abs(m + 2 * dm) > te) {
          CHECK(L.optical_index(dm, m) == -1);
          continue;
        }
        add(L.optical_index(dm, m));
      }
    }
    for (int m = -te; m <= te; m += 2) {
      seen.insert(L.population_index(Manifold::Excited, m));
      ++count;
    }
    CHECK(L.population_index(Manifold::Ground, -tg) == -1);
    for (int m = -tg + 2; m <= tg; m += 2) {
      seen.insert(L.population_index(Manifold::Ground, m));
      ++count;
    }
    for (Manifold k : {Manifold::Excited, Manifold::Ground}) {
      const int tk = k == Manifold::Excited ? te : tg;
      for (int dm = 1; dm <= tk; ++dm) {
        for (int m = -tk; m + 2 * dm <= tk; m += 2) add(L.zeeman_index(k, dm, m));
      }
    }
    CHECK(count == L.dim_x());
    CHECK(static_cast<int>(seen.size()) == L.dim_x());
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == L.dim_x() - 1);
  }
}

TEST_CASE("pack and unpack round trip") {
  std::mt19937_64 rng(2024);
  for (const auto& t : transitions_up_to(6)) {
    const StateLayout L(t);
    double worst_rho = 0.0, worst_x = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const ComplexMatrix rho = oracle::random_density_matrix(L.N_J(), rng);
      const RealVector x = pack(rho, L);
      const ComplexMatrix back = unpack(x, L);
      worst_rho = std::max(worst_rho, (back - rho).cwiseAbs().maxCoeff());
      worst_x = std::max(worst_x, (pack(back, L) - x).cwiseAbs().maxCoeff());
    }
    CHECK(worst_rho < 1e-14);
    CHECK(worst_x < 1e-14);
  }
}

TEST_CASE("pack of simple states") {
  for (const auto& t : transitions_up_to(6)) {
    const StateLayout L(t);
    const int n = L.N_J();
    const ComplexMatrix mixed = ComplexMatrix::Identity(n, n) / static_cast<double>(n);
    CHECK(pack(mixed, L).cwiseAbs().maxCoeff() < 1e-15);
    const ComplexMatrix back = unpack(RealVector::Zero(L.dim_x()), L);
    CHECK((back - mixed).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(back.trace() - 1.0) < 1e-15);
  }

  const StateLayout L(AtomicTransition{h(1), h(1)});
  ComplexMatrix rho = ComplexMatrix::Zero(4, 4);
  const int r = L.level_index(Manifold::Ground, -1);
  rho(r, r) = 1.0;
  const RealVector x = pack(rho, L);
  CHECK(x(L.population_index(Manifold::Ground, 1)) == doctest::Approx(-0.25));
  CHECK(x(L.population_index(Manifold::Excited, -1)) == doctest::Approx(-0.25));
  CHECK(x(L.population_index(Manifold::Excited, 1)) == doctest::Approx(-0.25));
  CHECK(x.head(L.dim_o()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(x.tail(L.dim_Z()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pack validates its input") {
  const StateLayout L(AtomicTransition{h(2), h(4)});
  std::mt19937_64 rng(1);
  ComplexMatrix rho = oracle::random_density_matrix(L.N_J(), rng);
  ComplexMatrix bad = rho;
  bad(0, 1) += 0.1;
  CHECK_THROWS_AS(pack(bad, L), Error);
  CHECK_THROWS_AS(pack(rho * 2.0, L), Error);
  CHECK_THROWS_AS(pack(ComplexMatrix::Identity(3, 3) / 3.0, L), Error);
  CHECK_THROWS_AS(unpack(RealVector::Zero(4), L), Error);
}

TEST_CASE("linear pack/unpack are consistent with the affine maps") {
  std::mt19937_64 rng(9);
  const StateLayout L(AtomicTransition{h(3), h(3)});
  const ComplexMatrix a = oracle::random_density_matrix(L.N_J(), rng);
  const ComplexMatrix b = oracle::random_density_matrix(L.N_J(), rng);
  const RealVector dx = pack(a, L) - pack(b, L);
  CHECK((pack_linear(a - b, L) - dx).cwiseAbs().maxCoeff() < 1e-14);
  const ComplexMatrix dr = unpack_linear(dx.cast<cplx>(), L);
  CHECK((dr - (a - b)).cwiseAbs().maxCoeff() < 1e-14);
}
