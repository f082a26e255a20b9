#pragma once

#include <compare>
#include <string>

#include "radforce/types.hpp"

namespace radforce {

/// Angular momentum or projection stored as twice its value, so 3/2 is
/// represented exactly as 3.
class HalfInt {
 public:
  constexpr HalfInt() = default;

  static constexpr HalfInt from_twice(int twice) { return HalfInt(twice); }
  static constexpr HalfInt from_int(int value) { return HalfInt(2 * value); }

  constexpr int twice() const noexcept { return twice_; }
  constexpr double value() const noexcept { return 0.5 * twice_; }
  constexpr bool is_integer() const noexcept { return twice_ % 2 == 0; }

  constexpr HalfInt operator-() const noexcept { return HalfInt(-twice_); }
  constexpr HalfInt operator+(HalfInt o) const noexcept { return HalfInt(twice_ + o.twice_); }
  constexpr HalfInt operator-(HalfInt o) const noexcept { return HalfInt(twice_ - o.twice_); }
  constexpr HalfInt& operator+=(HalfInt o) noexcept {
    twice_ += o.twice_;
    return *this;
  }

  constexpr auto operator<=>(const HalfInt&) const = default;

  /// Parses "3/2", "1", "0.5".
  static HalfInt parse(const std::string& text);
  std::string str() const;

 private:
  constexpr explicit HalfInt(int twice) : twice_(twice) {}
  int twice_ = 0;
};

/// True when m is a legal projection of j (|m| <= j, j - m integer).
constexpr bool valid_projection(HalfInt j, HalfInt m) noexcept {
  return j.twice() >= 0 && m.twice() <= j.twice() && m.twice() >= -j.twice() &&
         (j.twice() - m.twice()) % 2 == 0;
}

/// <j1 m1; j2 m2 | J M> in the Condon-Shortley convention.
///
/// Selection-rule violations (M != m1 + m2, triangle rule, |m| > j) return 0.
/// Mixed integer/half-integer parity between a magnitude and its projection
/// throws ErrorCode::Domain. The Racah sum is evaluated in exact rational
/// arithmetic and converted to double once.
double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M);

/// Wigner small-d element d^{(J)}_{m,mp}(beta) for the rotation e^{-i beta J_y}.
double wigner_small_d(HalfInt J, HalfInt m, HalfInt mp, double beta);

/// Full (2J+1)x(2J+1) small-d matrix, rows/cols ordered m = -J..J.
RealMatrix wigner_small_d_matrix(HalfInt J, double beta);

/// D^{(J)}_{m,mp}(alpha, beta, gamma) = exp(-i(m alpha + mp gamma)) d^{(J)}_{m,mp}(beta).
cplx wigner_D(HalfInt J, HalfInt m, HalfInt mp, double alpha, double beta, double gamma);

/// Full unitary D^{(J)} matrix, rows/cols ordered m = -J..J.
ComplexMatrix wigner_D_matrix(HalfInt J, double alpha, double beta, double gamma);

/// Jacobi polynomial P_n^{(a,b)}(x) by the three-term recurrence in n.
double jacobi_polynomial(int n, int a, int b, double x);

}  // namespace radforce
