#include "radforce/angular.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <boost/multiprecision/cpp_int.hpp>

#include "radforce/errors.hpp"

namespace radforce {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

cpp_int factorial(int n) {
  cpp_int r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// All arguments are doubled values; the combinations used below are even.
int half(int twice) { return twice / 2; }

}  // namespace

HalfInt HalfInt::parse(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      const int num = std::stoi(text.substr(0, slash));
      const int den = std::stoi(text.substr(slash + 1));
      if (den == 1) return from_int(num);
      if (den == 2) return from_twice(num);
    } else {
      const double v = std::stod(text);
      const double twice = 2.0 * v;
      if (std::abs(twice - std::round(twice)) < 1e-12) {
        return from_twice(static_cast<int>(std::lround(twice)));
      }
    }
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::Parse, "not an integer or half-integer: '" + text + "'");
}

std::string HalfInt::str() const {
  if (is_integer()) return std::to_string(twice_ / 2);
  return std::to_string(twice_) + "/2";
}

double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M) {
  const int tj1 = j1.twice(), tm1 = m1.twice(), tj2 = j2.twice(), tm2 = m2.twice();
  const int tJ = J.twice(), tM = M.twice();
  if (tj1 < 0 || tj2 < 0 || tJ < 0) {
    throw Error(ErrorCode::Domain, "negative angular momentum in clebsch_gordan");
  }
  if ((tj1 - tm1) % 2 != 0 || (tj2 - tm2) % 2 != 0 || (tJ - tM) % 2 != 0) {
    throw Error(ErrorCode::Domain, "projection parity does not match its angular momentum");
  }
  if (tM != tm1 + tm2) return 0.0;
  if (std::abs(tm1) > tj1 || std::abs(tm2) > tj2 || std::abs(tM) > tJ) return 0.0;
  if (tJ > tj1 + tj2 || tJ < std::abs(tj1 - tj2)) return 0.0;
  if ((tj1 + tj2 + tJ) % 2 != 0) return 0.0;

  const int a = half(tj1 + tj2 - tJ);
  const int b = half(tj1 - tm1);
  const int c = half(tj2 + tm2);
  const int d = half(tJ - tj2 + tm1);
  const int e = half(tJ - tj1 - tm2);

  const int k_min = std::max({0, -d, -e});
  const int k_max = std::min({a, b, c});

  cpp_rational sum = 0;
  for (int k = k_min; k <= k_max; ++k) {
    cpp_int den = factorial(k) * factorial(a - k) * factorial(b - k) * factorial(c - k) *
                  factorial(d + k) * factorial(e + k);
    cpp_rational term(cpp_int(1), den);
    if (k % 2 == 0) {
      sum += term;
    } else {
      sum -= term;
    }
  }
  if (sum == 0) return 0.0;

  cpp_rational pref(cpp_int(tJ + 1) * factorial(half(tJ + tj1 - tj2)) *
                        factorial(half(tJ - tj1 + tj2)) * factorial(a),
                    factorial(half(tj1 + tj2 + tJ) + 1));
  pref *= factorial(half(tJ + tM)) * factorial(half(tJ - tM)) * factorial(half(tj1 - tm1)) *
          factorial(half(tj1 + tm1)) * factorial(half(tj2 - tm2)) * factorial(half(tj2 + tm2));

  const cpp_rational squared = pref * sum * sum;
  const double magnitude = std::sqrt(squared.convert_to<double>());
  return sum > 0 ? magnitude : -magnitude;
}

double jacobi_polynomial(int n, int a, int b, double x) {
  if (n < 0) return 0.0;
  double p_prev = 1.0;
  if (n == 0) return p_prev;
  double p = (a + 1) + 0.5 * (a + b + 2) * (x - 1.0);
  for (int k = 2; k <= n; ++k) {
    const double s = 2.0 * k + a + b;
    const double c0 = 2.0 * k * (k + a + b) * (s - 2.0);
    const double c1 = (s - 1.0) * (s * (s - 2.0) * x + static_cast<double>(a * a - b * b));
    const double c2 = 2.0 * (k + a - 1) * (k + b - 1) * s;
    const double next = (c1 * p - c2 * p_prev) / c0;
    p_prev = p;
    p = next;
  }
  return p;
}

double wigner_small_d(HalfInt J, HalfInt m, HalfInt mp, double beta) {
  if (!valid_projection(J, m) || !valid_projection(J, mp)) {
    throw Error(ErrorCode::Domain, "invalid projection in wigner_small_d");
  }
  // Map onto mp >= |m| where the Jacobi parameters are non-negative.
  int tm = m.twice(), tmp = mp.twice();
  double sign = 1.0;
  auto parity = [](int twice_diff) { return (std::abs(twice_diff / 2) % 2 == 0) ? 1.0 : -1.0; };
  if (tmp >= std::abs(tm)) {
  } else if (tm >= std::abs(tmp)) {
    sign = parity(tm - tmp);
    std::swap(tm, tmp);
  } else if (-tmp >= std::abs(tm)) {
    sign = parity(tm - tmp);
    tm = -tm;
    tmp = -tmp;
  } else {
    const int new_m = -tmp, new_mp = -tm;
    tm = new_m;
    tmp = new_mp;
  }

  const int tJ = J.twice();
  const int a = half(tmp - tm);
  const int b = half(tmp + tm);
  const int n = half(tJ - tmp);

  // sqrt[(J+mp)!(J-mp)! / ((J+m)!(J-m)!)]
  double ratio = 1.0;
  {
    const int p1 = half(tJ + tmp), p2 = half(tJ - tmp);
    const int q1 = half(tJ + tm), q2 = half(tJ - tm);
    for (int i = q1 + 1; i <= p1; ++i) ratio *= i;
    for (int i = p1 + 1; i <= q1; ++i) ratio /= i;
    for (int i = q2 + 1; i <= p2; ++i) ratio *= i;
    for (int i = p2 + 1; i <= q2; ++i) ratio /= i;
  }
  const double s = std::sin(0.5 * beta), c = std::cos(0.5 * beta);
  const double bfac = std::pow(s, a) * std::pow(c, b);
  return sign * std::sqrt(ratio) * bfac * jacobi_polynomial(n, a, b, std::cos(beta));
}

RealMatrix wigner_small_d_matrix(HalfInt J, double beta) {
  const int dim = J.twice() + 1;
  RealMatrix d(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int k = 0; k < dim; ++k) {
      d(i, k) = wigner_small_d(J, HalfInt::from_twice(-J.twice() + 2 * i),
                               HalfInt::from_twice(-J.twice() + 2 * k), beta);
    }
  }
  return d;
}

cplx wigner_D(HalfInt J, HalfInt m, HalfInt mp, double alpha, double beta, double gamma) {
  const double phase = -(m.value() * alpha + mp.value() * gamma);
  return std::polar(1.0, phase) * wigner_small_d(J, m, mp, beta);
}

ComplexMatrix wigner_D_matrix(HalfInt J, double alpha, double beta, double gamma) {
  const int dim = J.twice() + 1;
  const RealMatrix d = wigner_small_d_matrix(J, beta);
  ComplexMatrix D(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const double m = 0.5 * (-J.twice() + 2 * i);
    for (int k = 0; k < dim; ++k) {
      const double mp = 0.5 * (-J.twice() + 2 * k);
      D(i, k) = std::polar(1.0, -(m * alpha + mp * gamma)) * d(i, k);
    }
  }
  return D;
}

}  // namespace radforce
