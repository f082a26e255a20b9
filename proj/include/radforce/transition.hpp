#pragma once

#include "radforce/angular.hpp"

namespace radforce {

/// Ground/excited angular momenta of a dipole transition. Rates and
/// frequencies elsewhere are expressed in the same unit as gamma.
struct AtomicTransition {
  HalfInt Jg;
  HalfInt Je;
  double gamma = 1.0;
  /// Opens the forbidden 0-0 transition (C_0^{(0)} := 1) to recover the
  /// two-level atom.
  bool two_level_override = false;

  static AtomicTransition two_level(double gamma = 1.0) {
    return {HalfInt::from_int(0), HalfInt::from_int(0), gamma, true};
  }

  /// Je - Jg as an integer.
  int delta_J() const noexcept { return (Je.twice() - Jg.twice()) / 2; }

  /// Throws ErrorCode::Domain when Delta J is not in {0, +-1}, gamma <= 0 or
  /// the override is requested for anything but 0-0.
  void validate() const;
};

/// C_m^{(q)} = <Jg, m; 1, q | Je, m+q>, honoring the two-level override.
double cg_transition(const AtomicTransition& transition, HalfInt m, int q);

}  // namespace radforce
