#include "radforce/transition.hpp"

#include <cstdlib>

#include "radforce/errors.hpp"

namespace radforce {

void AtomicTransition::validate() const {
  if (Jg.twice() < 0 || Je.twice() < 0) {
    throw Error(ErrorCode::Domain, "angular momenta must be non-negative");
  }
  if ((Je.twice() - Jg.twice()) % 2 != 0 || std::abs(delta_J()) > 1) {
    throw Error(ErrorCode::Domain, "Je - Jg must be 0 or +-1");
  }
  if (!(gamma > 0.0)) throw Error(ErrorCode::Domain, "gamma must be positive");
  if (two_level_override && (Jg.twice() != 0 || Je.twice() != 0)) {
    throw Error(ErrorCode::Domain, "two-level override requires Jg = Je = 0");
  }
  if (!two_level_override && Jg.twice() == 0 && Je.twice() == 0) {
    throw Error(ErrorCode::Domain, "0-0 transition is forbidden without the two-level override");
  }
}

double cg_transition(const AtomicTransition& transition, HalfInt m, int q) {
  if (q < -1 || q > 1) throw Error(ErrorCode::Domain, "q must be -1, 0 or +1");
  if (transition.two_level_override && transition.Jg.twice() == 0 &&
      transition.Je.twice() == 0) {
    return (m.twice() == 0 && q == 0) ? 1.0 : 0.0;
  }
  const HalfInt one = HalfInt::from_int(1);
  const HalfInt hq = HalfInt::from_int(q);
  return clebsch_gordan(transition.Jg, m, one, hq, transition.Je, m + hq);
}

}  // namespace radforce
