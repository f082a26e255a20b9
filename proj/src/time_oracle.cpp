#include "radforce/time_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <ostream>

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

#include "radforce/errors.hpp"
#include "radforce/floquet_solver.hpp"

namespace radforce {

namespace odeint = boost::numeric::odeint;

namespace {

using Stepper = odeint::runge_kutta_dopri5<RealVector, double, RealVector, double, odeint::vector_space_algebra>;

Eigen::SparseMatrix<double> sparse_of(const RealMatrix& m) {
  return m.sparseView(1.0, 1e-300);
}

void check_deltabar(const FieldSet& field, const ObeMatrices& matrices) {
  if (std::abs(field.deltabar() - matrices.deltabar) > 1e-12 * std::max(1.0, std::abs(field.deltabar()))) {
    throw Error(ErrorCode::ConfigurationMismatch, "matrices were built for a different mean detuning");
  }
}

// Matrix states are integrated column-stacked.
struct Rhs {
  const ObeSystem* sys;
  Eigen::Index cols;
  void operator()(const RealVector& x, RealVector& dx, double t) const {
    const Eigen::Index rows = x.size() / cols;
    RealMatrix d(rows, cols);
    sys->apply(Eigen::Map<const RealMatrix>(x.data(), rows, cols), d, t);
    dx = Eigen::Map<const RealVector>(d.data(), d.size());
  }
};

// Controlled dopri5 from t0 to exactly t1.
void advance(const ObeSystem& sys, RealMatrix& X, double t0, double t1, const OdeOptions& opt) {
  if (t1 <= t0) return;
  auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, Stepper());
  const double span = t1 - t0;
  const double dt_min = opt.min_step_fraction * std::max(span, 1.0);
  double t = t0;
  double dt = std::min(span, 0.01);
  Rhs rhs{&sys, X.cols()};
  RealVector v = Eigen::Map<const RealVector>(X.data(), X.size());
  while (t < t1) {
    if (t + dt > t1) dt = t1 - t;
    const odeint::controlled_step_result res = stepper.try_step(rhs, v, t, dt);
    if (res == odeint::fail && dt < dt_min) {
      throw Error(ErrorCode::StepSizeUnderflow, "adaptive step fell below the minimum");
    }
    if (res == odeint::success && t1 - t < dt_min * 1e-3) t = t1;
  }
  X = Eigen::Map<const RealMatrix>(v.data(), X.rows(), X.cols());
  if (!X.allFinite()) throw Error(ErrorCode::StepSizeUnderflow, "integration produced non-finite values");
}

Trajectory sample(const ObeSystem& sys, const RealVector& x0, double t0, const std::vector<double>& times,
                  const OdeOptions& opt) {
  Trajectory out;
  out.times = times;
  out.states.reserve(times.size());
  if (times.empty()) return out;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t0 || (k > 0 && times[k] <= times[k - 1])) {
      throw Error(ErrorCode::Domain, "sample times must be ascending and not before t0");
    }
  }
  const double span = times.back() - t0;
  const double dt_min = opt.min_step_fraction * std::max(span, 1.0);
  auto stepper = odeint::make_dense_output(opt.abs_tol, opt.rel_tol, Stepper());
  stepper.initialize(x0, t0, std::min(0.01, std::max(span, 1e-3)));
  Rhs rhs{&sys, 1};
  RealVector Xs(x0.size());
  try {
    for (double ts : times) {
      if (ts == t0) {
        out.states.push_back(x0);
        continue;
      }
      while (stepper.current_time() < ts) {
        stepper.do_step(rhs);
        if (stepper.current_time_step() < dt_min) {
          throw Error(ErrorCode::StepSizeUnderflow, "adaptive step fell below the minimum");
        }
      }
      stepper.calc_state(ts, Xs);
      if (!Xs.allFinite()) throw Error(ErrorCode::StepSizeUnderflow, "integration produced non-finite values");
      out.states.push_back(Xs);
    }
  } catch (const odeint::step_adjustment_error& e) {
    throw Error(ErrorCode::StepSizeUnderflow, e.what());
  }
  return out;
}

std::vector<double> uniform_times(double t0, double t1, int samples) {
  std::vector<double> t(static_cast<std::size_t>(samples) + 1);
  for (int k = 0; k <= samples; ++k) t[static_cast<std::size_t>(k)] = t0 + (t1 - t0) * k / samples;
  t.back() = t1;
  return t;
}

// Trapezoid on a closed periodic grid: endpoints share one weight.
std::vector<cplx> dft_closed(const std::vector<double>& values, const std::vector<double>& times, double omega,
                             int n_max) {
  const std::size_t K = values.size() - 1;
  std::vector<cplx> out(static_cast<std::size_t>(2 * n_max + 1), 0.0);
  for (int n = -n_max; n <= n_max; ++n) {
    cplx s = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
      const double w = (k == 0 || k == K) ? 0.5 : 1.0;
      s += w * values[k] * std::polar(1.0, -n * omega * (times[k] - times[0]));
    }
    out[static_cast<std::size_t>(n + n_max)] = s / static_cast<double>(K);
  }
  return out;
}

}  // namespace

ObeSystem::ObeSystem(const FieldSet& field, const ObeMatrices& matrices)
    : field_(&field), gamma_(matrices.gamma) {
  check_deltabar(field, matrices);
  A0_ = sparse_of(matrices.A0);
  for (int q = -1; q <= 1; ++q) {
    const auto s = static_cast<std::size_t>(q_slot(q));
    bool any = false;
    for (std::size_t j = 0; j < field.size(); ++j) any = any || field.rabi_component(j, q) != cplx(0.0);
    active_[s] = any;
    reC_[s] = sparse_of(matrices.Cq(q).real());
    imC_[s] = sparse_of(matrices.Cq(q).imag());
  }
  b_ = matrices.b;
}

ObeSystem ObeSystem::restricted(const std::vector<int>& idx) const {
  const auto r = static_cast<Eigen::Index>(idx.size());
  std::vector<int> pos(static_cast<std::size_t>(b_.size()), -1);
  for (Eigen::Index i = 0; i < r; ++i) pos[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = static_cast<int>(i);
  auto cut = [&](const Eigen::SparseMatrix<double>& m) {
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < m.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
        const int i = pos[static_cast<std::size_t>(it.row())], j = pos[static_cast<std::size_t>(it.col())];
        if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
      }
    }
    Eigen::SparseMatrix<double> out(r, r);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
  };
  ObeSystem s;
  s.field_ = field_;
  s.gamma_ = gamma_;
  s.A0_ = cut(A0_);
  for (std::size_t k = 0; k < 3; ++k) {
    s.reC_[k] = cut(reC_[k]);
    s.imC_[k] = cut(imC_[k]);
  }
  s.active_ = active_;
  s.b_.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) s.b_(i) = b_(idx[static_cast<std::size_t>(i)]);
  s.homogeneous_ = homogeneous_;
  s.b_last_column = b_last_column;
  return s;
}

void ObeSystem::apply(const RealMatrix& X, RealMatrix& dX, double t) const {
  dX.noalias() = -gamma_ * (A0_ * X);
  for (int q = -1; q <= 1; ++q) {
    const auto s = static_cast<std::size_t>(q_slot(q));
    if (!active_[s]) continue;
    const cplx w = field_->omega_q(q, t);
    // Im(w C) = Re w Im C + Im w Re C
    if (w.real() != 0.0) dX.noalias() += w.real() * (imC_[s] * X);
    if (w.imag() != 0.0) dX.noalias() += w.imag() * (reC_[s] * X);
  }
  if (homogeneous_) return;
  if (b_last_column) {
    dX.col(dX.cols() - 1) += b_;
  } else {
    dX.colwise() += b_;
  }
}

RealMatrix ObeSystem::A(double t) const {
  RealMatrix I = RealMatrix::Identity(dim(), dim());
  RealMatrix out(dim(), dim());
  ObeSystem copy = *this;
  copy.homogeneous_ = true;
  copy.apply(I, out, t);
  return out;
}

Trajectory integrate(const FieldSet& field, const ObeMatrices& matrices, const RealVector& x0, double t0,
                     const std::vector<double>& sample_times, const OdeOptions& options) {
  if (options.abs_tol <= 0.0 || options.rel_tol <= 0.0) throw Error(ErrorCode::Domain, "tolerances must be > 0");
  if (x0.size() != matrices.layout.dim_x()) throw Error(ErrorCode::Validation, "initial state has the wrong dimension");
  const ObeSystem sys(field, matrices);
  return sample(sys, x0, t0, sample_times, options);
}

Trajectory integrate(const FieldSet& field, const ObeMatrices& matrices, const RealVector& x0, double t0,
                     double t1, int samples, const OdeOptions& options) {
  if (!(t1 > t0)) throw Error(ErrorCode::Domain, "integration needs t1 > t0");
  if (samples < 1) throw Error(ErrorCode::Domain, "at least one sample interval is required");
  return integrate(field, matrices, x0, t0, uniform_times(t0, t1, samples), options);
}

double oracle_period(const FieldSet& field, const ObeMatrices& matrices) {
  return field.stationary() ? 2.0 * M_PI / matrices.gamma : field.period();
}

std::vector<int> reachable_indices(const FieldSet& field, const ObeMatrices& matrices) {
  const int n = matrices.layout.dim_x();
  RealMatrix pattern = matrices.A0.cwiseAbs();
  for (int q = -1; q <= 1; ++q) {
    bool any = false;
    for (std::size_t j = 0; j < field.size(); ++j) any = any || field.rabi_component(j, q) != cplx(0.0);
    if (any) pattern += matrices.Cq(q).cwiseAbs();
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::deque<int> queue;
  for (int i = 0; i < n; ++i) {
    if (matrices.b(i) != 0.0) {
      seen[static_cast<std::size_t>(i)] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const int j = queue.front();
    queue.pop_front();
    for (int i = 0; i < n; ++i) {
      if (!seen[static_cast<std::size_t>(i)] && pattern(i, j) != 0.0) {
        seen[static_cast<std::size_t>(i)] = 1;
        queue.push_back(i);
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (seen[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

RealVector periodic_initial_state(const FieldSet& field, const ObeMatrices& matrices, const OdeOptions& options) {
  const std::vector<int> idx = reachable_indices(field, matrices);
  ObeSystem sys = ObeSystem(field, matrices).restricted(idx);
  sys.b_last_column = true;
  const auto r = static_cast<Eigen::Index>(idx.size());
  const double T = oracle_period(field, matrices);
  RealMatrix X = RealMatrix::Zero(r, r + 1);
  X.leftCols(r).setIdentity();
  advance(sys, X, 0.0, T, options);
  const RealMatrix M = RealMatrix::Identity(r, r) - X.leftCols(r);
  Eigen::FullPivLU<RealMatrix> lu(M);
  lu.setThreshold(1e-10);
  RealVector x = RealVector::Zero(matrices.layout.dim_x());
  if (!lu.isInvertible()) {
    // marginal directions: fall back to settling from the mixed state
    const double tail = std::max(50.0 / matrices.gamma, 4.0 * T);
    return settle(field, matrices, x, tail, options);
  }
  const RealVector xr = lu.solve(X.col(r));
  for (Eigen::Index i = 0; i < r; ++i) x(idx[static_cast<std::size_t>(i)]) = xr(i);
  return x;
}

RealVector settle(const FieldSet& field, const ObeMatrices& matrices, const RealVector& x0, double duration,
                  const OdeOptions& options, int max_periods) {
  const ObeSystem sys(field, matrices);
  const double T = oracle_period(field, matrices);
  const double whole = std::ceil(std::max(duration, 0.0) / T) * T;
  RealMatrix X = x0;
  advance(sys, X, 0.0, whole, options);
  double mismatch = 0.0;
  for (int k = 0; k < max_periods; ++k) {
    RealMatrix Y = X;
    advance(sys, Y, 0.0, T, options);
    mismatch = (Y - X).cwiseAbs().maxCoeff();
    X = Y;
    if (mismatch < 1e-3 * options.period_tol) return X.col(0);
  }
  if (mismatch > options.period_tol) {
    throw Error(ErrorCode::PeriodMismatch, "state did not become periodic while settling");
  }
  return X.col(0);
}

double settling_time(const FloquetSpectrum& spectrum, double gamma) {
  const double base = 10.0 / gamma;
  if (spectrum.lambda_max >= -1e-12) return base;
  return std::max(base, 20.0 / std::abs(spectrum.lambda_max));
}

FloquetSpectrum monodromy(const FieldSet& field, const ObeMatrices& matrices, const OdeOptions& options) {
  ObeSystem sys(field, matrices);
  sys.set_homogeneous(true);
  const double T = oracle_period(field, matrices);
  const int n = sys.dim();
  RealMatrix X = RealMatrix::Identity(n, n);
  advance(sys, X, 0.0, T, options);
  Eigen::EigenSolver<RealMatrix> es(X, false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::Domain, "monodromy eigenvalues did not converge");
  FloquetSpectrum out;
  out.period = T;
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx mu = es.eigenvalues()(i);
    out.exponents.push_back(std::log(mu) / T / matrices.gamma);
  }
  std::sort(out.exponents.begin(), out.exponents.end(),
            [](const cplx& a, const cplx& b) { return a.real() > b.real(); });
  out.lambda_max = out.exponents.empty() ? 0.0 : out.exponents.front().real();
  return out;
}

std::map<int, ComplexVector> fourier_extract(const Trajectory& traj, double omega, int n_max, double period_tol) {
  if (traj.states.size() < 3) throw Error(ErrorCode::Domain, "trajectory is too short for extraction");
  const RealVector& first = traj.states.front();
  const RealVector& last = traj.states.back();
  if ((last - first).cwiseAbs().maxCoeff() > period_tol) {
    throw Error(ErrorCode::PeriodMismatch, "trajectory endpoints differ: not yet periodic");
  }
  const std::size_t K = traj.states.size() - 1;
  std::map<int, ComplexVector> out;
  for (int n = -n_max; n <= n_max; ++n) {
    ComplexVector s = ComplexVector::Zero(first.size());
    for (std::size_t k = 0; k <= K; ++k) {
      const double w = (k == 0 || k == K) ? 0.5 : 1.0;
      s += (w * std::polar(1.0, -n * omega * (traj.times[k] - traj.times[0]))) * traj.states[k].cast<cplx>();
    }
    out[n] = s / static_cast<double>(K);
  }
  return out;
}

cplx OracleHarmonics::rate(std::size_t j, int n) const {
  const int n_max = static_cast<int>(x.size() / 2);
  return R.at(j).at(static_cast<std::size_t>(n + n_max));
}

OracleHarmonics oracle_harmonics(const FieldSet& field, const ObeMatrices& matrices, const RealVector& x_start,
                                 int n_max, const OdeOptions& options) {
  const double T = oracle_period(field, matrices);
  const double omega = 2.0 * M_PI / T;
  const ObeSystem sys(field, matrices);
  OracleHarmonics prev;
  for (int K = std::max(options.samples, 4); ; K *= 2) {
    const Trajectory traj = sample(sys, x_start, 0.0, uniform_times(0.0, T, K), options);
    OracleHarmonics cur;
    cur.samples = K;
    cur.period_mismatch = (traj.states.back() - traj.states.front()).cwiseAbs().maxCoeff();
    cur.x = fourier_extract(traj, omega, n_max, options.period_tol);
    const auto rates = rate_timeseries(traj, field, matrices.layout);
    for (const auto& r : rates) cur.R.push_back(dft_closed(r, traj.times, omega, n_max));
    if (!prev.x.empty()) {
      double change = 0.0;
      for (int n = -n_max; n <= n_max; ++n) change = std::max(change, (cur.x[n] - prev.x[n]).cwiseAbs().maxCoeff());
      if (change < options.sample_tol || 2 * K > options.max_samples) return cur;
    }
    prev = std::move(cur);
  }
}

OracleHarmonics oracle_harmonics(const FieldSet& field, const ObeMatrices& matrices, int n_max,
                                 const OdeOptions& options) {
  return oracle_harmonics(field, matrices, periodic_initial_state(field, matrices, options), n_max, options);
}

std::vector<std::vector<double>> rate_timeseries(const Trajectory& traj, const FieldSet& field,
                                                 const StateLayout& layout) {
  std::vector<std::vector<double>> out(field.size(), std::vector<double>(traj.times.size()));
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    for (std::size_t j = 0; j < field.size(); ++j) {
      out[j][k] = instantaneous_rate(field, layout, traj.states[k], traj.times[k], j);
    }
  }
  return out;
}

void write_trajectory(std::ostream& out, const Trajectory& traj, char delimiter) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << traj.times[k];
    for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) out << delimiter << traj.states[k](i);
    out << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

}  // namespace radforce
