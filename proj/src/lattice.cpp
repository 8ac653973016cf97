#include "shocklab/lattice.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "shocklab/continuum.hpp"
#include "shocklab/errors.hpp"

namespace shocklab::lattice {

namespace {

constexpr int kJetWidth = 2 * kMaxJacobianOrder - 1;

// Forward-mode value with gradient over the local band of one residual row.
struct Jet {
  double v = 0.0;
  std::array<double, kJetWidth> d{};

  Jet() = default;
  explicit Jet(double value) : v(value) {}

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int i = 0; i < kJetWidth; ++i) d[i] += o.d[i];
    return *this;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.v * b.v);
    for (int i = 0; i < kJetWidth; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
};

// Sum over lattice walks of length 2k-1 from n to n+1 where a step up costs 1
// and a step down from m+1 to m costs B_m, times B_n.
template <class Scalar, class Site>
Scalar walk_v(const Site& site, long n, int k) {
  if (n <= 0) return Scalar{};
  const long base = n - k + 1;
  const int width = 2 * k;
  const long target = n + 1;
  std::vector<Scalar> cur(width), next(width);
  std::vector<char> live(width, 0), next_live(width);
  cur[n - base] = Scalar(1.0);
  live[n - base] = 1;
  const int steps = 2 * k - 1;
  for (int s = 0; s < steps; ++s) {
    const int remaining = steps - s - 1;
    std::fill(next.begin(), next.end(), Scalar{});
    std::fill(next_live.begin(), next_live.end(), 0);
    for (int p = 0; p < width; ++p) {
      if (!live[p]) continue;
      const long pos = base + p;
      if (p + 1 < width && std::abs(pos + 1 - target) <= remaining) {
        next[p + 1] += cur[p];
        next_live[p + 1] = 1;
      }
      if (p >= 1 && std::abs(pos - 1 - target) <= remaining && pos - 1 >= 1) {
        next[p - 1] += cur[p] * site(pos - 1);
        next_live[p - 1] = 1;
      }
    }
    std::swap(cur, next);
    std::swap(live, next_live);
  }
  return site(n) * cur[target - base];
}

struct ValueSite {
  const LatticeWindow& w;
  double operator()(long m) const { return w(m); }
};

struct JetSite {
  const LatticeWindow& w;
  long row;
  int half;

  void seed(Jet& j, long m, double weight) const {
    const long slot = m - row + half;
    if (slot < 0 || slot >= kJetWidth)
      throw Error(ErrorKind::OutOfRange, "Jacobian band exceeded at site " + std::to_string(m));
    j.d[slot] += weight;
  }

  Jet operator()(long m) const {
    const int M = w.size();
    if (m <= 0) return Jet{};
    Jet j(w(m));
    if (m <= M) {
      seed(j, m, 1.0);
    } else if (w.closure() == RightClosure::LinearExtrapolation) {
      const auto [a, b] = w.extrapolation_weights(m);
      if (M >= 2 && a != 0.0) seed(j, M - 1, a);
      seed(j, M, b);
    }
    return j;
  }
};

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

int coupling_order_checked(const CouplingVector& c) {
  const int q = c.order();
  if (q > kMaxJacobianOrder)
    throw Error(ErrorKind::InvalidInput, "string solver supports couplings up to t" + std::to_string(2 * kMaxJacobianOrder));
  return q;
}

LatticeWindow closed_window(std::vector<double> B, const CouplingVector& c, RightClosure closure, int buffer) {
  return close_window(std::move(B), c, closure, std::max(c.order(), 1) - 1, buffer);
}

Eigen::VectorXd solve_banded(const BandedMatrix& J, std::span<const double> rhs) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(J.n) * (2 * J.half_width + 1));
  for (int r = 0; r < J.n; ++r)
    for (int col = std::max(0, r - J.half_width); col <= std::min(J.n - 1, r + J.half_width); ++col) {
      const double v = J(r, col);
      if (v != 0.0) entries.emplace_back(r, col, v);
    }
  Eigen::SparseMatrix<double> A(J.n, J.n);
  A.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw NoConvergenceError("singular string-equation Jacobian", 0.0);
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw NoConvergenceError("string-equation Newton step failed", 0.0);
  return x;
}

struct NewtonOutcome {
  std::vector<double> B;
  double residual = 0.0;
  int iterations = 0;
};

NewtonOutcome newton(std::vector<double> B, const CouplingVector& c, const SolveOptions& opts, int buffer) {
  LatticeWindow w = closed_window(B, c, opts.closure, buffer);
  std::vector<double> R = string_residual(w, c);
  double norm = max_abs(R);
  NewtonOutcome out;
  for (int it = 0;; ++it) {
    const double scale = std::max(1.0, residual_scale(w, c));
    if (norm <= opts.newton_tol * scale) break;
    const double floor = 128.0 * std::numeric_limits<double>::epsilon() * scale;
    if (it >= opts.max_iterations) {
      if (norm <= floor) break;
      throw NoConvergenceError("Newton iteration limit reached", norm);
    }
    std::vector<double> minus_R(R.size());
    for (std::size_t i = 0; i < R.size(); ++i) minus_R[i] = -R[i];
    const Eigen::VectorXd step = solve_banded(string_jacobian(w, c), minus_R);

    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings && !accepted; ++h, lambda *= 0.5) {
      std::vector<double> trial(B.size());
      bool positive = true;
      for (std::size_t i = 0; i < B.size(); ++i) {
        trial[i] = B[i] + lambda * step[static_cast<Eigen::Index>(i)];
        positive = positive && trial[i] > 0.0;
      }
      if (!positive) continue;
      LatticeWindow tw = closed_window(trial, c, opts.closure, buffer);
      std::vector<double> TR = string_residual(tw, c);
      const double tnorm = max_abs(TR);
      if (tnorm < norm) {
        B = std::move(trial);
        w = std::move(tw);
        R = std::move(TR);
        norm = tnorm;
        accepted = true;
      }
    }
    ++out.iterations;
    if (!accepted) {
      if (norm <= floor) break;
      throw NoConvergenceError("damped Newton stalled", norm);
    }
  }
  out.B = std::move(B);
  out.residual = norm;
  return out;
}

}  // namespace

LatticeWindow::LatticeWindow(std::vector<double> B, RightClosure closure, std::vector<double> clamp_values,
                             int ghost_width, int buffer_width)
    : B_(std::move(B)), clamp_(std::move(clamp_values)), closure_(closure), ghost_width_(ghost_width),
      buffer_width_(buffer_width) {
  if (closure_ == RightClosure::ClampToContinuum) ghost_width_ = static_cast<int>(clamp_.size());
  if (ghost_width_ < 0 || buffer_width_ < 0) throw Error(ErrorKind::InvalidInput, "negative ghost or buffer width");
}

LatticeWindow LatticeWindow::gaussian(int M, int buffer_width) {
  std::vector<double> B(std::max(M, 0));
  for (int n = 1; n <= M; ++n) B[n - 1] = n;
  return LatticeWindow(std::move(B), RightClosure::LinearExtrapolation, {}, 2 * kMaxJacobianOrder, buffer_width);
}

double LatticeWindow::operator()(long n) const {
  const long M = size();
  if (n <= 0) return 0.0;
  if (n <= M) return B_[n - 1];
  if (n - M > ghost_width_)
    throw Error(ErrorKind::OutOfRange, "site " + std::to_string(n) + " lies beyond window+ghost range " +
                                           std::to_string(M + ghost_width_));
  if (closure_ == RightClosure::ClampToContinuum) return clamp_[n - M - 1];
  const auto [a, b] = extrapolation_weights(n);
  return (M >= 2 ? a * B_[M - 2] : 0.0) + b * B_[M - 1];
}

std::pair<double, double> LatticeWindow::extrapolation_weights(long n) const {
  const long M = size();
  const double i = static_cast<double>(n - M);
  if (M >= 2) return {-i, 1.0 + i};
  return {0.0, 1.0};
}

LatticeWindow LatticeWindow::with_values(std::vector<double> B) const {
  LatticeWindow w = *this;
  w.B_ = std::move(B);
  return w;
}

LatticeWindow LatticeWindow::with_buffer(int buffer_width) const {
  LatticeWindow w = *this;
  w.buffer_width_ = buffer_width;
  return w;
}

double v_explicit(const LatticeWindow& w, long n, int k) {
  auto V4 = [&](long m) { return w(m) * (w(m - 1) + w(m) + w(m + 1)); };
  switch (k) {
    case 1: return w(n);
    case 2: return V4(n);
    case 3: return w(n) * (w(n - 1) * w(n + 1) + V4(n - 1) + V4(n) + V4(n + 1));
    default: throw Error(ErrorKind::InvalidInput, "explicit V functions exist for k = 1, 2, 3 only");
  }
}

double v_general(const LatticeWindow& w, long n, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidInput, "flow index k must be positive");
  return walk_v<double>(ValueSite{w}, n, k);
}

std::vector<double> string_residual(const LatticeWindow& w, const CouplingVector& c) {
  const int M = w.size();
  std::vector<double> R(M);
  for (int n = 1; n <= M; ++n) {
    double r = w(n) - n;
    for (int j = 1; j <= c.size(); ++j) {
      const double t = c.t(j);
      if (t != 0.0) r -= 2.0 * j * t * v_general(w, n, j);
    }
    R[n - 1] = r;
  }
  return R;
}

std::vector<double> string_residual_rescaled(const LatticeWindow& w, const CouplingVector& c) {
  std::vector<double> R = string_residual(w, c);
  for (double& r : R) r /= c.scale();
  return R;
}

double residual_scale(const LatticeWindow& w, const CouplingVector& c) {
  double scale = 0.0;
  for (int n = 1; n <= w.size(); ++n) {
    double s = std::abs(w(n)) + n;
    for (int j = 1; j <= c.size(); ++j) {
      const double t = c.t(j);
      if (t != 0.0) s += std::abs(2.0 * j * t * v_general(w, n, j));
    }
    scale = std::max(scale, s);
  }
  return scale;
}

double BandedMatrix::operator()(int row, int col) const {
  if (std::abs(col - row) > half_width) return 0.0;
  return data[static_cast<std::size_t>(row) * (2 * half_width + 1) + (col - row + half_width)];
}

double& BandedMatrix::at(int row, int col) {
  if (std::abs(col - row) > half_width) throw Error(ErrorKind::OutOfRange, "entry outside band");
  return data[static_cast<std::size_t>(row) * (2 * half_width + 1) + (col - row + half_width)];
}

BandedMatrix string_jacobian(const LatticeWindow& w, const CouplingVector& c) {
  const int q = std::max(coupling_order_checked(c), 1);
  const int M = w.size();
  BandedMatrix J;
  J.n = M;
  J.half_width = q - 1;
  J.data.assign(static_cast<std::size_t>(M) * (2 * J.half_width + 1), 0.0);
  for (long n = 1; n <= M; ++n) {
    const JetSite site{w, n, J.half_width};
    Jet r = site(n);
    for (int j = 1; j <= c.size(); ++j) {
      const double t = c.t(j);
      if (t == 0.0) continue;
      Jet v = walk_v<Jet>(site, n, j);
      Jet scaled(-2.0 * j * t);
      r += scaled * v;
    }
    for (int slot = 0; slot <= 2 * J.half_width; ++slot) {
      const long col = n + slot - J.half_width;
      if (col < 1 || col > M) continue;
      J.at(static_cast<int>(n - 1), static_cast<int>(col - 1)) = r.d[slot];
    }
  }
  return J;
}

LatticeWindow close_window(std::vector<double> B, const CouplingVector& c, RightClosure closure, int ghosts,
                           int buffer_width) {
  const int M = static_cast<int>(B.size());
  if (closure == RightClosure::ClampToContinuum && ghosts > 0) {
    std::vector<double> values;
    const double N = c.scale();
    for (int i = 1; i <= ghosts; ++i) {
      const double x = (M + i) / N;
      const continuum::RootSet roots = continuum::solve_eos(continuum::eos_coefficients(c, x));
      if (roots.accessible_count() != 1) break;
      for (const auto& r : roots.roots)
        if (r.accessible) values.push_back(r.u * N);
    }
    if (static_cast<int>(values.size()) == ghosts)
      return LatticeWindow(std::move(B), RightClosure::ClampToContinuum, std::move(values), ghosts, buffer_width);
  }
  return LatticeWindow(std::move(B), RightClosure::LinearExtrapolation, {}, std::max(2 * kMaxJacobianOrder, ghosts),
                       buffer_width);
}

int default_buffer_width(int M, int q) {
  return std::max(2 * q, static_cast<int>(std::ceil(0.05 * M)));
}

StringSolution solve_string(const CouplingVector& c, int M, const SolveOptions& opts) {
  const int q = coupling_order_checked(c);
  const int buffer = opts.buffer_width >= 0 ? opts.buffer_width : default_buffer_width(M, std::max(q, 1));
  if (M < 4 * std::max(q, 1)) throw Error(ErrorKind::InvalidInput, "window length M must be at least 4q");
  if (opts.continuation_steps < 1 || opts.max_continuation_steps < opts.continuation_steps)
    throw Error(ErrorKind::InvalidInput, "invalid continuation step counts");

  StringSolution sol;
  std::vector<double> B(M);
  for (int n = 1; n <= M; ++n) B[n - 1] = n;
  if (q == 0) {
    sol.window = closed_window(std::move(B), c, opts.closure, buffer);
    sol.residual = max_abs(string_residual(sol.window, c));
    return sol;
  }

  const double base_step = 1.0 / opts.continuation_steps;
  const double min_step = 1.0 / opts.max_continuation_steps;
  double s = 0.0, ds = base_step, last_ds = 0.0;
  std::vector<double> previous;
  double last_residual = 0.0;
  while (s < 1.0) {
    const double s_next = std::min(1.0, s + ds);
    std::vector<double> guess = B;
    if (!previous.empty() && last_ds > 0.0) {
      const double ratio = (s_next - s) / last_ds;
      bool positive = true;
      for (int i = 0; i < M; ++i) {
        guess[i] = B[i] + ratio * (B[i] - previous[i]);
        positive = positive && guess[i] > 0.0;
      }
      if (!positive) guess = B;
    }
    try {
      NewtonOutcome step = newton(std::move(guess), c.scaled_by(s_next), opts, buffer);
      previous = std::move(B);
      B = std::move(step.B);
      last_ds = s_next - s;
      s = s_next;
      last_residual = step.residual;
      sol.newton_iterations += step.iterations;
      ++sol.continuation_stages;
      ds = std::min(2.0 * ds, base_step);
    } catch (const NoConvergenceError& e) {
      last_residual = e.last_residual();
      ds *= 0.5;
      if (ds < min_step * (1.0 - 1e-12))
        throw NoConvergenceError("string equation did not converge at continuation parameter " + std::to_string(s_next) +
                                     " (" + e.what() + ")",
                                 last_residual);
    }
  }
  sol.window = closed_window(std::move(B), c, opts.closure, buffer);
  sol.residual = last_residual;
  for (int n = 1; n <= sol.window.reported_size(); ++n)
    if (!(sol.window(n) > 0.0))
      throw Error(ErrorKind::Nonphysical, "converged solution has B_" + std::to_string(n) + " <= 0");
  return sol;
}

OrderParameterTrace order_parameter(const LatticeWindow& w, int N) {
  OrderParameterTrace trace;
  trace.N = N;
  const int count = w.reported_size();
  trace.x.reserve(count);
  trace.u.reserve(count);
  for (int n = 1; n <= count; ++n) {
    trace.x.push_back(static_cast<double>(n) / N);
    trace.u.push_back(w(n) / N);
  }
  return trace;
}

}  // namespace shocklab::lattice
