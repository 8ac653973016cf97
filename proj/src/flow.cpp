#include "shocklab/flow.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "shocklab/errors.hpp"

namespace shocklab::flow {

using lattice::LatticeWindow;

namespace {

double v_any(const LatticeWindow& w, long n, int k) {
  return k <= 3 ? lattice::v_explicit(w, n, k) : lattice::v_general(w, n, k);
}

void check_leg(const FlowLeg& leg) {
  if (leg.k < 1) throw Error(ErrorKind::InvalidInput, "flow index k must be positive");
  if (!std::isfinite(leg.target)) throw Error(ErrorKind::InvalidInput, "flow target must be finite");
}

// Step count and step length for a leg of signed length delta.
std::pair<long, double> leg_steps(const FlowLeg& leg, double delta) {
  if (delta == 0.0) return {0, 0.0};
  double h = leg.h > 0.0 ? leg.h : std::min(1e-3, std::abs(delta) / 1000.0);
  const long steps = static_cast<long>(std::ceil(std::abs(delta) / h - 1e-9));
  return {std::max(steps, 1L), delta / std::max(steps, 1L)};
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

}  // namespace

std::vector<double> flow_rhs(const LatticeWindow& w, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidInput, "flow index k must be positive");
  const int M = w.size();
  std::vector<double> V(M + 2);
  for (int n = 0; n <= M + 1; ++n) V[n] = v_any(w, n, k);
  std::vector<double> rhs(M);
  for (int n = 1; n <= M; ++n) rhs[n - 1] = w(n) * (V[n + 1] - V[n - 1]);
  return rhs;
}

LaxMatrix::LaxMatrix(std::vector<double> b) : b_(std::move(b)) {
  for (double v : b_)
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "Lax matrix entries must be finite");
}

LaxMatrix LaxMatrix::from_window(const LatticeWindow& w) {
  std::vector<double> b(w.size());
  for (int n = 1; n <= w.size(); ++n) {
    if (w(n) < 0.0) throw Error(ErrorKind::Nonphysical, "negative B_n has no real Flaschka coordinate");
    b[n - 1] = std::sqrt(w(n));
  }
  return LaxMatrix(std::move(b));
}

std::vector<double> LaxMatrix::B() const {
  std::vector<double> out(b_.size());
  for (std::size_t i = 0; i < b_.size(); ++i) out[i] = b_[i] * b_[i];
  return out;
}

Eigen::MatrixXd LaxMatrix::dense() const {
  const int d = size() + 1;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < size(); ++i) L(i, i + 1) = L(i + 1, i) = b_[i];
  return L;
}

Eigen::VectorXd LaxMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

Eigen::MatrixXd matrix_flow_rhs(const LaxMatrix& L, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidInput, "flow index k must be positive");
  if (L.size() > kMatrixModeMaxSize) throw Error(ErrorKind::InvalidInput, "matrix mode is limited to M <= 200");
  const Eigen::MatrixXd A = L.dense();
  const Eigen::MatrixXd A2 = A * A;
  Eigen::MatrixXd P = A2;
  for (int i = 1; i < k; ++i) P = P * A2;
  Eigen::MatrixXd skew = Eigen::MatrixXd(P.triangularView<Eigen::StrictlyUpper>()) -
                         Eigen::MatrixXd(P.triangularView<Eigen::StrictlyLower>());
  skew *= 0.5;
  return skew * A - A * skew;
}

FlowResult integrate_flow(const LatticeWindow& start, const CouplingVector& start_times, const FlowSchedule& sched,
                          const FlowOptions& opts) {
  int kmax = 1;
  for (const auto& leg : sched) {
    check_leg(leg);
    kmax = std::max(kmax, leg.k);
  }
  FlowResult res;
  res.times = start_times;
  std::vector<double> B(start.values().begin(), start.values().end());
  res.min_margin = B.empty() ? 0.0 : *std::min_element(B.begin(), B.end());
  const double start_size = std::max(1.0, max_abs(B));
  const int buffer = start.buffer_width();
  if (sched.empty()) {
    res.window = start;
    return res;
  }

  auto window_at = [&](std::vector<double> values, const CouplingVector& c) {
    return lattice::close_window(std::move(values), c, opts.closure, kmax, buffer);
  };
  double elapsed = 0.0;
  for (const auto& leg : sched) {
    const double t0 = res.times.t(leg.k);
    const auto [steps, h] = leg_steps(leg, leg.target - t0);
    for (long s = 0; s < steps; ++s) {
      const double ta = t0 + s * h;
      auto at = [&](double t) { return res.times.with_t(leg.k, t); };
      auto rhs = [&](const std::vector<double>& y, double t) { return flow_rhs(window_at(y, at(t)), leg.k); };
      auto axpy = [](const std::vector<double>& y, double a, const std::vector<double>& d) {
        std::vector<double> out(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * d[i];
        return out;
      };
      const auto k1 = rhs(B, ta);
      const auto k2 = rhs(axpy(B, 0.5 * h, k1), ta + 0.5 * h);
      const auto k3 = rhs(axpy(B, 0.5 * h, k2), ta + 0.5 * h);
      const auto k4 = rhs(axpy(B, h, k3), ta + h);
      for (std::size_t i = 0; i < B.size(); ++i) B[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      const double now = elapsed + (s + 1) * std::abs(h);
      double lo = B.empty() ? 0.0 : B[0];
      bool finite = true;
      for (double v : B) {
        lo = std::min(lo, v);
        finite = finite && std::isfinite(v);
      }
      if (!finite || max_abs(B) > opts.growth_limit * start_size)
        throw Error(ErrorKind::Instability,
                    "flow integration unstable at t" + std::to_string(2 * leg.k) + " = " + std::to_string(ta + h));
      if (lo <= 0.0)
        throw BlowUpError("B_n reached zero along the t" + std::to_string(2 * leg.k) + " flow at " +
                              std::to_string(ta + h),
                          now);
      res.min_margin = std::min(res.min_margin, lo);
      ++res.steps;
    }
    elapsed += std::abs(leg.target - t0);
    res.times = res.times.with_t(leg.k, leg.target);
  }
  res.window = window_at(std::move(B), res.times);
  return res;
}

MatrixTrajectory integrate_matrix_flow(const LaxMatrix& start, const FlowSchedule& sched, int snapshot_every) {
  if (start.size() > kMatrixModeMaxSize) throw Error(ErrorKind::InvalidInput, "matrix mode is limited to M <= 200");
  if (snapshot_every < 1) throw Error(ErrorKind::InvalidInput, "snapshot interval must be positive");
  MatrixTrajectory traj;
  traj.snapshots.push_back(start);
  std::map<int, double> times;
  std::vector<double> b = start.b();
  const int M = start.size();
  auto rhs = [&](const std::vector<double>& y, int k) {
    const Eigen::MatrixXd D = matrix_flow_rhs(LaxMatrix(y), k);
    std::vector<double> out(M);
    for (int i = 0; i < M; ++i) out[i] = D(i, i + 1);
    return out;
  };
  auto axpy = [](const std::vector<double>& y, double a, const std::vector<double>& d) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * d[i];
    return out;
  };
  bool fresh = true;
  for (const auto& leg : sched) {
    check_leg(leg);
    const double t0 = times[leg.k];
    const auto [steps, h] = leg_steps(leg, leg.target - t0);
    for (long s = 0; s < steps; ++s) {
      const auto k1 = rhs(b, leg.k);
      const auto k2 = rhs(axpy(b, 0.5 * h, k1), leg.k);
      const auto k3 = rhs(axpy(b, 0.5 * h, k2), leg.k);
      const auto k4 = rhs(axpy(b, h, k3), leg.k);
      for (int i = 0; i < M; ++i) b[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      for (double v : b)
        if (!std::isfinite(v)) throw Error(ErrorKind::Instability, "matrix flow produced non-finite entries");
      ++traj.steps;
      fresh = traj.steps % snapshot_every == 0;
      if (fresh) traj.snapshots.emplace_back(b);
    }
    times[leg.k] = leg.target;
  }
  if (!fresh) traj.snapshots.emplace_back(b);
  return traj;
}

double spectrum_drift(const std::vector<LaxMatrix>& snapshots) {
  if (snapshots.size() < 2) return 0.0;
  const Eigen::VectorXd base = snapshots.front().eigenvalues();
  double drift = 0.0;
  for (std::size_t i = 1; i < snapshots.size(); ++i) {
    const Eigen::VectorXd ev = snapshots[i].eigenvalues();
    if (ev.size() != base.size()) throw Error(ErrorKind::InvalidInput, "snapshots differ in dimension");
    drift = std::max(drift, (ev - base).cwiseAbs().maxCoeff());
  }
  return drift;
}

}  // namespace shocklab::flow
