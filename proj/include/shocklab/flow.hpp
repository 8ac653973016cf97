#pragma once

#include <Eigen/Dense>
#include <vector>

#include "shocklab/couplings.hpp"
#include "shocklab/lattice.hpp"

namespace shocklab::flow {

// dB_n/dt_{2k} = B_n (V^(2k)_{n+1} - V^(2k)_{n-1}) for n = 1..M, ghosts read
// through the window's closure.
std::vector<double> flow_rhs(const lattice::LatticeWindow& w, int k);

// Symmetric tridiagonal Lax matrix with zero diagonal and off-diagonal
// b_1..b_M, of dimension M+1. A finite matrix is the chain with B_{M+1} = 0.
class LaxMatrix {
 public:
  LaxMatrix() = default;
  explicit LaxMatrix(std::vector<double> b);
  static LaxMatrix from_window(const lattice::LatticeWindow& w);

  int size() const noexcept { return static_cast<int>(b_.size()); }
  const std::vector<double>& b() const noexcept { return b_; }
  std::vector<double> B() const;
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd eigenvalues() const;  // sorted ascending

 private:
  std::vector<double> b_;
};

inline constexpr int kMatrixModeMaxSize = 200;

// [P, L] with P = (L^{2k})_s / 2 and (X)_s the strict upper minus the strict
// lower triangle of X.
Eigen::MatrixXd matrix_flow_rhs(const LaxMatrix& L, int k);

// Moves raw t_{2k} to the absolute value `target`. h <= 0 selects
// min(1e-3, |target - t_start| / 1000); the step is shrunk so that an integer
// number of steps lands exactly on the target.
struct FlowLeg {
  int k = 1;
  double target = 0.0;
  double h = 0.0;
};

using FlowSchedule = std::vector<FlowLeg>;

struct FlowOptions {
  lattice::RightClosure closure = lattice::RightClosure::ClampToContinuum;
  double growth_limit = 1e6;  // max|B| relative to the start before giving up
};

struct FlowResult {
  lattice::LatticeWindow window;
  CouplingVector times;        // couplings reached at the end of the schedule
  double min_margin = 0.0;     // smallest B_n seen at any accepted step
  long steps = 0;
};

// Classical fourth-order Runge-Kutta along each leg in turn. start_times are
// the couplings the start window belongs to (their scale N also fixes the
// continuum clamp at the right edge).
FlowResult integrate_flow(const lattice::LatticeWindow& start, const CouplingVector& start_times,
                          const FlowSchedule& sched, const FlowOptions& opts = {});

struct MatrixTrajectory {
  std::vector<LaxMatrix> snapshots;  // start, then every snapshot_every steps and the end
  long steps = 0;
};

// Same integrator on the finite Lax matrix (dimension at most 201). Leg
// targets are measured from zero times.
MatrixTrajectory integrate_matrix_flow(const LaxMatrix& start, const FlowSchedule& sched, int snapshot_every = 1);

// Largest max-norm distance between the sorted spectrum of any snapshot and
// that of the first.
double spectrum_drift(const std::vector<LaxMatrix>& snapshots);

}  // namespace shocklab::flow
