#pragma once

#include <span>
#include <utility>
#include <vector>

#include "shocklab/couplings.hpp"

namespace shocklab::lattice {

// Highest flow index supported by the analytic Jacobian of the string
// equation. V functions themselves accept any k.
inline constexpr int kMaxJacobianOrder = 8;

enum class RightClosure { ClampToContinuum, LinearExtrapolation };

// Finite window B_1..B_M of the semi-infinite chain of squared Flaschka
// coordinates. Sites n <= 0 read as zero; sites M+1..M+ghost_width come from
// the right closure.
class LatticeWindow {
 public:
  LatticeWindow() = default;
  LatticeWindow(std::vector<double> B, RightClosure closure, std::vector<double> clamp_values = {},
                int ghost_width = kMaxJacobianOrder * 2, int buffer_width = 0);

  // B_n = n, the zero-coupling solution.
  static LatticeWindow gaussian(int M, int buffer_width = 0);

  int size() const noexcept { return static_cast<int>(B_.size()); }
  int ghost_width() const noexcept { return ghost_width_; }
  int buffer_width() const noexcept { return buffer_width_; }
  int reported_size() const noexcept { return std::max(size() - buffer_width_, 0); }
  RightClosure closure() const noexcept { return closure_; }
  std::span<const double> values() const noexcept { return B_; }
  std::span<const double> clamp_values() const noexcept { return clamp_; }

  // B_n with ghost and closure rules; throws OutOfRange beyond the ghosts.
  double operator()(long n) const;

  // Linear-extrapolation ghost n > M expressed as weights on (B_{M-1}, B_M).
  std::pair<double, double> extrapolation_weights(long n) const;

  LatticeWindow with_values(std::vector<double> B) const;
  LatticeWindow with_buffer(int buffer_width) const;

 private:
  std::vector<double> B_;
  std::vector<double> clamp_;
  RightClosure closure_ = RightClosure::LinearExtrapolation;
  int ghost_width_ = kMaxJacobianOrder * 2;
  int buffer_width_ = 0;
};

// Samples (x = n/N, u = B_n/N) of the order parameter on the reported sites.
struct OrderParameterTrace {
  int N = 1;
  std::vector<double> x;
  std::vector<double> u;

  std::size_t size() const noexcept { return x.size(); }
};

// V^(2k)_n from the closed forms for k = 1, 2, 3.
double v_explicit(const LatticeWindow& w, long n, int k);

// V^(2k)_n for any k >= 1. Evaluated as B_n (J^{2k-1})_{n,n+1} where J is the
// tridiagonal matrix with unit superdiagonal and subdiagonal B; this is the
// local solution of (L^{2k})_{nn} = V_n + V_{n-1}, V_0 = 0.
double v_general(const LatticeWindow& w, long n, int k);

// R_n = B_n - sum_j 2j t_{2j} V^(2j)_n - n for n = 1..M.
std::vector<double> string_residual(const LatticeWindow& w, const CouplingVector& c);

// Same residual in rescaled variables: u_n - sum_j 2j T_{2j} W^(2j)_n - n/N.
std::vector<double> string_residual_rescaled(const LatticeWindow& w, const CouplingVector& c);

// Largest |term| entering each residual row; sets the round-off floor.
double residual_scale(const LatticeWindow& w, const CouplingVector& c);

// Banded Jacobian dR_n/dB_m of the string residual (|n - m| <= q - 1). The
// dependence of linear-extrapolation ghosts on B_{M-1}, B_M is included.
struct BandedMatrix {
  int n = 0;
  int half_width = 0;
  std::vector<double> data;  // row-major, (2 half_width + 1) entries per row

  double operator()(int row, int col) const;
  double& at(int row, int col);
};

BandedMatrix string_jacobian(const LatticeWindow& w, const CouplingVector& c);

struct SolveOptions {
  int continuation_steps = 50;
  int max_continuation_steps = 800;
  double newton_tol = 1e-12;  // relative to residual_scale
  int max_iterations = 50;
  int max_halvings = 30;
  RightClosure closure = RightClosure::ClampToContinuum;
  int buffer_width = -1;  // < 0: max(2q, ceil(0.05 M))
};

struct StringSolution {
  LatticeWindow window;
  double residual = 0.0;  // max-norm of the final residual
  int newton_iterations = 0;
  int continuation_stages = 0;
};

int default_buffer_width(int M, int q);

// Applies the right closure for couplings c: ghost sites M+1..M+ghosts clamp
// to the accessible continuum root when it is unique at every ghost site,
// otherwise the window falls back to linear extrapolation.
LatticeWindow close_window(std::vector<double> B, const CouplingVector& c, RightClosure closure, int ghosts,
                           int buffer_width = 0);

// Newton continuation from t = 0 (B_n = n) to the target couplings.
StringSolution solve_string(const CouplingVector& c, int M, const SolveOptions& opts = {});

OrderParameterTrace order_parameter(const LatticeWindow& w, int N);

}  // namespace shocklab::lattice
