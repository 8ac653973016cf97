#pragma once

#include <span>
#include <string>
#include <vector>

#include "shocklab/couplings.hpp"

namespace shocklab::oracle {

// Even weight w(l) = exp(-l^2/2 + sum_j t_{2j} l^{2j}) in raw couplings.
class WeightSpec {
 public:
  // Throws InvalidInput unless the top nonzero coupling is negative or all
  // couplings vanish.
  explicit WeightSpec(CouplingVector couplings);

  const CouplingVector& couplings() const noexcept { return couplings_; }
  double log_weight(double lambda) const noexcept;
  bool gaussian() const noexcept { return couplings_.is_zero(); }

 private:
  CouplingVector couplings_;
};

// Composite Gauss-Legendre discretisation of the weight on [-R, R]. Stored
// weights are w(l) * gl_weight * exp(-log_scale) so that they stay O(1).
struct QuadratureGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  double radius = 0.0;
  double log_scale = 0.0;
  int panels = 0;
};

inline constexpr int kNodesPerPanel = 20;

// Radius beyond which l^degree w(l) stays 1e-30 below its maximum. With
// degree 0 this is the plain tail rule w(R)/max w < 1e-30; the Gaussian never
// goes below R = 14. Higher degrees push R out to where high-order moments
// and polynomials still carry weight.
double truncation_radius(const WeightSpec& w, int degree = 0);
// Maximum of the log weight over the real line.
double log_weight_max(const WeightSpec& w);

QuadratureGrid discretize(const WeightSpec& w, int panels, double radius);

// m_0..m_{max_order}; panel count doubles until successive relative change is
// below 1e-13. Odd moments are exactly zero.
std::vector<double> moments(const WeightSpec& w, int max_order);

// Moments with the converged grid that produced them.
struct MomentTable {
  std::vector<double> values;
  QuadratureGrid grid;
  double relative_change = 0.0;
};
MomentTable moment_table(const WeightSpec& w, int max_order);

// n x n Hankel determinant det(m_{i+j}); tau_0 = 1.
double hankel_tau(std::span<const double> moments, int n);

struct OracleResult {
  std::vector<double> moments;   // m_0..m_{2 n_max}
  std::vector<double> tau;       // tau_0..tau_{n_max+1}
  std::vector<double> log_tau;   // natural logs of tau
  std::vector<double> B;         // B_1..B_{n_max}
  std::string method;            // "hankel" or "stieltjes"
  double quadrature_change = 0.0;  // relative change at the last refinement
  int panels = 0;
};

// Recurrence coefficients from Hankel determinant ratios (small n only).
OracleResult hankel_recurrence(const WeightSpec& w, int n_max);

// Discretised Stieltjes/Lanczos with full reorthogonalisation; refines the
// grid until B_1..B_{n_max} change by less than 1e-13 relative.
OracleResult stieltjes_recurrence(const WeightSpec& w, int n_max);

// Lanczos recurrence coefficients B_1..B_{n_max} of a discrete measure.
std::vector<double> lanczos_coefficients(std::span<const double> nodes, std::span<const double> weights, int n_max);

// (2 pi)^{n/2} prod_{j=1..n} j! / n!, returned as a natural log.
double gaussian_log_tau(int n);

}  // namespace shocklab::oracle
