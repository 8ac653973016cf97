#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "shocklab/couplings.hpp"

namespace shocklab::continuum {

// Tie tolerance for discriminant signs, applied after normalising the
// polynomial coefficients to unit max-norm.
inline constexpr double kDiscriminantTie = 1e-12;

// chi_j = C(2j-1, j-1): number of lattice paths feeding u^j in the
// leading-order continuum limit (1, 3, 10, 35, ...).
double chi(int j);

// Omega(u) = -x + u - sum_j 2j chi_j T_{2j} u^j with ascending coefficients.
struct EquationOfState {
  double x = 0.0;
  std::vector<double> coefficients;  // coefficients[i] multiplies u^i

  int degree() const noexcept;
  double operator()(double u) const noexcept;
  double derivative(double u) const noexcept;
};

EquationOfState eos_coefficients(const CouplingVector& c, double x);

enum class RootKind { LocalMin, LocalMax, Inflection };

// Stationary point of the free energy; kind follows the sign change of Omega
// (= dF/du) across the root.
struct Root {
  double u = 0.0;
  int multiplicity = 1;
  bool accessible = false;  // u >= 0
  RootKind kind = RootKind::LocalMin;
};

struct RootSet {
  std::vector<Root> roots;  // distinct real roots, ascending

  int count() const noexcept { return static_cast<int>(roots.size()); }
  int accessible_count() const noexcept;
  int accessible_minima() const noexcept;
};

RootSet solve_eos(const EquationOfState& eos);

struct Discriminant {
  double value = 0.0;
  bool degenerate = false;  // leading cubic coefficient vanished
  int degree = 3;
};

// Cubic discriminant of Omega for couplings up to T_6; falls back to the
// quadratic discriminant (flagged) when T_6 = 0.
Discriminant discriminant(double x, double T2, double T4, double T6);

// Discriminant divided by the fourth power of the max coefficient, the
// quantity compared against kDiscriminantTie.
double normalized_discriminant(double x, double T2, double T4, double T6);

// Values of x where the cubic discriminant vanishes. The discriminant is a
// quadratic in x; a tied quadratic discriminant yields a single double root.
std::vector<double> discriminant_roots_in_x(double T2, double T4, double T6);

double free_energy(double u, double x, const CouplingVector& c);

enum class Phase { SingleMinimum, Coexistence, Critical };

struct PhasePoint {
  double x = 0.0;
  double T2 = 0.0, T4 = 0.0, T6 = 0.0;
  double delta = 0.0;
  Phase phase = Phase::SingleMinimum;
  bool degenerate = false;
  int real_roots = 0;
  int accessible_roots = 0;
};

PhasePoint classify(double x, const CouplingVector& c);

// Global minimiser of F among accessible local minima; ties go to the
// smaller u. Empty when no accessible minimum exists.
std::optional<double> equilibrium_branch(const RootSet& roots, double x, const CouplingVector& c);

struct Polyline {
  std::vector<std::array<double, 2>> points;  // (x, T6)
};

struct CriticalSetGrid {
  double T2 = 0.0;
  double T4 = 0.0;
  std::array<double, 2> x_range{0.0, 1.0};
  std::array<double, 2> T6_range{-1.0, 0.0};
  int nx = 2;
  int nT6 = 2;
  int threads = 1;
};

// Zero level set of the discriminant in the (x, T6) plane by marching
// squares with bisection on sign-changing grid edges.
std::vector<Polyline> critical_set(const CriticalSetGrid& grid);

struct TransportReport {
  double max_defect = 0.0;        // |u_T/u_x - 2k chi_k u^k|
  double fitted_coefficient = 0;  // least squares C in u_T/u_x = C u^{2k-1}
  double power_law_defect = 0.0;  // residual of that fit (max abs)
  std::vector<double> ratios;     // u_T/u_x per grid point
};

// Finite-difference check of the leading-order Hopf transport law along the
// equilibrium branch.
TransportReport transport_consistency(const CouplingVector& c, int k, std::span<const double> xs, double delta);

}  // namespace shocklab::continuum
