#pragma once

#include <map>
#include <vector>

namespace shocklab {

// Coupling constants t_{2j}, j = 1..q, of the even matrix model together with
// the thermodynamic scale N. The rescaled view is T_{2j} = N^{j-1} t_{2j}.
//
// Values are stored in the convention they were given in, so that the
// rescaled coefficients seen by the continuum equation of state are exactly
// the numbers a caller typed (no round trip through N^{j-1}).
class CouplingVector {
 public:
  CouplingVector() = default;

  // Keys are j (the coupling multiplies lambda^{2j}); j >= 1.
  static CouplingVector raw(const std::map<int, double>& t, int scale_N = 1);
  static CouplingVector rescaled(const std::map<int, double>& T, int scale_N);

  int scale() const noexcept { return scale_N_; }
  bool is_rescaled() const noexcept { return rescaled_; }

  // Highest j carried (nonzero or not); 0 for an empty vector.
  int size() const noexcept { return static_cast<int>(values_.size()); }
  // Highest j with a nonzero coupling; 0 when all couplings vanish.
  int order() const noexcept;
  bool is_zero() const noexcept { return order() == 0; }

  double t(int j) const;
  double T(int j) const;

  // Integrability of exp(-l^2/2 + sum t_{2j} l^{2j}): the top nonzero coupling
  // must be strictly negative (or every coupling zero).
  bool convergent() const noexcept;

  CouplingVector scaled_by(double s) const;
  CouplingVector with_t(int j, double value) const;
  // Same rescaled couplings T at a different scale N.
  CouplingVector at_scale(int scale_N) const;

  std::map<int, double> raw_map() const;
  std::map<int, double> rescaled_map() const;

 private:
  std::vector<double> values_;  // index j-1
  int scale_N_ = 1;
  bool rescaled_ = false;
};

}  // namespace shocklab
