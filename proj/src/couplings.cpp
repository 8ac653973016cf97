#include "shocklab/couplings.hpp"

#include <cmath>
#include <string>

#include "shocklab/errors.hpp"

namespace shocklab {

namespace {

std::vector<double> to_dense(const std::map<int, double>& entries) {
  std::vector<double> out;
  for (const auto& [j, value] : entries) {
    if (j < 1) throw Error(ErrorKind::InvalidInput, "coupling index must be positive, got j=" + std::to_string(j));
    if (!std::isfinite(value)) throw Error(ErrorKind::InvalidInput, "coupling t" + std::to_string(2 * j) + " is not finite");
    if (static_cast<int>(out.size()) < j) out.resize(j, 0.0);
    out[j - 1] = value;
  }
  return out;
}

}  // namespace

CouplingVector CouplingVector::raw(const std::map<int, double>& t, int scale_N) {
  if (scale_N < 1) throw Error(ErrorKind::InvalidInput, "scale N must be a positive integer");
  CouplingVector c;
  c.values_ = to_dense(t);
  c.scale_N_ = scale_N;
  c.rescaled_ = false;
  return c;
}

CouplingVector CouplingVector::rescaled(const std::map<int, double>& T, int scale_N) {
  CouplingVector c = raw(T, scale_N);
  c.rescaled_ = true;
  return c;
}

int CouplingVector::order() const noexcept {
  for (int j = size(); j >= 1; --j)
    if (values_[j - 1] != 0.0) return j;
  return 0;
}

double CouplingVector::t(int j) const {
  if (j < 1 || j > size()) return 0.0;
  const double v = values_[j - 1];
  return rescaled_ ? v / std::pow(static_cast<double>(scale_N_), j - 1) : v;
}

double CouplingVector::T(int j) const {
  if (j < 1 || j > size()) return 0.0;
  const double v = values_[j - 1];
  return rescaled_ ? v : v * std::pow(static_cast<double>(scale_N_), j - 1);
}

bool CouplingVector::convergent() const noexcept {
  const int q = order();
  return q == 0 || values_[q - 1] < 0.0;
}

CouplingVector CouplingVector::scaled_by(double s) const {
  CouplingVector c = *this;
  for (double& v : c.values_) v *= s;
  return c;
}

CouplingVector CouplingVector::with_t(int j, double value) const {
  if (j < 1) throw Error(ErrorKind::InvalidInput, "coupling index must be positive");
  CouplingVector c = *this;
  if (c.size() < j) c.values_.resize(j, 0.0);
  c.values_[j - 1] = rescaled_ ? value * std::pow(static_cast<double>(scale_N_), j - 1) : value;
  return c;
}

CouplingVector CouplingVector::at_scale(int scale_N) const {
  return rescaled(rescaled_map(), scale_N);
}

std::map<int, double> CouplingVector::raw_map() const {
  std::map<int, double> out;
  for (int j = 1; j <= size(); ++j) out[j] = t(j);
  return out;
}

std::map<int, double> CouplingVector::rescaled_map() const {
  std::map<int, double> out;
  for (int j = 1; j <= size(); ++j) out[j] = T(j);
  return out;
}

}  // namespace shocklab
