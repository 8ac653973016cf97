#include <doctest.h>

#include <cmath>

#include "shocklab/errors.hpp"
#include "shocklab/shock.hpp"

using namespace shocklab;
using namespace shocklab::shock;

namespace {

lattice::OrderParameterTrace trace(int n, double (*f)(double)) {
  lattice::OrderParameterTrace t;
  t.N = n;
  for (int i = 1; i <= n; ++i) {
    t.x.push_back(static_cast<double>(i) / n);
    t.u.push_back(f(t.x.back()));
  }
  return t;
}

double ripple(double x) { return x + (x > 0.5 ? 0.01 * std::cos(3.14159265358979 * 100 * x) : 0.0); }
double faint(double x) { return 0.5 + 1e-4 * std::cos(3.14159265358979 * 200 * x); }

}  // namespace

TEST_CASE("monotone samples never flag") {
  const auto t = trace(100, [](double x) { return x * x + x; });
  const auto r = detect_oscillations(t);
  CHECK_FALSE(r.flag);
  CHECK(std::isnan(r.onset));
  CHECK(r.envelope.empty());
}

TEST_CASE("detector preconditions") {
  const auto t = trace(24, [](double x) { return x; });
  CHECK_THROWS_AS(detect_oscillations(t), Error);
  CHECK_NOTHROW(detect_oscillations(trace(25, [](double x) { return x; })));
  OscillationOptions o;
  o.window = 2;
  CHECK_THROWS_AS(detect_oscillations(trace(100, [](double x) { return x; }), o), Error);
}

TEST_CASE("period-two ripple flags at its first extremum") {
  const auto r = detect_oscillations(trace(200, ripple));
  REQUIRE(r.flag);
  CHECK(r.onset > 0.5);
  CHECK(r.onset < 0.52);
  for (std::size_t i = 1; i < r.envelope.size(); ++i) CHECK(r.envelope[i].maximum != r.envelope[i - 1].maximum);
  for (const auto& e : r.envelope) CHECK(e.x > 0.5);
}

TEST_CASE("ripples below the amplitude tolerance do not flag") {
  const auto t = trace(200, faint);
  CHECK_FALSE(detect_oscillations(t).flag);
  OscillationOptions o;
  o.amp_tol = 1e-4;
  CHECK(detect_oscillations(t, o).flag);
}

TEST_CASE("zero coupling lattice matches the continuum exactly") {
  const int N = 100;
  const auto c = CouplingVector::raw({}, N);
  const auto sol = lattice::solve_string(c, 120);
  const auto cmp = compare(lattice::order_parameter(sol.window, N), c);
  CHECK(cmp.max_deviation < 1e-12);
  CHECK_FALSE(cmp.oscillations.flag);
  for (bool s : cmp.single_valued) CHECK(s);
}

TEST_CASE("smooth quartic comparison is deterministic") {
  const int N = 100;
  const auto c = CouplingVector::rescaled({{1, 0.0}, {2, 0.1}, {3, -0.01}}, N);
  const auto sol = lattice::solve_string(c, 120);
  const auto t = lattice::order_parameter(sol.window, N);
  const auto a = compare(t, c), b = compare(t, c);
  CHECK_FALSE(a.oscillations.flag);
  CHECK(a.max_deviation == b.max_deviation);
  CHECK(a.u_continuum == b.u_continuum);
  CHECK(a.smooth_max_deviation == a.max_deviation);
}

TEST_CASE("comparison without any branch") {
  lattice::OrderParameterTrace t;
  t.N = 10;
  t.x = {0.1, 0.2, 0.3};
  t.u = {0.1, 0.2, 0.3};
  // Omega = -x - u has only the negative root u = -x.
  CHECK_THROWS_AS(compare(t, CouplingVector::raw({{1, 1.0}}, 10)), Error);
}

TEST_CASE("probe windows reach past the probe") {
  for (int N : {100, 200, 400})
    for (double x : {0.1, 0.25, 0.6}) {
      const int M = window_for_probe(x, N, 3);
      CHECK(M - lattice::default_buffer_width(M, 3) >= std::ceil((1.25 * x + 0.1) * N));
    }
}

TEST_CASE("convergence study") {
  const auto c = CouplingVector::rescaled({{1, 0.0}, {2, 0.1}, {3, -0.01}}, 100);
  const auto s = convergence_study(c, {100, 200, 400}, 0.25);
  REQUIRE(s.rows.size() == 3);
  CHECK(s.strictly_decreasing);
  CHECK(s.order > 1.5);
  CHECK(s.rows[2].site == 100);
  const auto fig3 = CouplingVector::rescaled({{1, 1.0}, {2, -0.25}, {3, -0.25}}, 100);
  CHECK_THROWS_AS(convergence_study(fig3, {100}, 0.02), Error);
  CHECK_THROWS_AS(convergence_study(c, {100}, 0.0), Error);
  CHECK_THROWS_AS(convergence_study(c, {}, 0.25), Error);
}
