#include <doctest.h>

#include <cmath>
#include <random>

#include "reference.hpp"
#include "shocklab/continuum.hpp"
#include "shocklab/errors.hpp"
#include "shocklab/lattice.hpp"

using namespace shocklab;
using namespace shocklab::lattice;

namespace {

LatticeWindow zero_ghosts(std::vector<double> B, int ghosts = 8) {
  return LatticeWindow(std::move(B), RightClosure::ClampToContinuum, std::vector<double>(ghosts, 0.0), ghosts);
}

std::vector<double> random_profile(std::mt19937_64& rng, int M, double lo = 0.2, double hi = 3.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> B(M);
  for (auto& v : B) v = d(rng);
  return B;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("printed V functions on a three-site chain") {
  const auto w = zero_ghosts({1, 2, 3});
  CHECK(v_explicit(w, 2, 1) == 2.0);
  CHECK(v_explicit(w, 2, 2) == 12.0);
  CHECK(v_explicit(w, 2, 3) == 66.0);
  CHECK(v_general(w, 2, 2) == 12.0);
  CHECK(v_general(w, 2, 3) == 66.0);
  CHECK(v_general(w, 0, 4) == 0.0);
  CHECK_THROWS_AS(v_explicit(w, 2, 4), Error);
}

TEST_CASE("walk formula agrees with the printed forms on random windows") {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = LatticeWindow(random_profile(rng, 12), RightClosure::LinearExtrapolation);
    for (int k = 1; k <= 3; ++k)
      for (long n = 1; n <= 12; ++n) worst = std::max(worst, rel(v_general(w, n, k), v_explicit(w, n, k)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("walk formula matches the telescoped diagonal of a dense Lax power") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto w = zero_ghosts(random_profile(rng, 14), 16);
    for (int k = 1; k <= 6; ++k)
      for (long n : {1L, 2L, 5L, 9L}) CHECK(rel(v_general(w, n, k), ref::v_telescoped(w, n, k)) < 1e-10);
  }
}

TEST_CASE("constant profile gives the central binomial weights") {
  const double c = 1.7;
  const auto w = LatticeWindow(std::vector<double>(40, c), RightClosure::ClampToContinuum, std::vector<double>(10, c), 10);
  for (int k = 1; k <= 6; ++k) {
    CHECK(rel(v_general(w, 20, k), ref::binomial(2 * k - 1, k - 1) * std::pow(c, k)) < 1e-13);
    CHECK(ref::binomial(2 * k - 1, k - 1) == continuum::chi(k));
  }
}

TEST_CASE("window ghosts and closure") {
  const LatticeWindow lin({1, 2, 4}, RightClosure::LinearExtrapolation, {}, 3);
  CHECK(lin(0) == 0.0);
  CHECK(lin(-5) == 0.0);
  CHECK(lin(4) == doctest::Approx(6.0));
  CHECK(lin(6) == doctest::Approx(10.0));
  CHECK_THROWS_AS(lin(7), Error);
  const auto clamp = zero_ghosts({1, 2}, 2);
  CHECK(clamp(3) == 0.0);
  CHECK_THROWS_AS(clamp(5), Error);
  CHECK(LatticeWindow::gaussian(5, 2).reported_size() == 3);
}

TEST_CASE("string residual at zero coupling") {
  const auto c = CouplingVector::raw({}, 10);
  for (double r : string_residual(LatticeWindow::gaussian(30), c)) CHECK(r == 0.0);
  std::vector<double> B(30);
  for (int n = 1; n <= 30; ++n) B[n - 1] = n + 1.0;
  for (double r : string_residual(LatticeWindow(B, RightClosure::LinearExtrapolation), c)) CHECK(r == 1.0);
}

TEST_CASE("constant profile reproduces the equation of state") {
  const auto T = std::map<int, double>{{1, 0.2}, {2, 0.1}, {3, -0.008}};
  const double u = 0.7, x = 0.35;
  for (int N : {100, 1000}) {
    const auto c = CouplingVector::rescaled(T, N);
    const int n = static_cast<int>(x * N);
    std::vector<double> B(2 * n, u * N);
    const LatticeWindow w(B, RightClosure::ClampToContinuum, std::vector<double>(4, u * N), 4);
    const double lhs = string_residual(w, c)[n - 1] / N;
    const auto eos = continuum::eos_coefficients(c, static_cast<double>(n) / N);
    CHECK(lhs == doctest::Approx(eos(u)).epsilon(1e-12));
  }
  // Printed coefficients 2, 12, 60 for j = 1, 2, 3.
  const auto eos = continuum::eos_coefficients(CouplingVector::rescaled(T, 50), x);
  CHECK(eos.coefficients[1] == doctest::Approx(1.0 - 2 * 0.2));
  CHECK(eos.coefficients[2] == doctest::Approx(-12 * 0.1));
  CHECK(eos.coefficients[3] == doctest::Approx(-60 * -0.008));
}

TEST_CASE("banded Jacobian matches central differences") {
  std::mt19937_64 rng(3);
  const auto c = CouplingVector::rescaled({{1, 0.1}, {2, 0.05}, {3, -0.004}, {4, -0.0005}}, 20);
  for (auto closure : {RightClosure::LinearExtrapolation, RightClosure::ClampToContinuum}) {
    std::vector<double> B = random_profile(rng, 24, 5.0, 30.0);
    auto make = [&](std::vector<double> v) {
      return closure == RightClosure::ClampToContinuum
                 ? LatticeWindow(std::move(v), closure, std::vector<double>(3, 25.0), 3)
                 : LatticeWindow(std::move(v), closure);
    };
    const auto J = string_jacobian(make(B), c);
    const auto F = ref::fd_jacobian(B, c, make);
    double scale = 0.0, worst = 0.0;
    for (const auto& row : F)
      for (double v : row) scale = std::max(scale, std::abs(v));
    for (int r = 0; r < 24; ++r)
      for (int col = 0; col < 24; ++col) worst = std::max(worst, std::abs(J(r, col) - F[r][col]));
    CHECK(worst / scale < 1e-6);
    CHECK(J.half_width == 3);
  }
}

TEST_CASE("zero coupling solve is the Gaussian chain") {
  const auto sol = solve_string(CouplingVector::raw({}, 100), 500);
  CHECK(sol.residual < 1e-13);
  for (int n = 1; n <= 500; ++n) REQUIRE(sol.window(n) == n);
}

TEST_CASE("quadratic coupling rescales the Gaussian chain") {
  const double t2 = 0.15;
  const auto sol = solve_string(CouplingVector::raw({{1, t2}}, 50), 60);
  for (int n = 1; n <= 60; ++n) CHECK(sol.window(n) == doctest::Approx(n / (1 - 2 * t2)).epsilon(1e-13));
}

TEST_CASE("solver preconditions") {
  const auto c = CouplingVector::rescaled({{2, 0.1}, {3, -0.01}}, 100);
  CHECK_THROWS_AS(solve_string(c, 11), Error);
  std::map<int, double> big{{9, -1e-30}};
  CHECK_THROWS_AS(solve_string(CouplingVector::raw(big, 10), 100), Error);
  SolveOptions bad;
  bad.max_continuation_steps = 10;
  CHECK_THROWS_AS(solve_string(c, 100, bad), Error);
  CHECK(default_buffer_width(211, 3) == 11);
  CHECK(default_buffer_width(40, 3) == 6);
}

TEST_CASE("quartic solve tracks the continuum root") {
  const int N = 100;
  const auto c = CouplingVector::rescaled({{1, 0.0}, {2, 0.1}, {3, -0.01}}, N);
  const auto sol = solve_string(c, 120);
  CHECK(sol.residual < 1e-9);
  const auto trace = order_parameter(sol.window, N);
  REQUIRE(trace.size() == 120u - default_buffer_width(120, 3));
  double worst = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto roots = continuum::solve_eos(continuum::eos_coefficients(c, trace.x[i]));
    REQUIRE(roots.count() == 1);
    worst = std::max(worst, std::abs(trace.u[i] - roots.roots[0].u));
  }
  // Leading lattice corrections are O(1/N).
  CHECK(worst < 0.5 / N);
}

TEST_CASE("order parameter samples") {
  const auto t = order_parameter(LatticeWindow::gaussian(20), 10);
  REQUIRE(t.size() == 20u);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.u[i] == doctest::Approx(t.x[i]));
  CHECK(order_parameter(LatticeWindow::gaussian(0), 10).size() == 0u);
}

TEST_CASE("right closure falls back to extrapolation where the branch is not unique") {
  const auto smooth = CouplingVector::rescaled({{2, 0.1}, {3, -0.01}}, 100);
  CHECK(close_window(std::vector<double>(50, 1.0), smooth, RightClosure::ClampToContinuum, 2).closure() ==
        RightClosure::ClampToContinuum);
  const auto split = CouplingVector::rescaled({{2, 0.1}, {3, -0.0067}}, 100);
  CHECK(close_window(std::vector<double>(21, 1.0), split, RightClosure::ClampToContinuum, 2).closure() ==
        RightClosure::LinearExtrapolation);
}
