#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hawkesq/control.hpp"
#include "hawkesq/rng.hpp"

using namespace hawkesq;

namespace {
ControlProblem left_scenario(int grid = 801) {
  return {HawkesParams(1.0, 0.5, 0.75), 1.0, 100, 100, 100, 8, 150, 10.0,
          grid};
}
ControlProblem right_scenario(int grid = 801) {
  return {HawkesParams(1.0, 0.5, 0.75), 1.0, 100, 100, 100, 12, 100, 10.0,
          grid};
}
}  // namespace

TEST_CASE("problem validation") {
  HawkesParams p(1.0, 0.5, 0.75);
  CHECK_THROWS_AS(ControlProblem(p, 0.0, 1, 1, 1, 1, 1, 1.0), ConfigError);
  CHECK_THROWS_AS(ControlProblem(p, 1.0, 1, 1, 0, 1, 0, 1.0),
                  DegenerateObjective);
  CHECK_THROWS_AS(ControlProblem(p, 1.0, 1, 1, 1, 1, 1, -2.0), ConfigError);
  CHECK_THROWS_AS(ControlProblem(p, 1.0, 1, 1, 1, 1, 1, 1.0, 1),
                  ConfigError);
}

TEST_CASE("stationary admission rate formula") {
  ControlProblem prob = left_scenario();
  CHECK(optimal_rate(0.0, 0.0, 0.0, prob) == 0.0);
  // (100 + 2*100*8) * 1 / (2*150 + 2*100) = 1700 / 500
  CHECK(optimal_rate(1.0, 0.0, 0.0, prob) == doctest::Approx(3.4));
  // clamped at zero when adjoints disfavor admission
  CHECK(optimal_rate(1.0, 5000.0, 0.0, prob) == 0.0);
  // stiff speed penalty suppresses admission
  ControlProblem heavy(HawkesParams(1.0, 0.5, 0.75), 1.0, 100, 100, 100, 8,
                       1e12, 10.0);
  CHECK(optimal_rate(1.0, 0.0, 0.0, heavy) < 1e-8);
}

TEST_CASE("forward states follow the mean dynamics") {
  ControlProblem prob = left_scenario();
  const int n = prob.grid_points;
  std::vector<double> grid(n), mu(n, 0.7), x1, x2, x3;
  for (int i = 0; i < n; ++i) grid[i] = 10.0 * i / (n - 1);
  forward_states(prob, grid, mu, x1, x2, x3);
  // the intensity coordinate is the transient Hawkes mean
  for (int i : {100, 400, 800})
    CHECK(x1[i] == doctest::Approx(
                       transient_moments(prob.arrivals, grid[i])
                           .mean_intensity)
                       .epsilon(1e-9));
  for (double v : x2) CHECK(v >= 0.0);
  for (double v : x3) CHECK(v >= 0.0);
  // constant-rate outside queue solves E[Q_O]' = E[lambda] - mu E[Q_O]
  // whose steady level lambda_inf / mu needs a long horizon to appear
  ControlProblem slow(HawkesParams(1.0, 0.5, 0.75), 1.0, 100, 100, 100, 8,
                      150, 40.0, n);
  for (int i = 0; i < n; ++i) grid[i] = 40.0 * i / (n - 1);
  forward_states(slow, grid, mu, x1, x2, x3);
  CHECK(x2[n - 1] ==
        doctest::Approx(lambda_inf(slow.arrivals) / 0.7).epsilon(1e-3));
}

TEST_CASE("objective closed form for the pure-penalty case") {
  // mu = 0 and r_I = 0: only the constant -c k^2 term integrates
  ControlProblem prob(HawkesParams(1.0, 0.5, 0.75), 1.0, 100, 0, 100, 8,
                      150, 10.0, 401);
  std::vector<double> mu(prob.grid_points, 0.0);
  CHECK(objective(prob, mu) ==
        doctest::Approx(-100.0 * 64.0 * 10.0).epsilon(1e-12));
  CHECK_THROWS_AS(objective(prob, std::vector<double>(5, 0.0)),
                  DimensionMismatch);
}

TEST_CASE("no revenue and no target admits nobody") {
  ControlProblem prob(HawkesParams(1.0, 0.5, 0.75), 1.0, 0, 0, 100, 0, 150,
                      5.0, 201);
  ControlSolution sol = solve_control(prob);
  CHECK(sol.converged);
  for (double v : sol.mu_star) CHECK(v == 0.0);
}

TEST_CASE("sweep converges on the reference scenarios") {
  ControlSolution sl = solve_control(left_scenario());
  ControlSolution sr = solve_control(right_scenario());
  for (const ControlSolution& s : {sl, sr}) {
    CHECK(s.converged);
    CHECK(s.stationarity_residual < 1e-6);
    CHECK(s.gamma1.back() == 0.0);
    CHECK(s.gamma2.back() == 0.0);
    CHECK(s.gamma3.back() == 0.0);
    for (double v : s.mu_star) CHECK(v >= 0.0);
    for (double v : s.mean_outside) CHECK(v >= 0.0);
  }
  double peak_l = *std::max_element(sl.mu_star.begin(), sl.mu_star.end());
  double peak_r = *std::max_element(sr.mu_star.begin(), sr.mu_star.end());
  CHECK(peak_r / peak_l > 1.4);
  CHECK(peak_r / peak_l < 2.6);
}

TEST_CASE("solution is a local maximum") {
  ControlProblem prob = left_scenario(401);
  ControlSolution sol = solve_control(prob);
  Rng rng(31, 0, Rng::kGeneric);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> mu = sol.mu_star;
    for (double& v : mu)
      v = std::max(0.0, v + 0.1 * (2 * rng.uniform() - 1));
    CHECK(objective(prob, mu) <=
          sol.objective + 1e-9 * std::abs(sol.objective));
  }
}

TEST_CASE("stiffer speed penalty lowers total admission") {
  auto total = [](const ControlSolution& s) {
    double acc = 0;
    for (std::size_t i = 0; i + 1 < s.grid.size(); ++i)
      acc += 0.5 * (s.grid[i + 1] - s.grid[i]) *
             (s.mu_star[i] + s.mu_star[i + 1]);
    return acc;
  };
  ControlProblem a = left_scenario(401);
  ControlProblem b(HawkesParams(1.0, 0.5, 0.75), 1.0, 100, 100, 100, 8,
                   300, 10.0, 401);
  CHECK(total(solve_control(b)) < total(solve_control(a)) + 1e-9);
}

TEST_CASE("finite-difference gradient vanishes at the optimum") {
  ControlProblem prob = left_scenario(401);
  ControlSolution sol = solve_control(prob);
  const double h = 1e-4;
  auto grad_at = [&](const std::vector<double>& mu, int i) {
    std::vector<double> up = mu, dn = mu;
    up[i] += h;
    dn[i] = std::max(0.0, dn[i] - h);
    return (objective(prob, up) - objective(prob, dn)) / (up[i] - dn[i]);
  };
  // off-optimum controls have order-one gradients; the optimum's are tiny
  std::vector<double> shifted = sol.mu_star;
  for (double& v : shifted) v += 0.5;
  for (int i : {100, 200, 300}) {
    double g_opt = std::abs(grad_at(sol.mu_star, i));
    double g_off = std::abs(grad_at(shifted, i));
    CHECK(g_opt < 0.05 * g_off);
  }
}
