#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "hawkesq/errors.hpp"
#include "hawkesq/hawkes.hpp"

namespace hawkesq {

// Two-stage admission control: arrivals join an outside queue drained into an
// inside queue at a controllable rate mu_O(t), maximizing
//   int_0^T [ r_O mu_O E[Q_O] + r_I E[Q_I] - c (mu_O E[Q_O] - k)^2 - w mu_O^2 ]
// subject to the mean dynamics
//   E[lambda]' = beta (lambda* - E[lambda]) + alpha E[lambda]
//   E[Q_O]'    = E[lambda] - mu_O E[Q_O]
//   E[Q_I]'    = mu_O E[Q_O] - mu_I E[Q_I]
struct ControlProblem {
  HawkesParams arrivals;
  double mu_I;
  double r_O, r_I;
  double c;  // penalty on deviation of the admission throughput from k
  double k;  // target admission throughput
  double w;  // penalty on the admission rate itself
  double horizon;
  int grid_points;

  ControlProblem(HawkesParams p, double mu_inside, double rO, double rI,
                 double cc, double kk, double ww, double T, int n = 2001)
      : arrivals(p), mu_I(mu_inside), r_O(rO), r_I(rI), c(cc), k(kk), w(ww),
        horizon(T), grid_points(n) {
    if (mu_I <= 0) throw ConfigError("mu_I must be > 0");
    if (r_O < 0 || r_I < 0 || c < 0 || w < 0)
      throw ConfigError("revenues and penalties must be >= 0");
    if (w <= 0 && c <= 0) throw DegenerateObjective();
    if (T <= 0) throw ConfigError("horizon must be > 0");
    if (n < 2) throw ConfigError("grid_points must be >= 2");
  }
};

struct ControlSolution {
  std::vector<double> grid;
  std::vector<double> mu_star;
  std::vector<double> mean_intensity, mean_outside, mean_inside;
  std::vector<double> gamma1, gamma2, gamma3;
  double objective = 0;
  double stationarity_residual = 0;
  bool converged = false;
  int iterations = 0;
};

// Pontryagin stationarity point of the Hamiltonian in mu_O, clamped at 0.
inline double optimal_rate(double q_O, double gamma1, double gamma2,
                           const ControlProblem& prob) {
  double den = 2 * prob.w + 2 * prob.c * q_O * q_O;
  if (den <= 0) throw DegenerateObjective();
  double mu = (prob.r_O + 2 * prob.c * prob.k - gamma1 + gamma2) * q_O / den;
  return std::max(0.0, mu);
}

namespace detail {

// RK4 over the grid for a 3-state system with a linearly interpolated,
// grid-sampled coefficient path.
template <typename Deriv>
void rk4_path(const std::vector<double>& grid, Deriv f,
              std::array<double, 3> y, bool backward,
              std::vector<std::array<double, 3>>& out) {
  const int n = static_cast<int>(grid.size());
  out.assign(n, {});
  auto step = [&](int i, int j) {
    // integrate from grid[i] to grid[j]
    double h = grid[j] - grid[i];
    auto k1 = f(static_cast<double>(i), y);
    std::array<double, 3> y2, y3, y4;
    for (int s = 0; s < 3; ++s) y2[s] = y[s] + 0.5 * h * k1[s];
    auto k2 = f(0.5 * (i + j), y2);
    for (int s = 0; s < 3; ++s) y3[s] = y[s] + 0.5 * h * k2[s];
    auto k3 = f(0.5 * (i + j), y3);
    for (int s = 0; s < 3; ++s) y4[s] = y[s] + h * k3[s];
    auto k4 = f(static_cast<double>(j), y4);
    for (int s = 0; s < 3; ++s)
      y[s] += h / 6.0 * (k1[s] + 2 * k2[s] + 2 * k3[s] + k4[s]);
  };
  if (!backward) {
    out[0] = y;
    for (int i = 0; i + 1 < n; ++i) {
      step(i, i + 1);
      out[i + 1] = y;
    }
  } else {
    out[n - 1] = y;
    for (int i = n - 1; i > 0; --i) {
      step(i, i - 1);
      out[i - 1] = y;
    }
  }
}

inline double interp(const std::vector<double>& v, double idx) {
  int i = static_cast<int>(std::floor(idx));
  int j = std::min(i + 1, static_cast<int>(v.size()) - 1);
  double f = idx - i;
  return (1 - f) * v[i] + f * v[j];
}

}  // namespace detail

inline void forward_states(const ControlProblem& prob,
                           const std::vector<double>& grid,
                           const std::vector<double>& mu,
                           std::vector<double>& x1, std::vector<double>& x2,
                           std::vector<double>& x3) {
  const double a = prob.arrivals.jump, b = prob.arrivals.decay,
               ls = prob.arrivals.baseline;
  auto f = [&](double idx, const std::array<double, 3>& y) {
    double m = std::max(0.0, detail::interp(mu, idx));
    return std::array<double, 3>{b * (ls - y[0]) + a * y[0],
                                 y[0] - m * y[1],
                                 m * y[1] - prob.mu_I * y[2]};
  };
  std::vector<std::array<double, 3>> out;
  detail::rk4_path(grid, f, {prob.arrivals.initial_intensity, 0.0, 0.0},
                   false, out);
  const int n = static_cast<int>(grid.size());
  x1.resize(n);
  x2.resize(n);
  x3.resize(n);
  for (int i = 0; i < n; ++i) {
    x1[i] = out[i][0];
    x2[i] = std::max(0.0, out[i][1]);
    x3[i] = std::max(0.0, out[i][2]);
  }
}

// Running payoff of the objective at one grid point.
inline double running_payoff(const ControlProblem& p, double mu, double q_O,
                             double q_I) {
  double thr = mu * q_O - p.k;
  return p.r_O * mu * q_O + p.r_I * q_I - p.c * thr * thr - p.w * mu * mu;
}

// Trapezoidal objective along the forward states induced by mu_path.
inline double objective(const ControlProblem& prob,
                        const std::vector<double>& mu_path) {
  if (static_cast<int>(mu_path.size()) != prob.grid_points)
    throw DimensionMismatch();
  const int n = prob.grid_points;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i)
    grid[i] = prob.horizon * i / (n - 1);
  std::vector<double> x1, x2, x3;
  forward_states(prob, grid, mu_path, x1, x2, x3);
  double J = 0;
  for (int i = 0; i + 1 < n; ++i) {
    double f0 = running_payoff(prob, mu_path[i], x2[i], x3[i]);
    double f1 = running_payoff(prob, mu_path[i + 1], x2[i + 1], x3[i + 1]);
    J += 0.5 * (grid[i + 1] - grid[i]) * (f0 + f1);
  }
  return J;
}

// Forward-backward sweep. Adjoints follow gamma_i' = -dH/dx_i with
// gamma(T) = 0, where gamma1, gamma2, gamma3 pair with E[Q_O], E[Q_I],
// E[lambda]:
//   gamma1' = -r_O mu + 2 c mu (mu q_O - k) + (gamma1 - gamma2) mu
//   gamma2' = -r_I + gamma2 mu_I
//   gamma3' = -gamma1 + (beta - alpha) gamma3
inline ControlSolution solve_control(const ControlProblem& prob,
                                     int max_iters = 500,
                                     double tol = 1e-12) {
  const int n = prob.grid_points;
  ControlSolution sol;
  sol.grid.resize(n);
  for (int i = 0; i < n; ++i)
    sol.grid[i] = prob.horizon * i / (n - 1);

  std::vector<double> mu(n, 0.0), x1, x2, x3;
  std::vector<double> g1(n, 0.0), g2(n, 0.0), g3(n, 0.0);
  double omega = 0.5;
  double prev_obj = -std::numeric_limits<double>::infinity();
  int it = 0;
  bool converged = false;
  auto backward = [&]() {
    auto fb = [&](double idx, const std::array<double, 3>& y) {
      double m = std::max(0.0, detail::interp(mu, idx));
      double qo = detail::interp(x2, idx);
      return std::array<double, 3>{
          -prob.r_O * m + 2 * prob.c * m * (m * qo - prob.k) +
              (y[0] - y[1]) * m,
          -prob.r_I + y[1] * prob.mu_I,
          -y[0] + prob.arrivals.gap() * y[2]};
    };
    std::vector<std::array<double, 3>> adj;
    detail::rk4_path(sol.grid, fb, {0.0, 0.0, 0.0}, true, adj);
    for (int i = 0; i < n; ++i) {
      g1[i] = adj[i][0];
      g2[i] = adj[i][1];
      g3[i] = adj[i][2];
    }
  };
  for (; it < max_iters; ++it) {
    forward_states(prob, sol.grid, mu, x1, x2, x3);
    backward();

    double delta = 0, scale = 1e-12;
    std::vector<double> mu_new(n);
    for (int i = 0; i < n; ++i) {
      double target = optimal_rate(x2[i], g1[i], g2[i], prob);
      mu_new[i] = (1 - omega) * mu[i] + omega * target;
      delta = std::max(delta, std::abs(mu_new[i] - mu[i]));
      scale = std::max(scale, std::abs(mu_new[i]));
    }
    double obj = objective(prob, mu_new);
    if (obj + 1e-12 * (1 + std::abs(prev_obj)) < prev_obj && omega > 1e-3) {
      omega *= 0.5;  // regression: damp harder and retry from current mu
      continue;
    }
    prev_obj = obj;
    mu.swap(mu_new);
    if (delta <= tol * (1 + scale)) {
      converged = true;
      ++it;
      break;
    }
  }

  forward_states(prob, sol.grid, mu, x1, x2, x3);
  backward();  // adjoints consistent with the final control
  sol.mu_star = mu;
  sol.mean_intensity = x1;
  sol.mean_outside = x2;
  sol.mean_inside = x3;
  sol.gamma1 = g1;
  sol.gamma2 = g2;
  sol.gamma3 = g3;
  sol.objective = objective(prob, mu);
  sol.iterations = it;
  sol.converged = converged;

  // Hamiltonian stationarity: dH/dmu = 0 at interior points, <= 0 where the
  // mu >= 0 constraint binds.
  double resid = 0;
  for (int i = 0; i < n; ++i) {
    double dH = (prob.r_O + 2 * prob.c * prob.k - g1[i] + g2[i]) * x2[i] -
                (2 * prob.w + 2 * prob.c * x2[i] * x2[i]) * mu[i];
    if (mu[i] <= 0 && dH < 0) dH = 0;  // KKT sign at the boundary
    resid = std::max(resid, std::abs(dH));
  }
  sol.stationarity_residual = resid;
  return sol;
}

}  // namespace hawkesq
