#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <tuple>
#include <utility>
#include <vector>

#include "hawkesq/errors.hpp"
#include "hawkesq/ode.hpp"

namespace hawkesq {

// Self-exciting process: intensity jumps by `jump` at each arrival and decays
// at rate `decay` toward `baseline`.
struct HawkesParams {
  double baseline;           // lambda* > 0
  double jump;               // alpha >= 0
  double decay;              // beta > 0
  double initial_intensity;  // lambda_0 >= 0

  HawkesParams(double baseline_, double jump_, double decay_,
               double initial_intensity_ = -1.0)
      : baseline(baseline_),
        jump(jump_),
        decay(decay_),
        initial_intensity(initial_intensity_ < 0 ? baseline_
                                                 : initial_intensity_) {
    if (baseline <= 0 || decay <= 0 || jump < 0 || initial_intensity < 0)
      throw ConfigError("HawkesParams: rates must be positive");
  }

  bool is_stable() const { return jump < decay; }
  double gap() const { return decay - jump; }

  void require_stable() const {
    if (!is_stable()) throw UnstableProcess();
    if (gap() < kNearSingularGapTol) throw NearSingularGap();
  }
};

struct HawkesMoments {
  double t;
  double mean_intensity;
  double mean_count;
  double var_intensity;
  double var_count;
  double cov_intensity_count;
};

inline double lambda_inf(const HawkesParams& p) {
  p.require_stable();
  return p.decay * p.baseline / p.gap();
}

inline HawkesMoments transient_moments(const HawkesParams& p, double t) {
  p.require_stable();
  const double a = p.jump, b = p.decay, l0 = p.initial_intensity;
  const double g = b - a;
  const double li = lambda_inf(p);
  const double e1 = std::exp(-g * t), e2 = std::exp(-2 * g * t);

  HawkesMoments m;
  m.t = t;
  m.mean_intensity = li + (l0 - li) * e1;
  m.mean_count = li * t + (l0 - li) / g * (1 - e1);
  m.var_intensity = a * a * li / (2 * g) + a * a * (l0 - li) / g * e1 -
                    a * a * (2 * l0 - li) / (2 * g) * e2;
  m.var_count = b * b * li / (g * g) * t +
                a * a * (2 * l0 - li) / (2 * g * g * g) * (1 - e2) -
                2 * a * b * (l0 - li) / (g * g) * t * e1 +
                ((b + a) / (g * g) * (l0 - li) - 2 * a * b / (g * g * g) * li) *
                    (1 - e1);
  m.cov_intensity_count =
      (a * li / g + a * a * li / (2 * g * g)) * (1 - e1) +
      a * a * (2 * l0 - li) / (2 * g * g) * (e2 - e1) +
      a * b * (l0 - li) / g * t * e1;
  return m;
}

// (mean intensity, intensity variance, intensity-count covariance) limits.
inline std::tuple<double, double, double> steady_state(const HawkesParams& p) {
  const double li = lambda_inf(p);
  const double a = p.jump, g = p.gap();
  return {li, a * a * li / (2 * g),
          a * li / g + a * a * li / (2 * g * g)};
}

// Mean intensity and mean count when jump >= decay.
inline std::pair<double, double> unstable_means(const HawkesParams& p,
                                                double t) {
  if (p.is_stable()) throw StableProcess();
  const double a = p.jump, b = p.decay, l0 = p.initial_intensity,
               ls = p.baseline;
  if (a - b < kNearSingularGapTol) {
    return {b * ls * t + l0, b * ls / 2 * t * t + l0 * t};
  }
  const double r = a - b;
  const double ert = std::exp(r * t);
  double mean_l = b * ls / r * (ert - 1) + l0 * ert;
  double mean_n = (b * ls / (r * r) + l0 / r) * (ert - 1) - b * ls / r * t;
  return {mean_l, mean_n};
}

// C(t, tau) = Cov[N_t, N_{t-tau}] for t >= tau >= 0, zero otherwise.
inline double autocov_count(const HawkesParams& p, double t, double tau) {
  p.require_stable();
  if (t < tau || tau < 0) return 0.0;
  const double a = p.jump, b = p.decay, l0 = p.initial_intensity;
  const double g = b - a;
  const double li = lambda_inf(p);
  const double u = t - tau;
  const double eu = std::exp(-g * u);

  double c = a * (1 - std::exp(-g * tau)) / (2 * g * g * g) *
             ((2 * b - a) * li -
              2 * eu * (a * l0 + b * (li - l0) * g * u + g * li));
  c += (li + 2 * a * li / g + a * a * li / (g * g)) * u;
  c += a * a * (2 * l0 - li) / (2 * g * g * g) *
       (1 - std::exp(-g * (2 * t - tau)));
  c -= 2 * a * b * (l0 - li) / (g * g) * u * eu;
  c += ((b + a) / (g * g) * (l0 - li) - 2 * a * b / (g * g * g) * li) *
       (1 - eu);
  return c;
}

// E[lambda_t^m N_t^l] by integrating the closed linear ODE system over all
// product moments of combined order <= m + l.
inline double general_moment_ode(const HawkesParams& p, int m, int l, double t,
                                 int order_cap = 4) {
  if (m < 0 || l < 0 || m + l > order_cap) throw OrderCapExceeded();
  const int cap = m + l;
  // states: all product moments E[lambda^a N^b] with a + b <= cap
  int nstates = (cap + 1) * (cap + 2) / 2;

  auto binom = [](int n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };

  // enumerate states in a flat list
  std::vector<std::pair<int, int>> states;
  states.reserve(nstates);
  for (int s = 0; s <= cap; ++s)
    for (int a = s; a >= 0; --a) states.emplace_back(a, s - a);
  auto find = [&](int a, int b) {
    for (int i = 0; i < (int)states.size(); ++i)
      if (states[i].first == a && states[i].second == b) return i;
    return -1;
  };

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nstates, nstates);
  for (int i = 0; i < nstates; ++i) {
    auto [mm, ll] = states[i];
    if (mm == 0 && ll == 0) continue;  // constant 1
    if (mm > 0) {
      A(i, find(mm - 1, ll)) += mm * p.decay * p.baseline;
      A(i, i) -= mm * p.decay;
    }
    for (int j = 0; j <= mm; ++j)
      for (int k = 0; k <= ll; ++k) {
        if (j == mm && k == ll) continue;
        int src = find(j + 1, k);
        if (src < 0) continue;  // cannot occur: j+1+k <= mm+ll
        A(i, src) +=
            binom(mm, j) * binom(ll, k) * std::pow(p.jump, mm - j);
      }
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(nstates);
  for (int i = 0; i < nstates; ++i) {
    auto [a, b] = states[i];
    y[i] = (b == 0) ? std::pow(p.initial_intensity, a) : 0.0;
  }
  auto f = [&](double, const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return A * v;
  };
  y = integrate_ode(f, y, 0.0, t);
  return y[find(m, l)];
}

}  // namespace hawkesq
