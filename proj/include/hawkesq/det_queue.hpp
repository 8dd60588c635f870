#pragma once

#include <cmath>

#include "hawkesq/errors.hpp"
#include "hawkesq/hawkes.hpp"

namespace hawkesq {

// Infinite-server queue with deterministic service: Q_t = N_t - N_{t-D}.
struct DetQueueModel {
  HawkesParams arrivals;
  double service_length;  // D > 0

  DetQueueModel(HawkesParams p, double D) : arrivals(p), service_length(D) {
    if (D <= 0) throw ConfigError("service_length must be > 0");
  }
};

inline double det_mean(const DetQueueModel& m, double t) {
  const HawkesParams& p = m.arrivals;
  p.require_stable();
  if (t <= 0) return 0.0;
  const double g = p.gap();
  const double li = lambda_inf(p);
  const double l0 = p.initial_intensity;
  const double D = m.service_length;
  if (t <= D) return li * t + (l0 - li) / g * (1 - std::exp(-g * t));
  return li * D +
         (l0 - li) / g * (std::exp(-g * (t - D)) - std::exp(-g * t));
}

inline double det_variance(const DetQueueModel& m, double t) {
  const HawkesParams& p = m.arrivals;
  p.require_stable();
  if (t <= 0) return 0.0;
  const double D = m.service_length;
  if (t <= D) return autocov_count(p, t, 0);
  return autocov_count(p, t, 0) + autocov_count(p, t - D, 0) -
         2 * autocov_count(p, t, D);
}

inline double det_autocov(const DetQueueModel& m, double t, double tau) {
  const HawkesParams& p = m.arrivals;
  p.require_stable();
  const double D = m.service_length;
  if (t <= tau || tau < 0) return 0.0;
  auto C = [&](double a, double b) { return autocov_count(p, a, b); };
  if (tau >= D) {
    if (t <= tau + D) return C(t, tau) - C(t - D, tau - D);
    return C(t, tau) + C(t - D, tau) - C(t, tau + D) - C(t - D, tau - D);
  }
  if (t <= D) return C(t, tau);
  if (t <= tau + D) return C(t, tau) - C(t - tau, D - tau);
  return C(t, tau) + C(t - D, tau) - C(t, tau + D) - C(t - tau, D - tau);
}

// Steady-state variance gap between deterministic service of length D and
// exponential service with rate 1/D; positive for all stable parameters.
inline double variance_gap_DM(const HawkesParams& p, double D) {
  p.require_stable();
  if (D <= 0) throw ConfigError("D must be > 0");
  const double a = p.jump, b = p.decay, g = p.gap();
  const double li = lambda_inf(p);
  const double mu = 1.0 / D;
  const double k = 2 * a * b - a * a;
  double vD = li * D * (1 + k / (g * g)) -
              li * (1 - std::exp(-g * D)) * k / (g * g * g);
  double vM = li / mu * (1 + k / (2 * g * (mu + g)));
  return vD - vM;
}

}  // namespace hawkesq
