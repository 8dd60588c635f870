#pragma once

#include <cmath>

#include "hawkesq/errors.hpp"
#include "hawkesq/hawkes.hpp"
#include "hawkesq/quadrature.hpp"

namespace hawkesq {

// "Impact of a click": compare a system against an identical copy that
// received one extra arrival at time 0 (initial intensity lambda_0 + alpha,
// count starting at 1).
struct ClickImpactQuery {
  HawkesParams arrivals;
  double mu;  // exponential page-dwell rate
  double m;   // advertising revenue per user per unit time
  double T;

  ClickImpactQuery(HawkesParams p, double mu_, double m_, double T_)
      : arrivals(p), mu(mu_), m(m_), T(T_) {
    if (mu <= 0) throw ConfigError("mu must be > 0");
    if (m < 0) throw ConfigError("m must be >= 0");
    if (T <= 0) throw ConfigError("T must be > 0");
    arrivals.require_stable();
  }
};

// E[N^_t] - E[N_t] = beta/(beta-alpha) - alpha/(beta-alpha) e^{-(beta-alpha)t}
inline double count_gap(const HawkesParams& p, double t) {
  p.require_stable();
  const double g = p.gap();
  return p.decay / g - p.jump / g * std::exp(-g * t);
}

// Mean of the exponential-service queue, safe across mu = beta - alpha.
inline double mean_queue_exp(const HawkesParams& p, double mu, double t) {
  p.require_stable();
  if (t <= 0) return 0.0;
  const double g = p.gap();
  const double li = lambda_inf(p);
  double hfac = std::abs(mu - g) <= kNearSingularGapTol
                    ? t * std::exp(-mu * t)
                    : (std::exp(-g * t) - std::exp(-mu * t)) / (mu - g);
  return li / mu * (1 - std::exp(-mu * t)) +
         (p.initial_intensity - li) * hfac;
}

// sigma(T) = int_0^T E[Q_t] dt, expected total time on the page by T.
inline double dwell_time(const ClickImpactQuery& q) {
  const HawkesParams& p = q.arrivals;
  const double g = p.gap(), mu = q.mu, T = q.T;
  const double li = lambda_inf(p);
  if (std::abs(mu - g) <= kNearSingularGapTol)
    return quadrature([&](double t) { return mean_queue_exp(p, mu, t); },
                      0.0, T);
  return li / mu * (T - (1 - std::exp(-mu * T)) / mu) +
         (p.initial_intensity - li) / (mu - g) *
             ((1 - std::exp(-g * T)) / g - (1 - std::exp(-mu * T)) / mu);
}

// Expected advertising revenue by time T.
inline double ad_revenue(const ClickImpactQuery& q) {
  return q.m * dwell_time(q);
}

// A^(T) - A(T): the extra revenue attributable to one click. The initial
// visitor contributes m(1 - e^{-mu T})/mu; the intensity bump contributes
// m alpha/(mu - g) ((1 - e^{-gT})/g - (1 - e^{-mu T})/mu) with g = beta-alpha.
inline double revenue_gap(const ClickImpactQuery& q) {
  const HawkesParams& p = q.arrivals;
  const double g = p.gap(), mu = q.mu, T = q.T;
  if (std::abs(mu - g) <= kNearSingularGapTol) throw NearSingularGap();
  return q.m * (1 - std::exp(-mu * T)) / mu +
         q.m * p.jump / (mu - g) *
             ((1 - std::exp(-g * T)) / g - (1 - std::exp(-mu * T)) / mu);
}

}  // namespace hawkesq
