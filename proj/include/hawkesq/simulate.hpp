#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "hawkesq/errors.hpp"
#include "hawkesq/hawkes.hpp"
#include "hawkesq/phase_type.hpp"
#include "hawkesq/rng.hpp"

namespace hawkesq {

inline constexpr std::size_t kDefaultEventCap = 10'000'000;

struct HawkesPath {
  std::vector<double> times;
  std::vector<double> intensities;  // pre-jump intensity at each arrival

  // N_t: number of arrivals in [0, t]
  std::size_t count_at(double t) const {
    return std::upper_bound(times.begin(), times.end(), t) - times.begin();
  }

  // lambda_t reconstructed from the recorded pre-jump intensities
  double intensity_at(const HawkesParams& p, double t) const {
    std::size_t k = count_at(t);
    double t_last = 0.0, lam_last = p.initial_intensity;
    if (k > 0) {
      t_last = times[k - 1];
      lam_last = intensities[k - 1] + p.jump;
    }
    return p.baseline +
           (lam_last - p.baseline) * std::exp(-p.decay * (t - t_last));
  }
};

// Thinning with exact exponential-decay intensity updates. The dominating
// rate on each step is max(current intensity, baseline), which bounds the
// intensity over the whole remaining inter-event interval.
inline HawkesPath simulate_hawkes(const HawkesParams& p, double horizon,
                                  Rng& rng,
                                  std::size_t cap = kDefaultEventCap) {
  if (horizon <= 0) throw ConfigError("horizon must be > 0");
  HawkesPath path;
  double t_last = 0.0;                       // time of last accepted event
  double lam_last = p.initial_intensity;     // intensity just after t_last
  double s = 0.0;
  double lam_s = lam_last;                   // intensity at current position
  while (true) {
    double bound = std::max(lam_s, p.baseline);
    s += rng.exponential(bound);
    if (s > horizon) break;
    lam_s = p.baseline +
            (lam_last - p.baseline) * std::exp(-p.decay * (s - t_last));
    if (rng.uniform() * bound <= lam_s) {
      path.times.push_back(s);
      path.intensities.push_back(lam_s);
      if (path.times.size() > cap) throw EventCapExceeded();
      t_last = s;
      lam_last = lam_s + p.jump;
      lam_s = lam_last;
    }
  }
  return path;
}

inline HawkesPath simulate_hawkes(const HawkesParams& p, double horizon,
                                  std::uint64_t seed, std::uint64_t rep = 0,
                                  std::size_t cap = kDefaultEventCap) {
  Rng rng(seed, rep, Rng::kArrivals);
  return simulate_hawkes(p, horizon, rng, cap);
}

// Infinite-server queue path with phase-type service: every arrival starts
// service immediately; the phase path drives per-phase occupancy.
struct QueuePathPH {
  HawkesPath arrivals;
  std::vector<PhaseSample> services;

  // per-phase occupancy at time t
  Vector occupancy(double t, int n_phases) const {
    Vector q = Vector::Zero(n_phases);
    for (std::size_t k = 0; k < arrivals.times.size(); ++k) {
      double at = arrivals.times[k];
      if (at > t) break;
      double s = at;
      const PhaseSample& ps = services[k];
      for (std::size_t j = 0; j < ps.phase_path.size(); ++j) {
        double e = s + ps.holding_times[j];
        if (t >= s && t < e) {
          q(ps.phase_path[j]) += 1;
          break;
        }
        s = e;
      }
    }
    return q;
  }
};

inline QueuePathPH simulate_queue_ph(const HawkesParams& p,
                                     const PhaseTypeDist& service,
                                     double horizon, std::uint64_t seed,
                                     std::uint64_t rep = 0,
                                     std::size_t cap = kDefaultEventCap) {
  QueuePathPH out;
  {
    Rng rng(seed, rep, Rng::kArrivals);
    out.arrivals = simulate_hawkes(p, horizon, rng, cap);
  }
  Rng srng(seed, rep, Rng::kService);
  out.services.reserve(out.arrivals.times.size());
  for (std::size_t k = 0; k < out.arrivals.times.size(); ++k)
    out.services.push_back(sample(service, srng));
  return out;
}

// Queue path with scalar service durations (deterministic, lognormal, or a
// user-supplied sampler).
struct QueuePathDur {
  HawkesPath arrivals;
  std::vector<double> durations;

  int occupancy(double t) const {
    int q = 0;
    for (std::size_t k = 0; k < arrivals.times.size(); ++k) {
      double at = arrivals.times[k];
      if (at > t) break;
      if (t < at + durations[k]) ++q;
    }
    return q;
  }
};

inline QueuePathDur simulate_queue_dur(
    const HawkesParams& p, const std::function<double(Rng&)>& sampler,
    double horizon, std::uint64_t seed, std::uint64_t rep = 0,
    std::size_t cap = kDefaultEventCap) {
  QueuePathDur out;
  {
    Rng rng(seed, rep, Rng::kArrivals);
    out.arrivals = simulate_hawkes(p, horizon, rng, cap);
  }
  Rng srng(seed, rep, Rng::kService);
  out.durations.reserve(out.arrivals.times.size());
  for (std::size_t k = 0; k < out.arrivals.times.size(); ++k)
    out.durations.push_back(sampler(srng));
  return out;
}

struct EstimateReport {
  double point = 0;
  double std_error = 0;
  std::size_t replications = 0;

  double z_score(double reference) const {
    return (point - reference) / (std_error > 0 ? std_error : 1e-300);
  }
};

// Runs `reps` independent replications of `one_rep`, which maps a
// replication index to a vector of statistics. Rows are keyed by replication
// index only, so the result is identical for any thread count.
inline Eigen::MatrixXd replicate(std::size_t reps, std::size_t dim,
                                 const std::function<Vector(std::size_t)>& one_rep,
                                 unsigned n_threads = 0) {
  if (reps < 2) throw InsufficientReps();
  Eigen::MatrixXd table(reps, dim);
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  if (n_threads <= 1) {
    for (std::size_t r = 0; r < reps; ++r) table.row(r) = one_rep(r);
    return table;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (unsigned w = 0; w < n_threads; ++w)
    pool.emplace_back([&] {
      while (true) {
        std::size_t r = next.fetch_add(1);
        if (r >= reps) return;
        table.row(r) = one_rep(r);
      }
    });
  for (auto& th : pool) th.join();
  return table;
}

inline EstimateReport mean_se(const Eigen::MatrixXd& table, int col) {
  const auto n = table.rows();
  double mean = table.col(col).mean();
  double ss = (table.col(col).array() - mean).square().sum();
  return {mean, std::sqrt(ss / (n - 1) / n), static_cast<std::size_t>(n)};
}

// Sample covariance of two replication columns, with a delta-method standard
// error from the per-replication cross products.
inline EstimateReport cov_se(const Eigen::MatrixXd& table, int cx, int cy) {
  const auto n = table.rows();
  double mx = table.col(cx).mean(), my = table.col(cy).mean();
  Eigen::ArrayXd z =
      (table.col(cx).array() - mx) * (table.col(cy).array() - my);
  double cov = z.sum() / (n - 1);
  double se = std::sqrt((z - z.mean()).square().sum() / (n - 1) / n);
  return {cov, se, static_cast<std::size_t>(n)};
}

}  // namespace hawkesq
