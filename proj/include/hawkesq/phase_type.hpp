#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hawkesq/errors.hpp"
#include "hawkesq/matrix_kit.hpp"
#include "hawkesq/rng.hpp"

namespace hawkesq {

// Absorption-time distribution of a finite CTMC: sub-generator S (Hurwitz,
// nonnegative off-diagonal), initial distribution theta, exit rates -S 1.
struct PhaseTypeDist {
  Matrix S;
  Vector theta;
  Vector exit;                     // s = -S 1
  bool distinct_rates_ok = true;   // hyperexp constructor flag

  int phases() const { return static_cast<int>(S.rows()); }

  PhaseTypeDist(Matrix S_, Vector theta_) : S(std::move(S_)), theta(std::move(theta_)) {
    const Eigen::Index n = S.rows();
    if (S.cols() != n || n < 1 || n > kMaxPhases)
      throw InvalidSubGenerator("sub-generator must be square");
    if (theta.size() != n) throw InvalidInitialDist("dimension mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(S(i, i) < 0)) throw InvalidSubGenerator("diagonal must be < 0");
      double row = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j && S(i, j) < 0)
          throw InvalidSubGenerator("off-diagonal must be >= 0");
        row += S(i, j);
      }
      if (row > 1e-12) throw InvalidSubGenerator("row sums must be <= 0");
      if (theta(i) < 0) throw InvalidInitialDist("theta must be >= 0");
    }
    if (std::abs(theta.sum() - 1.0) > 1e-12)
      throw InvalidInitialDist("theta must sum to 1");
    Eigen::EigenSolver<Matrix> es(S);
    for (Eigen::Index i = 0; i < n; ++i)
      if (es.eigenvalues()(i).real() >= 0)
        throw InvalidSubGenerator("sub-generator must be Hurwitz");
    exit = -S * Vector::Ones(n);
  }
};

inline PhaseTypeDist exponential_dist(double mu) {
  Matrix S(1, 1);
  S << -mu;
  Vector th(1);
  th << 1.0;
  return PhaseTypeDist(S, th);
}

// n phases of rate n*mu each in series: S^T = n mu (N - I), mean 1/mu.
inline PhaseTypeDist erlang(int n, double mu) {
  if (n < 1 || mu <= 0) throw ConfigError("erlang: need n >= 1, mu > 0");
  Matrix S = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    S(i, i) = -n * mu;
    if (i + 1 < n) S(i, i + 1) = n * mu;
  }
  Vector th = Vector::Zero(n);
  th(0) = 1.0;
  return PhaseTypeDist(S, th);
}

// Mixture of exponentials: diagonal sub-generator S = -D.
inline PhaseTypeDist hyperexp(const Vector& theta, const Vector& mus) {
  if (theta.size() != mus.size()) throw DimensionMismatch();
  const Eigen::Index n = theta.size();
  Matrix S = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) S(i, i) = -mus(i);
  PhaseTypeDist d(S, theta);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(mus(i) - mus(j)) < 1e-12) d.distinct_rates_ok = false;
  return d;
}

inline bool is_hyperexp(const PhaseTypeDist& d) {
  return d.S.cwiseAbs().sum() ==
         d.S.diagonal().cwiseAbs().sum();
}

inline bool is_erlang(const PhaseTypeDist& d) {
  const int n = d.phases();
  if (d.theta(0) != 1.0) return false;
  double rate = -d.S(0, 0);
  Matrix ref = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    ref(i, i) = -rate;
    if (i + 1 < n) ref(i, i + 1) = rate;
  }
  return (d.S - ref).cwiseAbs().maxCoeff() < 1e-12;
}

inline double mean_service_time(const PhaseTypeDist& d) {
  Vector ones = Vector::Ones(d.phases());
  return -d.theta.dot(d.S.fullPivLu().solve(ones));
}

struct PhaseSample {
  double duration = 0;
  std::vector<int> phase_path;         // visited phases in order
  std::vector<double> holding_times;   // aligned with phase_path
};

// Embedded jump chain with exponential holding times.
inline PhaseSample sample(const PhaseTypeDist& d, Rng& rng) {
  const int n = d.phases();
  PhaseSample out;
  int phase = rng.pick(d.theta, n);
  while (true) {
    double rate = -d.S(phase, phase);
    double hold = rng.exponential(rate);
    out.phase_path.push_back(phase);
    out.holding_times.push_back(hold);
    out.duration += hold;
    // next state: exit with prob s_i / rate, else phase j w.p. S_ij / rate
    double u = rng.uniform() * rate;
    double acc = d.exit(phase);
    if (u <= acc) break;
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (j == phase) continue;
      acc += d.S(phase, j);
      if (u <= acc) {
        next = j;
        break;
      }
    }
    if (next < 0) break;  // numerical edge: treat as absorption
    phase = next;
  }
  return out;
}

// P(T > t) = theta^T e^{St} 1
inline double survival(const PhaseTypeDist& d, double t) {
  return d.theta.dot(expm(d.S * t) * Vector::Ones(d.phases()));
}

}  // namespace hawkesq
