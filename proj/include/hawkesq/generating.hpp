#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "hawkesq/errors.hpp"
#include "hawkesq/matrix_kit.hpp"
#include "hawkesq/ode.hpp"
#include "hawkesq/queue_moments.hpp"

namespace hawkesq {

struct CgfQuery {
  Vector delta;  // delta_0 for the intensity, delta_1..delta_n per phase
  double t;
};

inline constexpr double kCgfBlowupLimit = 1e6;

// G(delta, t) = log E[exp(delta_0 lambda_t + sum_i delta_i Q_{t,i})],
// via the characteristics reduction: backward-integrate
//   h'(z) = 1 - e^{alpha h} theta^T (1 + e^{-S(z-t)}(e^{diag delta} - I) 1)
//           + beta h,   h(t) = delta_0,
// then G = beta lambda* int_0^t h + h(0) lambda_0.
inline double cgf(const QueueModel& m, const CgfQuery& q) {
  const int n = m.service.phases();
  if (q.delta.size() != n + 1) throw DimensionMismatch();
  if (q.t <= 0) return q.delta(0) * m.arrivals.initial_intensity;
  const Matrix& S = m.service.S;
  const Vector& th = m.service.theta;
  const double a = m.arrivals.jump, b = m.arrivals.decay;
  Vector ones = Vector::Ones(n);
  Vector jumpvec(n);  // (e^{diag delta} - I) 1
  for (int i = 0; i < n; ++i) jumpvec(i) = std::expm1(q.delta(i + 1));

  // substitute u = t - z so the integration runs forward:
  // H(u) = h(t - u), H' = -(1 - e^{aH} theta^T (1 + e^{Su} jumpvec) + bH)
  auto f = [&](double u, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    double H = y[0];
    if (std::abs(H) > kCgfBlowupLimit)
      throw CgfBlowup("cgf: characteristic blew up near z = " +
                      std::to_string(q.t - u));
    double phi = th.dot(ones + expm(S * u) * jumpvec);
    Eigen::VectorXd dy(2);
    dy[0] = -(1.0 - std::exp(a * H) * phi + b * H);
    dy[1] = H;  // accumulates int h dz
    return dy;
  };
  Eigen::VectorXd y0(2);
  y0 << q.delta(0), 0.0;
  Eigen::VectorXd y = integrate_ode(f, y0, 0.0, q.t, 1e-12, 1e-12);
  return b * m.arrivals.baseline * y[1] +
         y[0] * m.arrivals.initial_intensity;
}

inline double mgf(const QueueModel& m, const CgfQuery& q) {
  return std::exp(cgf(m, q));
}

// Residual of the generating-function PDE at (delta, t), via central finite
// differences of cgf; a self-consistency test utility.
inline double cgf_pde_residual(const QueueModel& m, const CgfQuery& q,
                               double h = 1e-3) {
  const int n = m.service.phases();
  const Matrix& S = m.service.S;
  const Vector& th = m.service.theta;
  const Vector& exit = m.service.exit;
  const double a = m.arrivals.jump, b = m.arrivals.decay,
               ls = m.arrivals.baseline;
  const Vector& d = q.delta;

  auto G = [&](const Vector& dd, double tt) { return cgf(m, {dd, tt}); };
  double dGdt = (G(d, q.t + h) - G(d, q.t - h)) / (2 * h);
  Vector grad(n + 1);
  for (int i = 0; i <= n; ++i) {
    Vector dp = d, dm = d;
    dp(i) += h;
    dm(i) -= h;
    grad(i) = (G(dp, q.t) - G(dm, q.t)) / (2 * h);
  }

  double coef0 = -d(0) * b;
  for (int i = 0; i < n; ++i)
    coef0 += th(i) * std::expm1(d(0) * a + d(i + 1));
  double rhs = d(0) * b * ls + coef0 * grad(0);
  for (int i = 0; i < n; ++i) {
    double ci = exit(i) * std::expm1(-d(i + 1));
    for (int k = 0; k < n; ++k)
      if (k != i) ci += S(i, k) * std::expm1(d(k + 1) - d(i + 1));
    rhs += ci * grad(i + 1);
  }
  return dGdt - rhs;
}

}  // namespace hawkesq
