#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hawkesq/errors.hpp"
#include "hawkesq/exp_poly.hpp"
#include "hawkesq/hawkes.hpp"
#include "hawkesq/matrix_kit.hpp"
#include "hawkesq/ode.hpp"
#include "hawkesq/phase_type.hpp"

namespace hawkesq {

// Infinite-server queue with self-exciting arrivals and phase-type service.
struct QueueModel {
  HawkesParams arrivals;
  PhaseTypeDist service;
};

struct QueueMoments {
  Vector mean;    // E[Q_t] per phase
  Vector cov_lq;  // Cov[lambda_t, Q_t] per phase
  Matrix cov_qq;  // Cov[Q_t, Q_t]
  bool fallback_used = false;
};

namespace detail {

inline double min_singular_value(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace detail

// Numerical integration of the coupled mean/covariance ODE system. Valid for
// stable and unstable arrivals; serves as oracle and singular-case fallback.
inline QueueMoments ode_reference(const QueueModel& m, double t,
                                  double tol = 1e-10) {
  const int n = m.service.phases();
  const Matrix& S = m.service.S;
  const Matrix ST = S.transpose();
  const Vector& th = m.service.theta;
  const double a = m.arrivals.jump, b = m.arrivals.decay,
               ls = m.arrivals.baseline;
  const double g = b - a;

  const int dim = 2 + 2 * n + n * n;
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(dim);
  y0[0] = m.arrivals.initial_intensity;

  auto f = [&](double, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    double el = y[0], vl = y[1];
    Eigen::Map<const Vector> q(y.data() + 2, n);
    Eigen::Map<const Vector> c(y.data() + 2 + n, n);
    Eigen::Map<const Matrix> V(y.data() + 2 + 2 * n, n, n);

    Eigen::VectorXd dy(dim);
    dy[0] = b * ls - g * el;
    dy[1] = -2 * g * vl + a * a * el;
    Eigen::Map<Vector>(dy.data() + 2, n) = th * el + ST * q;
    Eigen::Map<Vector>(dy.data() + 2 + n, n) =
        (ST - g * Matrix::Identity(n, n)) * c + a * th * el + th * vl;
    Matrix dV = ST * V + V * S + th * c.transpose() + c * th.transpose() +
                Matrix((th * el + ST * q).asDiagonal()) -
                ST * Matrix(q.asDiagonal()) - Matrix(q.asDiagonal()) * S;
    Eigen::Map<Matrix>(dy.data() + 2 + 2 * n, n, n) = dV;
    return dy;
  };
  Eigen::VectorXd y = integrate_ode(f, y0, 0.0, t, tol, tol);

  QueueMoments out;
  out.mean = Eigen::Map<const Vector>(y.data() + 2, n);
  out.cov_lq = Eigen::Map<const Vector>(y.data() + 2 + n, n);
  out.cov_qq = Eigen::Map<const Matrix>(y.data() + 2 + 2 * n, n, n);
  out.cov_qq = 0.5 * (out.cov_qq + out.cov_qq.transpose()).eval();
  return out;
}

// Shared precondition for the closed forms: stable arrivals and S + (b-a)I
// bounded away from singular.
inline void require_closed_form_ok(const QueueModel& m) {
  m.arrivals.require_stable();
  const int n = m.service.phases();
  Matrix shifted = m.service.S + m.arrivals.gap() * Matrix::Identity(n, n);
  if (detail::min_singular_value(shifted) < kNearSingularGapTol)
    throw NearSingularGap("S + (beta-alpha)I near singular");
}

inline Vector mean_vector(const QueueModel& m, double t) {
  require_closed_form_ok(m);
  const int n = m.service.phases();
  if (t <= 0) return Vector::Zero(n);
  const Matrix ST = m.service.S.transpose();
  const Vector& th = m.service.theta;
  const double g = m.arrivals.gap();
  const double li = lambda_inf(m.arrivals);
  const double l0 = m.arrivals.initial_intensity;
  Matrix I = Matrix::Identity(n, n);
  Matrix EsT = expm(ST * t);
  Vector first = (-ST).fullPivLu().solve(Vector((I - EsT) * th)) * li;
  Vector second = (ST + g * I).fullPivLu().solve(
      Vector((std::exp(-g * t) * I - EsT) * th));
  return first - (l0 - li) * second;
}

inline Vector cov_lambda_q(const QueueModel& m, double t) {
  require_closed_form_ok(m);
  const int n = m.service.phases();
  if (t <= 0) return Vector::Zero(n);
  const Matrix ST = m.service.S.transpose();
  const Vector& th = m.service.theta;
  const double a = m.arrivals.jump, b = m.arrivals.decay;
  const double g = m.arrivals.gap();
  const double li = lambda_inf(m.arrivals);
  const double l0 = m.arrivals.initial_intensity;
  Matrix I = Matrix::Identity(n, n);
  Matrix Eshift = expm((ST - g * I) * t);

  Vector r = a * (2 * b - a) * li / (2 * g) *
             (g * I - ST).fullPivLu().solve(Vector((I - Eshift) * th));
  r -= a * b * (l0 - li) / g *
       ST.fullPivLu().solve(Vector((std::exp(-g * t) * I - Eshift) * th));
  r += a * a * (2 * l0 - li) / (2 * g) *
       (ST + g * I).fullPivLu().solve(
           Vector((std::exp(-2 * g * t) * I - Eshift) * th));
  return r;
}

inline Matrix cov_matrix(const QueueModel& m, double t) {
  require_closed_form_ok(m);
  const int n = m.service.phases();
  if (t <= 0) return Matrix::Zero(n, n);
  const Matrix& S = m.service.S;
  const Matrix ST = S.transpose();
  const Vector& th = m.service.theta;
  const double a = m.arrivals.jump, b = m.arrivals.decay;
  const double g = m.arrivals.gap();
  const double li = lambda_inf(m.arrivals);
  const double l0 = m.arrivals.initial_intensity;
  Matrix I = Matrix::Identity(n, n);
  Matrix Es = expm(S * t);
  Matrix EsT = Es.transpose();
  Matrix ThTh = th * th.transpose();
  const double eg = std::exp(-g * t), eg2 = std::exp(-2 * g * t);

  Matrix W0 = m_matrix_sandwich(0.0, th, S, t);
  Matrix Wg = m_matrix_sandwich(-g, th, S, t);

  auto inv = [](const Matrix& A) { return A.inverse().eval(); };
  Matrix gmS_i = inv(g * I - S), gpS_i = inv(g * I + S);
  Matrix gmST_i = gmS_i.transpose(), gpST_i = gpS_i.transpose();
  Matrix S_i = inv(S), ST_i = S_i.transpose();

  Matrix A1 = 2 * g * W0 + ThTh - EsT * ThTh * Es +
              EsT * ThTh * (eg * I - Es) * gpS_i * (g * I - S) +
              (g * I - ST) * gpST_i * (eg * I - EsT) * ThTh * Es;
  Matrix term1 = a * (2 * b - a) * li / (2 * g) * gmST_i * A1 * gmS_i;

  Matrix A2 = g * Wg + eg * ThTh - EsT * ThTh * Es -
              EsT * ThTh * (eg * I - Es) * gpS_i * S -
              ST * gpST_i * (eg * I - EsT) * ThTh * Es;
  Matrix term2 = a * b * (l0 - li) / g * ST_i * A2 * S_i;

  Matrix A3 = eg2 * ThTh - EsT * ThTh * Es - EsT * ThTh * (eg * I - Es) -
              (eg * I - EsT) * ThTh * Es;
  Matrix term3 = -a * a * (2 * l0 - li) / (2 * g) * gpST_i * A3 * gpS_i;

  Vector mean1 = li * ST_i * (I - EsT) * th;
  Vector mean2 = (l0 - li) * (ST + g * I).fullPivLu().solve(
                     Vector((eg * I - EsT) * th));
  Matrix term4 = -Matrix(mean1.asDiagonal()) - Matrix(mean2.asDiagonal());

  Matrix C = term1 + term2 + term3 + term4;
  return 0.5 * (C + C.transpose());
}

// All three closed-form quantities, falling back to the ODE oracle near the
// singular cases.
inline QueueMoments queue_moments(const QueueModel& m, double t) {
  try {
    QueueMoments out;
    out.mean = mean_vector(m, t);
    out.cov_lq = cov_lambda_q(m, t);
    out.cov_qq = cov_matrix(m, t);
    return out;
  } catch (const NearSingularGap&) {
    QueueMoments out = ode_reference(m, t);
    out.fallback_used = true;
    return out;
  }
}

// Exact exponential-polynomial solution of the per-phase moment ODEs for
// service whose sub-generator is upper triangular (Erlang, hyper-exponential,
// Coxian). Handles the resonant rate coincidences (e.g. n*mu = beta-alpha)
// exactly, producing the t e^{-rt} branches.
inline QueueMoments expoly_moments(const QueueModel& m, double t) {
  m.arrivals.require_stable();
  const int n = m.service.phases();
  const Matrix& S = m.service.S;
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k)
      if (S(k, i) != 0.0)
        throw ConfigError("expoly_moments: sub-generator must be triangular");
  const Vector& th = m.service.theta;
  const double a = m.arrivals.jump, g = m.arrivals.gap();
  const double li = lambda_inf(m.arrivals);
  const double l0 = m.arrivals.initial_intensity;

  ExpPoly elam = ExpPoly::constant(li) + ExpPoly::term(l0 - li, 0, -g);
  ExpPoly vlam = ExpPoly::constant(a * a * li / (2 * g)) +
                 ExpPoly::term(a * a * (l0 - li) / g, 0, -g) +
                 ExpPoly::term(-a * a * (2 * l0 - li) / (2 * g), 0, -2 * g);

  std::vector<ExpPoly> q(n), c(n);
  for (int i = 0; i < n; ++i) {
    ExpPoly fq = th(i) * elam;
    ExpPoly fc = (a * th(i)) * elam + th(i) * vlam;
    for (int k = 0; k < i; ++k) {
      if (S(k, i) == 0.0) continue;
      fq += S(k, i) * q[k];
      fc += S(k, i) * c[k];
    }
    q[i] = fq.solve_ivp(S(i, i));
    c[i] = fc.solve_ivp(S(i, i) - g);
  }

  std::vector<std::vector<ExpPoly>> V(n, std::vector<ExpPoly>(n));
  for (int s = 0; s <= 2 * (n - 1); ++s) {
    for (int i = 0; i < n; ++i) {
      int j = s - i;
      if (j < i || j >= n) continue;
      if (i == j) {
        ExpPoly f = th(i) * elam + 2.0 * (th(i) * c[i]) +
                    (-S(i, i)) * q[i];
        for (int k = 0; k < n; ++k) {
          if (k == i || S(k, i) == 0.0) continue;
          f += (2 * S(k, i)) * V[std::min(k, i)][std::max(k, i)];
          f += S(k, i) * q[k];
        }
        V[i][i] = f.solve_ivp(2 * S(i, i));
      } else {
        ExpPoly f = th(i) * c[j] + th(j) * c[i] + (-S(i, j)) * q[i] +
                    (-S(j, i)) * q[j];
        for (int k = 0; k < n; ++k) {
          if (k != i && S(k, i) != 0.0)
            f += S(k, i) * V[std::min(k, j)][std::max(k, j)];
          if (k != j && S(k, j) != 0.0)
            f += S(k, j) * V[std::min(k, i)][std::max(k, i)];
        }
        V[i][j] = f.solve_ivp(S(i, i) + S(j, j));
      }
    }
  }

  QueueMoments out;
  out.mean.resize(n);
  out.cov_lq.resize(n);
  out.cov_qq.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.mean(i) = q[i](t);
    out.cov_lq(i) = c[i](t);
    for (int j = i; j < n; ++j) {
      out.cov_qq(i, j) = V[i][j](t);
      out.cov_qq(j, i) = out.cov_qq(i, j);
    }
  }
  return out;
}

inline QueueMoments erlang_moments(const QueueModel& m, double t) {
  if (!is_erlang(m.service))
    throw ConfigError("erlang_moments: service is not Erlang");
  return expoly_moments(m, t);
}

inline QueueMoments hyperexp_moments(const QueueModel& m, double t) {
  if (!is_hyperexp(m.service))
    throw ConfigError("hyperexp_moments: service is not hyper-exponential");
  return expoly_moments(m, t);
}

struct SteadyStateQueue {
  Vector mean;    // Q_inf
  Vector cov_lq;  // C_inf
  Matrix cov_qq;  // V_inf
};

inline SteadyStateQueue steady_state_queue(const QueueModel& m) {
  m.arrivals.require_stable();
  const int n = m.service.phases();
  const Matrix& S = m.service.S;
  const Matrix ST = S.transpose();
  const Vector& th = m.service.theta;
  const double a = m.arrivals.jump, b = m.arrivals.decay,
               g = m.arrivals.gap();
  const double li = lambda_inf(m.arrivals);
  Matrix I = Matrix::Identity(n, n);

  SteadyStateQueue out;
  out.mean = li * (-ST).fullPivLu().solve(th);
  out.cov_lq = li * a * (2 * b - a) / (2 * g) *
               (g * I - ST).fullPivLu().solve(th);
  Matrix M = th * out.cov_lq.transpose() + out.cov_lq * th.transpose() -
             ST * Matrix(out.mean.asDiagonal()) -
             Matrix(out.mean.asDiagonal()) * S;
  out.cov_qq = solve_lyapunov(S, M);
  return out;
}

// Transient mean when jump >= decay, via the explicit linear-ODE solution
// driven by the unstable-arrivals mean intensity.
inline Vector unstable_mean(const QueueModel& m, double t) {
  if (m.arrivals.is_stable()) throw StableProcess();
  const int n = m.service.phases();
  if (t <= 0) return Vector::Zero(n);
  const Matrix L = -m.service.S.transpose();
  const Vector& th = m.service.theta;
  const double a = m.arrivals.jump, b = m.arrivals.decay,
               ls = m.arrivals.baseline, l0 = m.arrivals.initial_intensity;
  std::vector<ForcingTerm> terms;
  if (a - b < kNearSingularGapTol) {
    // E[lambda_t] = b ls t + l0
    terms.push_back({th * l0, 0, 0.0});
    terms.push_back({th * b * ls, 1, 0.0});
  } else {
    // E[lambda_t] = c e^{rt} - b ls / r, r = a - b
    const double r = a - b;
    terms.push_back({th * (b * ls / r + l0), 0, r});
    terms.push_back({-th * b * ls / r, 0, 0.0});
  }
  return solve_linear_ode(L, terms, Vector::Zero(n), t);
}

// Cov[Q_t, Q_{t-tau}] composed from the conditional-expectation identity.
inline Matrix autocov_q(const QueueModel& m, double t, double tau) {
  const int n = m.service.phases();
  if (t < tau || tau < 0 || t <= 0) return Matrix::Zero(n, n);
  require_closed_form_ok(m);
  const Matrix ST = m.service.S.transpose();
  const Vector& th = m.service.theta;
  const double g = m.arrivals.gap();
  const double li = lambda_inf(m.arrivals);
  Matrix I = Matrix::Identity(n, n);
  Matrix EsT = expm(ST * tau);

  QueueMoments past = queue_moments(m, t - tau);
  Vector mean_t = mean_vector(m, t);
  double elam_past = transient_moments(m.arrivals, t - tau).mean_intensity;

  Vector lead1 = li * (-ST).fullPivLu().solve(Vector((I - EsT) * th));
  Vector lead2 = (ST + g * I).fullPivLu().solve(
      Vector((std::exp(-g * tau) * I - EsT) * th));

  Matrix C = lead1 * past.mean.transpose();
  C -= lead2 * (past.cov_lq.transpose() +
                (elam_past - li) * past.mean.transpose());
  C += EsT * past.cov_qq;
  C += (EsT * past.mean - mean_t) * past.mean.transpose();
  return C;
}

// Literal transcription of the appendix's monolithic auto-covariance
// expression, retained as a numerical comparison target for autocov_q.
inline Matrix autocov_q_appendix(const QueueModel& m, double t, double tau) {
  const int n = m.service.phases();
  if (t < tau || tau < 0 || t <= 0) return Matrix::Zero(n, n);
  require_closed_form_ok(m);
  const Matrix& S = m.service.S;
  const Matrix ST = S.transpose();
  const Vector& th = m.service.theta;
  const double a = m.arrivals.jump, b = m.arrivals.decay,
               g = m.arrivals.gap();
  const double li = lambda_inf(m.arrivals);
  const double l0 = m.arrivals.initial_intensity;
  const double u = t - tau;
  Matrix I = Matrix::Identity(n, n);
  Matrix Etau = expm(ST * tau);
  Matrix Esu = expm(S * u);
  Matrix EsTu = Esu.transpose();
  Matrix Eshift_u = expm((ST - g * I) * u);
  Matrix ThTh = th * th.transpose();
  const double egu = std::exp(-g * u), eg2u = std::exp(-2 * g * u);

  auto inv = [](const Matrix& A) { return A.inverse().eval(); };
  Matrix ST_i = inv(ST), SpG_i = inv(ST + g * I);
  Matrix gmS_i = inv(g * I - S), gpS_i = inv(g * I + S);
  Matrix gmST_i = gmS_i.transpose(), gpST_i = gpS_i.transpose();
  Matrix S_i = inv(S);

  Vector mean_u = li * (-ST_i) * (I - EsTu) * th -
                  (l0 - li) * SpG_i * (egu * I - EsTu) * th;
  Vector mean_t_full =
      li * (-ST_i) * (I - expm(ST * t)) * th -
      (l0 - li) * SpG_i * (std::exp(-g * t) * I - expm(ST * t)) * th;
  Vector covlq_u = a * (2 * b - a) * li / (2 * g) * gmST_i *
                       (I - Eshift_u) * th -
                   a * b * (l0 - li) / g * ST_i * (egu * I - Eshift_u) * th +
                   a * a * (2 * l0 - li) / (2 * g) * SpG_i *
                       (eg2u * I - Eshift_u) * th;

  Matrix out = li * (-ST_i) * (I - Etau) * th * mean_u.transpose();

  Vector inner = covlq_u + (li + (l0 - li) * egu) * mean_u;
  out -= SpG_i * (std::exp(-g * tau) * I - Etau) * th * inner.transpose();

  out += li * SpG_i * (std::exp(-g * tau) * I - Etau) * th *
         mean_u.transpose();

  Matrix W0 = m_matrix_sandwich(0.0, th, S, u);
  Matrix Wg = m_matrix_sandwich(-g, th, S, u);

  Matrix A1 = 2 * g * W0 + ThTh - EsTu * ThTh * Esu +
              EsTu * ThTh * (egu * I - Esu) * gpS_i * (g * I - S) +
              (g * I - ST) * gpST_i * (egu * I - EsTu) * ThTh * Esu;
  out += a * (2 * b - a) * li / (2 * g) * gmST_i * Etau * A1 * gmS_i;

  Matrix A2 = g * Wg + egu * ThTh - EsTu * ThTh * Esu -
              EsTu * ThTh * (egu * I - Esu) * gpS_i * S -
              ST * gpST_i * (egu * I - EsTu) * ThTh * Esu;
  out += a * b * (l0 - li) / g * ST_i * Etau * A2 * S_i;

  Matrix A3 = eg2u * ThTh - EsTu * ThTh * Esu - EsTu * ThTh * (egu * I - Esu) -
              (egu * I - EsTu) * ThTh * Esu;
  out -= a * a * (2 * l0 - li) / (2 * g) * gpST_i * Etau * A3 * gpS_i;

  out -= li * Etau * Matrix(Vector(ST_i * (I - EsTu) * th).asDiagonal());
  out -= (l0 - li) * Etau *
         Matrix(Vector(SpG_i * (egu * I - EsTu) * th).asDiagonal());

  // final product, exactly as printed: note the trailing factor uses the
  // time-t mean where the composed identity uses the time-(t-tau) mean
  Vector lead = li * (-ST_i) * (Etau - I) * th -
                (l0 - li) * SpG_i *
                    Vector((std::exp(-g * t) * expm((ST + g * I) * tau) -
                            std::exp(-g * t) * I + expm(ST * t) -
                            expm(ST * t)) *
                           th);
  out += lead * mean_t_full.transpose();
  return out;
}

// Scalar auto-covariance of the single-phase exponential-service queue.
inline double minf_autocov(const HawkesParams& p, double mu, double t,
                           double tau) {
  if (t < tau || tau < 0 || t <= 0) return 0.0;
  p.require_stable();
  Vector th(1), mus(1);
  th << 1.0;
  mus << mu;
  QueueModel m{p, hyperexp(th, mus)};
  QueueMoments past = expoly_moments(m, t - tau);
  QueueMoments now = expoly_moments(m, t);
  const double g = p.gap();
  const double li = lambda_inf(p);
  const double elam_past = transient_moments(p, t - tau).mean_intensity;
  const double emt = std::exp(-mu * tau);
  double hfac = (std::abs(mu - g) <= ExpPoly::kRateMergeTol)
                    ? tau * emt
                    : (std::exp(-g * tau) - emt) / (mu - g);
  double qd = past.mean(0);
  return li / mu * (1 - emt) * qd + emt * past.cov_qq(0, 0) +
         past.cov_lq(0) * hfac + (elam_past - li) * qd * hfac + emt * qd * qd -
         now.mean(0) * qd;
}

}  // namespace hawkesq
