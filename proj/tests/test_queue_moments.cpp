#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hawkesq/queue_moments.hpp"
#include "hawkesq/rng.hpp"

using namespace hawkesq;

namespace {

void check_close(const QueueMoments& a, const QueueMoments& b, double tol) {
  REQUIRE(a.mean.size() == b.mean.size());
  for (int i = 0; i < a.mean.size(); ++i) {
    CHECK(a.mean(i) == doctest::Approx(b.mean(i)).epsilon(tol));
    CHECK(a.cov_lq(i) == doctest::Approx(b.cov_lq(i)).epsilon(tol));
    for (int j = 0; j < a.mean.size(); ++j)
      CHECK(a.cov_qq(i, j) ==
            doctest::Approx(b.cov_qq(i, j)).epsilon(tol).scale(1.0));
  }
}

QueueModel coxian_model() {
  Matrix S(5, 5);
  S << -4, 3, 0, 0, 0,
        0, -2, 1, 0, 0,
        0, 0, -3, 2, 0,
        0, 0, 0, -5, 4,
        0, 0, 0, 0, -1;
  Vector th = Vector::Zero(5);
  th(0) = 1.0;
  return {HawkesParams(1.0, 0.75, 1.0), PhaseTypeDist(S, th)};
}

}  // namespace

TEST_CASE("closed forms match the moment ODE system") {
  std::vector<QueueModel> models = {
      {HawkesParams(1.0, 0.5, 0.75), exponential_dist(1.0)},
      {HawkesParams(2.0, 1.0, 1.75, 0.5),  // gap 0.75 clears every rate
       hyperexp(Vector{{0.15, 0.4, 0.45}}, Vector{{1, 4, 6}})},
      coxian_model()};
  for (const auto& m : models)
    for (double t : {0.5, 2.0, 10.0}) {
      QueueMoments cf = queue_moments(m, t);
      CHECK_FALSE(cf.fallback_used);
      check_close(cf, ode_reference(m, t), 1e-8);
    }
}

TEST_CASE("closed forms match the ODE on random dense instances") {
  Rng rng(7, 0, Rng::kGeneric);
  for (int rep = 0; rep < 10; ++rep) {
    int n = 1 + static_cast<int>(rng.uniform() * 4);
    Matrix S = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        if (j != i) S(i, j) = rng.uniform();
      S(i, i) = -(S.row(i).sum() + 0.3 + rng.uniform());
    }
    Vector th(n);
    for (int i = 0; i < n; ++i) th(i) = 0.1 + rng.uniform();
    th /= th.sum();
    double beta = 0.5 + 2 * rng.uniform();
    QueueModel m{HawkesParams(0.5 + rng.uniform(), 0.5 * beta, beta,
                              2 * rng.uniform() + 0.1),
                 PhaseTypeDist(S, th)};
    double t = 0.5 + 4 * rng.uniform();
    check_close(queue_moments(m, t), ode_reference(m, t), 1e-7);
  }
}

TEST_CASE("near-singular gap falls back to the ODE route") {
  QueueModel m{HawkesParams(1.0, 1.0 - 5e-10, 1.0), exponential_dist(1.0)};
  QueueMoments qm = queue_moments(m, 1.0);
  CHECK(qm.fallback_used);
  check_close(qm, ode_reference(m, 1.0), 1e-8);
}

TEST_CASE("Erlang and hyper-exponential exact solutions") {
  std::vector<QueueModel> models = {
      {HawkesParams(1.0, 0.5, 0.75), erlang(3, 1.0)},
      {HawkesParams(1.0, 0.75, 1.25), erlang(3, 1.0 / 6.0)},
      // resonant branch n mu = beta - alpha
      {HawkesParams(1.0, 0.5, 0.75), erlang(3, 0.25 / 3.0)},
      {HawkesParams(2.0, 0.5, 1.0),
       hyperexp(Vector{{0.15, 0.4, 0.45}}, Vector{{1, 4, 6}})},
      // resonant branches mu_i = beta - alpha and 2 mu_i = beta - alpha
      {HawkesParams(2.0, 0.5, 1.0),
       hyperexp(Vector{{0.3, 0.3, 0.4}}, Vector{{0.5, 0.25, 6.0}})}};
  for (const auto& m : models)
    for (double t : {0.5, 2.0, 10.0}) {
      QueueMoments got = is_erlang(m.service) ? erlang_moments(m, t)
                                              : hyperexp_moments(m, t);
      check_close(got, ode_reference(m, t), 1e-7);
    }
  QueueModel hy{HawkesParams(1.0, 0.5, 0.75),
                hyperexp(Vector{{0.5, 0.5}}, Vector{{1, 2}})};
  CHECK_THROWS_AS(erlang_moments(hy, 1.0), ConfigError);
}

TEST_CASE("steady state of the exponential-service queue") {
  QueueModel m{HawkesParams(1.0, 0.5, 0.75), exponential_dist(1.0)};
  SteadyStateQueue ss = steady_state_queue(m);
  CHECK(ss.mean(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(ss.cov_lq(0) == doctest::Approx(2.4).epsilon(1e-12));
  CHECK(ss.cov_qq(0, 0) == doctest::Approx(5.4).epsilon(1e-12));
  // V_inf = Q_inf + C_inf / mu for exponential service
  CHECK(ss.cov_qq(0, 0) ==
        doctest::Approx(ss.mean(0) + ss.cov_lq(0) / 1.0).epsilon(1e-12));
  // transient moments converge to the steady state
  QueueMoments qm = queue_moments(m, 150.0);
  CHECK(qm.mean(0) == doctest::Approx(ss.mean(0)).epsilon(1e-10));
  CHECK(qm.cov_lq(0) == doctest::Approx(ss.cov_lq(0)).epsilon(1e-10));
  CHECK(qm.cov_qq(0, 0) == doctest::Approx(ss.cov_qq(0, 0)).epsilon(1e-10));
}

TEST_CASE("steady state of a multi-phase queue") {
  QueueModel m = coxian_model();
  SteadyStateQueue ss = steady_state_queue(m);
  // stationary covariance equation residual
  const Matrix& S = m.service.S;
  Matrix M = m.service.theta * ss.cov_lq.transpose() +
             ss.cov_lq * m.service.theta.transpose() -
             S.transpose() * Matrix(ss.mean.asDiagonal()) -
             Matrix(ss.mean.asDiagonal()) * S;
  Matrix res = S.transpose() * ss.cov_qq + ss.cov_qq * S + M;
  CHECK(res.cwiseAbs().maxCoeff() < 1e-12);
  // occupancy matches Little's-law style mean lambda_inf * E[S]
  CHECK(ss.mean.sum() == doctest::Approx(lambda_inf(m.arrivals) *
                                         mean_service_time(m.service))
                             .epsilon(1e-12));
  QueueMoments qm = queue_moments(m, 120.0);
  check_close(qm,
              QueueMoments{ss.mean, ss.cov_lq, ss.cov_qq, false}, 1e-9);
}

TEST_CASE("unstable queue mean against the ODE route") {
  for (const HawkesParams& p :
       {HawkesParams(1.0, 2.0, 1.0, 0.5), HawkesParams(1.0, 1.0, 1.0)}) {
    QueueModel m{p, erlang(2, 1.0)};
    for (double t : {0.5, 2.0, 5.0}) {
      Vector got = unstable_mean(m, t);
      Vector ref = ode_reference(m, t).mean;
      for (int i = 0; i < got.size(); ++i)
        CHECK(got(i) == doctest::Approx(ref(i)).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(
      unstable_mean({HawkesParams(1.0, 0.5, 1.0), exponential_dist(1.0)},
                    1.0),
      StableProcess);
}

TEST_CASE("queue auto-covariance composition") {
  QueueModel m{HawkesParams(2.0, 0.5, 1.0),
               hyperexp(Vector{{0.15, 0.4, 0.45}}, Vector{{1, 4, 6}})};
  // tau = 0 collapses to the covariance matrix
  Matrix ac0 = autocov_q(m, 4.0, 0.0);
  Matrix v = queue_moments(m, 4.0).cov_qq;
  CHECK((ac0 - v).cwiseAbs().maxCoeff() < 1e-10);
  // out-of-range lags vanish
  CHECK(autocov_q(m, 1.0, 2.0).cwiseAbs().maxCoeff() == 0.0);

  // single phase reduces to the scalar form
  QueueModel e{HawkesParams(1.0, 0.75, 1.25), exponential_dist(1.0)};
  for (double tau : {0.0, 1.0, 5.0}) {
    double scalar = minf_autocov(e.arrivals, 1.0, 10.0, tau);
    CHECK(autocov_q(e, 10.0, tau)(0, 0) ==
          doctest::Approx(scalar).epsilon(1e-9));
  }

  // the verbatim alternative transcription disagrees with the composed
  // identity off tau = 0; the discrepancy is documented and reported
  Matrix alt = autocov_q_appendix(m, 5.0, 2.0);
  Matrix comp = autocov_q(m, 5.0, 2.0);
  CHECK((alt - comp).cwiseAbs().maxCoeff() > 1e-3);
  Matrix alt0 = autocov_q_appendix(m, 5.0, 0.0);
  CHECK((alt0 - v).rows() == 3);
}

TEST_CASE("exponential-service auto-covariance by simulation-free oracle") {
  // Cov[Q_t, Q_{t-tau}] decays toward independence products as tau grows
  HawkesParams p(1.0, 0.5, 0.75);
  double c1 = minf_autocov(p, 1.0, 20.0, 1.0);
  double c5 = minf_autocov(p, 1.0, 20.0, 5.0);
  double c15 = minf_autocov(p, 1.0, 20.0, 15.0);
  CHECK(c1 > c5);
  CHECK(c5 > c15);
  CHECK(c15 > 0.0);
  // resonant service rate mu = beta - alpha stays finite
  CHECK(std::isfinite(minf_autocov(p, 0.25, 10.0, 2.0)));
}
