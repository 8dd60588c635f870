#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hawkesq/queue_moments.hpp"
#include "hawkesq/simulate.hpp"

using namespace hawkesq;

TEST_CASE("counter RNG streams") {
  Rng a(1, 0, Rng::kArrivals), b(1, 0, Rng::kArrivals);
  CHECK(a.uniform() == b.uniform());
  Rng c(1, 0, Rng::kService);
  Rng d(1, 1, Rng::kArrivals);
  Rng e(2, 0, Rng::kArrivals);
  Rng f(1, 0, Rng::kArrivals);
  double x = f.uniform();
  CHECK(x != c.uniform());
  CHECK(x != d.uniform());
  CHECK(x != e.uniform());
  // uniforms live strictly inside (0, 1)
  Rng g(3, 0, Rng::kGeneric);
  for (int i = 0; i < 10000; ++i) {
    double u = g.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("thinning is exact for the Poisson special case") {
  HawkesParams p(2.0, 0.0, 1.0);
  Eigen::MatrixXd tab = replicate(20000, 1, [&](std::size_t r) {
    return Vector::Constant(
        1, static_cast<double>(simulate_hawkes(p, 5.0, 99, r).count_at(5.0)));
  });
  EstimateReport m = mean_se(tab, 0);
  EstimateReport v = cov_se(tab, 0, 0);
  CHECK(std::abs(m.z_score(10.0)) < 4.0);
  CHECK(std::abs(v.z_score(10.0)) < 4.0);
}

TEST_CASE("simulated moments match the closed forms") {
  HawkesParams p(1.0, 0.5, 0.75, 2.0);
  const double t = 6.0;
  Eigen::MatrixXd tab = replicate(30000, 2, [&](std::size_t r) {
    HawkesPath path = simulate_hawkes(p, t, 7, r);
    Vector v(2);
    v << static_cast<double>(path.count_at(t)), path.intensity_at(p, t);
    return v;
  });
  HawkesMoments hm = transient_moments(p, t);
  CHECK(std::abs(mean_se(tab, 0).z_score(hm.mean_count)) < 4.0);
  CHECK(std::abs(cov_se(tab, 0, 0).z_score(hm.var_count)) < 4.0);
  CHECK(std::abs(mean_se(tab, 1).z_score(hm.mean_intensity)) < 4.0);
  CHECK(std::abs(cov_se(tab, 1, 1).z_score(hm.var_intensity)) < 4.0);
  CHECK(std::abs(cov_se(tab, 0, 1).z_score(hm.cov_intensity_count)) < 4.0);
}

TEST_CASE("path bookkeeping") {
  HawkesParams p(1.0, 0.5, 0.75);
  HawkesPath path = simulate_hawkes(p, 10.0, 5, 0);
  for (std::size_t k = 1; k < path.times.size(); ++k)
    CHECK(path.times[k] > path.times[k - 1]);
  // recorded pre-jump intensity at event times matches reconstruction
  for (std::size_t k = 1; k < path.times.size(); ++k) {
    double before = path.intensity_at(p, path.times[k] - 1e-12);
    CHECK(path.intensities[k] ==
          doctest::Approx(before).epsilon(1e-6));
  }
  CHECK(path.count_at(0.0) == 0);
  CHECK(path.count_at(10.0) == path.times.size());
}

TEST_CASE("phase-type queue simulation matches the moment system") {
  QueueModel m{HawkesParams(1.0, 0.5, 0.75), erlang(3, 1.0)};
  const double t = 5.0;
  const int n = 3;
  Eigen::MatrixXd tab = replicate(30000, n, [&](std::size_t r) {
    QueuePathPH qp = simulate_queue_ph(m.arrivals, m.service, t, 11, r);
    return Vector(qp.occupancy(t, n));
  });
  QueueMoments ref = queue_moments(m, t);
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(mean_se(tab, i).z_score(ref.mean(i))) < 4.0);
    CHECK(std::abs(cov_se(tab, i, i).z_score(ref.cov_qq(i, i))) < 4.0);
  }
  CHECK(std::abs(cov_se(tab, 0, 2).z_score(ref.cov_qq(0, 2))) < 4.0);
}

TEST_CASE("scalar-duration service equals the exponential phase model") {
  HawkesParams p(1.0, 0.5, 0.75);
  const double t = 5.0;
  Eigen::MatrixXd tab = replicate(30000, 1, [&](std::size_t r) {
    QueuePathDur qp = simulate_queue_dur(
        p, [](Rng& g) { return g.exponential(2.0); }, t, 13, r);
    return Vector::Constant(1, qp.occupancy(t));
  });
  QueueMoments ref =
      queue_moments({p, exponential_dist(2.0)}, t);
  CHECK(std::abs(mean_se(tab, 0).z_score(ref.mean(0))) < 4.0);
  CHECK(std::abs(cov_se(tab, 0, 0).z_score(ref.cov_qq(0, 0))) < 4.0);
}

TEST_CASE("event cap and replication guards") {
  HawkesParams p(5.0, 3.0, 1.0);  // wildly supercritical
  CHECK_THROWS_AS(simulate_hawkes(p, 50.0, 1, 0, 1000), EventCapExceeded);
  CHECK_THROWS_AS(
      replicate(1, 1, [](std::size_t) { return Vector::Zero(1); }),
      InsufficientReps);
  CHECK_THROWS_AS(simulate_hawkes(HawkesParams(1.0, 0.5, 1.0), 0.0, 1, 0),
                  ConfigError);
}

TEST_CASE("replication table statistics") {
  Eigen::MatrixXd tab(4, 2);
  tab << 1, 2,
         3, 4,
         5, 6,
         7, 8;
  EstimateReport m = mean_se(tab, 0);
  CHECK(m.point == doctest::Approx(4.0));
  // sample sd sqrt(20/3), se = sd/2
  CHECK(m.std_error == doctest::Approx(std::sqrt(20.0 / 3.0) / 2.0));
  CHECK(m.replications == 4);
  EstimateReport c = cov_se(tab, 0, 1);
  CHECK(c.point == doctest::Approx(20.0 / 3.0));
}

TEST_CASE("replication is thread-count independent") {
  HawkesParams p(1.0, 0.5, 0.75);
  auto one = [&](std::size_t r) {
    HawkesPath path = simulate_hawkes(p, 6.0, 17, r);
    Vector v(2);
    v << static_cast<double>(path.times.size()),
        path.times.empty() ? 0.0 : path.times.back();
    return v;
  };
  Eigen::MatrixXd a = replicate(500, 2, one, 1);
  Eigen::MatrixXd b = replicate(500, 2, one, 4);
  CHECK((a.array() == b.array()).all());
}
