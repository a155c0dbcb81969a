#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <json.hpp>

#include "specemu/bench.hpp"
#include "specemu/errors.hpp"
#include "specemu/rng.hpp"
#include "support/quad.hpp"

using namespace specemu;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// CRPS from its definition Int (F(x) - 1{x >= y})^2 dx, truncated far into
// both tails where the integrand decays like the squared CDF tails.
double crps_quadrature(double y, double mean, double sd) {
  const auto f = [&](double x) {
    const double cdf = normal_cdf((x - mean) / sd);
    const double step = x >= y ? 1.0 : 0.0;
    return (cdf - step) * (cdf - step);
  };
  const double lo = std::min(mean - 14.0 * sd, y - 2.0 * sd);
  const double hi = std::max(mean + 14.0 * sd, y + 2.0 * sd);
  return testsupport::integrate(f, lo, y, 1e-10) + testsupport::integrate(f, y, hi, 1e-10);
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("rmspe on hand-checked cases") {
  Eigen::VectorXd pred(2), truth(2);
  pred << 0.0, 0.0;
  truth << 3.0, 4.0;
  CHECK(bench::rmspe(pred, truth) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-14));
  CHECK(bench::rmspe(truth, truth) == 0.0);

  Eigen::VectorXd off = truth.array() + 2.0;
  CHECK(bench::rmspe(off, truth) == doctest::Approx(2.0).epsilon(1e-14));

  // missing entries are excluded pairwise
  Eigen::VectorXd t3(3), p3(3);
  t3 << 3.0, std::numeric_limits<double>::quiet_NaN(), 4.0;
  p3 << 0.0, 100.0, 0.0;
  CHECK(bench::rmspe(p3, t3) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-14));

  Eigen::VectorXd all_nan = Eigen::VectorXd::Constant(3, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(bench::rmspe(p3, all_nan), DataError);
}

TEST_CASE("coverage fraction counts interval membership") {
  Eigen::VectorXd lo(4), hi(4), truth(4);
  lo << 0.0, 0.0, 0.0, 0.0;
  hi << 1.0, 1.0, 1.0, 1.0;
  truth << 0.5, 1.5, -0.5, 1.0;  // endpoints count as covered
  CHECK(bench::coverage_fraction(lo, hi, truth) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("gaussian CRPS matches the quadrature oracle") {
  // the standard value at the center of a unit normal
  CHECK(bench::crps_gaussian(0.0, 0.0, 1.0) ==
        doctest::Approx(0.23369497725510093).epsilon(1e-10));

  for (double y : {-1.3, 0.0, 0.4, 2.7}) {
    for (double sd : {0.3, 1.0, 2.5}) {
      const double got = bench::crps_gaussian(y, 0.5, sd);
      const double want = crps_quadrature(y, 0.5, sd);
      CHECK(std::abs(got - want) < 1e-6);
    }
  }

  // positive homogeneity in scale, translation invariance
  const double base = bench::crps_gaussian(0.7, 0.2, 1.4);
  CHECK(bench::crps_gaussian(3.0 * 0.7, 3.0 * 0.2, 3.0 * 1.4) ==
        doctest::Approx(3.0 * base).epsilon(1e-12));
  CHECK(bench::crps_gaussian(0.7 + 5.0, 0.2 + 5.0, 1.4) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("empirical CRPS estimates the gaussian value") {
  Rng rng = make_rng(77, "crps");
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> draws(60000);
  for (auto& d : draws) d = g(rng);

  for (double y : {0.0, 1.0, -2.0}) {
    const double got = bench::crps_empirical(draws, y);
    const double want = bench::crps_gaussian(y, 0.0, 1.0);
    CHECK(std::abs(got - want) / want < 0.02);
  }

  // permutation invariant (the implementation sorts internally)
  std::vector<double> shuffled = draws;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(bench::crps_empirical(shuffled, 0.3) ==
        doctest::Approx(bench::crps_empirical(draws, 0.3)).epsilon(1e-12));

  CHECK_THROWS_AS(bench::crps_empirical({1.0}, 0.0), ConfigError);
}

TEST_CASE("synthetic forward model structure") {
  const bench::SyntheticForward fwd;
  CHECK(fwd.band_names().size() == 3);
  CHECK(fwd.band_names()[0] == "o2");
  CHECK(fwd.band_names()[1] == "wco2");
  CHECK(fwd.band_names()[2] == "sco2");
  for (int b = 0; b < bench::SyntheticForward::kBands; ++b) {
    CHECK(fwd.wavelengths(b).size() == 1016);
    CHECK(fwd.noise_sd(b) > 0.0);
  }
  CHECK(fwd.state_mean().size() == 62);
  CHECK(fwd.state_sd().minCoeff() > 0.0);

  // the planted projection is an orthonormal frame
  const Eigen::MatrixXd p = fwd.projection();
  REQUIRE(p.rows() == 62);
  REQUIRE(p.cols() == 4);
  CHECK((p.transpose() * p - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

  // two constructions with the same structural seed agree everywhere
  const bench::SyntheticForward twin;
  Rng rng = make_rng(1, "twin");
  const Eigen::VectorXd x = fwd.sample_state(rng);
  const Eigen::VectorXd geom = fwd.sample_geometry(rng);
  for (int b = 0; b < 3; ++b) {
    CHECK((fwd.wavelengths(b) - twin.wavelengths(b)).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd r1 = fwd.radiance(b, x, geom);
    const Eigen::VectorXd r2 = twin.radiance(b, x, geom);
    CHECK((r1 - r2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r1.minCoeff() > 0.0);  // radiance is positive by construction
  }
  CHECK(geom.minCoeff() >= -1.0);
  CHECK(geom.maxCoeff() <= 1.0);
}

TEST_CASE("forward jacobian matches central differences") {
  const bench::SyntheticForward fwd;
  Rng rng = make_rng(3, "jac");
  const Eigen::VectorXd x = fwd.sample_state(rng);
  const Eigen::VectorXd geom = fwd.sample_geometry(rng);

  for (int b = 0; b < 3; ++b) {
    const Eigen::MatrixXd jac = fwd.jacobian(b, x, geom);
    REQUIRE(jac.rows() == 1016);
    REQUIRE(jac.cols() == 62);
    for (int j : {0, 13, 27, 44, 61}) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Eigen::VectorXd fd = (fwd.radiance(b, xp, geom) - fwd.radiance(b, xm, geom)) / (2.0 * h);
      for (int w : {0, 250, 511, 777, 1015}) {
        CHECK(std::abs(jac(w, j) - fd[w]) < 1e-6 + 1e-5 * std::abs(fd[w]));
      }
    }
  }
}

TEST_CASE("output depends on the state only through the planted subspace") {
  const bench::SyntheticForward fwd;
  const Eigen::MatrixXd p = fwd.projection();
  Rng rng = make_rng(5, "ridge");
  const Eigen::VectorXd x1 = fwd.sample_state(rng);
  const Eigen::VectorXd geom = fwd.sample_geometry(rng);

  // perturb in standardized coordinates orthogonally to span(P)
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd w(62);
  for (int j = 0; j < 62; ++j) w[j] = g(rng);
  w -= p * (p.transpose() * w);
  const Eigen::VectorXd x2 = x1 + fwd.state_sd().cwiseProduct(w);

  for (int b = 0; b < 3; ++b) {
    const Eigen::VectorXd r1 = fwd.radiance(b, x1, geom);
    const Eigen::VectorXd r2 = fwd.radiance(b, x2, geom);
    CHECK((r1 - r2).cwiseAbs().maxCoeff() < 1e-10 * r1.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("miniature cross validation wires every stage together") {
  bench::SyntheticForward fwd;
  bench::CrossValConfig cfg;
  cfg.n_train = 40;
  cfg.n_test = 4;
  cfg.neighbors = 10;
  cfg.num_basis = 40;
  cfg.iterations = 60;
  cfg.burn_in = 20;
  cfg.retained = 40;
  cfg.dense_check_n = 0;
  cfg.seed = 99;

  const bench::MetricsReport rep = bench::cross_validate(fwd, cfg);
  REQUIRE(rep.bands.size() == 3);
  for (const auto& bm : rep.bands) {
    CHECK(std::isfinite(bm.rmspe));
    CHECK(bm.rmspe > 0.0);
    CHECK(bm.coverage95 >= 0.0);
    CHECK(bm.coverage95 <= 1.0);
    CHECK(bm.mean_crps > 0.0);
  }
  CHECK(!rep.scores.empty());
  CHECK(!rep.pointwise.empty());
  CHECK(!rep.chains.empty());
  CHECK(rep.train_seconds > 0.0);
  CHECK(rep.total_seconds >= rep.train_seconds);
  CHECK(rep.weight_comparisons.empty());  // dense check disabled

  // pointwise rows cover every wavelength of every band
  std::size_t m_total = 0;
  for (int b = 0; b < 3; ++b) m_total += static_cast<std::size_t>(fwd.wavelengths(b).size());
  CHECK(rep.pointwise.size() == m_total);

  const nlohmann::json j = nlohmann::json::parse(rep.to_json());
  CHECK(j.contains("bands"));
  CHECK(j.contains("scores"));
  CHECK(j.contains("pointwise"));
  CHECK(j.contains("chains"));
  CHECK(j.contains("train_seconds"));
  CHECK(j.contains("budget_seconds"));
}

}  // TEST_SUITE
