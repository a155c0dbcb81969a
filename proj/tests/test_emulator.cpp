#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "specemu/emulator.hpp"
#include "specemu/errors.hpp"
#include "specemu/inference.hpp"
#include "support/dense_gp.hpp"

using namespace specemu;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  }
  return m;
}

// Smooth multi-output response surface over the unit cube.
Eigen::MatrixXd smooth_response(const Eigen::MatrixXd& s, int q) {
  Eigen::MatrixXd z(s.rows(), q);
  for (int i = 0; i < s.rows(); ++i) {
    const double base = std::sin(2.0 * s.row(i).sum()) + 0.3 * s.row(i).squaredNorm();
    for (int j = 0; j < q; ++j) {
      z(i, j) = (j + 1.0) * base + std::cos(double(j) + s(i, 0) * 3.0);
    }
  }
  return z;
}

}  // namespace

TEST_SUITE("emulator") {

TEST_CASE("trend designs") {
  const Eigen::MatrixXd s = random_matrix(6, 3, 3);
  const Eigen::MatrixXd hc = emulator::trend_matrix(s, emulator::Trend::Constant);
  CHECK(hc.rows() == 6);
  CHECK(hc.cols() == 1);
  CHECK((hc.array() == 1.0).all());

  const Eigen::MatrixXd hl = emulator::trend_matrix(s, emulator::Trend::Linear);
  CHECK(hl.cols() == 4);
  CHECK((hl.col(0).array() == 1.0).all());
  CHECK((hl.rightCols(3) - s).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd s0 = s.row(2);
  const Eigen::VectorXd r = emulator::trend_row(s0, emulator::Trend::Linear);
  CHECK(r.size() == 4);
  CHECK(r[0] == 1.0);
  CHECK((r.tail(3) - s0).cwiseAbs().maxCoeff() == 0.0);

  CHECK(emulator::trend_from_string("constant") == emulator::Trend::Constant);
  CHECK(emulator::trend_from_string("linear") == emulator::Trend::Linear);
  CHECK_THROWS_AS(emulator::trend_from_string("quadratic"), ConfigError);
}

TEST_CASE("full-conditioning likelihood and prediction match the dense oracle") {
  const int n = 70;
  const int d = 3;
  const Eigen::MatrixXd s = random_matrix(n, d, 7, 0.8);
  const Eigen::MatrixXd z = smooth_response(s, 2).array() + 4.0;
  Eigen::VectorXd ranges(d);
  ranges << 0.9, 1.4, 0.7;
  const double tau2 = 5e-3;

  emulator::NNGPModel model(s, z, emulator::Trend::Linear, n - 1,
                            kernels::Family::Matern, 2.5, 1.0);
  const double got = model.log_marginal(ranges, tau2);

  const testsupport::DenseGp oracle(s, z, emulator::trend_matrix(s, emulator::Trend::Linear),
                                    ranges, tau2, testsupport::matern25);
  const double want = oracle.log_marginal();
  CHECK(got == doctest::Approx(want).epsilon(1e-8));

  emulator::Predictor pred(model, ranges, tau2, model.gls(ranges, tau2), n);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 0.8);
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd q(d);
    for (int j = 0; j < d; ++j) q[j] = g(rng);
    const emulator::PredictiveT p = pred.at(q);
    const testsupport::DensePrediction o =
        oracle.predict(q, emulator::trend_row(q, emulator::Trend::Linear));
    CHECK(p.dof == doctest::Approx(o.dof));
    for (int j = 0; j < 2; ++j) {
      CHECK(p.mean[j] == doctest::Approx(o.mean[j]).epsilon(1e-8));
      CHECK(p.scale[j] == doctest::Approx(o.scale[j]).epsilon(1e-8));
    }
  }
}

TEST_CASE("separable and independent predictors coincide") {
  const int n = 60;
  const int d = 3;
  const Eigen::MatrixXd s = random_matrix(n, d, 11, 0.9);
  const Eigen::MatrixXd z = smooth_response(s, 3);
  kernels::KernelSpec spec;
  spec.family = kernels::Family::Matern;
  spec.nu = 2.5;
  spec.ranges = Eigen::VectorXd::Constant(d, 1.1);
  spec.nugget = 1e-3;

  const Eigen::MatrixXd queries = random_matrix(8, d, 12, 0.9);
  const emulator::EquivalenceReport rep = emulator::ind_sep_equivalence(
      s, z, emulator::Trend::Constant, 15, spec, queries, 20);
  CHECK(rep.max_mean_delta < 1e-8);
  CHECK(rep.max_scale_delta < 1e-8);
}

TEST_CASE("predictive mean interpolates stored responses under a nugget") {
  const int n = 45;
  const Eigen::MatrixXd s = random_matrix(n, 2, 13, 0.7);
  const Eigen::MatrixXd z = smooth_response(s, 1);
  const Eigen::VectorXd ranges = Eigen::VectorXd::Constant(2, 1.0);
  const double tau2 = 0.05;

  emulator::NNGPModel model(s, z, emulator::Trend::Constant, 10,
                            kernels::Family::Matern, 2.5, 1.0);
  emulator::Predictor pred(model, ranges, tau2, model.gls(ranges, tau2), 12);
  for (int i : {0, 7, 31}) {
    const emulator::PredictiveT p = pred.at(s.row(i));
    CHECK(p.mean[0] == doctest::Approx(z(i, 0)).epsilon(1e-8));
  }
}

TEST_CASE("far queries revert to the trend with inflated relative variance") {
  const int n = 45;
  const Eigen::MatrixXd s = random_matrix(n, 2, 17, 0.5);
  const Eigen::MatrixXd z = smooth_response(s, 1);
  const Eigen::VectorXd ranges = Eigen::VectorXd::Constant(2, 0.8);

  emulator::NNGPModel model(s, z, emulator::Trend::Constant, 10,
                            kernels::Family::Matern, 2.5, 1.0);
  const emulator::GlsSummary gls = model.gls(ranges, 1e-3);
  emulator::Predictor pred(model, ranges, 1e-3, gls, 15);

  const Eigen::VectorXd far = Eigen::VectorXd::Constant(2, 50.0);
  const emulator::PredictiveT p = pred.at(far);
  CHECK(p.mean[0] == doctest::Approx(gls.beta(0, 0)).epsilon(1e-9));
  CHECK(p.rhat > 1.0);  // no information left beyond the trend
  CHECK(p.scale[0] > 0.0);

  const emulator::PredictiveT near = pred.at(s.row(0));
  CHECK(near.rhat < p.rhat);
}

TEST_CASE("GLS cache returns the stored summary for repeated parameters") {
  const Eigen::MatrixXd s = random_matrix(30, 2, 19, 0.6);
  const Eigen::MatrixXd z = smooth_response(s, 1);
  emulator::NNGPModel model(s, z, emulator::Trend::Constant, 8,
                            kernels::Family::Matern, 2.5, 1.0);
  const Eigen::VectorXd ranges = Eigen::VectorXd::Constant(2, 1.0);
  const emulator::GlsSummary& a = model.gls(ranges, 1e-2);
  const emulator::GlsSummary& b = model.gls(ranges, 1e-2);
  CHECK(&a == &b);
  const emulator::GlsSummary& c = model.gls(ranges, 2e-2);
  CHECK(&a != &c);
}

TEST_CASE("construction and degenerate responses raise typed errors") {
  const Eigen::MatrixXd s = random_matrix(20, 2, 23);
  const Eigen::MatrixXd z = smooth_response(s, 1);
  CHECK_THROWS_AS(emulator::NNGPModel(s, z, emulator::Trend::Constant, 0,
                                      kernels::Family::Matern, 2.5, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(emulator::NNGPModel(s, z, emulator::Trend::Constant, 20,
                                      kernels::Family::Matern, 2.5, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(emulator::NNGPModel(s, z.topRows(10), emulator::Trend::Constant, 5,
                                      kernels::Family::Matern, 2.5, 1.0),
                  ConfigError);

  // constant responses leave a residual cross product that is zero up to
  // round-off; depending on its sign the Cholesky guard fires or the GLS
  // covariance collapses, but a plausible-looking fit must never come back
  const Eigen::MatrixXd zc = Eigen::MatrixXd::Constant(20, 1, 3.0);
  emulator::NNGPModel degen(s, zc, emulator::Trend::Constant, 5,
                            kernels::Family::Matern, 2.5, 1.0);
  const Eigen::VectorXd ru = Eigen::VectorXd::Constant(2, 1.0);
  bool threw = false;
  try {
    (void)degen.log_marginal(ru, 1e-2);
  } catch (const NumericError&) {
    threw = true;
  }
  if (!threw) {
    CHECK(degen.gls(ru, 1e-2).gls_cov(0, 0) < 1e-8);
  }
}

TEST_CASE("posterior kernel composes the marginal and the prior") {
  const Eigen::MatrixXd s = random_matrix(35, 2, 29, 0.7);
  const Eigen::MatrixXd z = smooth_response(s, 1);
  emulator::NNGPModel model(s, z, emulator::Trend::Constant, 12,
                            kernels::Family::Matern, 2.5, 1.0);
  Eigen::VectorXd params(3);
  params << 0.8, 1.3, 0.02;
  const double lp = inference::log_prior(params);
  CHECK(lp == doctest::Approx(testsupport::half_cauchy_log_prior(params)).epsilon(1e-12));
  const double post = model.log_marginal(params.head(2), params[2]) + lp;
  CHECK(std::isfinite(post));
}

}  // TEST_SUITE
