#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "specemu/errors.hpp"
#include "specemu/subspace.hpp"

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

// Orthonormal d x k frame from a random Gaussian matrix.
Eigen::MatrixXd random_frame(int d, int k, unsigned seed) {
  const Eigen::MatrixXd g = random_matrix(d, k, seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return Eigen::MatrixXd(qr.householderQ()) * Eigen::MatrixXd::Identity(d, k);
}

// Spectral norm of P Phat^T difference via the symmetric eigenproblem.
double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd diff = a * a.transpose() - b * b.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diff);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("subspace") {

TEST_CASE("standardizer round trips and fits column moments") {
  const Eigen::MatrixXd x = random_matrix(500, 6, 17, 2.0);
  const auto std_x = subspace::StateStandardizer::fit(x);
  REQUIRE(std_x.mu.size() == 6);
  REQUIRE(std_x.sd.size() == 6);

  for (int j = 0; j < 6; ++j) {
    CHECK(std_x.mu[j] == doctest::Approx(x.col(j).mean()).epsilon(1e-12));
    CHECK(std_x.sd[j] > 0.0);
  }

  const Eigen::VectorXd v = x.row(3);
  const Eigen::VectorXd round = std_x.destandardize(std_x.standardize(v));
  CHECK((round - v).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXd rows = std_x.standardize_rows(x);
  CHECK(rows.rows() == x.rows());
  CHECK((rows.row(3).transpose() - std_x.standardize(v)).cwiseAbs().maxCoeff() < 1e-14);
  // standardized columns have zero mean and unit variance
  for (int j = 0; j < 6; ++j) {
    CHECK(std::abs(rows.col(j).mean()) < 1e-12);
    CHECK(rows.col(j).squaredNorm() / double(x.rows() - 1) ==
          doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("misfit gradient matches central differences") {
  const int m = 40;
  const int d = 7;
  const Eigen::MatrixXd jac = random_matrix(m, d, 23);
  Eigen::VectorXd noise_var = random_matrix(m, 1, 24).col(0).cwiseAbs().array() + 0.5;
  Eigen::VectorXd y = random_matrix(m, 1, 25).col(0);
  const Eigen::VectorXd fx = random_matrix(m, 1, 26).col(0);
  y[5] = std::numeric_limits<double>::quiet_NaN();   // dropped channels
  y[17] = std::numeric_limits<double>::quiet_NaN();

  subspace::StateStandardizer std_x;
  std_x.mu = random_matrix(d, 1, 27).col(0);
  std_x.sd = random_matrix(d, 1, 28).col(0).cwiseAbs().array() + 0.3;

  const Eigen::VectorXd grad = subspace::misfit_gradient(jac, std_x, noise_var, y, fx);
  REQUIRE(grad.size() == d);

  // misfit as a function of the standardized state around s = 0; the model
  // is linear in x with Jacobian jac, F(x) = fx + jac (x - x0).
  const Eigen::VectorXd x0 = std_x.destandardize(Eigen::VectorXd::Zero(d));
  const auto misfit = [&](const Eigen::VectorXd& s) {
    const Eigen::VectorXd f = fx + jac * (std_x.destandardize(s) - x0);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      if (std::isnan(y[i])) continue;
      const double r = y[i] - f[i];
      acc += r * r / noise_var[i];
    }
    return acc;
  };

  const double h = 1e-5;
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd sp = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sm = Eigen::VectorXd::Zero(d);
    sp[j] = h;
    sm[j] = -h;
    const double fd = (misfit(sp) - misfit(sm)) / (2.0 * h);
    CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("planted ridge is recovered exactly from gradients") {
  const int d = 20;
  const int k = 3;
  const int n = 400;
  const Eigen::MatrixXd p_true = random_frame(d, k, 31);
  // gradients lie exactly in span(P): g_i = P c_i with anisotropic c
  Eigen::MatrixXd cs = random_matrix(k, n, 32);
  cs.row(0) *= 6.0;
  cs.row(1) *= 2.5;
  const Eigen::MatrixXd grads = p_true * cs;

  const auto sub =
      subspace::active_subspace(grads, subspace::DimensionRule::Fixed, k, 0.95);
  REQUIRE(sub.dim == k);
  REQUIRE(sub.directions.cols() == d);
  CHECK(subspace_distance(sub.basis(), p_true) < 1e-10);
  CHECK(sub.eigenvalues[k] < 1e-12 * sub.eigenvalues[0]);
  for (int l = 1; l < d; ++l) CHECK(sub.eigenvalues[l] <= sub.eigenvalues[l - 1] + 1e-14);

  // directions are orthonormal
  const Eigen::MatrixXd dtd = sub.directions.transpose() * sub.directions;
  CHECK((dtd - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-10);

  SUBCASE("gap rule finds the planted dimension") {
    const auto gap = subspace::active_subspace(grads, subspace::DimensionRule::Gap, 1, 0.95);
    CHECK(gap.dim == k);
  }
  SUBCASE("cumulative rule respects its threshold") {
    const auto cum =
        subspace::active_subspace(grads, subspace::DimensionRule::Cumulative, 1, 0.999999);
    CHECK(cum.dim <= k);
    const double total = cum.eigenvalues.sum();
    double acc = 0.0;
    for (int l = 0; l < cum.dim - 1; ++l) acc += cum.eigenvalues[l];
    CHECK(acc / total < 0.999999);
  }
}

TEST_CASE("sensitivity matrix is the scaled gradient outer product") {
  const Eigen::MatrixXd grads = random_matrix(5, 64, 37);
  const Eigen::MatrixXd sigma = subspace::sensitivity_matrix(grads);
  const Eigen::MatrixXd want = grads * grads.transpose() / 64.0;
  CHECK((sigma - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("input PCA subspace spans the leading variance directions") {
  const int d = 10;
  const int n = 2000;
  // correlated inputs: two strong latent factors plus small isotropic noise
  const Eigen::MatrixXd w = random_frame(d, 2, 41);
  const Eigen::MatrixXd f = random_matrix(n, 2, 42, 3.0);
  const Eigen::MatrixXd x = f * w.transpose() + random_matrix(n, d, 43, 0.05);

  const auto sub = subspace::input_pca_subspace(x, subspace::DimensionRule::Fixed, 2, 0.95);
  REQUIRE(sub.dim == 2);
  CHECK(subspace_distance(sub.basis(), w) < 0.05);
  for (int l = 1; l < d; ++l) CHECK(sub.eigenvalues[l] <= sub.eigenvalues[l - 1] + 1e-14);
}

TEST_CASE("projection maps rows through the basis") {
  const Eigen::MatrixXd basis = random_frame(8, 3, 47);
  const Eigen::MatrixXd x = random_matrix(25, 8, 48);
  const Eigen::MatrixXd red = subspace::project(basis, x);
  REQUIRE(red.rows() == 25);
  REQUIRE(red.cols() == 3);
  CHECK((red - x * basis).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("rule parsing rejects unknown names") {
  CHECK(subspace::dimension_rule_from_string("fixed") == subspace::DimensionRule::Fixed);
  CHECK(subspace::dimension_rule_from_string("gap") == subspace::DimensionRule::Gap);
  CHECK(subspace::dimension_rule_from_string("cumulative") ==
        subspace::DimensionRule::Cumulative);
  CHECK_THROWS_AS(subspace::dimension_rule_from_string("elbow"), ConfigError);
}

}  // TEST_SUITE
