#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "specemu/errors.hpp"
#include "specemu/kernels.hpp"
#include "support/dense_gp.hpp"
#include "support/quad.hpp"

using namespace specemu;

namespace {

kernels::KernelSpec matern_spec(double nu, const Eigen::VectorXd& ranges, double nugget) {
  kernels::KernelSpec spec;
  spec.family = kernels::Family::Matern;
  spec.nu = nu;
  spec.ranges = ranges;
  spec.nugget = nugget;
  spec.validate();
  return spec;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("matern closed forms match the Bessel oracle") {
  for (double nu : {0.5, 1.5, 2.5}) {
    for (int i = 0; i <= 2000; ++i) {
      const double d = 20.0 * i / 2000.0;
      const double got = kernels::matern(d, nu);
      const double want = testsupport::matern_bessel(d, nu);
      CHECK(std::abs(got - want) < 1e-12);
    }
  }
}

TEST_CASE("matern generic smoothness goes through the same profile") {
  // Non-half-integer orders have no closed form; the library's Bessel route
  // and the oracle must still agree, and the profile must be 1 at zero.
  for (double nu : {0.8, 1.7, 3.2}) {
    CHECK(kernels::matern(0.0, nu) == 1.0);
    for (double d : {0.05, 0.3, 1.0, 4.0, 12.0}) {
      const double got = kernels::matern(d, nu);
      const double want = testsupport::matern_bessel(d, nu);
      CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("power exponential profile") {
  CHECK(kernels::power_exp(0.0, 1.3) == 1.0);
  for (double d : {0.1, 0.7, 2.0, 5.0}) {
    CHECK(kernels::power_exp(d, 1.0) == doctest::Approx(std::exp(-d)).epsilon(1e-14));
    CHECK(kernels::power_exp(d, 2.0) == doctest::Approx(std::exp(-d * d)).epsilon(1e-14));
    CHECK(kernels::power_exp(d, 1.4) ==
          doctest::Approx(std::exp(-std::pow(d, 1.4))).epsilon(1e-14));
  }
  // monotone decreasing
  double prev = 1.0;
  for (int i = 1; i <= 50; ++i) {
    const double v = kernels::power_exp(0.2 * i, 1.7);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("confluent hypergeometric profile matches a quadrature oracle") {
  // rho(d) = Gamma(nu+alpha)/(Gamma(nu)Gamma(alpha))
  //          * Int_0^1 exp(-d^2 u/(1-u)) u^{alpha-1} (1-u)^{nu-1} du.
  // The oracle integrates in a substituted variable u = v^2/(v^2 + (1-v)^2)
  // free of endpoint blowups for the tested parameter range (alpha, nu >= 1).
  for (double nu : {1.0, 2.5}) {
    for (double alpha : {1.0, 2.0}) {
      const double norm =
          std::tgamma(nu + alpha) / (std::tgamma(nu) * std::tgamma(alpha));
      for (double d : {0.0, 0.4, 1.3, 3.0}) {
        const auto f = [&](double u) {
          if (u <= 0.0 || u >= 1.0) return 0.0;
          return std::exp(-d * d * u / (1.0 - u)) * std::pow(u, alpha - 1.0) *
                 std::pow(1.0 - u, nu - 1.0);
        };
        const double want = norm * testsupport::integrate(f, 0.0, 1.0, 1e-13);
        const double got = kernels::confluent_hg(d, nu, alpha);
        CHECK(got == doctest::Approx(want).epsilon(1e-8));
      }
      CHECK(kernels::confluent_hg(0.0, nu, alpha) == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("corr_value dispatches per family") {
  Eigen::VectorXd ranges = Eigen::VectorXd::Ones(1);
  kernels::KernelSpec spec = matern_spec(2.5, ranges, 0.0);
  CHECK(kernels::corr_value(1.3, spec) == doctest::Approx(kernels::matern(1.3, 2.5)));

  spec.family = kernels::Family::PowerExp;
  spec.alpha = 1.6;
  CHECK(kernels::corr_value(1.3, spec) == doctest::Approx(kernels::power_exp(1.3, 1.6)));

  spec.family = kernels::Family::ConfluentHG;
  spec.nu = 1.5;
  spec.alpha = 1.0;
  CHECK(kernels::corr_value(1.3, spec) ==
        doctest::Approx(kernels::confluent_hg(1.3, 1.5, 1.0)));
}

TEST_CASE("batched profile agrees with pointwise evaluation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 9.0);
  Eigen::VectorXd ranges = Eigen::VectorXd::Ones(1);

  std::vector<kernels::KernelSpec> specs;
  specs.push_back(matern_spec(0.5, ranges, 0.0));
  specs.push_back(matern_spec(1.5, ranges, 0.0));
  specs.push_back(matern_spec(2.5, ranges, 0.0));
  specs.push_back(matern_spec(1.9, ranges, 0.0));  // Bessel fallback path
  {
    kernels::KernelSpec pe = specs[0];
    pe.family = kernels::Family::PowerExp;
    pe.alpha = 1.0;
    specs.push_back(pe);
    pe.alpha = 2.0;
    specs.push_back(pe);
    pe.alpha = 1.5;
    specs.push_back(pe);
  }

  std::vector<double> d2(257);
  for (auto& v : d2) v = u(rng);
  d2[0] = 0.0;
  std::vector<double> out(d2.size());
  for (const auto& spec : specs) {
    kernels::corr_profile_sq(spec, d2.data(), d2.size(), out.data());
    for (std::size_t i = 0; i < d2.size(); ++i) {
      const double want = kernels::corr_value(std::sqrt(d2[i]), spec);
      CHECK(std::abs(out[i] - want) < 1e-13);
    }
  }
}

TEST_CASE("scaled distance is anisotropic and validated") {
  Eigen::VectorXd a(2), b(2), ranges(2);
  a << 1.0, 2.0;
  b << 3.0, -1.0;
  ranges << 2.0, 3.0;
  CHECK(kernels::scaled_distance(a, b, ranges) ==
        doctest::Approx(std::sqrt(1.0 + 1.0)).epsilon(1e-14));
  ranges[1] = 0.0;
  CHECK_THROWS_AS(kernels::scaled_distance(a, b, ranges), ConfigError);
  Eigen::VectorXd short_ranges(1);
  short_ranges << 1.0;
  CHECK_THROWS_AS(kernels::scaled_distance(a, b, short_ranges), ConfigError);
}

TEST_CASE("correlation matrix is symmetric positive definite with unit-plus-nugget diagonal") {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd pts(40, 3);
  for (int i = 0; i < pts.rows(); ++i) {
    for (int j = 0; j < pts.cols(); ++j) pts(i, j) = g(rng);
  }
  Eigen::VectorXd ranges(3);
  ranges << 1.0, 2.0, 0.7;
  const kernels::KernelSpec spec = matern_spec(2.5, ranges, 1e-3);

  const Eigen::MatrixXd r = kernels::corr_matrix(pts, spec, true);
  CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < r.rows(); ++i) CHECK(r(i, i) == doctest::Approx(1.0 + 1e-3));
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  CHECK(llt.info() == Eigen::Success);

  const Eigen::MatrixXd c = kernels::corr_matrix(pts, spec, false);
  for (int i = 0; i < c.rows(); ++i) CHECK(c(i, i) == 1.0);
  CHECK((r - c).cwiseAbs().maxCoeff() == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("cross correlation honors the coincidence convention") {
  Eigen::MatrixXd a(3, 2);
  a << 0.0, 0.0, 1.0, 1.0, 2.0, 0.5;
  Eigen::MatrixXd b(2, 2);
  b << 1.0, 1.0, 0.3, -0.2;
  Eigen::VectorXd ranges = Eigen::VectorXd::Ones(2);
  const kernels::KernelSpec spec = matern_spec(2.5, ranges, 0.05);

  const Eigen::MatrixXd with = kernels::corr_cross(a, b, spec, true);
  const Eigen::MatrixXd without = kernels::corr_cross(a, b, spec, false);
  CHECK(with.rows() == 3);
  CHECK(with.cols() == 2);
  // row 1 of a equals row 0 of b exactly
  CHECK(with(1, 0) == doctest::Approx(1.0 + 0.05).epsilon(1e-14));
  CHECK(without(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (i == 1 && j == 0) continue;
      CHECK(with(i, j) == without(i, j));
    }
  }
}

TEST_CASE("spec validation and family names") {
  CHECK(kernels::family_from_string("matern") == kernels::Family::Matern);
  CHECK(kernels::family_from_string("power_exp") == kernels::Family::PowerExp);
  CHECK(kernels::family_from_string("confluent_hg") == kernels::Family::ConfluentHG);
  CHECK_THROWS_AS(kernels::family_from_string("gauss"), ConfigError);
  for (auto f : {kernels::Family::Matern, kernels::Family::PowerExp,
                 kernels::Family::ConfluentHG}) {
    CHECK(kernels::family_from_string(kernels::family_to_string(f)) == f);
  }

  Eigen::VectorXd ranges = Eigen::VectorXd::Ones(2);
  kernels::KernelSpec bad = matern_spec(2.5, ranges, 0.0);
  bad.nu = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = matern_spec(2.5, ranges, 0.0);
  bad.family = kernels::Family::PowerExp;
  bad.alpha = 2.5;  // exponent must stay in (0, 2]
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = matern_spec(2.5, ranges, 0.0);
  bad.nugget = -1e-4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = matern_spec(2.5, ranges, 0.0);
  bad.ranges[0] = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

}  // TEST_SUITE
