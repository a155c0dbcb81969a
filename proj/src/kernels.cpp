/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include "specemu/kernels.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "specemu/errors.hpp"
#include "specemu/log.hpp"
#include "specemu/simd/ops.hpp"

namespace specemu::kernels {

Family family_from_string(const std::string& s) {
  if (s == "matern") return Family::Matern;
  if (s == "powerexp" || s == "power_exp") return Family::PowerExp;
  if (s == "ch" || s == "confluent_hg") return Family::ConfluentHG;
  throw ConfigError("unknown kernel family '" + s + "' (matern|powerexp|ch)");
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::Matern:
      return "matern";
    case Family::PowerExp:
      return "powerexp";
    case Family::ConfluentHG:
      return "ch";
  }
  return "matern";
}

void KernelSpec::validate() const {
  if (ranges.size() == 0) throw ConfigError("kernel ranges are empty");
  for (Eigen::Index j = 0; j < ranges.size(); ++j) {
    if (!(ranges[j] > 0.0) || !std::isfinite(ranges[j])) {
      throw ConfigError("kernel range " + std::to_string(j) + " must be positive and finite");
    }
  }
  if (!(nugget >= 0.0) || !std::isfinite(nugget)) throw ConfigError("nugget must be >= 0");
  switch (family) {
    case Family::Matern:
      if (!(nu > 0.0)) throw ConfigError("matern smoothness nu must be > 0");
      break;
    case Family::PowerExp:
      if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("power-exponential alpha must lie in (0, 2]");
      break;
    case Family::ConfluentHG:
      if (!(nu > 0.0) || !(alpha > 0.0)) throw ConfigError("confluent-hg needs nu > 0 and alpha > 0");
      break;
  }
}

KernelSpec KernelSpec::with_params(const Eigen::VectorXd& ranges_in, double nugget_in) const {
  KernelSpec out = *this;
  out.ranges = ranges_in;
  out.nugget = nugget_in;
  return out;
}

double scaled_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& ranges) {
  if (a.size() != b.size() || a.size() != ranges.size()) {
    throw ConfigError("scaled_distance: dimension mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (!(ranges[j] > 0.0)) throw ConfigError("scaled_distance: nonpositive range");
    const double diff = (a[j] - b[j]) / ranges[j];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

double matern(double d, double nu) {
  if (!(d >= 0.0)) throw ConfigError("matern: negative distance");
  if (d == 0.0) return 1.0;
  const double x = std::sqrt(2.0 * nu) * d;
  if (nu == 0.5) return std::exp(-x);
  if (nu == 1.5) return (1.0 + x) * std::exp(-x);
  if (nu == 2.5) return (1.0 + x + x * x / 3.0) * std::exp(-x);
  // generic order through the modified Bessel function of the second kind
  const double val =
      std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
  if (!std::isfinite(val)) {
    // x^nu underflow against K_nu blowup only happens vanishingly close to 0
    return x < 1.0 ? 1.0 : 0.0;
  }
  return std::min(1.0, std::max(0.0, val));
}

double power_exp(double d, double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("power_exp: alpha must lie in (0, 2]");
  if (!(d >= 0.0)) throw ConfigError("power_exp: negative distance");
  if (d == 0.0) return 1.0;
  if (alpha == 2.0) return std::exp(-d * d);
  if (alpha == 1.0) return std::exp(-d);
  return std::exp(-std::pow(d, alpha));
}

namespace {

// tanh-sinh nodes on (0, 1): u(s) = (1 + tanh((pi/2) sinh(s))) / 2.
// Level-doubling trapezoid in s; endpoint singularities u^{alpha-1} and
// (1-u)^{nu-1} are tamed by the double-exponential weight decay.
double tanh_sinh_beta_exp(double x, double alpha, double nu) {
  const double half_pi = 1.5707963267948966;
  auto integrand = [&](double s) -> double {
    const double c = half_pi * std::sinh(s);
    // 1-u = 1/(1+e^{2c}), u = e^{2c}/(1+e^{2c}); evaluate through exp to keep
    // precision in both tails
    const double e2c = std::exp(2.0 * c);
    const double one_minus_u = 1.0 / (1.0 + e2c);
    const double u = e2c * one_minus_u;
    const double du_ds = half_pi * std::cosh(s) / (2.0 * std::cosh(c) * std::cosh(c));
    if (u <= 0.0 || one_minus_u <= 0.0 || du_ds == 0.0) return 0.0;
    const double ratio = u / one_minus_u;  // = e^{2c}
    double logf = -x * ratio + (alpha - 1.0) * std::log(u) + (nu - 1.0) * std::log(one_minus_u);
    if (logf < -745.0) return 0.0;
    return std::exp(logf) * du_ds;
  };

  const double smax = 4.0;
  double h = 1.0;
  double sum = integrand(0.0);
  for (double s = h; s <= smax; s += h) sum += integrand(s) + integrand(-s);
  double prev = sum * h;
  for (int level = 1; level <= 12; ++level) {
    h *= 0.5;
    double add = 0.0;
    for (double s = h; s <= smax; s += 2.0 * h) add += integrand(s) + integrand(-s);
    sum += add;
    const double cur = sum * h;
    if (level >= 3 && std::abs(cur - prev) <= 1e-12 * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace

double confluent_hg(double d, double nu, double alpha) {
  if (!(nu > 0.0) || !(alpha > 0.0)) throw ConfigError("confluent_hg: needs nu > 0 and alpha > 0");
  if (!(d >= 0.0)) throw ConfigError("confluent_hg: negative distance");
  if (d == 0.0) return 1.0;
  const double x = d * d;
  const double integral = tanh_sinh_beta_exp(x, alpha, nu);
  if (!std::isfinite(integral) || integral < 0.0) {
    throw NumericError("confluent_hg: quadrature failed at d=" + std::to_string(d));
  }
  // log-space normalization Gamma(nu+alpha)/(Gamma(nu) Gamma(alpha))
  const double lognorm = std::lgamma(nu + alpha) - std::lgamma(nu) - std::lgamma(alpha);
  const double val = integral <= 0.0 ? 0.0 : std::exp(lognorm + std::log(integral));
  return std::min(1.0, val);
}

double corr_value(double d, const KernelSpec& spec) {
  switch (spec.family) {
    case Family::Matern:
      return matern(d, spec.nu);
    case Family::PowerExp:
      return power_exp(d, spec.alpha);
    case Family::ConfluentHG:
      return confluent_hg(d, spec.nu, spec.alpha);
  }
  return 0.0;
}

void corr_profile_sq(const KernelSpec& spec, const double* d2, std::size_t n, double* out) {
  const auto& ops = simd::active_ops();
  if (spec.family == Family::Matern) {
    if (spec.nu == 2.5) {
      ops.matern25_sq(d2, n, out);
      return;
    }
    if (spec.nu == 1.5) {
      ops.matern15_sq(d2, n, out);
      return;
    }
    if (spec.nu == 0.5) {
      ops.exp_neg_sqrt(d2, n, out);
      return;
    }
  } else if (spec.family == Family::PowerExp) {
    if (spec.alpha == 2.0) {
      ops.exp_neg(d2, n, out);
      return;
    }
    if (spec.alpha == 1.0) {
      ops.exp_neg_sqrt(d2, n, out);
      return;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = corr_value(std::sqrt(d2[i]), spec);
}

Eigen::MatrixXd corr_matrix(const Eigen::MatrixXd& pts, const KernelSpec& spec, bool add_nugget) {
  spec.validate();
  const Eigen::Index n = pts.rows();
  const Eigen::Index dim = pts.cols();
  if (dim != spec.ranges.size()) throw ConfigError("corr_matrix: point dim != ranges dim");

  Eigen::VectorXd w(dim);
  for (Eigen::Index j = 0; j < dim; ++j) w[j] = 1.0 / (spec.ranges[j] * spec.ranges[j]);

  const auto& ops = simd::active_ops();
  Eigen::MatrixXd out(n, n);
  std::vector<double> query(static_cast<std::size_t>(dim));
  std::vector<double> d2(static_cast<std::size_t>(n));
  std::vector<double> rho(static_cast<std::size_t>(n));
  bool dup_warned = false;

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) query[static_cast<std::size_t>(j)] = pts(i, j);
    // column-major storage makes pts.data() coordinate-major with stride n
    ops.sq_dist_to_point(query.data(), pts.data(), static_cast<std::size_t>(i),
                         static_cast<std::size_t>(dim), static_cast<std::size_t>(n), w.data(),
                         d2.data());
    corr_profile_sq(spec, d2.data(), static_cast<std::size_t>(i), rho.data());
    for (Eigen::Index k = 0; k < i; ++k) {
      if (d2[static_cast<std::size_t>(k)] == 0.0 && spec.nugget == 0.0 && !dup_warned) {
        log_warn("corr_matrix: coincident inputs with zero nugget, matrix is singular");
        dup_warned = true;
      }
      out(i, k) = rho[static_cast<std::size_t>(k)];
      out(k, i) = rho[static_cast<std::size_t>(k)];
    }
    out(i, i) = 1.0 + (add_nugget ? spec.nugget : 0.0);
  }
  return out;
}

Eigen::MatrixXd corr_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const KernelSpec& spec, bool nugget_at_coincidence) {
  spec.validate();
  if (a.cols() != b.cols() || a.cols() != spec.ranges.size()) {
    throw ConfigError("corr_cross: dimension mismatch");
  }
  const Eigen::Index na = a.rows();
  const Eigen::Index nb = b.rows();
  const Eigen::Index dim = a.cols();

  Eigen::VectorXd w(dim);
  for (Eigen::Index j = 0; j < dim; ++j) w[j] = 1.0 / (spec.ranges[j] * spec.ranges[j]);

  const auto& ops = simd::active_ops();
  Eigen::MatrixXd out(na, nb);
  std::vector<double> query(static_cast<std::size_t>(dim));
  std::vector<double> d2(static_cast<std::size_t>(nb));
  std::vector<double> rho(static_cast<std::size_t>(nb));

  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) query[static_cast<std::size_t>(j)] = a(i, j);
    ops.sq_dist_to_point(query.data(), b.data(), static_cast<std::size_t>(nb),
                         static_cast<std::size_t>(dim), static_cast<std::size_t>(nb), w.data(),
                         d2.data());
    corr_profile_sq(spec, d2.data(), static_cast<std::size_t>(nb), rho.data());
    for (Eigen::Index k = 0; k < nb; ++k) {
      double v = rho[static_cast<std::size_t>(k)];
      if (nugget_at_coincidence && d2[static_cast<std::size_t>(k)] == 0.0) v += spec.nugget;
      out(i, k) = v;
    }
  }
  return out;
}

}  // namespace specemu::kernels
