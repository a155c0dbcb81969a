/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "specemu/errors.hpp"
#include "specemu/inference.hpp"
#include "specemu/log.hpp"

namespace specemu::inference {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinStep = 1e-6;
constexpr double kMaxStep = 10.0;

struct SafeTarget {
  const Target& fn;
  bool warned = false;

  double operator()(const Eigen::VectorXd& x) {
    double v;
    try {
      v = fn(x);
    } catch (const NumericError& e) {
      if (!warned) {
        log_warn(std::string("chain: infeasible proposal (") + e.what() + "), rejecting");
        warned = true;
      }
      return kNegInf;
    }
    if (std::isnan(v)) {
      if (!warned) {
        log_warn("chain: target returned NaN, rejecting");
        warned = true;
      }
      return kNegInf;
    }
    return v;
  }
};

}  // namespace

double log_prior(const Eigen::VectorXd& params) {
  double lp = 0.0;
  for (int j = 0; j < params.size(); ++j) {
    if (!(params[j] > 0.0)) return kNegInf;
    lp -= std::log1p(params[j] * params[j]);
  }
  return lp;
}

void ChainConfig::validate(int param_count) const {
  if (param_count < 1) throw ConfigError("chain: no parameters");
  if (iterations < 1) throw ConfigError("chain: iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("chain: burn-in out of range");
  if (retained < 1) throw ConfigError("chain: retained count must be positive");
  if (retained > iterations - burn_in) {
    throw ConfigError("chain: retained count exceeds post burn-in iterations");
  }
  if (!(initial_step >= 0.0)) throw ConfigError("chain: negative initial step");
  if (!(target_rate > 0.0) || !(target_rate < 1.0)) throw ConfigError("chain: bad target rate");
  if (adapt_window < 1) throw ConfigError("chain: adapt window must be positive");
}

std::vector<bool> mh_step(const Target& target, Eigen::VectorXd& params, double& log_target,
                          const Eigen::VectorXd& steps, Rng& rng) {
  const int k = static_cast<int>(params.size());
  if (steps.size() != k) throw ConfigError("mh_step: step vector dimension mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<bool> accepted(static_cast<std::size_t>(k), false);
  Eigen::VectorXd prop = params;
  for (int j = 0; j < k; ++j) {
    const double xi = normal(rng);
    const double u = unif(rng);
    prop = params;
    prop[j] = params[j] * std::exp(steps[j] * xi);
    const double fprop = target(prop);
    const double logr = fprop - log_target + std::log(prop[j]) - std::log(params[j]);
    if (std::log(u) < logr) {
      params[j] = prop[j];
      log_target = fprop;
      accepted[static_cast<std::size_t>(j)] = true;
    }
  }
  return accepted;
}

ChainResult run_chain(const Target& target, const Eigen::VectorXd& init, const ChainConfig& cfg,
                      Rng& rng, const RetainCallback& on_retain) {
  const int k = static_cast<int>(init.size());
  cfg.validate(k);
  for (int j = 0; j < k; ++j) {
    if (!(init[j] > 0.0)) throw ConfigError("chain: initial parameters must be positive");
  }

  SafeTarget safe{target};
  Eigen::VectorXd cur = init;
  double fcur = safe(cur);
  if (fcur == kNegInf) throw ConfigError("chain: initial point has an invalid target value");

  Eigen::VectorXd steps = Eigen::VectorXd::Constant(k, cfg.initial_step);
  std::vector<int> win_accept(k, 0);
  std::vector<long> post_accept(k, 0);
  int window_iters = 0;
  int windows_done = 0;
  bool shrink_warned = false;

  ChainResult out;
  out.samples.resize(cfg.retained, k);
  out.target_trace.resize(cfg.retained);
  const int first_kept = cfg.iterations - cfg.retained;

  const Target guarded = [&safe](const Eigen::VectorXd& x) { return safe(x); };

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const std::vector<bool> moved = mh_step(guarded, cur, fcur, steps, rng);
    for (int j = 0; j < k; ++j) {
      if (!moved[static_cast<std::size_t>(j)]) continue;
      if (iter < cfg.burn_in) ++win_accept[j];
      else ++post_accept[j];
    }

    if (iter < cfg.burn_in) {
      if (++window_iters == cfg.adapt_window) {
        ++windows_done;
        const double gain = 2.0 / std::sqrt(1.0 + windows_done);
        for (int j = 0; j < k; ++j) {
          const double rate = double(win_accept[j]) / cfg.adapt_window;
          double s = steps[j] * std::exp(gain * (rate - cfg.target_rate));
          if (win_accept[j] == 0) {
            s *= 0.5;
            if (!shrink_warned) {
              log_warn("chain: a full adaptation window rejected every proposal, shrinking step");
              shrink_warned = true;
            }
          }
          steps[j] = std::clamp(s, kMinStep, kMaxStep);
          win_accept[j] = 0;
        }
        window_iters = 0;
      }
    }

    if (iter >= first_kept) {
      const int r = iter - first_kept;
      out.samples.row(r) = cur.transpose();
      out.target_trace[r] = fcur;
      if (on_retain) on_retain(r, cur);
    }
  }

  out.steps = steps;
  out.accept_rate.resize(k);
  const double post = double(cfg.iterations - cfg.burn_in);
  for (int j = 0; j < k; ++j) out.accept_rate[j] = double(post_accept[j]) / post;
  return out;
}

Eigen::VectorXd map_estimate(const Target& target, const Eigen::VectorXd& init, int max_iters) {
  const int k = static_cast<int>(init.size());
  if (k < 1) throw ConfigError("map_estimate: empty parameter vector");
  for (int j = 0; j < k; ++j) {
    if (!(init[j] > 0.0)) throw ConfigError("map_estimate: initial parameters must be positive");
  }

  SafeTarget safe{target};
  // Nelder-Mead on the negated target over log coordinates.
  auto eval = [&](const Eigen::VectorXd& u) { return -safe(u.array().exp().matrix()); };

  const int m = k + 1;
  std::vector<Eigen::VectorXd> simplex(m);
  std::vector<double> fv(m);
  simplex[0] = init.array().log().matrix();
  fv[0] = eval(simplex[0]);
  for (int j = 1; j < m; ++j) {
    simplex[j] = simplex[0];
    simplex[j][j - 1] += 0.2;
    fv[j] = eval(simplex[j]);
  }

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  for (int it = 0; it < max_iters; ++it) {
    std::vector<int> ord(m);
    for (int j = 0; j < m; ++j) ord[j] = j;
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = ord[0], worst = ord[m - 1], second = ord[m - 2];
    if (std::isfinite(fv[best]) && std::isfinite(fv[worst]) &&
        fv[worst] - fv[best] < 1e-10 * (std::abs(fv[best]) + 1.0)) {
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < m; ++j) {
      if (j != worst) centroid += simplex[j];
    }
    centroid /= double(k);

    Eigen::VectorXd xr = centroid + alpha * (centroid - simplex[worst]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      Eigen::VectorXd xe = centroid + gamma * (centroid - simplex[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
    } else {
      Eigen::VectorXd xc = centroid + rho * (simplex[worst] - centroid);
      const double fc = eval(xc);
      if (fc < fv[worst]) {
        simplex[worst] = xc;
        fv[worst] = fc;
      } else {
        for (int j = 0; j < m; ++j) {
          if (j == best) continue;
          simplex[j] = simplex[best] + sigma * (simplex[j] - simplex[best]);
          fv[j] = eval(simplex[j]);
        }
      }
    }
  }

  int best = 0;
  for (int j = 1; j < m; ++j) {
    if (fv[j] < fv[best]) best = j;
  }
  return simplex[best].array().exp().matrix();
}

}  // namespace specemu::inference
