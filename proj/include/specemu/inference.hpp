/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_INFERENCE_HPP_
#define SPECEMU_INFERENCE_HPP_

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "specemu/rng.hpp"

namespace specemu::inference {

//! Independent half-Cauchy priors on each positive parameter,
//! log pi(lambda) = sum_j -log(1 + lambda_j^2) up to a constant.
double log_prior(const Eigen::VectorXd& params);

struct ChainConfig {
  int iterations = 3500;
  int burn_in = 500;
  int retained = 3000;
  double initial_step = 0.3;
  double target_rate = 0.35;
  int adapt_window = 25;

  void validate(int param_count) const;
};

struct ChainResult {
  Eigen::MatrixXd samples;       //!< retained x k, one row per kept iterate
  Eigen::VectorXd target_trace;  //!< target value at each kept iterate
  Eigen::VectorXd accept_rate;   //!< per-parameter rate over the post burn-in phase
  Eigen::VectorXd steps;         //!< proposal scales after adaptation froze
};

using Target = std::function<double(const Eigen::VectorXd&)>;
using RetainCallback = std::function<void(int, const Eigen::VectorXd&)>;

/*!
* One componentwise Metropolis sweep over positive parameters, in place.
* Coordinate j proposes params_j' = params_j exp(steps_j xi) with standard
* normal xi; the log-normal asymmetry adds log(params_j'/params_j) to the
* acceptance ratio. params and log_target are updated as proposals land, and
* the returned flags record which coordinates moved. One normal and one
* uniform draw are consumed per coordinate whatever the outcome, so the
* stream position after a sweep depends only on the dimension. A target
* value of NaN or -inf rejects; exceptions propagate to the caller.
*/
std::vector<bool> mh_step(const Target& target, Eigen::VectorXd& params, double& log_target,
                          const Eigen::VectorXd& steps, Rng& rng);

/*!
* Componentwise random-walk Metropolis on positive parameters. Each sweep
* updates every coordinate once with a log-normal proposal lambda_j' =
* lambda_j exp(s_j xi); the proposal asymmetry contributes log(lambda_j' /
* lambda_j) to the acceptance ratio. Proposal scales adapt toward the target
* acceptance rate in windows during burn-in only (Robbins-Monro with gain
* 2/sqrt(1+k) over windows, plus an extra halving when a window rejects
* everything) and are frozen afterwards, so the retained chain is a fixed
* Markov kernel. A target evaluating to NaN or throwing NumericError counts
* as an infeasible proposal and is rejected. The draw sequence depends only
* on the seed, never on thread count.
*
* on_retain fires for each kept iterate, after it is recorded; heavy
* per-sample state (GLS summaries for prediction) hooks in there.
*/
ChainResult run_chain(const Target& target, const Eigen::VectorXd& init, const ChainConfig& cfg,
                      Rng& rng, const RetainCallback& on_retain = {});

//! Nelder-Mead ascent on target over log coordinates; returns the best
//! parameter vector found. Used for cheap point estimates and warm starts.
Eigen::VectorXd map_estimate(const Target& target, const Eigen::VectorXd& init,
                             int max_iters = 400);

}  // namespace specemu::inference

#endif
