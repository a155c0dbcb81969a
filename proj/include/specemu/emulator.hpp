/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_EMULATOR_HPP_
#define SPECEMU_EMULATOR_HPP_

#include <Eigen/Dense>
#include <deque>
#include <memory>
#include <string>
#include <utility>

#include "specemu/kernels.hpp"
#include "specemu/nngp.hpp"

namespace specemu::emulator {

enum class Trend { Constant, Linear };

Trend trend_from_string(const std::string& name);
std::string to_string(Trend trend);

//! Regression design over reduced inputs: a ones column, optionally
//! followed by the inputs themselves.
Eigen::MatrixXd trend_matrix(const Eigen::MatrixXd& s, Trend trend);
Eigen::VectorXd trend_row(const Eigen::VectorXd& s0, Trend trend);

/*!
* Profiled GLS pieces of the marginal likelihood at a fixed kernel. With
* G = R^{-1} - R^{-1} H (H^T R^{-1} H)^{-1} H^T R^{-1}, the residual cross
* products Z^T G Z drive both the likelihood and the predictive scale, and
* the summary carries everything prediction needs beyond local solves.
*/
struct GlsSummary {
  Eigen::MatrixXd ht_ri_h;    //!< H^T R^{-1} H
  Eigen::MatrixXd ht_ri_z;    //!< H^T R^{-1} Z
  Eigen::MatrixXd zt_gz;      //!< Z^T G Z
  double logdet_r = 0.0;
  double logdet_ht_ri_h = 0.0;

  Eigen::MatrixXd beta;       //!< GLS trend coefficients, p x q
  Eigen::MatrixXd htrih_inv;  //!< (H^T R^{-1} H)^{-1}
  Eigen::MatrixXd gls_cov;    //!< Z^T G Z / (n - p)
  double dof = 0.0;           //!< n - p
};

/*!
* Gaussian process over reduced inputs with a nearest-neighbor working
* correlation, an objective (Jeffreys-style) prior on the trend and scale,
* and q response columns. q = 1 is the independent single-output model; for
* q > 1 the columns share the correlation (separable cross-covariance), and
* the profiled marginal likelihood is
*
*   -(q/2) log|R| - (q/2) log|H^T R^{-1} H| - ((n-p)/2) log det(Z^T G Z),
*
* which reduces to the familiar single-output expression at q = 1.
*/
class NNGPModel {
 public:
  NNGPModel(Eigen::MatrixXd s, Eigen::MatrixXd z, Trend trend, int t,
            kernels::Family family, double nu, double alpha);

  int n() const { return static_cast<int>(s_.rows()); }
  int input_dim() const { return static_cast<int>(s_.cols()); }
  int q() const { return static_cast<int>(z_.cols()); }
  int p() const { return static_cast<int>(h_.cols()); }

  const Eigen::MatrixXd& inputs() const { return s_; }
  const Eigen::MatrixXd& responses() const { return z_; }
  const Eigen::MatrixXd& trend() const { return h_; }
  Trend trend_type() const { return trend_type_; }

  //! Kernel spec at the model's fixed family with the given free parameters.
  kernels::KernelSpec spec_with(const Eigen::VectorXd& ranges, double nugget) const;

  //! Profiled marginal log likelihood (no prior term).
  double log_marginal(const Eigen::VectorXd& ranges, double nugget);

  /*!
  * GLS summary at the given parameters. A small ring cache keyed on the
  * exact parameter values makes the repeated lookups of a Metropolis sweep
  * (current point, retained draw) close to free.
  */
  const GlsSummary& gls(const Eigen::VectorXd& ranges, double nugget);

  const nngp::NeighborGraph& graph() const { return ensure_solver().graph(); }
  const nngp::MarginalSolver& solver() const { return ensure_solver(); }

 private:
  GlsSummary compute_gls(const Eigen::VectorXd& ranges, double nugget);
  //! The conditioning graph and pair cache are built on first likelihood
  //! evaluation; a model restored just for prediction never pays for them.
  nngp::MarginalSolver& ensure_solver() const;

  Eigen::MatrixXd s_, z_, h_;
  Trend trend_type_;
  kernels::KernelSpec base_spec_;
  int t_ = 0;
  mutable std::unique_ptr<nngp::MarginalSolver> solver_;
  Eigen::MatrixXd hz_;  // [H Z], assembled once

  std::deque<std::pair<Eigen::VectorXd, GlsSummary>> cache_;  // key: [ranges; nugget]
  static constexpr std::size_t kCacheSize = 16;
};

//! Student-t predictive marginals at one query point, one entry per
//! response column; under a shared correlation the columns also share the
//! relative kriging variance rhat.
struct PredictiveT {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  double dof = 0.0;
  double rhat = 0.0;
};

/*!
* Plug-in predictor at fixed kernel parameters. Conditioning is local: the
* t training points nearest to the query under the current scaled distance
* form the reference set, and the trend uncertainty enters through the
* full-data GLS factor carried by the summary. A query that coincides
* exactly with a training point receives the nugget in its cross-correlation,
* so the predictive mean interpolates the stored response there.
*/
class Predictor {
 public:
  Predictor(const NNGPModel& model, const Eigen::VectorXd& ranges, double nugget,
            GlsSummary summary, int t_pred);

  PredictiveT at(const Eigen::VectorXd& s0) const;

  int t_pred() const { return t_pred_; }

 private:
  const NNGPModel& model_;
  kernels::KernelSpec spec_;
  GlsSummary summary_;
  int t_pred_;
};

/*!
* Largest discrepancy between the multi-output predictor over z (columns
* sharing one correlation) and the per-column single-output predictors at
* the same kernel parameters, across the given query points. Means and
* scale diagonals of the two parameterizations agree up to floating-point
* error, so both deltas should sit at machine precision.
*/
struct EquivalenceReport {
  double max_mean_delta = 0.0;
  double max_scale_delta = 0.0;
};

EquivalenceReport ind_sep_equivalence(const Eigen::MatrixXd& s, const Eigen::MatrixXd& z,
                                      Trend trend, int t, const kernels::KernelSpec& spec,
                                      const Eigen::MatrixXd& queries, int t_pred);

}  // namespace specemu::emulator

#endif
