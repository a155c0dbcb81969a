/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <utility>
#include <vector>

#include "specemu/emulator.hpp"
#include "specemu/errors.hpp"
#include "specemu/log.hpp"

namespace specemu::emulator {
namespace {
std::atomic<bool> g_clamp_warned{false};
constexpr double kJitter = 1e-10;
}  // namespace

Predictor::Predictor(const NNGPModel& model, const Eigen::VectorXd& ranges, double nugget,
                     GlsSummary summary, int t_pred)
    : model_(model),
      spec_(model.spec_with(ranges, nugget)),
      summary_(std::move(summary)),
      t_pred_(t_pred) {
  if (t_pred_ < 1) throw ConfigError("Predictor: neighbor count must be positive");
  if (t_pred_ > model_.n()) {
    if (!g_clamp_warned.exchange(true)) {
      log_warn("Predictor: neighbor count exceeds run count, conditioning on all runs");
    }
    t_pred_ = model_.n();
  }
}

PredictiveT Predictor::at(const Eigen::VectorXd& s0) const {
  const int dim = model_.input_dim();
  const int t = t_pred_;
  const int np = static_cast<int>(summary_.beta.rows());
  const int nq = static_cast<int>(summary_.beta.cols());
  if (static_cast<int>(s0.size()) != dim) throw ConfigError("Predictor: query dimension mismatch");

  thread_local std::vector<double> d2;
  const std::vector<int> idx = nngp::predict_neighbors(model_.inputs(), s0, spec_.ranges, t, &d2);

  Eigen::MatrixXd sub(t, dim);
  Eigen::MatrixXd hn(t, np);
  Eigen::MatrixXd zn(t, nq);
  Eigen::VectorXd d2sel(t);
  for (int k = 0; k < t; ++k) {
    const int j = idx[k];
    sub.row(k) = model_.inputs().row(j);
    hn.row(k) = model_.trend().row(j);
    zn.row(k) = model_.responses().row(j);
    d2sel[k] = d2[k];
  }

  // Reference-set correlation carries the nugget on its diagonal; the
  // query's cross-correlation picks it up only at exact coincidence, which
  // makes the predictive mean interpolate stored responses for any nugget.
  Eigen::MatrixXd rn = kernels::corr_matrix(sub, spec_, true);
  Eigen::VectorXd r0(t);
  kernels::corr_profile_sq(spec_, d2sel.data(), static_cast<std::size_t>(t), r0.data());
  for (int k = 0; k < t; ++k) {
    if (d2sel[k] == 0.0) r0[k] += spec_.nugget;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(rn);
  if (llt.info() != Eigen::Success) {
    rn.diagonal().array() += kJitter;
    llt.compute(rn);
    if (llt.info() != Eigen::Success) {
      throw NumericError("Predictor: reference correlation is not positive definite");
    }
  }
  const Eigen::VectorXd rinv_r0 = llt.solve(r0);
  const Eigen::VectorXd h0 = trend_row(s0, model_.trend_type());
  const Eigen::MatrixXd resid = zn - hn * summary_.beta;
  const Eigen::VectorXd u = h0 - hn.transpose() * rinv_r0;

  PredictiveT out;
  out.mean = summary_.beta.transpose() * h0 + resid.transpose() * rinv_r0;
  const double rhat =
      std::max(0.0, (1.0 + spec_.nugget) - r0.dot(rinv_r0) + u.dot(summary_.htrih_inv * u));
  out.rhat = rhat;
  out.dof = summary_.dof;
  out.scale.resize(nq);
  for (int j = 0; j < nq; ++j) {
    out.scale[j] = std::sqrt(std::max(0.0, summary_.gls_cov(j, j) * rhat));
  }
  return out;
}

EquivalenceReport ind_sep_equivalence(const Eigen::MatrixXd& s, const Eigen::MatrixXd& z,
                                      Trend trend, int t, const kernels::KernelSpec& spec,
                                      const Eigen::MatrixXd& queries, int t_pred) {
  if (queries.cols() != s.cols()) throw ConfigError("ind_sep_equivalence: query dimension mismatch");
  const int nq = static_cast<int>(z.cols());

  NNGPModel sep(s, z, trend, t, spec.family, spec.nu, spec.alpha);
  Predictor sep_pred(sep, spec.ranges, spec.nugget, sep.gls(spec.ranges, spec.nugget), t_pred);

  std::vector<std::unique_ptr<NNGPModel>> ind;
  std::vector<std::unique_ptr<Predictor>> ind_pred;
  ind.reserve(nq);
  ind_pred.reserve(nq);
  for (int j = 0; j < nq; ++j) {
    ind.push_back(std::make_unique<NNGPModel>(s, z.col(j), trend, t, spec.family, spec.nu,
                                              spec.alpha));
    ind_pred.push_back(std::make_unique<Predictor>(
        *ind.back(), spec.ranges, spec.nugget, ind.back()->gls(spec.ranges, spec.nugget), t_pred));
  }

  EquivalenceReport rep;
  for (int r = 0; r < queries.rows(); ++r) {
    const Eigen::VectorXd q0 = queries.row(r);
    const PredictiveT joint = sep_pred.at(q0);
    for (int j = 0; j < nq; ++j) {
      const PredictiveT single = ind_pred[j]->at(q0);
      rep.max_mean_delta = std::max(rep.max_mean_delta, std::abs(joint.mean[j] - single.mean[0]));
      rep.max_scale_delta =
          std::max(rep.max_scale_delta, std::abs(joint.scale[j] - single.scale[0]));
    }
  }
  return rep;
}

}  // namespace specemu::emulator
