/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <Eigen/Cholesky>
#include <cmath>
#include <string>
#include <utility>

#include "specemu/emulator.hpp"
#include "specemu/errors.hpp"

namespace specemu::emulator {
namespace {

//! log det of a small SPD matrix through its Cholesky factor; NumericError
//! on indefiniteness so a Metropolis step can treat the point as infeasible.
double spd_logdet(const Eigen::MatrixXd& a, const char* what, Eigen::LLT<Eigen::MatrixXd>* out) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericError(std::string(what) + " is not positive definite");
  }
  double ld = 0.0;
  for (int i = 0; i < a.rows(); ++i) ld += std::log(llt.matrixLLT()(i, i));
  if (out != nullptr) *out = std::move(llt);
  return 2.0 * ld;
}

}  // namespace

Trend trend_from_string(const std::string& name) {
  if (name == "constant") return Trend::Constant;
  if (name == "linear") return Trend::Linear;
  throw ConfigError("unknown trend '" + name + "'");
}

std::string to_string(Trend trend) {
  return trend == Trend::Constant ? "constant" : "linear";
}

Eigen::MatrixXd trend_matrix(const Eigen::MatrixXd& s, Trend trend) {
  const int n = static_cast<int>(s.rows());
  if (trend == Trend::Constant) return Eigen::MatrixXd::Ones(n, 1);
  Eigen::MatrixXd h(n, s.cols() + 1);
  h.col(0).setOnes();
  h.rightCols(s.cols()) = s;
  return h;
}

Eigen::VectorXd trend_row(const Eigen::VectorXd& s0, Trend trend) {
  if (trend == Trend::Constant) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd h(s0.size() + 1);
  h[0] = 1.0;
  h.tail(s0.size()) = s0;
  return h;
}

NNGPModel::NNGPModel(Eigen::MatrixXd s, Eigen::MatrixXd z, Trend trend, int t,
                     kernels::Family family, double nu, double alpha)
    : s_(std::move(s)),
      z_(std::move(z)),
      h_(trend_matrix(s_, trend)),
      trend_type_(trend),
      t_(t) {
  if (t_ < 1 || t_ >= s_.rows()) throw ConfigError("NNGPModel: neighbor count must be in [1, n-1]");
  if (z_.rows() != s_.rows()) throw ConfigError("NNGPModel: response row count mismatch");
  if (n() <= p() + 1) throw DataError("NNGPModel: too few runs for the trend");
  base_spec_.family = family;
  base_spec_.nu = nu;
  base_spec_.alpha = alpha;
  base_spec_.ranges = Eigen::VectorXd::Ones(input_dim());
  base_spec_.nugget = 0.0;
  base_spec_.validate();
  hz_.resize(n(), p() + q());
  hz_.leftCols(p()) = h_;
  hz_.rightCols(q()) = z_;
}

kernels::KernelSpec NNGPModel::spec_with(const Eigen::VectorXd& ranges, double nugget) const {
  return base_spec_.with_params(ranges, nugget);
}

nngp::MarginalSolver& NNGPModel::ensure_solver() const {
  if (!solver_) solver_ = std::make_unique<nngp::MarginalSolver>(nngp::build_graph(s_, t_), s_);
  return *solver_;
}

GlsSummary NNGPModel::compute_gls(const Eigen::VectorXd& ranges, double nugget) {
  nngp::MarginalSolver& solver = ensure_solver();
  solver.set_params(spec_with(ranges, nugget));
  const nngp::MarginalParts parts = solver.marginal(hz_);

  const int np = p();
  const int nq = q();
  GlsSummary g;
  g.ht_ri_h = parts.quad.topLeftCorner(np, np);
  g.ht_ri_z = parts.quad.topRightCorner(np, nq);
  g.logdet_r = parts.logdet_r;

  Eigen::LLT<Eigen::MatrixXd> llt;
  g.logdet_ht_ri_h = spd_logdet(g.ht_ri_h, "H^T R^-1 H", &llt);
  g.htrih_inv = llt.solve(Eigen::MatrixXd::Identity(np, np));
  g.beta = llt.solve(g.ht_ri_z);
  Eigen::MatrixXd ztgz = parts.quad.bottomRightCorner(nq, nq) - g.ht_ri_z.transpose() * g.beta;
  g.zt_gz = 0.5 * (ztgz + ztgz.transpose());
  g.dof = double(n() - np);
  g.gls_cov = g.zt_gz / g.dof;
  return g;
}

const GlsSummary& NNGPModel::gls(const Eigen::VectorXd& ranges, double nugget) {
  Eigen::VectorXd key(ranges.size() + 1);
  key.head(ranges.size()) = ranges;
  key[ranges.size()] = nugget;
  for (const auto& entry : cache_) {
    if (entry.first.size() == key.size() && entry.first == key) return entry.second;
  }
  cache_.emplace_back(key, compute_gls(ranges, nugget));
  if (cache_.size() > kCacheSize) cache_.pop_front();
  return cache_.back().second;
}

double NNGPModel::log_marginal(const Eigen::VectorXd& ranges, double nugget) {
  const GlsSummary& g = gls(ranges, nugget);
  double logdet_ztgz;
  {
    Eigen::LLT<Eigen::MatrixXd> llt;
    logdet_ztgz = spd_logdet(g.zt_gz, "Z^T G Z", &llt);
  }
  const double nq = double(q());
  return -0.5 * nq * g.logdet_r - 0.5 * nq * g.logdet_ht_ri_h - 0.5 * g.dof * logdet_ztgz;
}

}  // namespace specemu::emulator
