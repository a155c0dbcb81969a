/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "specemu/errors.hpp"
#include "specemu/subspace.hpp"

namespace specemu::subspace {
namespace {

//! Descending eigenpairs of a symmetric matrix with a deterministic sign fix:
//! the entry of largest magnitude (first such on ties) is made positive.
ActiveSubspace eigen_subspace(Eigen::MatrixXd sym) {
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("active_subspace: eigen decomposition failed");
  const int d = static_cast<int>(sym.rows());
  ActiveSubspace out;
  out.eigenvalues.resize(d);
  out.directions.resize(d, d);
  for (int k = 0; k < d; ++k) {
    const int src = d - 1 - k;
    out.eigenvalues[k] = std::max(0.0, es.eigenvalues()[src]);
    Eigen::VectorXd v = es.eigenvectors().col(src);
    int arg = 0;
    double best = 0.0;
    for (int a = 0; a < d; ++a) {
      if (std::abs(v[a]) > best) {
        best = std::abs(v[a]);
        arg = a;
      }
    }
    if (v[arg] < 0.0) v = -v;
    out.directions.col(k) = v;
  }
  return out;
}

int choose_dim(const Eigen::VectorXd& ev, DimensionRule rule, int fixed_dim,
               double cum_threshold) {
  const int d = static_cast<int>(ev.size());
  switch (rule) {
    case DimensionRule::Fixed: {
      if (fixed_dim < 1 || fixed_dim > d) throw ConfigError("subspace: fixed dimension out of range");
      return fixed_dim;
    }
    case DimensionRule::Gap: {
      const int jmax = std::max(1, d / 2);
      int arg = 1;
      double best = -1.0;
      for (int j = 1; j <= jmax && j < d; ++j) {
        const double denom = std::max(ev[j], 1e-300);
        const double ratio = ev[j - 1] / denom;
        if (ratio > best) {
          best = ratio;
          arg = j;
        }
      }
      return arg;
    }
    case DimensionRule::Cumulative: {
      const double total = ev.sum();
      if (!(total > 0.0)) throw DataError("subspace: eigenvalue mass is zero");
      const double target = (cum_threshold - 1e-12) * total;
      double cum = 0.0;
      for (int k = 0; k < d; ++k) {
        cum += ev[k];
        if (cum >= target) return k + 1;
      }
      return d;
    }
  }
  throw ConfigError("subspace: unknown dimension rule");
}

}  // namespace

StateStandardizer StateStandardizer::fit(const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.rows());
  if (n < 2) throw DataError("StateStandardizer: need at least two rows");
  StateStandardizer s;
  s.mu = x.colwise().mean();
  s.sd.resize(x.cols());
  for (int j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mu[j]).square().sum() / double(n - 1);
    s.sd[j] = std::sqrt(var);
    if (!(s.sd[j] > 0.0)) {
      throw DataError("StateStandardizer: column " + std::to_string(j) + " is constant");
    }
  }
  return s;
}

Eigen::VectorXd StateStandardizer::standardize(const Eigen::VectorXd& x) const {
  if (x.size() != mu.size()) throw ConfigError("StateStandardizer: dimension mismatch");
  return (x - mu).cwiseQuotient(sd);
}

Eigen::VectorXd StateStandardizer::destandardize(const Eigen::VectorXd& x_std) const {
  if (x_std.size() != mu.size()) throw ConfigError("StateStandardizer: dimension mismatch");
  return mu + x_std.cwiseProduct(sd);
}

Eigen::MatrixXd StateStandardizer::standardize_rows(const Eigen::MatrixXd& x) const {
  if (x.cols() != mu.size()) throw ConfigError("StateStandardizer: dimension mismatch");
  return (x.rowwise() - mu.transpose()).array().rowwise() / sd.transpose().array();
}

Eigen::VectorXd misfit_gradient(const Eigen::MatrixXd& jac, const StateStandardizer& std_x,
                                const Eigen::VectorXd& noise_var, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& fx) {
  const int m = static_cast<int>(jac.rows());
  const int d = static_cast<int>(jac.cols());
  if (d != std_x.mu.size()) throw ConfigError("misfit_gradient: state dimension mismatch");
  if (y.size() != m || fx.size() != m || noise_var.size() != m) {
    throw ConfigError("misfit_gradient: output dimension mismatch");
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    if (std::isnan(y[i])) continue;
    if (!(noise_var[i] > 0.0)) throw DataError("misfit_gradient: nonpositive noise variance");
    w[i] = (y[i] - fx[i]) / noise_var[i];
  }
  Eigen::VectorXd g = -2.0 * (jac.transpose() * w);
  return g.cwiseProduct(std_x.sd);
}

DimensionRule dimension_rule_from_string(const std::string& name) {
  if (name == "fixed") return DimensionRule::Fixed;
  if (name == "gap") return DimensionRule::Gap;
  if (name == "cumulative") return DimensionRule::Cumulative;
  throw ConfigError("unknown subspace dimension rule '" + name + "'");
}

std::string to_string(DimensionRule rule) {
  switch (rule) {
    case DimensionRule::Fixed: return "fixed";
    case DimensionRule::Gap: return "gap";
    case DimensionRule::Cumulative: return "cumulative";
  }
  return "?";
}

Eigen::MatrixXd sensitivity_matrix(const Eigen::MatrixXd& gradients) {
  const int n = static_cast<int>(gradients.cols());
  if (n < 1) throw DataError("sensitivity_matrix: no gradients");
  return (gradients * gradients.transpose()) / double(n);
}

ActiveSubspace active_subspace_from_sensitivity(const Eigen::MatrixXd& sigma_hat,
                                                DimensionRule rule, int fixed_dim,
                                                double cum_threshold) {
  if (sigma_hat.rows() != sigma_hat.cols()) {
    throw ConfigError("active_subspace: sensitivity matrix must be square");
  }
  ActiveSubspace out = eigen_subspace(sigma_hat);
  out.dim = choose_dim(out.eigenvalues, rule, fixed_dim, cum_threshold);
  return out;
}

ActiveSubspace active_subspace(const Eigen::MatrixXd& gradients, DimensionRule rule,
                               int fixed_dim, double cum_threshold) {
  return active_subspace_from_sensitivity(sensitivity_matrix(gradients), rule, fixed_dim,
                                          cum_threshold);
}

ActiveSubspace input_pca_subspace(const Eigen::MatrixXd& x_std, DimensionRule rule,
                                  int fixed_dim, double cum_threshold) {
  const int n = static_cast<int>(x_std.rows());
  if (n < 2) throw DataError("input_pca_subspace: need at least two rows");
  const Eigen::MatrixXd centered = x_std.rowwise() - x_std.colwise().mean();
  ActiveSubspace out = eigen_subspace((centered.transpose() * centered) / double(n - 1));
  out.dim = choose_dim(out.eigenvalues, rule, fixed_dim, cum_threshold);
  return out;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& x_std) {
  if (x_std.cols() != basis.rows()) throw ConfigError("project: dimension mismatch");
  return x_std * basis;
}

}  // namespace specemu::subspace
