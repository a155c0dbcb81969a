/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_SUBSPACE_HPP_
#define SPECEMU_SUBSPACE_HPP_

#include <Eigen/Dense>
#include <string>

namespace specemu::subspace {

//! Marginal location/scale transform applied to raw simulator inputs.
struct StateStandardizer {
  Eigen::VectorXd mu;
  Eigen::VectorXd sd;

  //! Column means and standard deviations of a runs-by-dimension matrix.
  static StateStandardizer fit(const Eigen::MatrixXd& x);

  Eigen::VectorXd standardize(const Eigen::VectorXd& x) const;
  Eigen::VectorXd destandardize(const Eigen::VectorXd& x_std) const;
  Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& x) const;
};

/*!
* Gradient of the measurement misfit f(s) = (y - F)^T S^-1 (y - F) with
* respect to the standardized state, via the forward-model Jacobian in raw
* units. Outputs where y is NaN are dropped from the quadratic form.
*
* jac is m_out x d (raw units), noise_var the diagonal of S, fx = F(x).
*/
Eigen::VectorXd misfit_gradient(const Eigen::MatrixXd& jac, const StateStandardizer& std_x,
                                const Eigen::VectorXd& noise_var, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& fx);

enum class DimensionRule { Fixed, Gap, Cumulative };

DimensionRule dimension_rule_from_string(const std::string& name);
std::string to_string(DimensionRule rule);

struct ActiveSubspace {
  Eigen::VectorXd eigenvalues;  //!< descending
  Eigen::MatrixXd directions;   //!< all d eigenvectors, normalized columns
  int dim = 0;                  //!< retained dimension per the selection rule

  Eigen::MatrixXd basis() const { return directions.leftCols(dim); }
};

//! Empirical sensitivity matrix (1/N) G G^T with one gradient per column of G.
Eigen::MatrixXd sensitivity_matrix(const Eigen::MatrixXd& gradients);

/*!
* Eigendecomposition of a precomputed sensitivity matrix. fixed_dim is used
* by the Fixed rule, cum_threshold by the Cumulative rule; the Gap rule picks
* the largest eigenvalue ratio over the first half of the spectrum.
*/
ActiveSubspace active_subspace_from_sensitivity(const Eigen::MatrixXd& sigma_hat,
                                                DimensionRule rule, int fixed_dim,
                                                double cum_threshold);

//! Convenience composition of sensitivity_matrix and the eigendecomposition.
ActiveSubspace active_subspace(const Eigen::MatrixXd& gradients, DimensionRule rule,
                               int fixed_dim, double cum_threshold);

//! Gradient-free alternative: principal directions of the standardized inputs.
ActiveSubspace input_pca_subspace(const Eigen::MatrixXd& x_std, DimensionRule rule,
                                  int fixed_dim, double cum_threshold);

//! Rows of x_std mapped to reduced coordinates, one row per run.
Eigen::MatrixXd project(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& x_std);

}  // namespace specemu::subspace

#endif
