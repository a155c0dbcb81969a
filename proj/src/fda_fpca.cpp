/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "specemu/errors.hpp"
#include "specemu/fda.hpp"

namespace specemu::fda {

FpcaResult fpca(const Eigen::MatrixXd& centered_coefs, const Eigen::MatrixXd& gram) {
  const int n = static_cast<int>(centered_coefs.rows());
  const int g = static_cast<int>(centered_coefs.cols());
  if (gram.rows() != g || gram.cols() != g) throw ConfigError("fpca: gram dimension mismatch");
  if (n < 2) throw DataError("fpca: need at least two curves");

  // Whitening by the Gram factor turns the generalized problem into an
  // ordinary symmetric one: with J = L L^T, S = L^T (A^T A / n) L shares
  // eigenvalues with the covariance operator and d_l = L^{-T} e_l recovers
  // the basis coefficients of the eigenfunctions.
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericError("fpca: gram matrix is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd w = centered_coefs * l;  // n x g
  Eigen::MatrixXd s = (w.transpose() * w) / double(n);
  s = 0.5 * (s + s.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) throw NumericError("fpca: eigen decomposition failed");

  FpcaResult out;
  out.eigenvalues.resize(g);
  out.components.resize(g, g);
  const Eigen::MatrixXd lt = l.transpose();
  for (int k = 0; k < g; ++k) {
    const int src = g - 1 - k;  // descending order
    out.eigenvalues[k] = std::max(0.0, es.eigenvalues()[src]);
    Eigen::VectorXd d = lt.triangularView<Eigen::Upper>().solve(es.eigenvectors().col(src));
    // Fix the sign so the first non-negligible coefficient is positive.
    const double scale = d.cwiseAbs().maxCoeff();
    for (int a = 0; a < g; ++a) {
      if (std::abs(d[a]) > 1e-12 * scale) {
        if (d[a] < 0.0) d = -d;
        break;
      }
    }
    out.components.col(k) = d;
  }
  return out;
}

int select_ncomp(const Eigen::VectorXd& eigenvalues, double threshold) {
  if (!(threshold > 0.0) || !(threshold <= 1.0)) {
    throw ConfigError("select_ncomp: threshold must be in (0, 1]");
  }
  const double total = eigenvalues.sum();
  if (!(total > 0.0)) throw DataError("select_ncomp: eigenvalue mass is zero");
  // The guard keeps ties at machine precision from selecting one component
  // too few when the cumulative fraction lands exactly on the threshold.
  const double target = (threshold + 1e-12) * total;
  double cum = 0.0;
  for (int k = 0; k < eigenvalues.size(); ++k) {
    cum += eigenvalues[k];
    if (cum > target) return k + 1;
  }
  return static_cast<int>(eigenvalues.size());
}

Eigen::MatrixXd scores(const Eigen::MatrixXd& centered_coefs, const Eigen::MatrixXd& gram,
                       const Eigen::MatrixXd& components, int p) {
  if (p < 1 || p > components.cols()) throw ConfigError("scores: component count out of range");
  return centered_coefs * (gram * components.leftCols(p));
}

Eigen::VectorXd reconstruct(const FunctionalBasis& basis, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& omegas) {
  const int p = static_cast<int>(z.size());
  if (p > basis.components.cols()) throw ConfigError("reconstruct: more scores than components");
  Eigen::VectorXd coefs = basis.mean_coefs;
  coefs.noalias() += basis.components.leftCols(p) * z;

  const int m = static_cast<int>(omegas.size());
  Eigen::VectorXd out(m);
  std::vector<double> v(basis.system.degree + 1);
  for (int j = 0; j < m; ++j) {
    const int f = basis.system.eval_span(omegas[j], v.data());
    double acc = 0.0;
    for (int r = 0; r <= basis.system.degree; ++r) acc += v[r] * coefs[f + r];
    out[j] = basis.log_scale ? std::exp(acc) : acc;
  }
  return out;
}

GridEval eval_on_grid(const FunctionalBasis& basis, const Eigen::VectorXd& omegas) {
  const int m = static_cast<int>(omegas.size());
  const int p = static_cast<int>(basis.components.cols());
  GridEval ge;
  ge.mean.resize(m);
  ge.components.resize(m, p);
  std::vector<double> v(basis.system.degree + 1);
  for (int j = 0; j < m; ++j) {
    const int f = basis.system.eval_span(omegas[j], v.data());
    double acc = 0.0;
    for (int r = 0; r <= basis.system.degree; ++r) acc += v[r] * basis.mean_coefs[f + r];
    ge.mean[j] = acc;
    for (int k = 0; k < p; ++k) {
      double ck = 0.0;
      for (int r = 0; r <= basis.system.degree; ++r) ck += v[r] * basis.components(f + r, k);
      ge.components(j, k) = ck;
    }
  }
  return ge;
}

}  // namespace specemu::fda
