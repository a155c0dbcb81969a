/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_FDA_HPP_
#define SPECEMU_FDA_HPP_

#include <Eigen/Dense>
#include <string>

namespace specemu::fda {

/*!
* Cubic (by default) B-spline basis on [lo, hi] with a clamped equidistant
* knot vector: degree+1 copies of each boundary, num_basis - degree - 1
* interior knots. Basis values follow the two-term Cox-de Boor recursion
* (order-1 base case is the span indicator), evaluated in de Boor's
* triangular form which never forms the 0/0 terms.
*/
struct BSplineSystem {
  int degree = 3;
  int num_basis = 0;  // G
  double lo = 0.0;
  double hi = 1.0;
  Eigen::VectorXd knots;  // size G + degree + 1

  static BSplineSystem equidistant(double lo, double hi, int num_basis, int degree = 3);

  //! Knot span index mu with knots[mu] <= x < knots[mu+1], clamped to valid spans.
  int span_of(double x) const;

  /*!
  * Writes the degree+1 basis values that are nonzero at x into vals and
  * returns the index of the first of them. x must lie in [lo, hi] (a
  * roundoff-sized overhang is clamped).
  */
  int eval_span(double x, double* vals) const;

  //! Same layout for the order-th derivative (order <= degree).
  int eval_span_deriv(double x, int order, double* vals) const;

  //! Dense length-G evaluation (convenience for tests and small problems).
  Eigen::VectorXd eval_all(double x) const;

  /*!
  * Gram matrix J = Int phi phi^T, assembled per knot span with 5-point
  * Gauss-Legendre nodes: integrands are polynomials of degree <= 2*degree,
  * so the rule is exact for cubics.
  */
  Eigen::MatrixXd gram() const;

  //! Roughness penalty Int phi'' (phi'')^T, same exact per-span quadrature.
  Eigen::MatrixXd second_deriv_penalty() const;
};

/*!
* One spectral band: a common wavelength grid and n curves sampled on it.
* NaN entries mark missing radiances; they are excluded from every fit and
* never imputed.
*/
struct SpectralCurveSet {
  std::string band_name;
  Eigen::VectorXd wavelengths;  // strictly increasing
  Eigen::MatrixXd values;       // n x m

  void validate() const;
};

/*!
* Per-curve least squares fit of basis coefficients over the non-missing
* wavelengths, solved through the banded normal equations. A curve whose
* data leave some basis function unsupported (or a singular system) raises
* DataError naming the curve; no ridge is applied here by design, rank
* problems must surface.
*/
Eigen::MatrixXd fit_curves(const SpectralCurveSet& curves, const BSplineSystem& system);

/*!
* Mean function coefficients by penalized least squares pooled over all
* curves' non-missing points, penalty lambda_pen * Int phi'' (phi'')^T.
* Equals the cross-curve mean fit on complete grids and stays well defined
* under per-curve missingness.
*/
Eigen::VectorXd mean_function(const SpectralCurveSet& curves, const BSplineSystem& system,
                              double lambda_pen);

/*!
* Functional PCA in coefficient space: solves n^{-1} A^T A J d = lambda d
* subject to d^T J d' = delta through the symmetrized problem
* n^{-1} L^T A^T A L e = lambda e with J = L L^T, d = L^{-T} e.
* Columns are J-orthonormal, ordered by descending eigenvalue, and
* sign-fixed so each component's first nonzero coefficient is positive.
*/
struct FpcaResult {
  Eigen::VectorXd eigenvalues;  // length G, descending, clamped at 0
  Eigen::MatrixXd components;   // G x G
};

FpcaResult fpca(const Eigen::MatrixXd& centered_coefs, const Eigen::MatrixXd& gram);

/*!
* Smallest p whose cumulative eigenvalue fraction strictly exceeds the
* threshold. Ties at machine precision (within 1e-12 relative) count as
* not exceeded, so a fraction exactly equal to the threshold moves on to
* the next component.
*/
int select_ncomp(const Eigen::VectorXd& eigenvalues, double threshold);

//! Score matrix Z = A J D_p (exact coefficient-space inner products).
Eigen::MatrixXd scores(const Eigen::MatrixXd& centered_coefs, const Eigen::MatrixXd& gram,
                       const Eigen::MatrixXd& components, int p);

/*!
* Everything needed to move between score space and curves: the basis, the
* fitted mean, the retained components, and the full eigenvalue spectrum for
* reporting. log_scale records whether curves were fit to log radiances, in
* which case predictions invert the transform at output time.
*/
struct FunctionalBasis {
  BSplineSystem system;
  std::string band_name;
  Eigen::VectorXd grid;         // native wavelength grid of the band
  Eigen::VectorXd mean_coefs;   // G
  Eigen::MatrixXd components;   // G x p
  Eigen::VectorXd eigenvalues;  // full spectrum
  bool log_scale = true;
};

//! Model-scale curve mu(w) + sum_l eta_l(w) z_l on the given wavelengths.
Eigen::VectorXd reconstruct(const FunctionalBasis& basis, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& omegas);

//! Precomputed mean and component values on a grid for repeated reconstruction.
struct GridEval {
  Eigen::VectorXd mean;        // m
  Eigen::MatrixXd components;  // m x p
};

GridEval eval_on_grid(const FunctionalBasis& basis, const Eigen::VectorXd& omegas);

}  // namespace specemu::fda

#endif
