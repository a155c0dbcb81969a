/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_KERNELS_HPP_
#define SPECEMU_KERNELS_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <string>

namespace specemu::kernels {

enum class Family { Matern, PowerExp, ConfluentHG };

Family family_from_string(const std::string& s);
std::string family_to_string(Family f);

/*!
* Isotropic correlation profile on the range-scaled distance
*   d(l, l') = sqrt( sum_j (l_j - l'_j)^2 / theta_j^2 ),
* plus a nugget tau^2 on the correlation scale. The profile family is fixed
* across inference; ranges and nugget are the free parameters.
*/
struct KernelSpec {
  Family family = Family::Matern;
  double nu = 2.5;      // Matern / confluent-hypergeometric smoothness
  double alpha = 1.0;   // power-exponential exponent in (0,2]; CH tail parameter > 0
  Eigen::VectorXd ranges;
  double nugget = 0.0;  // tau^2 >= 0

  void validate() const;  // throws ConfigError on invalid values

  KernelSpec with_params(const Eigen::VectorXd& ranges_in, double nugget_in) const;
};

//! Range-scaled anisotropic distance. Errors on dimension mismatch or theta_j <= 0.
double scaled_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& ranges);

//! Correlation profile rho(d) at scaled distance d (no nugget).
double corr_value(double d, const KernelSpec& spec);

//! Matern profile (2^{1-nu}/Gamma(nu)) (sqrt(2 nu) d)^nu K_nu(sqrt(2 nu) d);
//! closed forms for nu in {1/2, 3/2, 5/2}, modified-Bessel route otherwise.
double matern(double d, double nu);

//! Power-exponential profile exp(-d^alpha), alpha in (0,2].
double power_exp(double d, double alpha);

/*!
* Confluent hypergeometric profile Gamma(nu+alpha)/Gamma(nu) U(alpha, 1-nu, d^2),
* polynomially decaying tails. Evaluated through the Beta-weighted integral
*   rho(d) = Gamma(nu+alpha)/(Gamma(nu)Gamma(alpha))
*            * Int_0^1 exp(-d^2 u/(1-u)) u^{alpha-1} (1-u)^{nu-1} du
* by tanh-sinh quadrature with step halving to relative tolerance 1e-10
* (the node clustering at both endpoints absorbs the algebraic singularities).
*/
double confluent_hg(double d, double nu, double alpha);

//! Batch profile on squared scaled distances; dispatches to the SIMD fast
//! paths for Matern 1/2, 3/2, 5/2 and power-exponential alpha in {1, 2}.
void corr_profile_sq(const KernelSpec& spec, const double* d2, std::size_t n, double* out);

/*!
* Dense correlation matrix over points (rows of pts). With add_nugget the
* diagonal carries 1 + tau^2 (R = C + tau^2 I). Exactly coincident distinct
* rows with tau^2 = 0 are flagged through the log sink as a singularity
* warning.
*/
Eigen::MatrixXd corr_matrix(const Eigen::MatrixXd& pts, const KernelSpec& spec, bool add_nugget);

/*!
* Cross-correlations r(a_i, b_j). Following the model's r(l, l') =
* c(l, l') + tau^2 1{l = l'}, an exactly coincident pair receives the nugget
* when nugget_at_coincidence is set (prediction-side convention; the trained
* matrix itself is index-based C + tau^2 I).
*/
Eigen::MatrixXd corr_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const KernelSpec& spec, bool nugget_at_coincidence);

}  // namespace specemu::kernels

#endif
