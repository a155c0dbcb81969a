/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_NNGP_HPP_
#define SPECEMU_NNGP_HPP_

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <string>
#include <vector>

#include "specemu/kernels.hpp"

namespace specemu::nngp {

/*!
* Fixed conditioning structure of the nearest-neighbor process. Points are
* ordered by their first coordinate (ties broken by the second, then by the
* original index); each ordered point conditions on at most t nearest
* predecessors under the unit-range Euclidean distance, so the graph does
* not change as the range parameters move during inference.
*/
struct NeighborGraph {
  int t = 0;
  std::vector<int> order;                   //!< position k holds the original row index
  std::vector<std::vector<int>> neighbors;  //!< ordered-index lists, ascending

  int n() const { return static_cast<int>(order.size()); }
};

//! Build the conditioning graph from raw inputs (one row per point).
NeighborGraph build_graph(const Eigen::MatrixXd& x, int t);

//! Serialized graph, including the fill-reducing permutation of the
//! precision factorization when available (empty otherwise).
std::string graph_to_json(const NeighborGraph& graph, const Eigen::VectorXi& fill_perm);

/*!
* Row indices of the t nearest training points to a query location under the
* range-scaled squared Euclidean distance, ties broken by row index, sorted
* nearest first. When d2_out is given it receives the matching distances;
* used at prediction time, where conditioning sets may draw on the whole
* training set rather than ordered predecessors.
*/
std::vector<int> predict_neighbors(const Eigen::MatrixXd& x, const Eigen::VectorXd& query,
                                   const Eigen::VectorXd& ranges, int t,
                                   std::vector<double>* d2_out = nullptr);

struct MarginalParts {
  double logdet_r = 0.0;
  Eigen::MatrixXd quad;  //!< M^T R^{-1} M, symmetrized
};

/*!
* Working-correlation marginal solver. With C~ the nearest-neighbor
* approximation of the correlation matrix C (factored as C~^{-1} =
* (I-A)^T D^{-1} (I-A) from per-row kriging weights), the model correlation
* is R = C~ + tau^2 I. Determinants and quadratic forms in R^{-1} reduce to
*
*   log|R|       = log|Omega| + sum_i log D_i + n log tau^2,
*   M^T R^{-1} M = M^T M / tau^2 - M^T Omega^{-1} M / tau^4,
*
* with Omega = C~^{-1} + I/tau^2 factored by a sparse LDLT whose sparsity
* pattern is analyzed once per graph. tau^2 = 0 falls back to the exact
* triangular forms M^T C~^{-1} M = (UM)^T D^{-1} (UM), U = I - A.
*
* The squared coordinate differences of every (point, neighbor) and
* (neighbor, neighbor) pair are cached coordinate-major at construction, so
* a parameter update costs one batched weighted column sum, one batched
* correlation profile, and n small Cholesky solves.
*/
class MarginalSolver {
 public:
  MarginalSolver(NeighborGraph graph, const Eigen::MatrixXd& x);

  /*!
  * Recompute the factors for new kernel parameters. When only the nugget
  * differs from the previous call, the per-row kriging pass is skipped and
  * just the precision matrix is refactored. Throws NumericError when a
  * neighbor block stays indefinite after one jitter retry.
  */
  void set_params(const kernels::KernelSpec& spec);

  //! log|R| at the current parameters.
  double logdet_r() const { return logdet_r_; }

  //! M^T R^{-1} M together with log|R|; rows of m follow the original
  //! (pre-ordering) point arrangement.
  MarginalParts marginal(const Eigen::MatrixXd& m) const;

  const NeighborGraph& graph() const { return graph_; }

  //! Fill-reducing permutation used by the sparse factorization.
  Eigen::VectorXi fill_permutation() const;

  //! Dense-test hooks: the ordered-space factors of C~^{-1}.
  Eigen::SparseMatrix<double> u_matrix() const;
  const Eigen::VectorXd& d_vector() const { return dvec_; }

 private:
  void rebuild_rows(const kernels::KernelSpec& spec);
  void refactor_precision();

  NeighborGraph graph_;
  Eigen::MatrixXd x_ordered_;  // n x dim

  // pair cache, coordinate-major with stride = total pair count:
  // per row, the point-to-neighbor pairs then the neighbor-pair upper triangle
  std::vector<double> pair_d2_;
  std::vector<std::size_t> row_pair_offset_;
  std::vector<std::size_t> a_row_offset_;
  std::size_t total_pairs_ = 0;

  // scatter map from per-row precision contributions into the CSC value array
  std::vector<int> scatter_;
  std::vector<int> diag_value_index_;

  // current factors
  std::vector<double> a_flat_;  // kriging weights, aligned with neighbor lists
  Eigen::VectorXd dvec_;
  double sum_log_d_ = 0.0;
  double tau2_ = -1.0;
  Eigen::VectorXd ranges_cache_;
  double logdet_r_ = 0.0;

  Eigen::SparseMatrix<double> omega_;           // lower triangle, fixed pattern
  std::vector<double> omega_base_;              // C~^{-1} values before the nugget diagonal
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
  bool pattern_ready_ = false;
  bool jitter_warned_ = false;

  // scratch for parameter updates and solves
  mutable Eigen::MatrixXd scratch_m_;
  std::vector<double> scratch_sq_;
  std::vector<double> scratch_corr_;
};

}  // namespace specemu::nngp

#endif
