/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "specemu/errors.hpp"
#include "specemu/log.hpp"
#include "specemu/nngp.hpp"
#include "specemu/simd/ops.hpp"

namespace specemu::nngp {

namespace {
constexpr double kJitter = 1e-10;
constexpr double kMinConditional = 1e-14;
}  // namespace

MarginalSolver::MarginalSolver(NeighborGraph graph, const Eigen::MatrixXd& x)
    : graph_(std::move(graph)) {
  const int n = graph_.n();
  const int dim = static_cast<int>(x.cols());
  if (static_cast<int>(x.rows()) != n) throw ConfigError("MarginalSolver: point count mismatch");

  x_ordered_.resize(n, dim);
  for (int k = 0; k < n; ++k) x_ordered_.row(k) = x.row(graph_.order[k]);

  // Pair cache layout per row: the point-to-neighbor pairs, then the
  // neighbor-neighbor pairs (a < b in list order). Coordinate-major storage
  // with stride = total pair count feeds the batched distance kernel.
  row_pair_offset_.resize(n + 1);
  a_row_offset_.resize(n + 1);
  row_pair_offset_[0] = 0;
  a_row_offset_[0] = 0;
  for (int i = 0; i < n; ++i) {
    const std::size_t m = graph_.neighbors[i].size();
    row_pair_offset_[i + 1] = row_pair_offset_[i] + m + m * (m - 1) / 2;
    a_row_offset_[i + 1] = a_row_offset_[i] + m;
  }
  total_pairs_ = row_pair_offset_[n];
  const std::size_t aflat = a_row_offset_[n];
  pair_d2_.assign(static_cast<std::size_t>(dim) * total_pairs_, 0.0);
  a_flat_.assign(aflat, 0.0);
  dvec_.setOnes(n);
  scratch_sq_.resize(total_pairs_);
  scratch_corr_.resize(total_pairs_);

  for (int i = 0; i < n; ++i) {
    const auto& nb = graph_.neighbors[i];
    const int m = static_cast<int>(nb.size());
    std::size_t p = row_pair_offset_[i];
    for (int k = 0; k < m; ++k, ++p) {
      for (int d = 0; d < dim; ++d) {
        const double dd = x_ordered_(i, d) - x_ordered_(nb[k], d);
        pair_d2_[static_cast<std::size_t>(d) * total_pairs_ + p] = dd * dd;
      }
    }
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b, ++p) {
        for (int d = 0; d < dim; ++d) {
          const double dd = x_ordered_(nb[a], d) - x_ordered_(nb[b], d);
          pair_d2_[static_cast<std::size_t>(d) * total_pairs_ + p] = dd * dd;
        }
      }
    }
  }

  // Precision pattern. Row i of U = I - A touches {i} + N(i), so Omega =
  // U^T D^{-1} U + I/tau^2 picks up the lower-triangle clique of that set.
  // The contribution order here is replayed verbatim in rebuild_rows.
  std::vector<Eigen::Triplet<double>> trips;
  std::size_t contribs = 0;
  for (int i = 0; i < n; ++i) {
    const auto& nb = graph_.neighbors[i];
    const int m = static_cast<int>(nb.size());
    contribs += 1 + m + m + static_cast<std::size_t>(m) * (m - 1) / 2;
    trips.emplace_back(i, i, 0.0);
    for (int k = 0; k < m; ++k) trips.emplace_back(i, nb[k], 0.0);
    for (int a = 0; a < m; ++a) {
      trips.emplace_back(nb[a], nb[a], 0.0);
      for (int b = a + 1; b < m; ++b) trips.emplace_back(nb[b], nb[a], 0.0);
    }
  }
  omega_.resize(n, n);
  omega_.setFromTriplets(trips.begin(), trips.end());
  omega_.makeCompressed();
  omega_base_.assign(static_cast<std::size_t>(omega_.nonZeros()), 0.0);

  const int* outer = omega_.outerIndexPtr();
  const int* inner = omega_.innerIndexPtr();
  auto flat_index = [&](int r, int c) {
    const int* lo = inner + outer[c];
    const int* hi = inner + outer[c + 1];
    const int* it = std::lower_bound(lo, hi, r);
    return static_cast<int>(it - inner);
  };
  scatter_.reserve(contribs);
  diag_value_index_.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& nb = graph_.neighbors[i];
    const int m = static_cast<int>(nb.size());
    diag_value_index_[i] = flat_index(i, i);
    scatter_.push_back(diag_value_index_[i]);
    for (int k = 0; k < m; ++k) scatter_.push_back(flat_index(i, nb[k]));
    for (int a = 0; a < m; ++a) {
      scatter_.push_back(flat_index(nb[a], nb[a]));
      for (int b = a + 1; b < m; ++b) scatter_.push_back(flat_index(nb[b], nb[a]));
    }
  }

  ldlt_.analyzePattern(omega_);
  pattern_ready_ = true;
}

void MarginalSolver::rebuild_rows(const kernels::KernelSpec& spec) {
  const int n = graph_.n();
  const int dim = static_cast<int>(x_ordered_.cols());
  if (spec.ranges.size() != dim) throw ConfigError("MarginalSolver: range dimension mismatch");

  Eigen::VectorXd w(dim);
  for (int d = 0; d < dim; ++d) {
    if (!(spec.ranges[d] > 0.0)) throw ConfigError("MarginalSolver: nonpositive range");
    w[d] = 1.0 / (spec.ranges[d] * spec.ranges[d]);
  }
  const auto& ops = simd::active_ops();
  ops.weighted_colsum(pair_d2_.data(), total_pairs_, dim, total_pairs_, w.data(),
                      scratch_sq_.data());
  kernels::corr_profile_sq(spec, scratch_sq_.data(), total_pairs_, scratch_corr_.data());

  const int t = graph_.t;
  int bad_row = -1;
  bool used_jitter = false;

#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    Eigen::MatrixXd cn(t, t);
    Eigen::VectorXd cvec(t), evec(t);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (int i = 0; i < n; ++i) {
      const auto& nb = graph_.neighbors[i];
      const int m = static_cast<int>(nb.size());
      if (m == 0) {
        dvec_[i] = 1.0;
        continue;
      }
      const std::size_t aoff_local = a_row_offset_[i];
      const std::size_t base = row_pair_offset_[i];
      for (int k = 0; k < m; ++k) cvec[k] = scratch_corr_[base + k];
      std::size_t p = base + m;
      for (int a = 0; a < m; ++a) {
        cn(a, a) = 1.0;
        for (int b = a + 1; b < m; ++b, ++p) {
          cn(a, b) = scratch_corr_[p];
          cn(b, a) = cn(a, b);
        }
      }

      double di = 0.0;
      bool ok = false;
      for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
        if (attempt == 1) {
          for (int a = 0; a < m; ++a) cn(a, a) += kJitter;
          used_jitter = true;
        }
        Eigen::Ref<Eigen::MatrixXd> blk = cn.topLeftCorner(m, m);
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(blk);
        if (llt.info() != Eigen::Success) continue;
        evec.head(m) = cvec.head(m);
        llt.solveInPlace(evec.head(m));
        di = 1.0 - cvec.head(m).dot(evec.head(m));
        ok = di > kMinConditional;
      }
      if (!ok) {
#ifdef _OPENMP
#pragma omp critical
#endif
        {
          if (bad_row < 0 || i < bad_row) bad_row = i;
        }
        continue;
      }
      dvec_[i] = di;
      for (int k = 0; k < m; ++k) a_flat_[aoff_local + k] = evec[k];
    }
  }

  if (bad_row >= 0) {
    throw NumericError("nngp: neighbor block of ordered row " + std::to_string(bad_row) +
                       " is not positive definite");
  }
  if (used_jitter && !jitter_warned_) {
    log_warn("nngp: jittered a near-singular neighbor correlation block");
    jitter_warned_ = true;
  }

  sum_log_d_ = dvec_.array().log().sum();

  // Replay of the constructor's contribution order against the scatter map.
  std::fill(omega_base_.begin(), omega_base_.end(), 0.0);
  std::size_t cur = 0;
  std::size_t aoff = 0;
  for (int i = 0; i < n; ++i) {
    const auto& nb = graph_.neighbors[i];
    const int m = static_cast<int>(nb.size());
    const double dinv = 1.0 / dvec_[i];
    omega_base_[scatter_[cur++]] += dinv;
    for (int k = 0; k < m; ++k) omega_base_[scatter_[cur++]] += -a_flat_[aoff + k] * dinv;
    for (int a = 0; a < m; ++a) {
      const double aa = a_flat_[aoff + a];
      omega_base_[scatter_[cur++]] += aa * aa * dinv;
      for (int b = a + 1; b < m; ++b) {
        omega_base_[scatter_[cur++]] += aa * a_flat_[aoff + b] * dinv;
      }
    }
    aoff += m;
  }
}

void MarginalSolver::refactor_precision() {
  const int n = graph_.n();
  double* vals = omega_.valuePtr();
  std::copy(omega_base_.begin(), omega_base_.end(), vals);
  const double tinv = 1.0 / tau2_;
  for (int i = 0; i < n; ++i) vals[diag_value_index_[i]] += tinv;
  ldlt_.factorize(omega_);
  if (ldlt_.info() != Eigen::Success) {
    throw NumericError("nngp: precision factorization failed");
  }
  const Eigen::VectorXd& d = ldlt_.vectorD();
  double logdet_omega = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(d[i] > 0.0)) throw NumericError("nngp: precision matrix is not positive definite");
    logdet_omega += std::log(d[i]);
  }
  logdet_r_ = logdet_omega + sum_log_d_ + n * std::log(tau2_);
}

void MarginalSolver::set_params(const kernels::KernelSpec& spec) {
  spec.validate();
  if (!(spec.nugget >= 0.0)) throw ConfigError("MarginalSolver: negative nugget");

  const bool same_profile = ranges_cache_.size() == spec.ranges.size() &&
                            ranges_cache_ == spec.ranges;
  if (!same_profile) {
    rebuild_rows(spec);
    ranges_cache_ = spec.ranges;
  }
  tau2_ = spec.nugget;
  if (tau2_ > 0.0) {
    refactor_precision();
  } else {
    logdet_r_ = sum_log_d_;
  }
}

MarginalParts MarginalSolver::marginal(const Eigen::MatrixXd& m) const {
  const int n = graph_.n();
  const int k = static_cast<int>(m.cols());
  if (static_cast<int>(m.rows()) != n) throw ConfigError("MarginalSolver: row count mismatch");
  if (ranges_cache_.size() == 0) throw ConfigError("MarginalSolver: set_params not called");

  scratch_m_.resize(n, k);
  for (int i = 0; i < n; ++i) scratch_m_.row(i) = m.row(graph_.order[i]);

  MarginalParts parts;
  parts.logdet_r = logdet_r_;
  if (tau2_ > 0.0) {
    const Eigen::MatrixXd s = ldlt_.solve(scratch_m_);
    const double t2 = tau2_;
    Eigen::MatrixXd quad =
        (scratch_m_.transpose() * scratch_m_) / t2 - (scratch_m_.transpose() * s) / (t2 * t2);
    parts.quad = 0.5 * (quad + quad.transpose());
  } else {
    Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(k, k);
    Eigen::RowVectorXd v(k);
    std::size_t aoff = 0;
    for (int i = 0; i < n; ++i) {
      const auto& nb = graph_.neighbors[i];
      v = scratch_m_.row(i);
      for (std::size_t c = 0; c < nb.size(); ++c) v -= a_flat_[aoff + c] * scratch_m_.row(nb[c]);
      aoff += nb.size();
      quad.selfadjointView<Eigen::Lower>().rankUpdate(v.transpose(), 1.0 / dvec_[i]);
    }
    parts.quad = Eigen::MatrixXd(quad.selfadjointView<Eigen::Lower>());
  }
  return parts;
}

Eigen::VectorXi MarginalSolver::fill_permutation() const {
  if (!pattern_ready_) return Eigen::VectorXi();
  return ldlt_.permutationP().indices();
}

Eigen::SparseMatrix<double> MarginalSolver::u_matrix() const {
  const int n = graph_.n();
  std::vector<Eigen::Triplet<double>> trips;
  std::size_t aoff = 0;
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, i, 1.0);
    const auto& nb = graph_.neighbors[i];
    for (std::size_t c = 0; c < nb.size(); ++c) {
      trips.emplace_back(i, nb[c], -a_flat_[aoff + c]);
    }
    aoff += nb.size();
  }
  Eigen::SparseMatrix<double> u(n, n);
  u.setFromTriplets(trips.begin(), trips.end());
  u.makeCompressed();
  return u;
}

}  // namespace specemu::nngp
