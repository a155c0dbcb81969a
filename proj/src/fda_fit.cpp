/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <cmath>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "specemu/errors.hpp"
#include "specemu/fda.hpp"

namespace specemu::fda {
namespace {

/*!
* Symmetric positive definite band matrix in LAPACK-style lower storage:
* band(k, j) holds element (j+k, j), k = 0..bw. The normal equations of a
* degree-p spline fit have bandwidth p.
*/
class BandedSpd {
 public:
  BandedSpd(int n, int bw) : n_(n), bw_(bw), band_(Eigen::MatrixXd::Zero(bw + 1, n)) {}

  void add(int i, int j, double v) {
    if (i < j) std::swap(i, j);
    band_(i - j, j) += v;
  }

  double diag(int j) const { return band_(0, j); }

  //! In-place Cholesky; on failure returns false and reports the pivot index.
  bool factor(int* bad_index) {
    for (int j = 0; j < n_; ++j) {
      double d = band_(0, j);
      const int k0 = std::max(0, j - bw_);
      for (int k = k0; k < j; ++k) {
        const double ljk = band_(j - k, k);
        d -= ljk * ljk;
      }
      if (!(d > 0.0) || !std::isfinite(d)) {
        if (bad_index != nullptr) *bad_index = j;
        return false;
      }
      const double ljj = std::sqrt(d);
      band_(0, j) = ljj;
      const int imax = std::min(n_ - 1, j + bw_);
      for (int i = j + 1; i <= imax; ++i) {
        double s = band_(i - j, j);
        const int kk0 = std::max(0, i - bw_);
        for (int k = kk0; k < j; ++k) s -= band_(i - k, k) * band_(j - k, k);
        band_(i - j, j) = s / ljj;
      }
    }
    return true;
  }

  void solve_inplace(Eigen::VectorXd& b) const {
    for (int j = 0; j < n_; ++j) {
      double s = b[j];
      const int k0 = std::max(0, j - bw_);
      for (int k = k0; k < j; ++k) s -= band_(j - k, k) * b[k];
      b[j] = s / band_(0, j);
    }
    for (int j = n_ - 1; j >= 0; --j) {
      double s = b[j];
      const int imax = std::min(n_ - 1, j + bw_);
      for (int i = j + 1; i <= imax; ++i) s -= band_(i - j, j) * b[i];
      b[j] = s / band_(0, j);
    }
  }

 private:
  int n_;
  int bw_;
  Eigen::MatrixXd band_;
};

struct GridBasis {
  std::vector<int> first;      // per wavelength, index of first nonzero basis
  Eigen::MatrixXd vals;        // (degree+1) x m
};

GridBasis tabulate(const BSplineSystem& system, const Eigen::VectorXd& grid) {
  GridBasis gb;
  const int m = static_cast<int>(grid.size());
  gb.first.resize(m);
  gb.vals.resize(system.degree + 1, m);
  std::vector<double> v(system.degree + 1);
  for (int j = 0; j < m; ++j) {
    gb.first[j] = system.eval_span(grid[j], v.data());
    for (int r = 0; r <= system.degree; ++r) gb.vals(r, j) = v[r];
  }
  return gb;
}

}  // namespace

Eigen::MatrixXd fit_curves(const SpectralCurveSet& curves, const BSplineSystem& system) {
  curves.validate();
  const int n = static_cast<int>(curves.values.rows());
  const int m = static_cast<int>(curves.wavelengths.size());
  const int g = system.num_basis;
  const int p = system.degree;
  const GridBasis gb = tabulate(system, curves.wavelengths);

  Eigen::MatrixXd coefs(n, g);
  // Errors inside the parallel loop are collected and re-raised afterwards;
  // the lowest curve index wins for a deterministic message.
  std::vector<std::string> errors(n);

#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    BandedSpd ata(g, p);
    Eigen::VectorXd rhs(g);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (int i = 0; i < n; ++i) {
      ata = BandedSpd(g, p);
      rhs.setZero();
      int used = 0;
      for (int j = 0; j < m; ++j) {
        const double y = curves.values(i, j);
        if (std::isnan(y)) continue;
        ++used;
        const int f = gb.first[j];
        for (int r = 0; r <= p; ++r) {
          const double vr = gb.vals(r, j);
          rhs[f + r] += vr * y;
          for (int c = 0; c <= r; ++c) ata.add(f + r, f + c, vr * gb.vals(c, j));
        }
      }
      if (used < g) {
        errors[i] = "curve " + std::to_string(i) + " of band '" + curves.band_name + "': only " +
                    std::to_string(used) + " observed points for " + std::to_string(g) +
                    " basis functions";
        continue;
      }
      bool unsupported = false;
      for (int a = 0; a < g; ++a) {
        if (ata.diag(a) == 0.0) {
          errors[i] = "curve " + std::to_string(i) + " of band '" + curves.band_name +
                      "': basis function " + std::to_string(a) + " has no observed support";
          unsupported = true;
          break;
        }
      }
      if (unsupported) continue;
      int bad = -1;
      if (!ata.factor(&bad)) {
        errors[i] = "curve " + std::to_string(i) + " of band '" + curves.band_name +
                    "': rank-deficient least squares (pivot " + std::to_string(bad) + ")";
        continue;
      }
      ata.solve_inplace(rhs);
      coefs.row(i) = rhs.transpose();
    }
  }

  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw DataError(errors[i]);
  }
  return coefs;
}

Eigen::VectorXd mean_function(const SpectralCurveSet& curves, const BSplineSystem& system,
                              double lambda_pen) {
  curves.validate();
  if (!(lambda_pen >= 0.0)) throw ConfigError("mean_function: lambda_pen must be >= 0");
  const int n = static_cast<int>(curves.values.rows());
  const int m = static_cast<int>(curves.wavelengths.size());
  const int g = system.num_basis;
  const int p = system.degree;
  const GridBasis gb = tabulate(system, curves.wavelengths);

  BandedSpd ata(g, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(g);
  for (int j = 0; j < m; ++j) {
    const int f = gb.first[j];
    double ysum = 0.0;
    int cnt = 0;
    for (int i = 0; i < n; ++i) {
      const double y = curves.values(i, j);
      if (std::isnan(y)) continue;
      ysum += y;
      ++cnt;
    }
    if (cnt == 0) continue;
    for (int r = 0; r <= p; ++r) {
      const double vr = gb.vals(r, j);
      rhs[f + r] += vr * ysum;
      for (int c = 0; c <= r; ++c) ata.add(f + r, f + c, double(cnt) * vr * gb.vals(c, j));
    }
  }

  if (lambda_pen > 0.0) {
    const Eigen::MatrixXd pen = system.second_deriv_penalty();
    for (int a = 0; a < g; ++a) {
      for (int b = std::max(0, a - p); b <= a; ++b) ata.add(a, b, lambda_pen * pen(a, b));
    }
  }

  int bad = -1;
  if (!ata.factor(&bad)) {
    throw DataError("mean_function: singular pooled system for band '" + curves.band_name +
                    "' (pivot " + std::to_string(bad) + ")");
  }
  ata.solve_inplace(rhs);
  return rhs;
}

}  // namespace specemu::fda
