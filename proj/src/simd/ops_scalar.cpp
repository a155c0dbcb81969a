/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <cmath>

#include "specemu/simd/ops.hpp"

// Reference backend. Deliberately plain loops: this is the semantic ground
// truth the vector backends are tested against.

namespace specemu::simd {
namespace {

void sq_dist_to_point_scalar(const double* query, const double* coords, std::size_t npts,
                             std::size_t dim, std::size_t stride, const double* w, double* out) {
  for (std::size_t j = 0; j < npts; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = query[d] - coords[d * stride + j];
      acc += w[d] * diff * diff;
    }
    out[j] = acc;
  }
}

void weighted_colsum_scalar(const double* cols, std::size_t npts, std::size_t dim,
                            std::size_t stride, const double* w, double* out) {
  for (std::size_t j = 0; j < npts; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) acc += w[d] * cols[d * stride + j];
    out[j] = acc;
  }
}

void matern25_sq_scalar(const double* d2, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::sqrt(5.0 * d2[i]);
    out[i] = (1.0 + t + t * t / 3.0) * std::exp(-t);
  }
}

void matern15_sq_scalar(const double* d2, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::sqrt(3.0 * d2[i]);
    out[i] = (1.0 + t) * std::exp(-t);
  }
}

void exp_neg_sqrt_scalar(const double* d2, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(-std::sqrt(d2[i]));
}

void exp_neg_scalar(const double* x, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(-x[i]);
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",
      &sq_dist_to_point_scalar,
      &weighted_colsum_scalar,
      &matern25_sq_scalar,
      &matern15_sq_scalar,
      &exp_neg_sqrt_scalar,
      &exp_neg_scalar,
  };
  return ops;
}

}  // namespace specemu::simd
