/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_SIMD_OPS_HPP_
#define SPECEMU_SIMD_OPS_HPP_

#include <cstddef>

namespace specemu::simd {

/*!
* Batched primitives on the hot path of correlation assembly. Every function
* has a scalar reference implementation and, on capable x86-64 hardware, an
* AVX2 variant selected at runtime. Variants must agree elementwise to
* floating-point roundoff; the unit suite enforces this.
*
* Layout convention: point sets are coordinate-major. Coordinate d of point j
* lives at coords[d * stride + j], so a lane of 4 consecutive points loads
* contiguously per coordinate.
*/
struct Ops {
  const char* name;

  //! out[j] = sum_d w[d] * (query[d] - coords[d*stride + j])^2
  void (*sq_dist_to_point)(const double* query, const double* coords, std::size_t npts,
                           std::size_t dim, std::size_t stride, const double* w, double* out);

  //! out[j] = sum_d w[d] * cols[d*stride + j]  (cols holds precomputed squared deltas)
  void (*weighted_colsum)(const double* cols, std::size_t npts, std::size_t dim,
                          std::size_t stride, const double* w, double* out);

  //! Matern nu=5/2 profile on squared scaled distance: t = sqrt(5 d2), (1+t+t^2/3) e^-t
  void (*matern25_sq)(const double* d2, std::size_t n, double* out);

  //! Matern nu=3/2 profile on squared scaled distance: t = sqrt(3 d2), (1+t) e^-t
  void (*matern15_sq)(const double* d2, std::size_t n, double* out);

  //! exp(-sqrt(d2)): Matern nu=1/2 and power-exponential alpha=1
  void (*exp_neg_sqrt)(const double* d2, std::size_t n, double* out);

  //! exp(-x): power-exponential alpha=2 applied to squared distance
  void (*exp_neg)(const double* x, std::size_t n, double* out);
};

enum class Backend { Auto, Scalar, Avx2 };

//! Always available reference backend.
const Ops& scalar_ops();

//! AVX2 backend, or nullptr when not compiled in or the CPU lacks support.
const Ops* avx2_ops();

/*!
* Force a backend (tests, troubleshooting). Throws ConfigError when the
* requested backend is unavailable. Auto re-enables detection; the
* SPECEMU_SIMD environment variable (scalar|avx2|auto) seeds the initial
* choice.
*/
void set_backend(Backend b);
Backend requested_backend();

//! Backend used for subsequent batched calls.
const Ops& active_ops();

}  // namespace specemu::simd

#endif
