/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include "specemu/simd/ops.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace specemu::simd {
namespace {

// Vector e^x, Cephes-style rational approximation with two-part ln2
// reduction; agrees with libm to a couple of ulp. Arguments here are always
// <= 0 (negated distances); values below the underflow cutoff flush to zero,
// skipping the denormal range.
inline __m256d exp_pd(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(0.693145751953125);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
  const __m256d underflow = _mm256_set1_pd(-708.0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);

  const __m256d keep = _mm256_cmp_pd(x, underflow, _CMP_GT_OQ);
  x = _mm256_max_pd(x, underflow);

  __m256d k = _mm256_floor_pd(_mm256_fmadd_pd(x, log2e, half));
  x = _mm256_fnmadd_pd(k, c1, x);
  x = _mm256_fnmadd_pd(k, c2, x);

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_fmadd_pd(p0, xx, p1);
  px = _mm256_fmadd_pd(px, xx, p2);
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_fmadd_pd(q0, xx, q1);
  qx = _mm256_fmadd_pd(qx, xx, q2);
  qx = _mm256_fmadd_pd(qx, xx, q3);
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, one);

  // scale by 2^k through the exponent field
  const __m128i k32 = _mm256_cvtpd_epi32(k);
  const __m256i k64 = _mm256_cvtepi32_epi64(k32);
  const __m256i pow2 = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(pow2));

  return _mm256_and_pd(e, keep);
}

void sq_dist_to_point_avx2(const double* query, const double* coords, std::size_t npts,
                           std::size_t dim, std::size_t stride, const double* w, double* out) {
  const std::size_t main = npts & ~std::size_t(3);
  for (std::size_t j = 0; j < main; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dim; ++d) {
      const __m256d q = _mm256_set1_pd(query[d]);
      const __m256d c = _mm256_loadu_pd(coords + d * stride + j);
      const __m256d diff = _mm256_sub_pd(q, c);
      acc = _mm256_fmadd_pd(_mm256_mul_pd(diff, diff), _mm256_set1_pd(w[d]), acc);
    }
    _mm256_storeu_pd(out + j, acc);
  }
  if (main < npts) {
    const auto& ref = scalar_ops();
    ref.sq_dist_to_point(query, coords + main, npts - main, dim, stride, w, out + main);
  }
}

void weighted_colsum_avx2(const double* cols, std::size_t npts, std::size_t dim,
                          std::size_t stride, const double* w, double* out) {
  const std::size_t main = npts & ~std::size_t(3);
  for (std::size_t j = 0; j < main; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dim; ++d) {
      const __m256d c = _mm256_loadu_pd(cols + d * stride + j);
      acc = _mm256_fmadd_pd(c, _mm256_set1_pd(w[d]), acc);
    }
    _mm256_storeu_pd(out + j, acc);
  }
  if (main < npts) {
    const auto& ref = scalar_ops();
    ref.weighted_colsum(cols + main, npts - main, dim, stride, w, out + main);
  }
}

void matern25_sq_avx2(const double* d2, std::size_t n, double* out) {
  const __m256d five = _mm256_set1_pd(5.0);
  const __m256d third = _mm256_set1_pd(1.0 / 3.0);
  const __m256d one = _mm256_set1_pd(1.0);
  const std::size_t main = n & ~std::size_t(3);
  for (std::size_t i = 0; i < main; i += 4) {
    const __m256d t = _mm256_sqrt_pd(_mm256_mul_pd(five, _mm256_loadu_pd(d2 + i)));
    const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), t));
    const __m256d poly = _mm256_add_pd(one, _mm256_fmadd_pd(_mm256_mul_pd(t, t), third, t));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(poly, e));
  }
  if (main < n) scalar_ops().matern25_sq(d2 + main, n - main, out + main);
}

void matern15_sq_avx2(const double* d2, std::size_t n, double* out) {
  const __m256d three = _mm256_set1_pd(3.0);
  const __m256d one = _mm256_set1_pd(1.0);
  const std::size_t main = n & ~std::size_t(3);
  for (std::size_t i = 0; i < main; i += 4) {
    const __m256d t = _mm256_sqrt_pd(_mm256_mul_pd(three, _mm256_loadu_pd(d2 + i)));
    const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), t));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_add_pd(one, t), e));
  }
  if (main < n) scalar_ops().matern15_sq(d2 + main, n - main, out + main);
}

void exp_neg_sqrt_avx2(const double* d2, std::size_t n, double* out) {
  const std::size_t main = n & ~std::size_t(3);
  for (std::size_t i = 0; i < main; i += 4) {
    const __m256d t = _mm256_sqrt_pd(_mm256_loadu_pd(d2 + i));
    _mm256_storeu_pd(out + i, exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), t)));
  }
  if (main < n) scalar_ops().exp_neg_sqrt(d2 + main, n - main, out + main);
}

void exp_neg_avx2(const double* x, std::size_t n, double* out) {
  const std::size_t main = n & ~std::size_t(3);
  for (std::size_t i = 0; i < main; i += 4) {
    _mm256_storeu_pd(out + i, exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), _mm256_loadu_pd(x + i))));
  }
  if (main < n) scalar_ops().exp_neg(x + main, n - main, out + main);
}

}  // namespace

const Ops* detail_avx2_ops() {
  static const Ops ops = {
      "avx2",
      &sq_dist_to_point_avx2,
      &weighted_colsum_avx2,
      &matern25_sq_avx2,
      &matern15_sq_avx2,
      &exp_neg_sqrt_avx2,
      &exp_neg_avx2,
  };
  return &ops;
}

}  // namespace specemu::simd

#else

namespace specemu::simd {
const Ops* detail_avx2_ops() { return nullptr; }
}  // namespace specemu::simd

#endif
