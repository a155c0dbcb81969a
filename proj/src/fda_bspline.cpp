/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <algorithm>
#include <cmath>
#include <vector>

#include "specemu/errors.hpp"
#include "specemu/fda.hpp"

namespace specemu::fda {

namespace {
// 5-point Gauss-Legendre on [-1, 1]; exact through degree 9.
constexpr double kGlNode[5] = {-0.9061798459386639928, -0.5384693101056830910, 0.0,
                               0.5384693101056830910, 0.9061798459386639928};
constexpr double kGlWeight[5] = {0.2369268850561890875, 0.4786286704993664680,
                                 0.5688888888888888889, 0.4786286704993664680,
                                 0.2369268850561890875};
}  // namespace

BSplineSystem BSplineSystem::equidistant(double lo, double hi, int num_basis, int degree) {
  if (!(hi > lo)) throw ConfigError("bspline: domain needs hi > lo");
  if (degree < 1) throw ConfigError("bspline: degree must be >= 1");
  if (num_basis < degree + 1) throw ConfigError("bspline: num_basis must be >= degree + 1");
  BSplineSystem sys;
  sys.degree = degree;
  sys.num_basis = num_basis;
  sys.lo = lo;
  sys.hi = hi;
  const int n_knots = num_basis + degree + 1;
  const int n_interior = num_basis - degree - 1;
  sys.knots.resize(n_knots);
  for (int i = 0; i <= degree; ++i) sys.knots[i] = lo;
  for (int i = 0; i < n_interior; ++i) {
    sys.knots[degree + 1 + i] = lo + (hi - lo) * double(i + 1) / double(n_interior + 1);
  }
  for (int i = 0; i <= degree; ++i) sys.knots[n_knots - 1 - i] = hi;
  return sys;
}

int BSplineSystem::span_of(double x) const {
  // valid spans are [knots[mu], knots[mu+1]) for mu in [degree, num_basis-1]
  if (x >= hi) return num_basis - 1;
  if (x <= lo) return degree;
  int a = degree;
  int b = num_basis;  // one past the last valid span start
  while (b - a > 1) {
    const int mid = (a + b) / 2;
    if (x < knots[mid]) {
      b = mid;
    } else {
      a = mid;
    }
  }
  return a;
}

int BSplineSystem::eval_span(double x, double* vals) const {
  const double tol = 1e-9 * (hi - lo);
  if (x < lo - tol || x > hi + tol) {
    throw DataError("bspline: evaluation point outside [lo, hi]");
  }
  x = std::clamp(x, lo, hi);
  const int mu = span_of(x);
  const int p = degree;

  // de Boor triangular scheme: after step j, vals[r] = N_{mu-j+r, j}(x)
  std::vector<double> left(p + 1), right(p + 1);
  vals[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots[mu + 1 - j];
    right[j] = knots[mu + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = vals[r] / (right[r + 1] + left[j - r]);
      vals[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    vals[j] = saved;
  }
  return mu - p;
}

int BSplineSystem::eval_span_deriv(double x, int order, double* vals) const {
  if (order < 0 || order > degree) throw ConfigError("bspline: derivative order out of range");
  if (order == 0) return eval_span(x, vals);

  const double tol = 1e-9 * (hi - lo);
  if (x < lo - tol || x > hi + tol) {
    throw DataError("bspline: evaluation point outside [lo, hi]");
  }
  x = std::clamp(x, lo, hi);
  const int mu = span_of(x);
  const int p = degree;
  const int q = p - order;  // degree after differentiation

  // lower-degree values N_{mu-q..mu, q}(x)
  std::vector<double> low(q + 1), left(q + 1), right(q + 1);
  low[0] = 1.0;
  for (int j = 1; j <= q; ++j) {
    left[j] = x - knots[mu + 1 - j];
    right[j] = knots[mu + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = low[r] / (right[r + 1] + left[j - r]);
      low[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    low[j] = saved;
  }

  // raise the degree back up through the derivative recursion
  //   N'_{i,k} = k ( N_{i,k-1}/(t_{i+k}-t_i) - N_{i+1,k-1}/(t_{i+k+1}-t_{i+1}) )
  // where terms with zero denominator vanish. work[r] holds the current
  // degree-k derivative values for basis mu-k+r.
  std::vector<double> work(p + 1, 0.0);
  for (int r = 0; r <= q; ++r) work[r] = low[r];
  for (int k = q + 1; k <= p; ++k) {
    std::vector<double> next(k + 1, 0.0);
    for (int r = 0; r <= k; ++r) {
      const int i = mu - k + r;
      double acc = 0.0;
      if (r > 0) {
        const double den = knots[i + k] - knots[i];
        if (den > 0.0) acc += work[r - 1] / den;
      }
      if (r < k) {
        const double den = knots[i + k + 1] - knots[i + 1];
        if (den > 0.0) acc -= work[r] / den;
      }
      next[r] = double(k) * acc;
    }
    work.swap(next);
  }
  for (int r = 0; r <= p; ++r) vals[r] = work[r];
  return mu - p;
}

Eigen::VectorXd BSplineSystem::eval_all(double x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_basis);
  std::vector<double> vals(degree + 1);
  const int first = eval_span(x, vals.data());
  for (int r = 0; r <= degree; ++r) out[first + r] = vals[r];
  return out;
}

namespace {

Eigen::MatrixXd span_quadrature(const BSplineSystem& sys, int deriv_order) {
  const int g = sys.num_basis;
  const int p = sys.degree;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g, g);
  std::vector<double> vals(p + 1);
  for (int mu = p; mu < g; ++mu) {
    const double a = sys.knots[mu];
    const double b = sys.knots[mu + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int qn = 0; qn < 5; ++qn) {
      const double x = mid + half * kGlNode[qn];
      const double w = half * kGlWeight[qn];
      const int first = deriv_order == 0 ? sys.eval_span(x, vals.data())
                                         : sys.eval_span_deriv(x, deriv_order, vals.data());
      for (int r = 0; r <= p; ++r) {
        for (int c = 0; c <= r; ++c) {
          out(first + r, first + c) += w * vals[r] * vals[c];
        }
      }
    }
  }
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

}  // namespace

Eigen::MatrixXd BSplineSystem::gram() const { return span_quadrature(*this, 0); }

Eigen::MatrixXd BSplineSystem::second_deriv_penalty() const {
  if (degree < 2) throw ConfigError("bspline: second-derivative penalty needs degree >= 2");
  return span_quadrature(*this, 2);
}

void SpectralCurveSet::validate() const {
  if (wavelengths.size() == 0) throw DataError("curve set '" + band_name + "': empty grid");
  if (values.cols() != wavelengths.size()) {
    throw DataError("curve set '" + band_name + "': values/grid size mismatch");
  }
  for (Eigen::Index j = 1; j < wavelengths.size(); ++j) {
    if (!(wavelengths[j] > wavelengths[j - 1])) {
      throw DataError("curve set '" + band_name + "': wavelengths must be strictly increasing");
    }
  }
}

}  // namespace specemu::fda
