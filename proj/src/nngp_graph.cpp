/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "specemu/errors.hpp"
#include "specemu/nngp.hpp"
#include "specemu/simd/ops.hpp"

namespace specemu::nngp {

NeighborGraph build_graph(const Eigen::MatrixXd& x, int t) {
  const int n = static_cast<int>(x.rows());
  const int dim = static_cast<int>(x.cols());
  if (n < 2) throw DataError("build_graph: need at least two points");
  if (t < 1 || t >= n) throw ConfigError("build_graph: neighbor count must be in [1, n-1]");

  NeighborGraph g;
  g.t = t;
  g.order.resize(n);
  std::iota(g.order.begin(), g.order.end(), 0);
  // Coordinate ordering; stable sort keeps the original index as the final
  // tiebreak so the graph is reproducible across platforms.
  std::stable_sort(g.order.begin(), g.order.end(), [&](int a, int b) {
    if (x(a, 0) != x(b, 0)) return x(a, 0) < x(b, 0);
    if (dim > 1 && x(a, 1) != x(b, 1)) return x(a, 1) < x(b, 1);
    return false;
  });

  Eigen::MatrixXd xo(n, dim);
  for (int k = 0; k < n; ++k) xo.row(k) = x.row(g.order[k]);

  g.neighbors.resize(n);
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n);
  for (int i = 1; i < n; ++i) {
    const int m = std::min(i, t);
    cand.clear();
    for (int j = 0; j < i; ++j) {
      cand.emplace_back((xo.row(i) - xo.row(j)).squaredNorm(), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + m, cand.end());
    auto& nb = g.neighbors[i];
    nb.resize(m);
    for (int k = 0; k < m; ++k) nb[k] = cand[k].second;
    std::sort(nb.begin(), nb.end());
  }
  return g;
}

std::vector<int> predict_neighbors(const Eigen::MatrixXd& x, const Eigen::VectorXd& query,
                                   const Eigen::VectorXd& ranges, int t,
                                   std::vector<double>* d2_out) {
  const int n = static_cast<int>(x.rows());
  const int dim = static_cast<int>(x.cols());
  if (n < 1) throw DataError("predict_neighbors: empty training set");
  if (query.size() != dim || ranges.size() != dim) {
    throw ConfigError("predict_neighbors: dimension mismatch");
  }
  if (t < 1) throw ConfigError("predict_neighbors: neighbor count must be positive");
  const int m = std::min(t, n);

  thread_local std::vector<double> d2;
  thread_local std::vector<double> wts;
  thread_local std::vector<std::pair<double, int>> cand;
  d2.resize(static_cast<std::size_t>(n));
  wts.resize(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) {
    if (!(ranges[d] > 0.0)) throw ConfigError("predict_neighbors: nonpositive range");
    wts[static_cast<std::size_t>(d)] = 1.0 / (ranges[d] * ranges[d]);
  }
  // x is column-major, so each coordinate is contiguous with stride n.
  simd::active_ops().sq_dist_to_point(query.data(), x.data(), static_cast<std::size_t>(n),
                                      static_cast<std::size_t>(dim), static_cast<std::size_t>(n),
                                      wts.data(), d2.data());

  cand.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) cand[static_cast<std::size_t>(j)] = {d2[static_cast<std::size_t>(j)], j};
  std::partial_sort(cand.begin(), cand.begin() + m, cand.end());

  std::vector<int> out(static_cast<std::size_t>(m));
  if (d2_out) d2_out->resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    out[static_cast<std::size_t>(k)] = cand[static_cast<std::size_t>(k)].second;
    if (d2_out) (*d2_out)[static_cast<std::size_t>(k)] = cand[static_cast<std::size_t>(k)].first;
  }
  return out;
}

std::string graph_to_json(const NeighborGraph& graph, const Eigen::VectorXi& fill_perm) {
  nlohmann::json j;
  j["t"] = graph.t;
  j["order"] = graph.order;
  j["neighbors"] = graph.neighbors;
  std::vector<int> perm(fill_perm.data(), fill_perm.data() + fill_perm.size());
  j["fill_permutation"] = perm;
  return j.dump(2);
}

}  // namespace specemu::nngp
