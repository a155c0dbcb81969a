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

#include <json.hpp>

#include "specemu/bench.hpp"
#include "specemu/errors.hpp"

namespace specemu::bench {

double rmspe(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size() || pred.size() == 0) {
    throw ConfigError("rmspe: size mismatch");
  }
  // Missing entries on either side drop out pairwise.
  double ss = 0.0;
  Eigen::Index cnt = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (std::isnan(pred[i]) || std::isnan(truth[i])) continue;
    const double d = pred[i] - truth[i];
    ss += d * d;
    ++cnt;
  }
  if (cnt == 0) throw DataError("rmspe: no non-missing entries");
  return std::sqrt(ss / double(cnt));
}

double coverage_fraction(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                         const Eigen::VectorXd& truth) {
  const int n = static_cast<int>(truth.size());
  if (lo.size() != n || hi.size() != n || n == 0) throw ConfigError("coverage: size mismatch");
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    if (truth[i] >= lo[i] && truth[i] <= hi[i]) ++inside;
  }
  return double(inside) / double(n);
}

double crps_gaussian(double y, double mean, double sd) {
  if (!(sd > 0.0)) throw ConfigError("crps_gaussian: sd must be positive");
  const double z = (y - mean) / sd;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return sd * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(M_PI));
}

double crps_empirical(std::vector<double> samples, double y) {
  const std::size_t m = samples.size();
  if (m < 2) throw ConfigError("crps_empirical: at least two samples required");
  std::sort(samples.begin(), samples.end());
  double abs_err = 0.0;
  double pair_term = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    abs_err += std::abs(samples[k] - y);
    // E|X - X'| = (2/m^2) sum_k (2k - m - 1) x_(k), k one-based over the sort
    pair_term += (2.0 * double(k + 1) - double(m) - 1.0) * samples[k];
  }
  return abs_err / double(m) - pair_term / (double(m) * double(m));
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["bands"] = nlohmann::json::array();
  for (const auto& b : bands) {
    j["bands"].push_back({{"band", b.band},
                          {"rmspe", b.rmspe},
                          {"coverage95", b.coverage95},
                          {"mean_crps", b.mean_crps}});
  }
  j["scores"] = nlohmann::json::array();
  for (const auto& s : scores) {
    j["scores"].push_back({{"band", s.band},
                           {"component", s.component},
                           {"rmspe", s.rmspe},
                           {"coverage95", s.coverage95},
                           {"crps", s.crps}});
  }
  j["pointwise"] = nlohmann::json::array();
  for (const auto& p : pointwise) {
    j["pointwise"].push_back({{"band", p.band}, {"wavelength", p.wavelength}, {"rmspe", p.rmspe}});
  }
  j["weight_comparisons"] = nlohmann::json::array();
  for (const auto& w : weight_comparisons) {
    j["weight_comparisons"].push_back({{"band", w.band},
                                       {"component", w.component},
                                       {"rmspe_nn", w.rmspe_nn},
                                       {"rmspe_dense", w.rmspe_dense},
                                       {"rel_gap", w.rel_gap}});
  }
  j["chains"] = nlohmann::json::array();
  for (const auto& c : chains) {
    std::vector<double> rates(c.accept_rate.data(), c.accept_rate.data() + c.accept_rate.size());
    j["chains"].push_back({{"label", c.label}, {"accept_rate", rates}});
  }
  j["train_seconds"] = train_seconds;
  j["predict_seconds"] = predict_seconds;
  j["total_seconds"] = total_seconds;
  j["budget_seconds"] = budget_seconds;
  j["hardware_threads"] = hardware_threads;
  return j.dump(2);
}

}  // namespace specemu::bench
