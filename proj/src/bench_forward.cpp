/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "specemu/bench.hpp"
#include "specemu/errors.hpp"

namespace specemu::bench {
namespace {

//! Thin QR with the sign convention of the subspace module: per column the
//! entry of largest magnitude is positive.
Eigen::MatrixXd orthonormal_columns(Eigen::MatrixXd a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (int c = 0; c < q.cols(); ++c) {
    int arg = 0;
    double best = 0.0;
    for (int r = 0; r < q.rows(); ++r) {
      if (std::abs(q(r, c)) > best) {
        best = std::abs(q(r, c));
        arg = r;
      }
    }
    if (q(arg, c) < 0.0) q.col(c) = -q.col(c);
  }
  return q;
}

Eigen::MatrixXd seeded_gaussian(std::uint64_t root, const std::string& name, int rows, int cols) {
  Rng rng = make_rng(root, name);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = normal(rng);
  }
  return m;
}

Eigen::VectorXd seeded_uniform(std::uint64_t root, const std::string& name, int n, double lo,
                               double hi) {
  Rng rng = make_rng(root, name);
  std::uniform_real_distribution<double> unif(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = unif(rng);
  return v;
}

}  // namespace

SyntheticForward::SyntheticForward(const Spec& spec) : spec_(spec) {
  if (spec_.state_dim < spec_.active_dim || spec_.active_dim < 3) {
    throw ConfigError("SyntheticForward: need state_dim >= active_dim >= 3");
  }
  band_names_ = {"o2", "wco2", "sco2"};
  const double band_lo[kBands] = {0.757, 1.590, 2.040};
  const double band_hi[kBands] = {0.772, 1.620, 2.080};

  mu_x_ = seeded_uniform(spec_.seed, "structure/state_mean", spec_.state_dim, 1.0, 3.0);
  sd_x_ = seeded_uniform(spec_.seed, "structure/state_sd", spec_.state_dim, 0.2, 0.5);
  p_true_ = orthonormal_columns(
      seeded_gaussian(spec_.seed, "structure/projection", spec_.state_dim, spec_.active_dim));

  // Depth directions: band 0 cycles through three orthonormal directions
  // with descending scales, the CO2 bands are rank one.
  const Eigen::MatrixXd tri =
      orthonormal_columns(seeded_gaussian(spec_.seed, "structure/band0_dirs", spec_.active_dim, 3));
  const double tri_scale[3] = {0.806, 0.500, 0.308};  // variance shares ~65/25/9.5

  bands_.resize(kBands);
  for (int k = 0; k < kBands; ++k) {
    Band& bd = bands_[k];
    const std::string tag = "structure/band" + std::to_string(k);
    const int w = spec_.points_per_band;
    const int nf = spec_.features_per_band;
    const double span = band_hi[k] - band_lo[k];

    bd.grid.setLinSpaced(w, band_lo[k], band_hi[k]);
    const Eigen::VectorXd bc = seeded_uniform(spec_.seed, tag + "/baseline", 3, -0.3, 0.3);
    bd.baseline.resize(w);
    for (int j = 0; j < w; ++j) {
      const double u = (bd.grid[j] - band_lo[k]) / span;
      bd.baseline[j] = bc[0] + bc[1] * u + bc[2] * u * u;
    }

    bd.centers = seeded_uniform(spec_.seed, tag + "/centers", nf, band_lo[k] + 0.1 * span,
                                band_hi[k] - 0.1 * span);
    std::sort(bd.centers.data(), bd.centers.data() + nf);
    bd.widths = seeded_uniform(spec_.seed, tag + "/widths", nf, 0.02 * span, 0.05 * span);
    bd.depth_offset = seeded_uniform(spec_.seed, tag + "/offsets", nf, 0.5, 1.5);

    const Eigen::VectorXd mods = seeded_uniform(spec_.seed, tag + "/dir_mods", nf, 0.8, 1.2);
    bd.depth_dirs.resize(spec_.active_dim, nf);
    if (k == 0) {
      for (int i = 0; i < nf; ++i) {
        const int grp = i % 3;
        bd.depth_dirs.col(i) = spec_.depth_scale * tri_scale[grp] * mods[i] * tri.col(grp);
      }
    } else {
      const Eigen::MatrixXd dir = orthonormal_columns(
          seeded_gaussian(spec_.seed, tag + "/rank1_dir", spec_.active_dim, 1));
      for (int i = 0; i < nf; ++i) {
        bd.depth_dirs.col(i) = spec_.depth_scale * mods[i] * dir.col(0);
      }
    }

    bd.geom_gain.resize(spec_.geom_dim, nf);
    const Eigen::VectorXd gg =
        seeded_uniform(spec_.seed, tag + "/geom_gain", spec_.geom_dim * nf, -1.0, 1.0);
    for (int i = 0; i < nf; ++i) bd.geom_gain.col(i) = gg.segment(i * spec_.geom_dim, spec_.geom_dim);

    bd.feature_vals.resize(w, nf);
    for (int i = 0; i < nf; ++i) {
      const double c = bd.centers[i];
      const double denom = 2.0 * bd.widths[i] * bd.widths[i];
      for (int j = 0; j < w; ++j) {
        const double d = bd.grid[j] - c;
        bd.feature_vals(j, i) = std::exp(-d * d / denom);
      }
    }

    // Reference radiance at the prior mean with neutral geometry fixes the
    // noise level at one percent of its median.
    Eigen::VectorXd ref =
        (bd.baseline - bd.feature_vals * bd.depth_offset).array().exp().matrix();
    std::vector<double> sorted(ref.data(), ref.data() + w);
    std::nth_element(sorted.begin(), sorted.begin() + w / 2, sorted.end());
    bd.noise_sd = 0.01 * sorted[static_cast<std::size_t>(w) / 2];
  }
}

const Eigen::VectorXd& SyntheticForward::wavelengths(int band) const {
  if (band < 0 || band >= kBands) throw ConfigError("SyntheticForward: band out of range");
  return bands_[static_cast<std::size_t>(band)].grid;
}

Eigen::VectorXd SyntheticForward::sample_state(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(spec_.state_dim);
  for (int i = 0; i < spec_.state_dim; ++i) x[i] = mu_x_[i] + sd_x_[i] * normal(rng);
  return x;
}

Eigen::VectorXd SyntheticForward::sample_geometry(Rng& rng) const {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd b(spec_.geom_dim);
  for (int i = 0; i < spec_.geom_dim; ++i) b[i] = unif(rng);
  return b;
}

Eigen::VectorXd SyntheticForward::log_radiance(const Band& band, const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& b) const {
  if (x.size() != spec_.state_dim || b.size() != spec_.geom_dim) {
    throw ConfigError("SyntheticForward: input dimension mismatch");
  }
  const Eigen::VectorXd s = p_true_.transpose() * ((x - mu_x_).cwiseQuotient(sd_x_));
  const int nf = spec_.features_per_band;
  Eigen::VectorXd depth(nf);
  for (int i = 0; i < nf; ++i) {
    const double ai = 1.0 + spec_.gamma * std::tanh(band.geom_gain.col(i).dot(b));
    depth[i] = band.depth_offset[i] + ai * band.depth_dirs.col(i).dot(s);
  }
  return band.baseline - band.feature_vals * depth;
}

Eigen::VectorXd SyntheticForward::radiance(int band, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& b) const {
  if (band < 0 || band >= kBands) throw ConfigError("SyntheticForward: band out of range");
  return log_radiance(bands_[static_cast<std::size_t>(band)], x, b).array().exp().matrix();
}

Eigen::MatrixXd SyntheticForward::jacobian(int band, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& b) const {
  if (band < 0 || band >= kBands) throw ConfigError("SyntheticForward: band out of range");
  const Band& bd = bands_[static_cast<std::size_t>(band)];
  const Eigen::VectorXd rad = log_radiance(bd, x, b).array().exp().matrix();

  // dL/ds = -sum_i a_i phi_i v_i^T, chained through s = P^T D^{-1} (x - mu).
  const int nf = spec_.features_per_band;
  Eigen::MatrixXd dl_ds = Eigen::MatrixXd::Zero(spec_.points_per_band, spec_.active_dim);
  for (int i = 0; i < nf; ++i) {
    const double ai = 1.0 + spec_.gamma * std::tanh(bd.geom_gain.col(i).dot(b));
    dl_ds.noalias() -= (ai * bd.feature_vals.col(i)) * bd.depth_dirs.col(i).transpose();
  }
  Eigen::MatrixXd jac = dl_ds * p_true_.transpose();
  jac.array().colwise() *= rad.array();
  jac.array().rowwise() /= sd_x_.transpose().array();
  return jac;
}

double SyntheticForward::noise_sd(int band) const {
  if (band < 0 || band >= kBands) throw ConfigError("SyntheticForward: band out of range");
  return bands_[static_cast<std::size_t>(band)].noise_sd;
}

}  // namespace specemu::bench
