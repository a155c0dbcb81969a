/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_BENCH_HPP_
#define SPECEMU_BENCH_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "specemu/io.hpp"
#include "specemu/pipeline.hpp"
#include "specemu/rng.hpp"

namespace specemu::bench {

/*!
* Closed-form stand-in for an expensive radiative transfer code. Three
* spectral bands of 1016 points each; the log radiance is a smooth baseline
* minus Gaussian absorption features whose depths respond linearly to a
* low-dimensional projection of the standardized state and are modulated by
* viewing geometry:
*
*   L(w) = baseline(w) - sum_i [ c_i + a_i(b) v_i^T s ] phi_i(w),
*   s = P^T D^{-1} (x - mu),   a_i(b) = 1 + gamma tanh(g_i^T b),
*
* with radiance exp(L) strictly positive. The state enters only through the
* four columns of P, so misfit gradients lie exactly in span(P) and the
* active-subspace recovery is testable against ground truth. The first band
* uses depth directions spanning three components with descending variance
* shares; the other two bands are rank one. gamma is small enough that the
* leading three principal components of the first band carry over 99% of
* the functional variance.
*/
class SyntheticForward {
 public:
  struct Spec {
    int state_dim = 62;
    int geom_dim = 4;
    int active_dim = 4;
    int features_per_band = 8;
    int points_per_band = 1016;
    double gamma = 0.08;        //!< geometry modulation strength
    double depth_scale = 0.05;  //!< state signal scale in log radiance
    std::uint64_t seed = 1234;  //!< structural seed (directions, features)
  };

  static constexpr int kBands = 3;

  SyntheticForward() : SyntheticForward(Spec{}) {}
  explicit SyntheticForward(const Spec& spec);

  const Spec& spec() const { return spec_; }
  const std::vector<std::string>& band_names() const { return band_names_; }
  const Eigen::VectorXd& wavelengths(int band) const;

  //! Gaussian state prior N(mu, diag(sd^2)) and the true projection.
  const Eigen::VectorXd& state_mean() const { return mu_x_; }
  const Eigen::VectorXd& state_sd() const { return sd_x_; }
  const Eigen::MatrixXd& projection() const { return p_true_; }

  Eigen::VectorXd sample_state(Rng& rng) const;
  Eigen::VectorXd sample_geometry(Rng& rng) const;  // uniform on [-1, 1]^geom_dim

  //! Radiance over one band's grid (noise free).
  Eigen::VectorXd radiance(int band, const Eigen::VectorXd& x, const Eigen::VectorXd& b) const;

  //! Analytic Jacobian of the radiance with respect to the raw state, W x state_dim.
  Eigen::MatrixXd jacobian(int band, const Eigen::VectorXd& x, const Eigen::VectorXd& b) const;

  //! Observation noise level: one percent of the reference median radiance.
  double noise_sd(int band) const;

 private:
  struct Band {
    Eigen::VectorXd grid;
    Eigen::VectorXd baseline;       // on the grid
    Eigen::VectorXd centers;        // feature centers
    Eigen::VectorXd widths;
    Eigen::VectorXd depth_offset;   // c_i
    Eigen::MatrixXd depth_dirs;     // active_dim x features, v_i columns
    Eigen::MatrixXd geom_gain;      // geom_dim x features, g_i columns
    Eigen::MatrixXd feature_vals;   // points x features, phi_i(w) cached
    double noise_sd = 0.0;
  };

  Eigen::VectorXd log_radiance(const Band& band, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& b) const;

  Spec spec_;
  std::vector<std::string> band_names_;
  Eigen::VectorXd mu_x_, sd_x_;
  Eigen::MatrixXd p_true_;
  std::vector<Band> bands_;
};

//! Root mean squared prediction error.
double rmspe(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

//! Fraction of truth values inside [lo, hi].
double coverage_fraction(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                         const Eigen::VectorXd& truth);

//! Closed-form CRPS of a Gaussian forecast.
double crps_gaussian(double y, double mean, double sd);

//! Sample CRPS: mean |X - y| - 0.5 E|X - X'| using the order-statistic form
//! of the expected absolute difference. samples need not be sorted.
double crps_empirical(std::vector<double> samples, double y);

//! Radiance-level summary over all held-out runs and wavelengths of a band.
struct BandMetrics {
  std::string band;
  double rmspe = 0.0;
  double coverage95 = 0.0;
  double mean_crps = 0.0;
};

//! Score-level summary of one principal component across held-out runs.
struct ScoreMetrics {
  std::string band;
  int component = 0;
  double rmspe = 0.0;
  double coverage95 = 0.0;
  double crps = 0.0;
};

//! Per-wavelength radiance RMSPE over held-out runs (plot-ready export).
struct PointwiseRmspe {
  std::string band;
  double wavelength = 0.0;
  double rmspe = 0.0;
};

struct WeightComparison {
  std::string band;
  int component = 0;
  double rmspe_nn = 0.0;     // neighbor-conditioned predictor
  double rmspe_dense = 0.0;  // all-predecessor reference
  double rel_gap = 0.0;
};

struct ChainDiagnostics {
  std::string label;
  Eigen::VectorXd accept_rate;
};

struct MetricsReport {
  std::vector<BandMetrics> bands;
  std::vector<ScoreMetrics> scores;
  std::vector<PointwiseRmspe> pointwise;
  std::vector<WeightComparison> weight_comparisons;
  std::vector<ChainDiagnostics> chains;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
  double total_seconds = 0.0;
  double budget_seconds = 0.0;
  int hardware_threads = 0;

  std::string to_json() const;
};

struct CrossValConfig {
  int n_train = 2000;
  int n_test = 200;
  int neighbors = 20;
  int num_basis = 150;
  double fpca_threshold = 0.99;
  int iterations = 3500;
  int burn_in = 500;
  int retained = 3000;
  double missing_fraction = 0.0;
  int dense_check_n = 500;  //!< sub-problem size for the dense comparison, 0 disables
  std::uint64_t seed = 20260818;
};

/*!
* Score a trained model against noise-free held-out soundings. Fills the
* bands, scores, pointwise, and chains sections; comparisons and timings
* stay with the caller. truth holds one file per trained band, in band
* order, rows aligned with test_design. Draw counts, conditioning sizes,
* and the substream root all come from the model's stored config.
*/
MetricsReport score_model(const pipeline::TrainedModel& tm, const Eigen::MatrixXd& test_design,
                          const std::vector<io::SpectraFile>& truth);

//! End-to-end in-memory study: simulate an ensemble, train the emulator,
//! predict held-out runs, and score them against the noise-free truth.
MetricsReport cross_validate(const SyntheticForward& fwd, const CrossValConfig& cfg);

}  // namespace specemu::bench

#endif
