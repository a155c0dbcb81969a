/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_PIPELINE_HPP_
#define SPECEMU_PIPELINE_HPP_

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "specemu/config.hpp"
#include "specemu/emulator.hpp"
#include "specemu/fda.hpp"
#include "specemu/io.hpp"
#include "specemu/rng.hpp"
#include "specemu/subspace.hpp"

namespace specemu::pipeline {

//! One band's training spectra on the radiance scale; NaN marks missing.
struct BandData {
  std::string name;
  io::SpectraFile spectra;
  double noise_sd = 0.0;  //!< per-channel observation noise, constant within the band
};

/*!
* Everything training consumes. Design rows hold the raw state followed by
* the viewing geometry. Jacobians are optional (the input-PCA route needs
* none); each is the stacked per-band radiance Jacobian of one run, bands in
* the order of `bands`. y_obs is the reference sounding the misfit gradients
* point at; empty selects the per-channel ensemble mean. The state prior
* moments standardize the state exactly when given; otherwise moments are
* fit from the design with a warning, which perturbs gradient directions by
* the sampling error of the fitted scales.
*/
struct TrainInputs {
  Eigen::MatrixXd design;  // n x (state_dim + geom_dim)
  int state_dim = 0;
  std::vector<BandData> bands;

  std::vector<Eigen::MatrixXd> jacobians;  // each (sum_b m_b) x state_dim
  std::vector<int> jacobian_runs;          // design row of each Jacobian

  //! Misfit gradients with respect to the standardized state, one column
  //! per sampled run. When non-empty they are used directly and the
  //! Jacobian route is skipped; callers that stream Jacobians can fill
  //! this instead of holding them all in memory.
  Eigen::MatrixXd gradients;

  Eigen::VectorXd y_obs;  // stacked over bands; empty -> ensemble mean

  Eigen::VectorXd state_prior_mean;  // empty -> fit from design
  Eigen::VectorXd state_prior_sd;
};

/*!
* One inference unit: a process over the reduced inputs whose response
* columns are principal scores, either a single component (q = 1) or the
* same-index components of the two CO2 bands sharing one correlation
* (q = 2). The gls_pack row for retained draw r holds the flattened GLS
* pieces prediction needs at that draw's hyperparameters:
* beta (p x q), (H^T R^-1 H)^{-1} (p x p), and Z^T G Z / (n - p) (q x q),
* each column-major.
*/
struct ModelUnit {
  std::string label;                         // "o2/pc1", "wco2+sco2/pc2"
  std::vector<std::pair<int, int>> targets;  // (band, component) per response column
  std::unique_ptr<emulator::NNGPModel> model;

  Eigen::MatrixXd samples;  // retained x (reduced_dim + 1), ranges then nugget
  Eigen::VectorXd target_trace;
  Eigen::VectorXd accept_rate;
  Eigen::VectorXd steps;     // proposal scales after adaptation froze
  Eigen::MatrixXd gls_pack;  // retained x (p q + p^2 + q^2)

  int q() const { return static_cast<int>(targets.size()); }
};

/*!
* Trained emulator state: standardizers, the input subspace, per-band
* functional bases with their representation-error profile, the shared
* reduced design, and one ModelUnit per retained component (or CO2 pair).
* Save/load round-trips through a two-file checkpoint that is byte
* identical across reruns of the same seed and config.
*/
struct TrainedModel {
  config::Config cfg;
  subspace::StateStandardizer std_x;
  subspace::StateStandardizer std_b;
  bool prior_standardizer = false;
  subspace::ActiveSubspace sub;

  std::vector<fda::FunctionalBasis> bases;  // per band, input order
  std::vector<double> noise_sd;             // per band
  //! Pointwise RMS of the rank-p fit residual over the training curves on
  //! the model (log) scale; the share of curve variation the retained
  //! components do not carry, added back as independent noise when drawing.
  std::vector<Eigen::VectorXd> resid_sd;  // per band, length m

  Eigen::MatrixXd s_red;  // n x reduced_dim
  std::vector<ModelUnit> units;

  double train_seconds = 0.0;  // in-memory diagnostic, never serialized

  int reduced_dim() const { return static_cast<int>(s_red.cols()); }
  int geom_dim() const { return static_cast<int>(std_b.mu.size()); }
  int band_index(const std::string& name) const;  // -1 when absent

  //! Reduced coordinates of one raw (state, geometry) pair.
  Eigen::VectorXd reduce(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const;

  //! Basis and components evaluated on each band's native grid, cached.
  const fda::GridEval& grid_eval(int band) const;

  void save(const std::string& dir) const;
  static TrainedModel load(const std::string& dir);

 private:
  mutable std::vector<fda::GridEval> grid_cache_;  // built on demand per band
};

//! Fit the full chain: standardize, per-band functional decomposition,
//! input subspace, then one posterior chain per unit.
TrainedModel train(const TrainInputs& inputs, const config::Config& cfg);

//! Functional decomposition of one band alone: fitted basis, training
//! scores, and the pointwise representation-error profile of the retained
//! rank on the model scale.
struct BandDecomposition {
  fda::FunctionalBasis basis;
  Eigen::VectorXd resid_sd;
  Eigen::MatrixXd scores;  // n x ncomp
};

BandDecomposition decompose_band(const BandData& band, const config::FdaConfig& cfg);

//! Input-reduction stage alone: the configured subspace over the
//! standardized states, from precomputed gradients, streamed Jacobians,
//! or input PCA. x_std holds the standardized state rows of the design.
subspace::ActiveSubspace fit_subspace(const TrainInputs& in, const config::Config& cfg,
                                      const subspace::StateStandardizer& std_x,
                                      const Eigen::MatrixXd& x_std);

/*!
* Posterior-mixture predictor for one unit. Component r of the mixture is
* the Student-t predictive at the r-th retained hyperparameter draw, using
* the GLS pieces stored at training time; no solver or factorization is
* rebuilt. thin > 1 collapses moments over every thin-th draw.
*/
class UnitPredictor {
 public:
  UnitPredictor(const ModelUnit& unit, int t_pred);

  int retained() const { return static_cast<int>(unit_.samples.rows()); }

  //! Student-t predictive at mixture component r.
  emulator::PredictiveT at(const Eigen::VectorXd& s0, int r) const;

  struct Moments {
    Eigen::VectorXd mean;
    Eigen::VectorXd var;
  };

  //! Mixture mean and variance per response column (law of total variance
  //! over the hyperparameter draws; t variance requires dof > 2).
  Moments moments(const Eigen::VectorXd& s0, int thin = 1) const;

 private:
  const ModelUnit& unit_;
  int t_pred_;
  int p_ = 0;
};

//! Per-band pointwise predictive summary of one sounding on the radiance scale.
struct SoundingBand {
  std::string band;
  Eigen::VectorXd wavelengths;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd q025;
  Eigen::VectorXd q975;
};

//! Receives each selected band's radiance draw matrix (draws x wavelengths)
//! before it is collapsed to pointwise summaries.
using DrawSink = std::function<void(int band, const Eigen::MatrixXd& curves)>;

/*!
* Full predictive sounding at a raw (state, geometry) input: score samples
* drawn per retained hyperparameter draw (cycled when draws exceeds the
* chain length), mapped through each band's functional basis with the
* representation-error noise added, and inverted to the radiance scale.
* Pointwise mean, sd, and the central 95% interval per wavelength. bands
* filters the output; an unknown band name raises DataError.
*/
std::vector<SoundingBand> emulate_sounding(const TrainedModel& tm, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& b, int draws, Rng& rng,
                                           const std::vector<std::string>& bands = {},
                                           const DrawSink& draw_sink = {});

}  // namespace specemu::pipeline

#endif
