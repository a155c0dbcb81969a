/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_CONFIG_HPP_
#define SPECEMU_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace specemu::config {

//! Synthetic ensemble generation.
struct SynthConfig {
  int n_train = 120;
  int n_test = 0;
  int num_jacobians = -1;        //!< forward-model Jacobians to evaluate; -1 means every train run
  double missing_fraction = 0.0; //!< fraction of observed channels dropped (NaN) per sounding
  std::uint64_t structure_seed = 1234;  //!< fixes the synthetic truth, separate from the run seed
};

//! Functional representation of the per-band spectra.
struct FdaConfig {
  int num_basis = 150;
  int degree = 3;
  double threshold = 0.99;   //!< cumulative eigenvalue fraction for component selection
  double lambda_pen = 1e-8;  //!< second-derivative penalty on the mean function
  bool log_scale = true;     //!< fit log radiance; inverted at reconstruction
  int ncomp = 0;             //!< fixed component count; 0 selects by threshold
};

//! Input dimension reduction.
struct SubspaceConfig {
  std::string method = "gradient";  //!< gradient | input_pca
  std::string rule = "fixed";       //!< fixed | gap | cumulative
  int dim = 4;
  double cum_threshold = 0.95;
};

struct KernelConfig {
  std::string family = "matern";
  double nu = 2.5;
  double alpha = 1.0;
};

struct ModelConfig {
  int neighbors = 20;
  std::string trend = "constant";  //!< constant | linear
  bool separable_pair = true;      //!< pair the two CO2 bands per component when possible
};

struct McmcConfig {
  int iterations = 3500;
  int burn_in = 500;
  int retained = 3000;
  double initial_step = 0.3;
  double target_rate = 0.35;
  int adapt_window = 25;
  double initial_nugget = 1e-2;
};

struct PredictConfig {
  int draws = 3000;  //!< score draws per query; retained samples are cycled
  int t_pred = 0;    //!< conditioning set size at prediction; 0 means model.neighbors
};

/*!
* Full pipeline configuration. Every field has a usable default; a JSON
* config file and dotted-path command-line overrides patch individual
* values. Unknown keys are rejected rather than ignored, so a typo cannot
* silently fall back to a default.
*/
struct Config {
  SynthConfig synth;
  FdaConfig fda;
  SubspaceConfig subspace;
  KernelConfig kernel;
  ModelConfig model;
  McmcConfig mcmc;
  PredictConfig predict;
  std::uint64_t seed = 20260818;

  void validate() const;  //!< throws ConfigError on out-of-range or unknown enum values

  nlohmann::json to_json() const;
  static Config from_json(const nlohmann::json& doc);

  /*!
  * Configuration from an optional JSON file plus "path.to.key=value"
  * overrides, applied in order after the file. Override values parse as
  * JSON literals when possible and as strings otherwise. The result is
  * validated before returning.
  */
  static Config load(const std::string& path, const std::vector<std::string>& overrides);
};

}  // namespace specemu::config

#endif
