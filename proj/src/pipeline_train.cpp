/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "specemu/errors.hpp"
#include "specemu/inference.hpp"
#include "specemu/log.hpp"
#include "specemu/pipeline.hpp"

namespace specemu::pipeline {
namespace {

//! Per-channel mean of the non-missing radiances, stacked over bands.
Eigen::VectorXd ensemble_mean(const std::vector<BandData>& bands) {
  std::vector<double> stacked;
  for (const auto& band : bands) {
    const auto& v = band.spectra.values;
    for (int j = 0; j < v.cols(); ++j) {
      double sum = 0.0;
      int cnt = 0;
      for (int i = 0; i < v.rows(); ++i) {
        if (std::isnan(v(i, j))) continue;
        sum += v(i, j);
        ++cnt;
      }
      stacked.push_back(cnt > 0 ? sum / cnt : std::numeric_limits<double>::quiet_NaN());
    }
  }
  return Eigen::Map<Eigen::VectorXd>(stacked.data(), static_cast<Eigen::Index>(stacked.size()));
}

}  // namespace

BandDecomposition decompose_band(const BandData& band, const config::FdaConfig& cfg) {
  const auto& wl = band.spectra.wavelengths;
  const int n = static_cast<int>(band.spectra.values.rows());
  const int m = static_cast<int>(wl.size());
  if (band.spectra.values.cols() != m) {
    throw DataError("band " + band.name + ": spectra column count does not match the grid");
  }

  fda::SpectralCurveSet curves;
  curves.band_name = band.name;
  curves.wavelengths = wl;
  if (cfg.log_scale) {
    curves.values = band.spectra.values;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        double& v = curves.values(i, j);
        if (std::isnan(v)) continue;
        if (!(v > 0.0)) {
          throw DataError("band " + band.name + ": nonpositive radiance at run " +
                          std::to_string(i) + ", log scale requires positive values");
        }
        v = std::log(v);
      }
    }
  } else {
    curves.values = band.spectra.values;
  }
  curves.validate();

  const fda::BSplineSystem system =
      fda::BSplineSystem::equidistant(wl[0], wl[m - 1], cfg.num_basis, cfg.degree);
  const Eigen::VectorXd mean_coefs = fda::mean_function(curves, system, cfg.lambda_pen);
  const Eigen::MatrixXd coefs = fda::fit_curves(curves, system);
  const Eigen::MatrixXd centered = coefs.rowwise() - mean_coefs.transpose();
  const Eigen::MatrixXd gram = system.gram();

  const fda::FpcaResult fp = fda::fpca(centered, gram);
  int ncomp = cfg.ncomp > 0 ? std::min(cfg.ncomp, static_cast<int>(fp.eigenvalues.size()))
                            : fda::select_ncomp(fp.eigenvalues, cfg.threshold);

  BandDecomposition out;
  out.scores = fda::scores(centered, gram, fp.components, ncomp);
  out.basis.system = system;
  out.basis.band_name = band.name;
  out.basis.grid = wl;
  out.basis.mean_coefs = mean_coefs;
  out.basis.components = fp.components.leftCols(ncomp);
  out.basis.eigenvalues = fp.eigenvalues;
  out.basis.log_scale = cfg.log_scale;

  // Representation error of the retained rank: pointwise RMS of the model
  // scale residual over the training curves. Prediction adds it back as
  // independent noise so intervals do not collapse below what the basis
  // can express.
  const fda::GridEval ge = fda::eval_on_grid(out.basis, wl);
  out.resid_sd.resize(m);
  Eigen::MatrixXd recon = out.scores * ge.components.transpose();
  recon.rowwise() += ge.mean.transpose();
  for (int j = 0; j < m; ++j) {
    double ss = 0.0;
    int cnt = 0;
    for (int i = 0; i < n; ++i) {
      const double v = curves.values(i, j);
      if (std::isnan(v)) continue;
      const double r = v - recon(i, j);
      ss += r * r;
      ++cnt;
    }
    out.resid_sd[j] = cnt > 0 ? std::sqrt(ss / cnt) : 0.0;
  }
  return out;
}

subspace::ActiveSubspace fit_subspace(const TrainInputs& in, const config::Config& cfg,
                                      const subspace::StateStandardizer& std_x,
                                      const Eigen::MatrixXd& x_std) {
  const auto rule = subspace::dimension_rule_from_string(cfg.subspace.rule);
  if (cfg.subspace.method == "input_pca") {
    return subspace::input_pca_subspace(x_std, rule, cfg.subspace.dim, cfg.subspace.cum_threshold);
  }

  if (in.gradients.size() > 0) {
    if (in.gradients.rows() != in.state_dim) {
      throw DataError("precomputed gradients do not match the state dimension");
    }
    return subspace::active_subspace(in.gradients, rule, cfg.subspace.dim,
                                     cfg.subspace.cum_threshold);
  }

  const std::size_t nj = in.jacobians.size();
  if (nj == 0) {
    throw ConfigError("subspace.method is gradient but no Jacobians were provided");
  }
  if (in.jacobian_runs.size() != nj) {
    throw DataError("jacobian_runs length does not match the Jacobian count");
  }

  int total_m = 0;
  for (const auto& band : in.bands) total_m += static_cast<int>(band.spectra.wavelengths.size());

  Eigen::VectorXd noise_var(total_m);
  {
    int at = 0;
    for (const auto& band : in.bands) {
      const int m = static_cast<int>(band.spectra.wavelengths.size());
      if (!(band.noise_sd > 0.0)) {
        throw DataError("band " + band.name + ": positive noise level required for gradients");
      }
      noise_var.segment(at, m).setConstant(band.noise_sd * band.noise_sd);
      at += m;
    }
  }

  const Eigen::VectorXd y_ref = in.y_obs.size() > 0 ? in.y_obs : ensemble_mean(in.bands);
  if (y_ref.size() != total_m) {
    throw DataError("reference sounding length does not match the stacked band grids");
  }

  Eigen::MatrixXd grads(in.state_dim, static_cast<Eigen::Index>(nj));
  Eigen::VectorXd fx(total_m);
  Eigen::VectorXd y_eff(total_m);
  for (std::size_t k = 0; k < nj; ++k) {
    const int r = in.jacobian_runs[k];
    if (r < 0 || r >= in.design.rows()) throw DataError("jacobian_runs index out of range");
    if (in.jacobians[k].rows() != total_m || in.jacobians[k].cols() != in.state_dim) {
      throw DataError("Jacobian " + std::to_string(k) + " has inconsistent dimensions");
    }
    int at = 0;
    for (const auto& band : in.bands) {
      const int m = static_cast<int>(band.spectra.wavelengths.size());
      fx.segment(at, m) = band.spectra.values.row(r);
      at += m;
    }
    // A channel missing in this run contributes nothing to its misfit.
    y_eff = y_ref;
    for (int j = 0; j < total_m; ++j) {
      if (std::isnan(fx[j])) y_eff[j] = std::numeric_limits<double>::quiet_NaN();
    }
    for (int j = 0; j < total_m; ++j) {
      if (std::isnan(y_eff[j])) fx[j] = 0.0;  // masked entries, value irrelevant
    }
    grads.col(static_cast<Eigen::Index>(k)) =
        subspace::misfit_gradient(in.jacobians[k], std_x, noise_var, y_eff, fx);
  }
  return subspace::active_subspace(grads, rule, cfg.subspace.dim, cfg.subspace.cum_threshold);
}

namespace {

//! Dimension-wise median absolute difference over sampled row pairs; a
//! scale-aware starting point for the range parameters.
Eigen::VectorXd initial_ranges(const Eigen::MatrixXd& s, Rng& rng) {
  const int n = static_cast<int>(s.rows());
  const int d = static_cast<int>(s.cols());
  const int pairs = std::min(2000, n * (n - 1) / 2);
  std::uniform_int_distribution<int> pick(0, n - 1);
  Eigen::VectorXd out(d);
  std::vector<double> diffs(static_cast<std::size_t>(pairs));
  std::vector<std::pair<int, int>> idx(static_cast<std::size_t>(pairs));
  for (int k = 0; k < pairs; ++k) {
    int a = pick(rng);
    int b = pick(rng);
    while (b == a) b = pick(rng);
    idx[static_cast<std::size_t>(k)] = {a, b};
  }
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < pairs; ++k) {
      diffs[static_cast<std::size_t>(k)] =
          std::abs(s(idx[static_cast<std::size_t>(k)].first, j) -
                   s(idx[static_cast<std::size_t>(k)].second, j));
    }
    auto mid = diffs.begin() + pairs / 2;
    std::nth_element(diffs.begin(), mid, diffs.end());
    out[j] = std::max(*mid, 1e-3);
  }
  return out;
}

std::string component_label(const std::string& band, int comp) {
  return band + "/pc" + std::to_string(comp + 1);
}

}  // namespace

int TrainedModel::band_index(const std::string& name) const {
  for (std::size_t i = 0; i < bases.size(); ++i) {
    if (bases[i].band_name == name) return static_cast<int>(i);
  }
  return -1;
}

Eigen::VectorXd TrainedModel::reduce(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
  const Eigen::VectorXd xs = std_x.standardize(x);
  const Eigen::VectorXd bs = std_b.standardize(b);
  Eigen::VectorXd s0(sub.dim + bs.size());
  s0.head(sub.dim) = sub.basis().transpose() * xs;
  s0.tail(bs.size()) = bs;
  return s0;
}

const fda::GridEval& TrainedModel::grid_eval(int band) const {
  if (band < 0 || band >= static_cast<int>(bases.size())) {
    throw ConfigError("grid_eval: band index out of range");
  }
  if (grid_cache_.empty()) grid_cache_.resize(bases.size());
  auto& slot = grid_cache_[static_cast<std::size_t>(band)];
  if (slot.mean.size() == 0) {
    slot = fda::eval_on_grid(bases[static_cast<std::size_t>(band)],
                             bases[static_cast<std::size_t>(band)].grid);
  }
  return slot;
}

TrainedModel train(const TrainInputs& in, const config::Config& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();

  const int n = static_cast<int>(in.design.rows());
  if (in.state_dim < 1 || in.state_dim > in.design.cols()) {
    throw DataError("train: state dimension out of range for the design");
  }
  const int geom_dim = static_cast<int>(in.design.cols()) - in.state_dim;
  if (in.bands.empty()) throw DataError("train: no spectral bands");
  for (const auto& band : in.bands) {
    if (band.spectra.values.rows() != n) {
      throw DataError("train: band " + band.name + " run count does not match the design");
    }
  }

  TrainedModel tm;
  tm.cfg = cfg;

  const Eigen::MatrixXd x_raw = in.design.leftCols(in.state_dim);
  const Eigen::MatrixXd b_raw = in.design.rightCols(geom_dim);

  if (in.state_prior_mean.size() > 0 || in.state_prior_sd.size() > 0) {
    if (in.state_prior_mean.size() != in.state_dim || in.state_prior_sd.size() != in.state_dim) {
      throw DataError("train: state prior moments do not match the state dimension");
    }
    for (int j = 0; j < in.state_dim; ++j) {
      if (!(in.state_prior_sd[j] > 0.0)) throw DataError("train: nonpositive prior scale");
    }
    tm.std_x.mu = in.state_prior_mean;
    tm.std_x.sd = in.state_prior_sd;
    tm.prior_standardizer = true;
  } else {
    log_warn("train: no state prior moments given, standardizing with fitted design moments");
    tm.std_x = subspace::StateStandardizer::fit(x_raw);
    tm.prior_standardizer = false;
  }
  tm.std_b = subspace::StateStandardizer::fit(b_raw);

  // Per-band functional decomposition.
  std::vector<Eigen::MatrixXd> band_scores;
  for (const auto& band : in.bands) {
    BandDecomposition fit = decompose_band(band, cfg.fda);
    log_info("train: band " + band.name + " retained " +
             std::to_string(fit.basis.components.cols()) + " components");
    band_scores.push_back(std::move(fit.scores));
    tm.bases.push_back(std::move(fit.basis));
    tm.resid_sd.push_back(std::move(fit.resid_sd));
    tm.noise_sd.push_back(band.noise_sd);
  }

  // Input reduction: gradient-informed subspace over the standardized state,
  // geometry passed through unreduced.
  const Eigen::MatrixXd x_std = tm.std_x.standardize_rows(x_raw);
  tm.sub = fit_subspace(in, cfg, tm.std_x, x_std);
  log_info("train: input subspace dimension " + std::to_string(tm.sub.dim));

  const Eigen::MatrixXd b_std = tm.std_b.standardize_rows(b_raw);
  tm.s_red.resize(n, tm.sub.dim + geom_dim);
  tm.s_red.leftCols(tm.sub.dim) = subspace::project(tm.sub.basis(), x_std);
  tm.s_red.rightCols(geom_dim) = b_std;

  // Unit assembly: one process per component; the two CO2 bands pair their
  // same-index components under a shared correlation when both exist.
  const int wco2 = tm.band_index("wco2");
  const int sco2 = tm.band_index("sco2");
  const bool pair_co2 = cfg.model.separable_pair && wco2 >= 0 && sco2 >= 0;
  const int paired = pair_co2 ? static_cast<int>(std::min(band_scores[wco2].cols(),
                                                          band_scores[sco2].cols()))
                              : 0;
  for (std::size_t bi = 0; bi < in.bands.size(); ++bi) {
    const int nc = static_cast<int>(band_scores[bi].cols());
    for (int c = 0; c < nc; ++c) {
      const bool in_pair = pair_co2 && c < paired &&
                           (static_cast<int>(bi) == wco2 || static_cast<int>(bi) == sco2);
      if (in_pair && static_cast<int>(bi) == sco2) continue;  // consumed by the wco2 unit
      ModelUnit unit;
      if (in_pair) {
        unit.label = "wco2+sco2/pc" + std::to_string(c + 1);
        unit.targets = {{wco2, c}, {sco2, c}};
      } else {
        unit.label = component_label(in.bands[bi].name, c);
        unit.targets = {{static_cast<int>(bi), c}};
      }
      tm.units.push_back(std::move(unit));
    }
  }

  // Shared chain setup.
  inference::ChainConfig chain;
  chain.iterations = cfg.mcmc.iterations;
  chain.burn_in = cfg.mcmc.burn_in;
  chain.retained = cfg.mcmc.retained;
  chain.initial_step = cfg.mcmc.initial_step;
  chain.target_rate = cfg.mcmc.target_rate;
  chain.adapt_window = cfg.mcmc.adapt_window;

  Rng init_rng = make_rng(cfg.seed, "train/init");
  const Eigen::VectorXd range0 = initial_ranges(tm.s_red, init_rng);
  const int rd = tm.reduced_dim();
  Eigen::VectorXd par0(rd + 1);
  par0.head(rd) = range0;
  par0[rd] = cfg.mcmc.initial_nugget;

  const auto family = kernels::family_from_string(cfg.kernel.family);
  const auto trend = emulator::trend_from_string(cfg.model.trend);

  for (auto& unit : tm.units) {
    const int q = unit.q();
    Eigen::MatrixXd z(n, q);
    for (int c = 0; c < q; ++c) {
      z.col(c) = band_scores[unit.targets[static_cast<std::size_t>(c)].first].col(
          unit.targets[static_cast<std::size_t>(c)].second);
    }
    unit.model = std::make_unique<emulator::NNGPModel>(tm.s_red, z, trend, cfg.model.neighbors,
                                                       family, cfg.kernel.nu, cfg.kernel.alpha);
    emulator::NNGPModel& model = *unit.model;
    const int p = model.p();

    const inference::Target target = [&model, rd](const Eigen::VectorXd& par) {
      return model.log_marginal(par.head(rd), par[rd]) + inference::log_prior(par);
    };

    const int pack_width = p * q + p * p + q * q;
    unit.gls_pack.resize(chain.retained, pack_width);
    const auto on_retain = [&](int r, const Eigen::VectorXd& par) {
      const emulator::GlsSummary& g = model.gls(par.head(rd), par[rd]);
      auto row = unit.gls_pack.row(r);
      row.segment(0, p * q) = Eigen::Map<const Eigen::RowVectorXd>(g.beta.data(), p * q);
      row.segment(p * q, p * p) =
          Eigen::Map<const Eigen::RowVectorXd>(g.htrih_inv.data(), p * p);
      row.segment(p * q + p * p, q * q) =
          Eigen::Map<const Eigen::RowVectorXd>(g.gls_cov.data(), q * q);
    };

    Rng rng = make_rng(cfg.seed, "train/mcmc/" + unit.label);
    inference::ChainResult res = inference::run_chain(target, par0, chain, rng, on_retain);
    unit.samples = std::move(res.samples);
    unit.target_trace = std::move(res.target_trace);
    unit.accept_rate = std::move(res.accept_rate);
    unit.steps = std::move(res.steps);

    std::string rates;
    for (int j = 0; j < unit.accept_rate.size(); ++j) {
      rates += (j ? " " : "") + std::to_string(unit.accept_rate[j]).substr(0, 4);
    }
    log_info("train: unit " + unit.label + " acceptance [" + rates + "]");
  }

  tm.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return tm;
}

}  // namespace specemu::pipeline
