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
#include <thread>
#include <vector>

#include "specemu/bench.hpp"
#include "specemu/errors.hpp"
#include "specemu/log.hpp"

namespace specemu::bench {
namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

//! Lower/upper interpolated median of one column.
double column_median(const Eigen::VectorXd& col) {
  std::vector<double> v(col.data(), col.data() + col.size());
  const std::size_t m = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (m % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

//! Dense all-predecessor GLS pieces, the exact counterpart of the
//! neighbor-conditioned summary. Small n only: factors the full matrix.
emulator::GlsSummary dense_gls(const Eigen::MatrixXd& s, const Eigen::MatrixXd& z,
                               emulator::Trend trend, const kernels::KernelSpec& spec) {
  const Eigen::MatrixXd h = emulator::trend_matrix(s, trend);
  const int n = static_cast<int>(s.rows());
  const int p = static_cast<int>(h.cols());

  const Eigen::MatrixXd r = kernels::corr_matrix(s, spec, true);
  const Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) {
    throw NumericError("dense comparison: correlation matrix is not positive definite");
  }
  const Eigen::MatrixXd ri_h = llt.solve(h);
  const Eigen::MatrixXd ri_z = llt.solve(z);

  emulator::GlsSummary g;
  g.ht_ri_h = h.transpose() * ri_h;
  g.ht_ri_z = h.transpose() * ri_z;
  const Eigen::LLT<Eigen::MatrixXd> hh(g.ht_ri_h);
  if (hh.info() != Eigen::Success) {
    throw NumericError("dense comparison: trend cross product is not positive definite");
  }
  g.beta = hh.solve(g.ht_ri_z);
  g.htrih_inv = hh.solve(Eigen::MatrixXd::Identity(p, p));
  g.zt_gz = z.transpose() * ri_z - g.ht_ri_z.transpose() * g.beta;
  g.logdet_r = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  g.logdet_ht_ri_h = 2.0 * hh.matrixL().toDenseMatrix().diagonal().array().log().sum();
  g.dof = double(n - p);
  g.gls_cov = g.zt_gz / g.dof;
  return g;
}

//! Principal scores of noise-free curves under an already-fitted basis.
Eigen::MatrixXd truth_scores(const io::SpectraFile& spectra, const fda::FunctionalBasis& basis,
                             const Eigen::MatrixXd& gram) {
  fda::SpectralCurveSet curves;
  curves.band_name = basis.band_name;
  curves.wavelengths = spectra.wavelengths;
  curves.values = basis.log_scale ? spectra.values.array().log().matrix() : spectra.values;
  curves.validate();
  const Eigen::MatrixXd coefs = fda::fit_curves(curves, basis.system);
  const Eigen::MatrixXd centered = coefs.rowwise() - basis.mean_coefs.transpose();
  return fda::scores(centered, gram, basis.components,
                     static_cast<int>(basis.components.cols()));
}

}  // namespace

MetricsReport score_model(const pipeline::TrainedModel& tm, const Eigen::MatrixXd& test_design,
                          const std::vector<io::SpectraFile>& truth) {
  const int nb = static_cast<int>(tm.bases.size());
  const int n_test = static_cast<int>(test_design.rows());
  const int state_dim = static_cast<int>(tm.std_x.mu.size());
  if (n_test < 1) throw DataError("score_model: no test runs");
  if (test_design.cols() != state_dim + tm.geom_dim()) {
    throw DataError("score_model: test design width does not match the trained model");
  }
  if (static_cast<int>(truth.size()) != nb) {
    throw DataError("score_model: need one truth file per trained band");
  }
  for (int bi = 0; bi < nb; ++bi) {
    const auto& t = truth[static_cast<std::size_t>(bi)];
    if (t.values.rows() != n_test ||
        t.wavelengths.size() != tm.bases[static_cast<std::size_t>(bi)].grid.size()) {
      throw DataError("score_model: truth for band '" +
                      tm.bases[static_cast<std::size_t>(bi)].band_name +
                      "' does not match the test design or the band grid");
    }
  }

  const int draws = tm.cfg.predict.draws;
  const int t_score =
      tm.cfg.predict.t_pred > 0 ? tm.cfg.predict.t_pred : tm.cfg.model.neighbors;

  MetricsReport rep;
  for (const auto& unit : tm.units) {
    rep.chains.push_back({unit.label, unit.accept_rate});
  }

  // Score-level truth: project the noise-free held-out curves onto the
  // fitted bases, exactly as the training responses were built.
  std::vector<Eigen::MatrixXd> z_truth(static_cast<std::size_t>(nb));
  for (int bi = 0; bi < nb; ++bi) {
    const auto& basis = tm.bases[static_cast<std::size_t>(bi)];
    z_truth[static_cast<std::size_t>(bi)] =
        truth_scores(truth[static_cast<std::size_t>(bi)], basis, basis.system.gram());
  }

  Eigen::MatrixXd s_test(n_test, tm.reduced_dim());
  for (int r = 0; r < n_test; ++r) {
    s_test.row(r) =
        tm.reduce(test_design.row(r).head(state_dim), test_design.row(r).tail(tm.geom_dim()));
  }

  // Score-level metrics from the posterior-mixture moments. The mixture is
  // summarized as a Gaussian via the law of total variance; with thousands
  // of retained draws and moderate dof the approximation error is well below
  // the Monte Carlo noise of the radiance-level sampling path.
  for (const auto& unit : tm.units) {
    const pipeline::UnitPredictor up(unit, t_score);
    Eigen::MatrixXd mu(n_test, unit.q());
    Eigen::MatrixXd var(n_test, unit.q());
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < n_test; ++r) {
      const pipeline::UnitPredictor::Moments mo = up.moments(s_test.row(r));
      mu.row(r) = mo.mean;
      var.row(r) = mo.var;
    }
    for (int c = 0; c < unit.q(); ++c) {
      const auto [bi, comp] = unit.targets[static_cast<std::size_t>(c)];
      const Eigen::VectorXd tr = z_truth[static_cast<std::size_t>(bi)].col(comp);
      ScoreMetrics sm;
      sm.band = tm.bases[static_cast<std::size_t>(bi)].band_name;
      sm.component = comp + 1;
      sm.rmspe = rmspe(mu.col(c), tr);
      const Eigen::VectorXd half = 1.959963984540054 * var.col(c).array().sqrt().matrix();
      sm.coverage95 = coverage_fraction(mu.col(c) - half, mu.col(c) + half, tr);
      double crps_sum = 0.0;
      for (int r = 0; r < n_test; ++r) {
        crps_sum += crps_gaussian(tr[r], mu(r, c), std::sqrt(var(r, c)));
      }
      sm.crps = crps_sum / n_test;
      rep.scores.push_back(sm);
    }
  }

  // Radiance-level metrics from full predictive soundings. CRPS is sampled
  // on every 8th wavelength: the grid is smooth, and the order-statistic
  // estimator over a hundred-plus channels per band already dominates
  // run-to-run noise.
  struct RunScore {
    std::vector<Eigen::VectorXd> sqerr;
    std::vector<int> inside;
    std::vector<double> crps_sum;
    std::vector<int> crps_cnt;
  };
  std::vector<RunScore> run_scores(static_cast<std::size_t>(n_test));
  for (int bi = 0; bi < nb; ++bi) tm.grid_eval(bi);  // warm the shared cache

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < n_test; ++r) {
    auto& rs = run_scores[static_cast<std::size_t>(r)];
    rs.sqerr.resize(static_cast<std::size_t>(nb));
    rs.inside.assign(static_cast<std::size_t>(nb), 0);
    rs.crps_sum.assign(static_cast<std::size_t>(nb), 0.0);
    rs.crps_cnt.assign(static_cast<std::size_t>(nb), 0);

    std::vector<double> col;
    const pipeline::DrawSink sink = [&](int bi, const Eigen::MatrixXd& curves) {
      const auto& tv = truth[static_cast<std::size_t>(bi)].values;
      col.resize(static_cast<std::size_t>(curves.rows()));
      for (int j = 0; j < curves.cols(); j += 8) {
        Eigen::VectorXd::Map(col.data(), curves.rows()) = curves.col(j);
        rs.crps_sum[static_cast<std::size_t>(bi)] += crps_empirical(col, tv(r, j));
        rs.crps_cnt[static_cast<std::size_t>(bi)] += 1;
      }
    };

    Rng rng_r = make_rng(tm.cfg.seed, "predict/draws/" + std::to_string(r));
    const std::vector<pipeline::SoundingBand> sounding = pipeline::emulate_sounding(
        tm, test_design.row(r).head(state_dim), test_design.row(r).tail(tm.geom_dim()), draws,
        rng_r, {}, sink);
    for (int bi = 0; bi < nb; ++bi) {
      const auto& sb = sounding[static_cast<std::size_t>(bi)];
      const auto& tv = truth[static_cast<std::size_t>(bi)].values;
      const int m = static_cast<int>(sb.mean.size());
      auto& se = rs.sqerr[static_cast<std::size_t>(bi)];
      se.resize(m);
      for (int j = 0; j < m; ++j) {
        const double d = sb.mean[j] - tv(r, j);
        se[j] = d * d;
        if (tv(r, j) >= sb.q025[j] && tv(r, j) <= sb.q975[j]) {
          rs.inside[static_cast<std::size_t>(bi)] += 1;
        }
      }
    }
  }

  for (int bi = 0; bi < nb; ++bi) {
    const auto& grid = tm.bases[static_cast<std::size_t>(bi)].grid;
    const int m = static_cast<int>(grid.size());
    Eigen::VectorXd se_sum = Eigen::VectorXd::Zero(m);
    long inside = 0;
    double crps_sum = 0.0;
    long crps_cnt = 0;
    for (const auto& rs : run_scores) {
      se_sum += rs.sqerr[static_cast<std::size_t>(bi)];
      inside += rs.inside[static_cast<std::size_t>(bi)];
      crps_sum += rs.crps_sum[static_cast<std::size_t>(bi)];
      crps_cnt += rs.crps_cnt[static_cast<std::size_t>(bi)];
    }
    BandMetrics bm;
    bm.band = tm.bases[static_cast<std::size_t>(bi)].band_name;
    bm.rmspe = std::sqrt(se_sum.sum() / (double(m) * n_test));
    bm.coverage95 = double(inside) / (double(m) * n_test);
    bm.mean_crps = crps_sum / double(crps_cnt);
    rep.bands.push_back(bm);
    for (int j = 0; j < m; ++j) {
      rep.pointwise.push_back({bm.band, grid[j], std::sqrt(se_sum[j] / n_test)});
    }
  }
  return rep;
}

MetricsReport cross_validate(const SyntheticForward& fwd, const CrossValConfig& cfg) {
  if (cfg.n_train < 8 || cfg.n_test < 1) {
    throw ConfigError("cross_validate: need at least 8 training and 1 test runs");
  }
  if (cfg.missing_fraction < 0.0 || cfg.missing_fraction >= 1.0) {
    throw ConfigError("cross_validate: missing_fraction must lie in [0, 1)");
  }
  const auto t0 = std::chrono::steady_clock::now();

  const int state_dim = fwd.spec().state_dim;
  const int geom_dim = fwd.spec().geom_dim;
  const int nb = static_cast<int>(fwd.band_names().size());

  // Separate substreams per role so, e.g., turning missingness on does not
  // shift the sampled states of either split.
  Rng rng_train = make_rng(cfg.seed, "ensemble/train");
  Rng rng_test = make_rng(cfg.seed, "ensemble/test");
  Rng rng_miss = make_rng(cfg.seed, "ensemble/missing");

  pipeline::TrainInputs in;
  in.design.resize(cfg.n_train, state_dim + geom_dim);
  in.state_dim = state_dim;
  in.state_prior_mean = fwd.state_mean();
  in.state_prior_sd = fwd.state_sd();
  for (int i = 0; i < cfg.n_train; ++i) {
    in.design.row(i).head(state_dim) = fwd.sample_state(rng_train);
    in.design.row(i).tail(geom_dim) = fwd.sample_geometry(rng_train);
  }

  // Training curves are the noise-free simulator output: the emulator
  // approximates a deterministic code, noise enters only the misfit weights.
  int total_m = 0;
  in.bands.resize(static_cast<std::size_t>(nb));
  for (int bi = 0; bi < nb; ++bi) {
    auto& band = in.bands[static_cast<std::size_t>(bi)];
    band.name = fwd.band_names()[static_cast<std::size_t>(bi)];
    band.noise_sd = fwd.noise_sd(bi);
    band.spectra.wavelengths = fwd.wavelengths(bi);
    const int m = static_cast<int>(band.spectra.wavelengths.size());
    band.spectra.values.resize(cfg.n_train, m);
    for (int i = 0; i < cfg.n_train; ++i) {
      band.spectra.values.row(i) =
          fwd.radiance(bi, in.design.row(i).head(state_dim), in.design.row(i).tail(geom_dim));
    }
    total_m += m;
  }
  if (cfg.missing_fraction > 0.0) {
    std::bernoulli_distribution drop(cfg.missing_fraction);
    for (int i = 0; i < cfg.n_train; ++i) {
      for (auto& band : in.bands) {
        for (int j = 0; j < band.spectra.values.cols(); ++j) {
          if (drop(rng_miss)) {
            band.spectra.values(i, j) = std::numeric_limits<double>::quiet_NaN();
          }
        }
      }
    }
  }

  Eigen::MatrixXd test_design(cfg.n_test, state_dim + geom_dim);
  std::vector<io::SpectraFile> test_truth(static_cast<std::size_t>(nb));
  for (int bi = 0; bi < nb; ++bi) {
    test_truth[static_cast<std::size_t>(bi)].wavelengths = fwd.wavelengths(bi);
    test_truth[static_cast<std::size_t>(bi)].values.resize(cfg.n_test,
                                                           fwd.wavelengths(bi).size());
  }
  for (int r = 0; r < cfg.n_test; ++r) {
    test_design.row(r).head(state_dim) = fwd.sample_state(rng_test);
    test_design.row(r).tail(geom_dim) = fwd.sample_geometry(rng_test);
    for (int bi = 0; bi < nb; ++bi) {
      test_truth[static_cast<std::size_t>(bi)].values.row(r) = fwd.radiance(
          bi, test_design.row(r).head(state_dim), test_design.row(r).tail(geom_dim));
    }
  }

  // Misfit gradients streamed one Jacobian at a time; holding every m x d
  // Jacobian of a 2000-run ensemble would cost gigabytes for no benefit.
  {
    const int ng = std::min(cfg.n_train, 1000);
    subspace::StateStandardizer std_x;
    std_x.mu = fwd.state_mean();
    std_x.sd = fwd.state_sd();

    Eigen::VectorXd noise_var(total_m);
    Eigen::VectorXd y_ref(total_m);
    {
      int at = 0;
      for (const auto& band : in.bands) {
        const int m = static_cast<int>(band.spectra.wavelengths.size());
        noise_var.segment(at, m).setConstant(band.noise_sd * band.noise_sd);
        for (int j = 0; j < m; ++j) {
          double sum = 0.0;
          int cnt = 0;
          for (int i = 0; i < cfg.n_train; ++i) {
            const double v = band.spectra.values(i, j);
            if (std::isnan(v)) continue;
            sum += v;
            ++cnt;
          }
          y_ref[at + j] = cnt > 0 ? sum / cnt : std::numeric_limits<double>::quiet_NaN();
        }
        at += m;
      }
    }

    in.gradients.resize(state_dim, ng);
    Eigen::MatrixXd jac(total_m, state_dim);
    Eigen::VectorXd fx(total_m);
#pragma omp parallel for schedule(static) firstprivate(jac, fx)
    for (int k = 0; k < ng; ++k) {
      const Eigen::VectorXd x = in.design.row(k).head(state_dim);
      const Eigen::VectorXd b = in.design.row(k).tail(geom_dim);
      int at = 0;
      for (int bi = 0; bi < nb; ++bi) {
        const int m = static_cast<int>(fwd.wavelengths(bi).size());
        jac.middleRows(at, m) = fwd.jacobian(bi, x, b);
        fx.segment(at, m) = fwd.radiance(bi, x, b);
        at += m;
      }
      in.gradients.col(k) = subspace::misfit_gradient(jac, std_x, noise_var, y_ref, fx);
    }
  }

  config::Config full;
  full.synth.n_train = cfg.n_train;
  full.synth.n_test = cfg.n_test;
  full.synth.missing_fraction = cfg.missing_fraction;
  full.fda.num_basis = cfg.num_basis;
  full.fda.threshold = cfg.fpca_threshold;
  full.subspace.method = "gradient";
  full.subspace.rule = "gap";
  full.model.neighbors = cfg.neighbors;
  full.mcmc.iterations = cfg.iterations;
  full.mcmc.burn_in = cfg.burn_in;
  full.mcmc.retained = cfg.retained;
  full.predict.draws = cfg.retained;
  full.seed = cfg.seed;

  pipeline::TrainedModel tm = pipeline::train(in, full);

  const auto t_pred0 = std::chrono::steady_clock::now();
  MetricsReport rep = score_model(tm, test_design, test_truth);
  rep.train_seconds = tm.train_seconds;

  // Neighbor-conditioned vs dense all-predecessor prediction on a reduced
  // training subset, both at the unit's posterior-median hyperparameters.
  if (cfg.dense_check_n > 0) {
    const int ns = std::min(cfg.dense_check_n, cfg.n_train);
    Eigen::MatrixXd s_test(cfg.n_test, tm.reduced_dim());
    for (int r = 0; r < cfg.n_test; ++r) {
      s_test.row(r) =
          tm.reduce(test_design.row(r).head(state_dim), test_design.row(r).tail(geom_dim));
    }
    for (const auto& unit : tm.units) {
      const Eigen::MatrixXd s_sub = tm.s_red.topRows(ns);
      const Eigen::MatrixXd z_sub = unit.model->responses().topRows(ns);
      const int rd = tm.reduced_dim();

      Eigen::VectorXd med(rd + 1);
      for (int j = 0; j <= rd; ++j) med[j] = column_median(unit.samples.col(j));
      const Eigen::VectorXd ranges = med.head(rd);
      const double tau2 = med[rd];

      const auto trend = unit.model->trend_type();
      emulator::NNGPModel sub(s_sub, z_sub, trend, cfg.neighbors,
                              kernels::family_from_string(full.kernel.family), full.kernel.nu,
                              full.kernel.alpha);
      const emulator::Predictor nn(sub, ranges, tau2, sub.gls(ranges, tau2), cfg.neighbors);
      const emulator::Predictor dense(
          sub, ranges, tau2, dense_gls(s_sub, z_sub, trend, sub.spec_with(ranges, tau2)), ns);

      Eigen::MatrixXd mu_nn(cfg.n_test, unit.q());
      Eigen::MatrixXd mu_dense(cfg.n_test, unit.q());
#pragma omp parallel for schedule(dynamic)
      for (int r = 0; r < cfg.n_test; ++r) {
        mu_nn.row(r) = nn.at(s_test.row(r)).mean;
        mu_dense.row(r) = dense.at(s_test.row(r)).mean;
      }
      for (int c = 0; c < unit.q(); ++c) {
        const auto [bi, comp] = unit.targets[static_cast<std::size_t>(c)];
        WeightComparison wc;
        wc.band = tm.bases[static_cast<std::size_t>(bi)].band_name;
        wc.component = comp + 1;
        const auto& basis = tm.bases[static_cast<std::size_t>(bi)];
        const Eigen::VectorXd tr =
            truth_scores(test_truth[static_cast<std::size_t>(bi)], basis, basis.system.gram())
                .col(comp);
        wc.rmspe_nn = rmspe(mu_nn.col(c), tr);
        wc.rmspe_dense = rmspe(mu_dense.col(c), tr);
        wc.rel_gap = std::abs(wc.rmspe_nn - wc.rmspe_dense) / wc.rmspe_dense;
        rep.weight_comparisons.push_back(wc);
      }
    }
  }

  rep.predict_seconds = seconds_since(t_pred0);
  rep.total_seconds = seconds_since(t0);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  rep.hardware_threads = static_cast<int>(hw);
  // The reference envelope is 30 wall-clock minutes on four cores; fewer
  // cores stretch it proportionally.
  rep.budget_seconds = 1800.0 * 4.0 / double(std::min(4u, hw));

  log_info("cross_validate: " + std::to_string(cfg.n_train) + " train / " +
           std::to_string(cfg.n_test) + " test done in " +
           std::to_string(rep.total_seconds) + " s");
  return rep;
}

}  // namespace specemu::bench
