// Acceptance gate: one self-contained check per criterion, each printing a
// [PASS]/[FAIL] line with its measured quantities and pinned tolerances.
// Usage: acceptance [N ...] runs the given criteria (default: all).
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "specemu/bench.hpp"
#include "specemu/cli.hpp"
#include "specemu/emulator.hpp"
#include "specemu/fda.hpp"
#include "specemu/inference.hpp"
#include "specemu/io.hpp"
#include "specemu/kernels.hpp"
#include "specemu/pipeline.hpp"
#include "specemu/rng.hpp"
#include "specemu/subspace.hpp"
#include "support/dense_gp.hpp"
#include "support/quad.hpp"

using namespace specemu;
namespace fs = std::filesystem;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd uniform_matrix(int rows, int cols, Rng& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd diff = a * a.transpose() - b * b.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diff);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"specemu"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> argv;
  argv.reserve(full.size());
  for (auto& a : full) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

// ---------------------------------------------------------------- criterion 1

// Nearest-neighbor process with full conditioning reproduces a dense GP:
// integrated log posterior and Student-t predictions against an independent
// dense oracle, within 1e-6 relative, in under 30 seconds.
bool criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr double kRelTol = 1e-6;
  constexpr double kBudget = 30.0;

  const int n = 200;
  const int d = 8;
  Rng rng = make_rng(20260818, "acceptance/1");
  const Eigen::MatrixXd s = uniform_matrix(n, d, rng);
  Eigen::MatrixXd z(n, 1);
  for (int i = 0; i < n; ++i) {
    z(i, 0) = 4.0 + std::sin(2.0 * s.row(i).sum()) + 0.5 * s(i, 0) * s(i, 0);
  }
  Eigen::VectorXd ranges(d);
  {
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (int j = 0; j < d; ++j) ranges[j] = u(rng);
  }
  const double tau2 = 1e-2;

  emulator::NNGPModel model(s, z, emulator::Trend::Constant, n - 1,
                            kernels::Family::Matern, 2.5, 1.0);
  Eigen::VectorXd params(d + 1);
  params.head(d) = ranges;
  params[d] = tau2;
  const double got_post = model.log_marginal(ranges, tau2) + inference::log_prior(params);

  const testsupport::DenseGp oracle(s, z, Eigen::MatrixXd::Ones(n, 1), ranges, tau2,
                                    testsupport::matern25);
  const double want_post = oracle.log_marginal() + testsupport::half_cauchy_log_prior(params);
  const double post_rel = std::abs(got_post - want_post) / std::abs(want_post);

  emulator::Predictor pred(model, ranges, tau2, model.gls(ranges, tau2), n);
  double mean_rel = 0.0;
  double scale_rel = 0.0;
  const Eigen::MatrixXd queries = uniform_matrix(20, d, rng);
  for (int k = 0; k < queries.rows(); ++k) {
    const Eigen::VectorXd q = queries.row(k);
    const emulator::PredictiveT p = pred.at(q);
    const testsupport::DensePrediction o = oracle.predict(q, Eigen::VectorXd::Ones(1));
    mean_rel = std::max(mean_rel, std::abs(p.mean[0] - o.mean[0]) / std::abs(o.mean[0]));
    scale_rel = std::max(scale_rel, std::abs(p.scale[0] - o.scale[0]) / o.scale[0]);
  }

  const double elapsed = seconds_since(t0);
  const bool ok =
      post_rel < kRelTol && mean_rel < kRelTol && scale_rel < kRelTol && elapsed < kBudget;
  std::printf(
      "[%s] criterion 1: full-conditioning process matches the dense oracle "
      "(log-posterior rel %.3e, mean rel %.3e, scale rel %.3e, tol %.0e; %.1f s, budget %.0f s)\n",
      ok ? "PASS" : "FAIL", post_rel, mean_rel, scale_rel, kRelTol, elapsed, kBudget);
  return ok;
}

// ---------------------------------------------------------------- criterion 2

// A separable multi-output fit and the per-column independent fits at the
// same kernel produce identical predictive means and scale diagonals.
bool criterion_2() {
  constexpr double kTol = 1e-8;
  const int n = 100;
  const int d = 3;
  const int q = 3;
  Rng rng = make_rng(20260818, "acceptance/2");
  const Eigen::MatrixXd s = uniform_matrix(n, d, rng, -1.0, 1.0);
  Eigen::MatrixXd z(n, q);
  for (int i = 0; i < n; ++i) {
    const double base = std::sin(1.7 * s.row(i).sum());
    for (int j = 0; j < q; ++j) {
      z(i, j) = (j + 1.0) * base + std::cos(s(i, 0) * (j + 2.0)) + 2.0;
    }
  }

  kernels::KernelSpec spec;
  spec.family = kernels::Family::Matern;
  spec.nu = 2.5;
  spec.ranges = Eigen::VectorXd::Constant(d, 0.9);
  spec.nugget = 1e-3;

  const Eigen::MatrixXd queries = uniform_matrix(10, d, rng, -1.0, 1.0);
  const emulator::EquivalenceReport rep = emulator::ind_sep_equivalence(
      s, z, emulator::Trend::Constant, 25, spec, queries, 30);

  const bool ok = rep.max_mean_delta < kTol && rep.max_scale_delta < kTol;
  std::printf(
      "[%s] criterion 2: separable and independent predictors coincide "
      "(max mean delta %.3e, max scale delta %.3e, tol %.0e)\n",
      ok ? "PASS" : "FAIL", rep.max_mean_delta, rep.max_scale_delta, kTol);
  return ok;
}

// ---------------------------------------------------------------- criterion 3

// Monte Carlo misfit gradients over the synthetic forward model recover the
// planted four-dimensional ridge exactly.
bool criterion_3() {
  constexpr double kDistTol = 1e-8;
  constexpr double kEigenRatio = 1e-10;
  const int num_grads = 1000;

  const bench::SyntheticForward fwd;
  const int state_dim = fwd.spec().state_dim;

  subspace::StateStandardizer std_x;
  std_x.mu = fwd.state_mean();
  std_x.sd = fwd.state_sd();

  // fixed reference sounding: the forward model at the prior mean state
  int total_m = 0;
  for (int b = 0; b < bench::SyntheticForward::kBands; ++b) {
    total_m += static_cast<int>(fwd.wavelengths(b).size());
  }
  const Eigen::VectorXd geom_ref = Eigen::VectorXd::Zero(fwd.spec().geom_dim);
  Eigen::VectorXd y_ref(total_m);
  Eigen::VectorXd noise_var(total_m);
  {
    int at = 0;
    for (int b = 0; b < bench::SyntheticForward::kBands; ++b) {
      const int m = static_cast<int>(fwd.wavelengths(b).size());
      y_ref.segment(at, m) = fwd.radiance(b, std_x.mu, geom_ref);
      noise_var.segment(at, m).setConstant(fwd.noise_sd(b) * fwd.noise_sd(b));
      at += m;
    }
  }

  Rng rng = make_rng(20260818, "acceptance/3");
  Eigen::MatrixXd grads(state_dim, num_grads);
  Eigen::MatrixXd jac(total_m, state_dim);
  Eigen::VectorXd fx(total_m);
  for (int r = 0; r < num_grads; ++r) {
    const Eigen::VectorXd x = fwd.sample_state(rng);
    const Eigen::VectorXd geom = fwd.sample_geometry(rng);
    int at = 0;
    for (int b = 0; b < bench::SyntheticForward::kBands; ++b) {
      const int m = static_cast<int>(fwd.wavelengths(b).size());
      jac.middleRows(at, m) = fwd.jacobian(b, x, geom);
      fx.segment(at, m) = fwd.radiance(b, x, geom);
      at += m;
    }
    grads.col(r) = subspace::misfit_gradient(jac, std_x, noise_var, y_ref, fx);
  }

  const subspace::ActiveSubspace sub =
      subspace::active_subspace(grads, subspace::DimensionRule::Fixed, 4, 0.95);
  const double dist = subspace_distance(sub.basis(), fwd.projection());
  const double ratio = sub.eigenvalues[4] / sub.eigenvalues[0];

  const bool ok = dist < kDistTol && ratio < kEigenRatio;
  std::printf(
      "[%s] criterion 3: planted ridge recovered from %d gradients "
      "(subspace distance %.3e, tol %.0e; eigenvalue 5/1 ratio %.3e, tol %.0e)\n",
      ok ? "PASS" : "FAIL", num_grads, dist, kDistTol, ratio, kEigenRatio);
  return ok;
}

// ---------------------------------------------------------------- criterion 4

// Functional decomposition of a three-mode curve ensemble with 20% missing
// channels: component selection, rank-3 reconstruction, score variances.
bool criterion_4() {
  constexpr double kReconTol = 0.01;
  constexpr double kVarTol = 0.02;
  const int n = 2000;
  const int m = 300;
  const int g = 40;

  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(m, 0.0, 1.0);
  Eigen::MatrixXd modes(m, 3);
  Eigen::VectorXd mu(m);
  const double pi = std::acos(-1.0);
  for (int j = 0; j < m; ++j) {
    const double w = grid[j];
    mu[j] = 2.0 + 0.5 * std::sin(2.0 * pi * w);
    modes(j, 0) = std::sin(3.0 * pi * w);
    modes(j, 1) = std::cos(5.0 * pi * w);
    modes(j, 2) = std::sin(8.0 * pi * w) * (0.5 + w);
  }

  Rng rng = make_rng(20260818, "acceptance/4");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd planted(n, 3);
  const double sds[3] = {3.0, 2.0, 1.0};
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < 3; ++l) planted(i, l) = sds[l] * gauss(rng);
  }
  const Eigen::MatrixXd truth =
      (planted * modes.transpose()).rowwise() + mu.transpose();

  fda::SpectralCurveSet curves;
  curves.band_name = "threemode";
  curves.wavelengths = grid;
  curves.values = truth;
  std::bernoulli_distribution drop(0.2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (drop(rng)) curves.values(i, j) = std::numeric_limits<double>::quiet_NaN();
    }
  }

  const auto sys = fda::BSplineSystem::equidistant(0.0, 1.0, g, 3);
  const Eigen::MatrixXd gram = sys.gram();
  const Eigen::MatrixXd coefs = fda::fit_curves(curves, sys);
  const Eigen::VectorXd mean_c = fda::mean_function(curves, sys, 1e-8);
  const Eigen::MatrixXd centered = coefs.rowwise() - mean_c.transpose();

  const fda::FpcaResult res = fda::fpca(centered, gram);
  const int ncomp = fda::select_ncomp(res.eigenvalues, 0.99);

  const Eigen::MatrixXd scores = fda::scores(centered, gram, res.components, 3);
  fda::FunctionalBasis basis;
  basis.system = sys;
  basis.band_name = curves.band_name;
  basis.grid = grid;
  basis.mean_coefs = mean_c;
  basis.components = res.components.leftCols(3);
  basis.eigenvalues = res.eigenvalues;
  basis.log_scale = false;
  const fda::GridEval ge = fda::eval_on_grid(basis, grid);

  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd recon = ge.mean + ge.components * scores.row(i).transpose();
    num += (recon - truth.row(i).transpose()).squaredNorm();
    den += truth.row(i).squaredNorm();
  }
  const double recon_rel = std::sqrt(num / den);

  double max_var_rel = 0.0;
  for (int l = 0; l < 3; ++l) {
    const double var = scores.col(l).squaredNorm() / double(n);
    max_var_rel =
        std::max(max_var_rel, std::abs(var - res.eigenvalues[l]) / res.eigenvalues[l]);
  }

  const bool ok = ncomp == 3 && recon_rel < kReconTol && max_var_rel < kVarTol;
  std::printf(
      "[%s] criterion 4: three-mode ensemble with 20%% missing "
      "(selected %d components, want 3; reconstruction rel L2 %.4f, tol %.2f; "
      "max score-variance rel error %.3e, tol %.2f)\n",
      ok ? "PASS" : "FAIL", ncomp, recon_rel, kReconTol, max_var_rel, kVarTol);
  return ok;
}

// ---------------------------------------------------------------- criterion 5

// End-to-end calibration on the synthetic pipeline at full scale: interval
// coverage, neighbor-conditioning fidelity against a dense sub-problem, and
// the wall-clock budget.
bool criterion_5() {
  constexpr double kCovLo = 0.90;
  constexpr double kCovHi = 0.98;
  constexpr double kGapTol = 0.10;

  const bench::SyntheticForward fwd;
  bench::CrossValConfig cfg;  // n 2000/200, t 20, chain 3500/500/3000, dense n 500
  const bench::MetricsReport rep = bench::cross_validate(fwd, cfg);

  bool cov_ok = true;
  for (const auto& b : rep.bands) {
    std::printf("    band %-5s rmspe %.5f  coverage95 %.3f  crps %.5f\n", b.band.c_str(),
                b.rmspe, b.coverage95, b.mean_crps);
    cov_ok = cov_ok && b.coverage95 >= kCovLo && b.coverage95 <= kCovHi;
  }
  bool gap_ok = true;
  double max_gap = 0.0;
  for (const auto& w : rep.weight_comparisons) {
    std::printf("    dense check %-5s pc%d  nn %.5f  dense %.5f  gap %.4f\n", w.band.c_str(),
                w.component, w.rmspe_nn, w.rmspe_dense, w.rel_gap);
    max_gap = std::max(max_gap, w.rel_gap);
    gap_ok = gap_ok && w.rel_gap <= kGapTol;
  }
  const bool has_rows = !rep.bands.empty() && !rep.weight_comparisons.empty();
  const bool time_ok = rep.total_seconds < rep.budget_seconds;

  const bool ok = has_rows && cov_ok && gap_ok && time_ok;
  std::printf(
      "[%s] criterion 5: end-to-end calibration "
      "(coverage in [%.2f, %.2f]: %s; neighbor-vs-dense max gap %.4f, tol %.2f; "
      "%.0f s of %.0f s budget on %d threads)\n",
      ok ? "PASS" : "FAIL", kCovLo, kCovHi, cov_ok ? "yes" : "no", max_gap, kGapTol,
      rep.total_seconds, rep.budget_seconds, rep.hardware_threads);
  return ok;
}

// ---------------------------------------------------------------- criterion 6

// Pointwise identities: closed-form Matern against the Bessel oracle, spline
// partition of unity, and Gaussian CRPS against quadrature.
bool criterion_6() {
  constexpr double kMaternTol = 1e-12;
  constexpr double kUnityTol = 1e-12;
  constexpr double kCrpsTol = 1e-6;

  double matern_err = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double d = 20.0 * i / 4000.0;
    matern_err = std::max(matern_err,
                          std::abs(kernels::matern(d, 2.5) - testsupport::matern_bessel(d, 2.5)));
  }

  const auto sys = fda::BSplineSystem::equidistant(0.0, 1.0, 30, 3);
  double unity_err = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double x = double(i) / 4000.0;
    unity_err = std::max(unity_err, std::abs(sys.eval_all(x).sum() - 1.0));
  }

  const auto integrand = [](double x) {
    const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    const double step = x >= 0.0 ? 1.0 : 0.0;
    return (cdf - step) * (cdf - step);
  };
  const double want_crps = testsupport::integrate(integrand, -14.0, 0.0, 1e-10) +
                           testsupport::integrate(integrand, 0.0, 14.0, 1e-10);
  const double crps_err = std::abs(bench::crps_gaussian(0.0, 0.0, 1.0) - want_crps);

  const bool ok = matern_err < kMaternTol && unity_err < kUnityTol && crps_err < kCrpsTol;
  std::printf(
      "[%s] criterion 6: kernel and scoring identities "
      "(matern vs Bessel %.3e, tol %.0e; partition of unity %.3e, tol %.0e; "
      "CRPS vs quadrature %.3e, tol %.0e)\n",
      ok ? "PASS" : "FAIL", matern_err, kMaternTol, unity_err, kUnityTol, crps_err, kCrpsTol);
  return ok;
}

// ---------------------------------------------------------------- criterion 7

// Training twice from the same seed and configuration produces byte-identical
// checkpoints and sample files.
bool criterion_7() {
  const fs::path root = fs::temp_directory_path() / "specemu_acceptance_7";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string data = (root / "data").string();

  const std::vector<std::string> tiny = {
      "--set", "synth.n_train=24",   "--set", "synth.num_jacobians=24",
      "--set", "mcmc.iterations=200", "--set", "mcmc.burn_in=50",
      "--set", "mcmc.retained=150",  "--set", "model.neighbors=6",
      "--set", "fda.num_basis=40",
  };

  std::vector<std::string> synth = {"synth", "--out", data, "--seed", "31415"};
  synth.insert(synth.end(), tiny.begin(), tiny.end());
  if (run_cli(synth) != 0) {
    std::printf("[FAIL] criterion 7: ensemble generation failed\n");
    return false;
  }

  for (const char* tag : {"one", "two"}) {
    std::vector<std::string> train = {"train", "--data", data, "--out", (root / tag).string(),
                                      "--seed", "31415"};
    train.insert(train.end(), tiny.begin(), tiny.end());
    if (run_cli(train) != 0) {
      std::printf("[FAIL] criterion 7: training run '%s' failed\n", tag);
      return false;
    }
  }

  std::vector<std::string> mismatched;
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(root / "one")) {
    const std::string name = entry.path().filename().string();
    const bool relevant = name == "model.json" || name == "arrays.bin" ||
                          name.rfind("samples_", 0) == 0 || name.rfind("trace_", 0) == 0;
    if (!relevant) continue;
    ++compared;
    const std::string a = io::read_text_file(entry.path().string());
    const std::string b = io::read_text_file((root / "two" / name).string());
    if (a != b) mismatched.push_back(name);
  }

  const bool ok = compared >= 4 && mismatched.empty();
  std::printf(
      "[%s] criterion 7: repeated training is byte-identical "
      "(%zu files compared, %zu mismatched)\n",
      ok ? "PASS" : "FAIL", compared, mismatched.size());
  for (const auto& name : mismatched) std::printf("    differs: %s\n", name.c_str());
  fs::remove_all(root);
  return ok;
}

// ---------------------------------------------------------------- criterion 8

// Chain health: post burn-in per-parameter acceptance rates on an end-to-end
// training run sit in [0.15, 0.5], and a prior-only chain reproduces the
// half-Cauchy quantile function within 2%.
bool criterion_8() {
  constexpr double kRateLo = 0.15;
  constexpr double kRateHi = 0.5;
  constexpr double kQuantTol = 0.02;

  // end-to-end training at the standard chain length on a reduced ensemble
  const bench::SyntheticForward fwd;
  const int n = 260;
  const int state_dim = fwd.spec().state_dim;
  const int geom_dim = fwd.spec().geom_dim;

  Rng rng = make_rng(20260818, "acceptance/8");
  pipeline::TrainInputs in;
  in.state_dim = state_dim;
  in.state_prior_mean = fwd.state_mean();
  in.state_prior_sd = fwd.state_sd();
  in.design.resize(n, state_dim + geom_dim);
  for (int i = 0; i < n; ++i) {
    in.design.row(i).head(state_dim) = fwd.sample_state(rng);
    in.design.row(i).tail(geom_dim) = fwd.sample_geometry(rng);
  }

  int total_m = 0;
  for (int b = 0; b < bench::SyntheticForward::kBands; ++b) {
    pipeline::BandData bd;
    bd.name = fwd.band_names()[static_cast<std::size_t>(b)];
    bd.noise_sd = fwd.noise_sd(b);
    bd.spectra.wavelengths = fwd.wavelengths(b);
    bd.spectra.values.resize(n, bd.spectra.wavelengths.size());
    for (int i = 0; i < n; ++i) {
      bd.spectra.values.row(i) =
          fwd.radiance(b, in.design.row(i).head(state_dim), in.design.row(i).tail(geom_dim));
    }
    total_m += static_cast<int>(bd.spectra.wavelengths.size());
    in.bands.push_back(std::move(bd));
  }

  // stream misfit gradients against the ensemble-mean sounding
  {
    subspace::StateStandardizer std_x;
    std_x.mu = in.state_prior_mean;
    std_x.sd = in.state_prior_sd;
    Eigen::VectorXd y_ref(total_m);
    Eigen::VectorXd noise_var(total_m);
    int at = 0;
    for (const auto& bd : in.bands) {
      const int m = static_cast<int>(bd.spectra.wavelengths.size());
      y_ref.segment(at, m) = bd.spectra.values.colwise().mean();
      noise_var.segment(at, m).setConstant(bd.noise_sd * bd.noise_sd);
      at += m;
    }
    in.gradients.resize(state_dim, n);
    Eigen::MatrixXd jac(total_m, state_dim);
    Eigen::VectorXd fx(total_m);
    for (int r = 0; r < n; ++r) {
      at = 0;
      for (int b = 0; b < bench::SyntheticForward::kBands; ++b) {
        const int m = static_cast<int>(fwd.wavelengths(b).size());
        jac.middleRows(at, m) =
            fwd.jacobian(b, in.design.row(r).head(state_dim), in.design.row(r).tail(geom_dim));
        fx.segment(at, m) = in.bands[static_cast<std::size_t>(b)].spectra.values.row(r);
        at += m;
      }
      in.gradients.col(r) = subspace::misfit_gradient(jac, std_x, noise_var, y_ref, fx);
    }
  }

  config::Config cfg;
  cfg.subspace.rule = "gap";
  cfg.seed = 20260818;
  const pipeline::TrainedModel tm = pipeline::train(in, cfg);

  bool rates_ok = true;
  double rate_min = 1.0;
  double rate_max = 0.0;
  for (const auto& unit : tm.units) {
    for (int j = 0; j < unit.accept_rate.size(); ++j) {
      const double rate = unit.accept_rate[j];
      rate_min = std::min(rate_min, rate);
      rate_max = std::max(rate_max, rate);
      if (rate < kRateLo || rate > kRateHi) {
        rates_ok = false;
        std::printf("    out of range: %s parameter %d rate %.3f\n", unit.label.c_str(), j,
                    rate);
      }
    }
  }

  // prior-only chain against the half-Cauchy quantile function
  inference::ChainConfig ccfg;
  ccfg.iterations = 26000;
  ccfg.burn_in = 2000;
  ccfg.retained = 24000;
  Rng prior_rng = make_rng(20260818, "acceptance/8/prior");
  const inference::ChainResult res = inference::run_chain(
      [](const Eigen::VectorXd& x) { return inference::log_prior(x); },
      Eigen::VectorXd::Ones(1), ccfg, prior_rng);

  std::vector<double> draws(res.samples.data(), res.samples.data() + res.samples.rows());
  std::sort(draws.begin(), draws.end());
  const double pi = std::acos(-1.0);
  bool quant_ok = true;
  double quant_worst = 0.0;
  for (double q : {0.25, 0.5, 0.75}) {
    const double want = std::tan(q * pi / 2.0);
    const double pos = q * (double(draws.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double got = draws[lo] + (pos - double(lo)) * (draws[lo + 1] - draws[lo]);
    const double rel = std::abs(got - want) / want;
    quant_worst = std::max(quant_worst, rel);
    quant_ok = quant_ok && rel < kQuantTol;
  }

  const bool ok = rates_ok && quant_ok && !tm.units.empty();
  std::printf(
      "[%s] criterion 8: chain health "
      "(%zu units, acceptance range [%.3f, %.3f], want [%.2f, %.2f]; "
      "prior-only quantile rel error %.4f, tol %.2f)\n",
      ok ? "PASS" : "FAIL", tm.units.size(), rate_min, rate_max, kRateLo, kRateHi, quant_worst,
      kQuantTol);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8};

  int failures = 0;
  for (int crit : which) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    switch (crit) {
      case 1: ok = criterion_1(); break;
      case 2: ok = criterion_2(); break;
      case 3: ok = criterion_3(); break;
      case 4: ok = criterion_4(); break;
      case 5: ok = criterion_5(); break;
      case 6: ok = criterion_6(); break;
      case 7: ok = criterion_7(); break;
      case 8: ok = criterion_8(); break;
      default:
        std::printf("[FAIL] unknown criterion %d\n", crit);
        break;
    }
    std::printf("    criterion %d finished in %.1f s\n", crit, seconds_since(t0));
    if (!ok) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
