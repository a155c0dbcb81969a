/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "specemu/bench.hpp"
#include "specemu/cli.hpp"
#include "specemu/errors.hpp"
#include "specemu/io.hpp"
#include "specemu/log.hpp"
#include "specemu/nngp.hpp"
#include "specemu/pipeline.hpp"

namespace specemu {
namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out = ".";
  std::string data = ".";
  std::string model;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool threads_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON configuration file");
  cmd->add_option("--set", args.overrides, "override as path.to.key=value, repeatable");
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--seed", args.seed, "root seed, overrides the configuration")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads, "worker thread count")
      ->each([&args](const std::string&) { args.threads_set = true; });
}

void apply_threads(const CommonArgs& args) {
  int threads = 0;
  if (args.threads_set) {
    threads = args.threads;
  } else if (const char* env = std::getenv("SPECEMU_THREADS")) {
    const std::string s(env);
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) {
          return std::isdigit(c) != 0;
        })) {
      throw ConfigError("SPECEMU_THREADS must be a positive integer, got '" + s + "'");
    }
    threads = std::stoi(s);
  } else {
    return;
  }
  if (threads < 1) throw ConfigError("thread count must be positive");
#ifdef _OPENMP
  omp_set_num_threads(threads);
#else
  if (threads != 1) log_warn("built without OpenMP, thread request ignored");
#endif
}

config::Config resolve_config(const CommonArgs& args) {
  config::Config cfg = config::Config::load(args.config_path, args.overrides);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());
}

std::string jac_name(int runid) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "jac_%06d.csv", runid);
  return buf;
}

std::string sanitize_label(std::string label) {
  std::replace(label.begin(), label.end(), '/', '_');
  return label;
}

//! Ordered band registry: name and grid length per band, training order.
std::vector<std::pair<std::string, int>> read_bands_csv(const std::string& path) {
  const std::string text = io::read_text_file(path);
  std::vector<std::pair<std::string, int>> bands;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "band,points") {
        throw DataError("bands file '" + path + "': expected header 'band,points'");
      }
      continue;
    }
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos || comma == 0) {
      throw DataError("bands file '" + path + "': malformed line " + std::to_string(lineno));
    }
    try {
      bands.emplace_back(line.substr(0, comma), std::stoi(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw DataError("bands file '" + path + "': bad point count on line " +
                      std::to_string(lineno));
    }
  }
  if (bands.empty()) throw DataError("bands file '" + path + "' lists no bands");
  return bands;
}

/*!
* Assemble training inputs from the documented artifact layout: design.csv,
* bands.csv, spectra_<band>.csv, and optionally state_prior.csv, noise.csv
* (stacked per-channel variances), y_obs.csv, and jac_<runid>.csv files.
* The state dimension comes from the prior file when present, else from the
* Jacobian column count.
*/
pipeline::TrainInputs load_inputs(const std::string& data, bool want_jacobians) {
  pipeline::TrainInputs in;
  in.design = io::read_matrix_csv(data + "/design.csv");

  const auto bands = read_bands_csv(data + "/bands.csv");
  int total_m = 0;
  for (const auto& [name, points] : bands) {
    pipeline::BandData bd;
    bd.name = name;
    bd.spectra = io::read_spectra_csv(data + "/spectra_" + name + ".csv");
    if (static_cast<int>(bd.spectra.wavelengths.size()) != points) {
      throw DataError("band " + name + ": spectra grid length disagrees with bands.csv");
    }
    total_m += points;
    in.bands.push_back(std::move(bd));
  }

  if (fs::exists(data + "/noise.csv")) {
    const Eigen::VectorXd noise_var = io::read_vector_csv(data + "/noise.csv");
    if (static_cast<int>(noise_var.size()) != total_m) {
      throw DataError("noise.csv length does not match the stacked band grids");
    }
    int at = 0;
    for (auto& bd : in.bands) {
      const int m = static_cast<int>(bd.spectra.wavelengths.size());
      const double v0 = noise_var[at];
      for (int j = 1; j < m; ++j) {
        if (std::abs(noise_var[at + j] - v0) > 1e-12 * std::max(1.0, std::abs(v0))) {
          throw DataError("band " + bd.name +
                          ": per-band constant noise required in this version");
        }
      }
      if (!(v0 >= 0.0)) throw DataError("band " + bd.name + ": negative noise variance");
      bd.noise_sd = std::sqrt(v0);
      at += m;
    }
  }

  if (fs::exists(data + "/state_prior.csv")) {
    const Eigen::MatrixXd prior = io::read_matrix_csv(data + "/state_prior.csv");
    if (prior.rows() != 2) {
      throw DataError("state_prior.csv must hold two rows: means then scales");
    }
    in.state_prior_mean = prior.row(0);
    in.state_prior_sd = prior.row(1);
    in.state_dim = static_cast<int>(prior.cols());
  }

  if (fs::exists(data + "/y_obs.csv")) {
    in.y_obs = io::read_vector_csv(data + "/y_obs.csv");
  }

  if (want_jacobians) {
    std::vector<std::pair<int, std::string>> found;
    for (const auto& entry : fs::directory_iterator(data)) {
      const std::string name = entry.path().filename().string();
      if (name.size() < 9 || name.rfind("jac_", 0) != 0 ||
          name.substr(name.size() - 4) != ".csv") {
        continue;
      }
      const std::string digits = name.substr(4, name.size() - 8);
      if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](unsigned char c) {
            return std::isdigit(c) != 0;
          })) {
        continue;
      }
      found.emplace_back(std::stoi(digits), entry.path().string());
    }
    std::sort(found.begin(), found.end());
    for (const auto& [runid, path] : found) {
      in.jacobians.push_back(io::read_matrix_csv(path));
      in.jacobian_runs.push_back(runid);
    }
    if (in.state_dim == 0 && !in.jacobians.empty()) {
      in.state_dim = static_cast<int>(in.jacobians.front().cols());
    }
  }

  if (in.state_dim == 0) {
    throw ConfigError(
        "state dimension not inferable: provide state_prior.csv or Jacobian files");
  }
  return in;
}

//! Eigenvalue table shared by the fpca report: one row per component with
//! its cumulative variance fraction and a retained flag.
void append_eigen_rows(std::string& csv, const std::string& head,
                       const Eigen::VectorXd& eigenvalues, int retained) {
  const double total = eigenvalues.sum();
  double cum = 0.0;
  for (int l = 0; l < eigenvalues.size(); ++l) {
    cum += eigenvalues[l];
    csv += head + std::to_string(l + 1) + "," + io::format_double(eigenvalues[l]) + "," +
           io::format_double(total > 0.0 ? cum / total : 0.0) + "," +
           (l < retained ? "1" : "0") + "\n";
  }
}

void write_fpca_report(const std::string& path, const std::vector<fda::FunctionalBasis>& bases) {
  std::string csv = "band,component,eigenvalue,cum_fraction,retained\n";
  for (const auto& basis : bases) {
    append_eigen_rows(csv, basis.band_name + ",", basis.eigenvalues,
                      static_cast<int>(basis.components.cols()));
  }
  io::write_text_file(path, csv);
}

void write_subspace_report(const std::string& path, const subspace::ActiveSubspace& sub) {
  std::string csv = "index,eigenvalue,cum_fraction,retained\n";
  append_eigen_rows(csv, "", sub.eigenvalues, sub.dim);
  io::write_text_file(path, csv);
}

int cmd_synth(const config::Config& cfg, const std::string& out) {
  ensure_dir(out);
  bench::SyntheticForward::Spec sp;
  sp.seed = cfg.synth.structure_seed;
  const bench::SyntheticForward fwd(sp);
  const int n = cfg.synth.n_train;
  const int state_dim = sp.state_dim;
  const int geom_dim = sp.geom_dim;

  std::vector<std::string> files;

  Rng rng_train = make_rng(cfg.seed, "ensemble/train");
  Eigen::MatrixXd design(n, state_dim + geom_dim);
  for (int i = 0; i < n; ++i) {
    design.row(i).head(state_dim) = fwd.sample_state(rng_train);
    design.row(i).tail(geom_dim) = fwd.sample_geometry(rng_train);
  }
  io::write_matrix_csv(out + "/design.csv", design);
  files.push_back("design.csv");

  Eigen::MatrixXd prior(2, state_dim);
  prior.row(0) = fwd.state_mean();
  prior.row(1) = fwd.state_sd();
  io::write_matrix_csv(out + "/state_prior.csv", prior);
  files.push_back("state_prior.csv");

  const int nb = static_cast<int>(fwd.band_names().size());
  {
    std::string csv = "band,points\n";
    for (int bi = 0; bi < nb; ++bi) {
      csv += fwd.band_names()[static_cast<std::size_t>(bi)] + "," +
             std::to_string(fwd.wavelengths(bi).size()) + "\n";
    }
    io::write_text_file(out + "/bands.csv", csv);
    files.push_back("bands.csv");
  }

  int total_m = 0;
  for (int bi = 0; bi < nb; ++bi) total_m += static_cast<int>(fwd.wavelengths(bi).size());
  {
    Eigen::VectorXd noise_var(total_m);
    int at = 0;
    for (int bi = 0; bi < nb; ++bi) {
      const int m = static_cast<int>(fwd.wavelengths(bi).size());
      noise_var.segment(at, m).setConstant(fwd.noise_sd(bi) * fwd.noise_sd(bi));
      at += m;
    }
    io::write_vector_csv(out + "/noise.csv", noise_var);
    files.push_back("noise.csv");
  }

  // Training spectra are the deterministic simulator output; missingness
  // masks channels with NaN from a substream of its own.
  Rng rng_miss = make_rng(cfg.seed, "ensemble/missing");
  std::bernoulli_distribution drop(std::max(0.0, cfg.synth.missing_fraction));
  std::vector<io::SpectraFile> spectra(static_cast<std::size_t>(nb));
  for (int bi = 0; bi < nb; ++bi) {
    auto& sf = spectra[static_cast<std::size_t>(bi)];
    sf.wavelengths = fwd.wavelengths(bi);
    sf.values.resize(n, sf.wavelengths.size());
    for (int i = 0; i < n; ++i) {
      sf.values.row(i) =
          fwd.radiance(bi, design.row(i).head(state_dim), design.row(i).tail(geom_dim));
    }
  }
  if (cfg.synth.missing_fraction > 0.0) {
    for (int i = 0; i < n; ++i) {
      for (int bi = 0; bi < nb; ++bi) {
        auto& v = spectra[static_cast<std::size_t>(bi)].values;
        for (int j = 0; j < v.cols(); ++j) {
          if (drop(rng_miss)) v(i, j) = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
  }
  for (int bi = 0; bi < nb; ++bi) {
    const std::string name =
        "spectra_" + fwd.band_names()[static_cast<std::size_t>(bi)] + ".csv";
    io::write_spectra_csv(out + "/" + name, spectra[static_cast<std::size_t>(bi)]);
    files.push_back(name);
  }

  const int nj = cfg.synth.num_jacobians < 0 ? n : std::min(cfg.synth.num_jacobians, n);
  Eigen::MatrixXd jac(total_m, state_dim);
  for (int k = 0; k < nj; ++k) {
    int at = 0;
    for (int bi = 0; bi < nb; ++bi) {
      const int m = static_cast<int>(fwd.wavelengths(bi).size());
      jac.middleRows(at, m) =
          fwd.jacobian(bi, design.row(k).head(state_dim), design.row(k).tail(geom_dim));
      at += m;
    }
    io::write_matrix_csv(out + "/" + jac_name(k), jac);
    files.push_back(jac_name(k));
  }

  if (cfg.synth.n_test > 0) {
    Rng rng_test = make_rng(cfg.seed, "ensemble/test");
    Eigen::MatrixXd test(cfg.synth.n_test, state_dim + geom_dim);
    std::vector<io::SpectraFile> truth(static_cast<std::size_t>(nb));
    for (int bi = 0; bi < nb; ++bi) {
      truth[static_cast<std::size_t>(bi)].wavelengths = fwd.wavelengths(bi);
      truth[static_cast<std::size_t>(bi)].values.resize(cfg.synth.n_test,
                                                        fwd.wavelengths(bi).size());
    }
    for (int r = 0; r < cfg.synth.n_test; ++r) {
      test.row(r).head(state_dim) = fwd.sample_state(rng_test);
      test.row(r).tail(geom_dim) = fwd.sample_geometry(rng_test);
      for (int bi = 0; bi < nb; ++bi) {
        truth[static_cast<std::size_t>(bi)].values.row(r) =
            fwd.radiance(bi, test.row(r).head(state_dim), test.row(r).tail(geom_dim));
      }
    }
    io::write_matrix_csv(out + "/test_design.csv", test);
    files.push_back("test_design.csv");
    for (int bi = 0; bi < nb; ++bi) {
      const std::string name =
          "truth_" + fwd.band_names()[static_cast<std::size_t>(bi)] + ".csv";
      io::write_spectra_csv(out + "/" + name, truth[static_cast<std::size_t>(bi)]);
      files.push_back(name);
    }
  }

  io::write_text_file(out + "/config_used.json", cfg.to_json().dump(2) + "\n");
  files.push_back("config_used.json");
  io::write_manifest(out, files);
  log_info("synth: wrote " + std::to_string(files.size()) + " files to " + out);
  return 0;
}

int cmd_fpca(const config::Config& cfg, const std::string& data, const std::string& out) {
  ensure_dir(out);
  const auto bands = read_bands_csv(data + "/bands.csv");

  std::vector<std::string> files;
  std::vector<fda::FunctionalBasis> bases;
  for (const auto& [name, points] : bands) {
    pipeline::BandData bd;
    bd.name = name;
    bd.spectra = io::read_spectra_csv(data + "/spectra_" + name + ".csv");
    if (static_cast<int>(bd.spectra.wavelengths.size()) != points) {
      throw DataError("band " + name + ": spectra grid length disagrees with bands.csv");
    }
    const pipeline::BandDecomposition fit = pipeline::decompose_band(bd, cfg.fda);
    bases.push_back(fit.basis);
    const std::string scores_name = "scores_" + name + ".csv";
    io::write_matrix_csv(out + "/" + scores_name, fit.scores);
    files.push_back(scores_name);
  }
  write_fpca_report(out + "/report_fpca.csv", bases);
  files.push_back("report_fpca.csv");
  io::write_manifest(out, files);
  return 0;
}

int cmd_subspace(const config::Config& cfg, const std::string& data, const std::string& out) {
  ensure_dir(out);
  pipeline::TrainInputs in = load_inputs(data, cfg.subspace.method == "gradient");
  const Eigen::MatrixXd states = in.design.leftCols(in.state_dim);

  subspace::StateStandardizer std_x;
  if (in.state_prior_mean.size() > 0) {
    std_x.mu = in.state_prior_mean;
    std_x.sd = in.state_prior_sd;
  } else {
    log_warn("subspace: no state prior moments given, standardizing with design moments");
    std_x = subspace::StateStandardizer::fit(states);
  }
  const Eigen::MatrixXd x_std = std_x.standardize_rows(states);
  const subspace::ActiveSubspace sub = pipeline::fit_subspace(in, cfg, std_x, x_std);

  write_subspace_report(out + "/report_subspace.csv", sub);
  io::write_matrix_csv(out + "/directions.csv", sub.basis());
  io::write_manifest(out, {"report_subspace.csv", "directions.csv"});
  log_info("subspace: retained dimension " + std::to_string(sub.dim));
  return 0;
}

int cmd_train(const config::Config& cfg, const std::string& data, const std::string& out) {
  ensure_dir(out);
  pipeline::TrainInputs in = load_inputs(data, cfg.subspace.method == "gradient");
  const pipeline::TrainedModel tm = pipeline::train(in, cfg);

  tm.save(out);
  std::vector<std::string> files = {"model.json", "arrays.bin"};

  for (const auto& unit : tm.units) {
    const std::string base = sanitize_label(unit.label);
    io::write_samples_csv(out + "/samples_" + base + ".csv", unit.samples);
    io::write_trace_csv(out + "/trace_" + base + ".csv", unit.target_trace);
    files.push_back("samples_" + base + ".csv");
    files.push_back("trace_" + base + ".csv");
  }

  write_fpca_report(out + "/report_fpca.csv", tm.bases);
  files.push_back("report_fpca.csv");
  write_subspace_report(out + "/report_subspace.csv", tm.sub);
  files.push_back("report_subspace.csv");

  // Conditioning structure of the first unit, for inspection; all units
  // share the same reduced design and neighbor count.
  io::write_text_file(
      out + "/graph.json",
      nngp::graph_to_json(tm.units.front().model->graph(),
                          tm.units.front().model->solver().fill_permutation()) +
          "\n");
  files.push_back("graph.json");

  io::write_manifest(out, files);
  log_info("train: model written to " + out + " in " +
           std::to_string(tm.train_seconds) + " s");
  return 0;
}

int cmd_predict(const config::Config& cfg, const std::string& model, const std::string& data,
                const std::string& out) {
  ensure_dir(out);
  pipeline::TrainedModel tm = pipeline::TrainedModel::load(model);
  // Draw counts, conditioning size, and the draw substream root come from
  // this run, not from the training configuration.
  tm.cfg.predict = cfg.predict;
  tm.cfg.seed = cfg.seed;

  const Eigen::MatrixXd test = io::read_matrix_csv(data + "/test_design.csv");
  const int state_dim = static_cast<int>(tm.std_x.mu.size());
  if (test.cols() != state_dim + tm.geom_dim()) {
    throw DataError("test_design.csv width does not match the trained model");
  }

  std::vector<io::PredictionRow> rows;
  for (int r = 0; r < test.rows(); ++r) {
    Rng rng = make_rng(tm.cfg.seed, "predict/draws/" + std::to_string(r));
    const auto sounding =
        pipeline::emulate_sounding(tm, test.row(r).head(state_dim),
                                   test.row(r).tail(tm.geom_dim()), tm.cfg.predict.draws, rng);
    for (const auto& sb : sounding) {
      for (int j = 0; j < sb.wavelengths.size(); ++j) {
        rows.push_back({r, sb.band, sb.wavelengths[j], sb.mean[j], sb.sd[j], sb.q025[j],
                        sb.q975[j]});
      }
    }
  }
  io::write_predictions_csv(out + "/predictions.csv", rows);
  io::write_manifest(out, {"predictions.csv"});
  log_info("predict: " + std::to_string(test.rows()) + " soundings written to " + out);
  return 0;
}

int cmd_validate(const config::Config& cfg, const std::string& model, const std::string& data,
                 const std::string& out) {
  ensure_dir(out);
  const auto t0 = std::chrono::steady_clock::now();
  pipeline::TrainedModel tm = pipeline::TrainedModel::load(model);
  tm.cfg.predict = cfg.predict;
  tm.cfg.seed = cfg.seed;

  const Eigen::MatrixXd test = io::read_matrix_csv(data + "/test_design.csv");
  std::vector<io::SpectraFile> truth;
  for (const auto& basis : tm.bases) {
    truth.push_back(io::read_spectra_csv(data + "/truth_" + basis.band_name + ".csv"));
  }

  bench::MetricsReport rep = bench::score_model(tm, test, truth);
  rep.predict_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.total_seconds = rep.predict_seconds;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  rep.hardware_threads = static_cast<int>(hw);
  rep.budget_seconds = 1800.0 * 4.0 / double(std::min(4u, hw));

  io::write_text_file(out + "/metrics.json", rep.to_json() + "\n");
  std::vector<io::RmspeRow> rows;
  for (const auto& p : rep.pointwise) rows.push_back({p.wavelength, p.band, p.rmspe});
  io::write_rmspe_csv(out + "/rmspe.csv", rows);
  io::write_manifest(out, {"metrics.json", "rmspe.csv"});
  log_info("validate: metrics written to " + out);
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"emulator pipeline for simulators with spectral output"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic training ensemble");
  add_common(synth, args);

  CLI::App* fpca = app.add_subcommand("fpca", "functional decomposition of the spectra");
  add_common(fpca, args);
  fpca->add_option("--data", args.data, "input artifact directory");

  CLI::App* subspace_cmd =
      app.add_subcommand("subspace", "gradient-based input dimension reduction");
  add_common(subspace_cmd, args);
  subspace_cmd->add_option("--data", args.data, "input artifact directory");

  CLI::App* train = app.add_subcommand("train", "fit the emulator end to end");
  add_common(train, args);
  train->add_option("--data", args.data, "input artifact directory");

  CLI::App* predict = app.add_subcommand("predict", "predictive soundings at new inputs");
  add_common(predict, args);
  predict->add_option("--data", args.data, "directory holding test_design.csv");
  predict->add_option("--model", args.model, "model checkpoint directory")->required();

  CLI::App* validate = app.add_subcommand("validate", "score predictions against truth");
  add_common(validate, args);
  validate->add_option("--data", args.data, "directory with test design and truth spectra");
  validate->add_option("--model", args.model, "model checkpoint directory")->required();

  try {
    app.parse(argc, argv);
    apply_threads(args);
    const config::Config cfg = resolve_config(args);

    if (app.got_subcommand(synth)) return cmd_synth(cfg, args.out);
    if (app.got_subcommand(fpca)) return cmd_fpca(cfg, args.data, args.out);
    if (app.got_subcommand(subspace_cmd)) return cmd_subspace(cfg, args.data, args.out);
    if (app.got_subcommand(train)) return cmd_train(cfg, args.data, args.out);
    if (app.got_subcommand(predict)) return cmd_predict(cfg, args.model, args.data, args.out);
    if (app.got_subcommand(validate)) return cmd_validate(cfg, args.model, args.data, args.out);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace specemu
