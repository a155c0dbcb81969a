/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "specemu/checkpoint.hpp"
#include "specemu/errors.hpp"
#include "specemu/pipeline.hpp"

namespace specemu::pipeline {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "specemu-model";
constexpr int kVersion = 1;

//! Type-7 quantile (linear interpolation between order statistics) without
//! a full sort; buf is reordered in place.
double quantile(std::vector<double>& buf, double prob) {
  const std::size_t n = buf.size();
  const double h = prob * double(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  auto it = buf.begin() + static_cast<std::ptrdiff_t>(lo);
  std::nth_element(buf.begin(), it, buf.end());
  const double xlo = *it;
  if (lo + 1 >= n || h == double(lo)) return xlo;
  const double xhi = *std::min_element(it + 1, buf.end());
  return xlo + (h - double(lo)) * (xhi - xlo);
}

}  // namespace

void TrainedModel::save(const std::string& dir) const {
  checkpoint::Checkpoint ck;
  ck.meta["format"] = kFormat;
  ck.meta["version"] = kVersion;
  ck.meta["config"] = cfg.to_json();
  ck.meta["prior_standardizer"] = prior_standardizer;
  ck.meta["subspace_dim"] = sub.dim;

  json jbands = json::array();
  for (std::size_t i = 0; i < bases.size(); ++i) {
    const auto& basis = bases[i];
    jbands.push_back({{"name", basis.band_name},
                      {"noise_sd", noise_sd[i]},
                      {"log_scale", basis.log_scale},
                      {"num_basis", basis.system.num_basis},
                      {"degree", basis.system.degree},
                      {"lo", basis.system.lo},
                      {"hi", basis.system.hi},
                      {"ncomp", static_cast<int>(basis.components.cols())}});
  }
  ck.meta["bands"] = jbands;

  json junits = json::array();
  for (const auto& unit : units) {
    json targets = json::array();
    for (const auto& [b, c] : unit.targets) targets.push_back({b, c});
    junits.push_back({{"label", unit.label}, {"targets", targets}});
  }
  ck.meta["units"] = junits;

  ck.put("standardizer/state_mu", std_x.mu);
  ck.put("standardizer/state_sd", std_x.sd);
  ck.put("standardizer/geom_mu", std_b.mu);
  ck.put("standardizer/geom_sd", std_b.sd);
  ck.put("subspace/directions", sub.directions);
  ck.put("subspace/eigenvalues", sub.eigenvalues);
  ck.put("inputs/s_red", s_red);
  for (std::size_t i = 0; i < bases.size(); ++i) {
    const std::string pre = "fda/" + bases[i].band_name + "/";
    ck.put(pre + "mean_coefs", bases[i].mean_coefs);
    ck.put(pre + "components", bases[i].components);
    ck.put(pre + "eigenvalues", bases[i].eigenvalues);
    ck.put(pre + "grid", bases[i].grid);
    ck.put(pre + "resid_sd", resid_sd[i]);
  }
  for (const auto& unit : units) {
    if (!unit.model) throw ConfigError("save: unit " + unit.label + " has no fitted model");
    const std::string pre = "unit/" + unit.label + "/";
    ck.put(pre + "responses", unit.model->responses());
    ck.put(pre + "samples", unit.samples);
    ck.put(pre + "trace", unit.target_trace);
    ck.put(pre + "accept_rate", unit.accept_rate);
    ck.put(pre + "steps", unit.steps);
    ck.put(pre + "gls_pack", unit.gls_pack);
  }
  ck.save(dir);
}

TrainedModel TrainedModel::load(const std::string& dir) {
  const checkpoint::Checkpoint ck = checkpoint::Checkpoint::load(dir);
  if (!ck.meta.contains("format") || ck.meta["format"] != kFormat ||
      !ck.meta.contains("version") || ck.meta["version"] != kVersion) {
    throw DataError("load: '" + dir + "' is not a compatible model checkpoint");
  }

  TrainedModel tm;
  tm.cfg = config::Config::from_json(ck.meta.at("config"));
  tm.cfg.validate();
  tm.prior_standardizer = ck.meta.value("prior_standardizer", false);

  tm.std_x.mu = ck.vector("standardizer/state_mu");
  tm.std_x.sd = ck.vector("standardizer/state_sd");
  tm.std_b.mu = ck.vector("standardizer/geom_mu");
  tm.std_b.sd = ck.vector("standardizer/geom_sd");
  tm.sub.directions = ck.matrix("subspace/directions");
  tm.sub.eigenvalues = ck.vector("subspace/eigenvalues");
  tm.sub.dim = ck.meta.at("subspace_dim").get<int>();
  if (tm.sub.dim < 1 || tm.sub.dim > tm.sub.directions.cols()) {
    throw DataError("load: subspace dimension out of range");
  }
  tm.s_red = ck.matrix("inputs/s_red");

  for (const auto& jb : ck.meta.at("bands")) {
    fda::FunctionalBasis basis;
    basis.band_name = jb.at("name").get<std::string>();
    basis.log_scale = jb.at("log_scale").get<bool>();
    basis.system = fda::BSplineSystem::equidistant(jb.at("lo").get<double>(),
                                                   jb.at("hi").get<double>(),
                                                   jb.at("num_basis").get<int>(),
                                                   jb.at("degree").get<int>());
    const std::string pre = "fda/" + basis.band_name + "/";
    basis.mean_coefs = ck.vector(pre + "mean_coefs");
    basis.components = ck.matrix(pre + "components");
    basis.eigenvalues = ck.vector(pre + "eigenvalues");
    basis.grid = ck.vector(pre + "grid");
    if (basis.components.cols() != jb.at("ncomp").get<int>()) {
      throw DataError("load: band " + basis.band_name + " component count mismatch");
    }
    tm.resid_sd.push_back(ck.vector(pre + "resid_sd"));
    tm.noise_sd.push_back(jb.at("noise_sd").get<double>());
    tm.bases.push_back(std::move(basis));
  }

  const auto family = kernels::family_from_string(tm.cfg.kernel.family);
  const auto trend = emulator::trend_from_string(tm.cfg.model.trend);
  for (const auto& ju : ck.meta.at("units")) {
    ModelUnit unit;
    unit.label = ju.at("label").get<std::string>();
    for (const auto& jt : ju.at("targets")) {
      const int b = jt.at(0).get<int>();
      const int c = jt.at(1).get<int>();
      if (b < 0 || b >= static_cast<int>(tm.bases.size()) || c < 0 ||
          c >= tm.bases[static_cast<std::size_t>(b)].components.cols()) {
        throw DataError("load: unit " + unit.label + " targets an unknown component");
      }
      unit.targets.emplace_back(b, c);
    }
    const std::string pre = "unit/" + unit.label + "/";
    unit.samples = ck.matrix(pre + "samples");
    unit.target_trace = ck.vector(pre + "trace");
    unit.accept_rate = ck.vector(pre + "accept_rate");
    unit.steps = ck.vector(pre + "steps");
    unit.gls_pack = ck.matrix(pre + "gls_pack");
    unit.model = std::make_unique<emulator::NNGPModel>(
        tm.s_red, ck.matrix(pre + "responses"), trend, tm.cfg.model.neighbors, family,
        tm.cfg.kernel.nu, tm.cfg.kernel.alpha);
    if (unit.samples.cols() != tm.s_red.cols() + 1) {
      throw DataError("load: unit " + unit.label + " sample width mismatch");
    }
    tm.units.push_back(std::move(unit));
  }
  return tm;
}

UnitPredictor::UnitPredictor(const ModelUnit& unit, int t_pred) : unit_(unit), t_pred_(t_pred) {
  if (!unit_.model) throw ConfigError("UnitPredictor: unit has no fitted model");
  p_ = unit_.model->p();
  const int q = unit_.q();
  if (unit_.model->q() != q) throw DataError("UnitPredictor: target/response count mismatch");
  const int width = p_ * q + p_ * p_ + q * q;
  if (unit_.gls_pack.cols() != width || unit_.gls_pack.rows() != unit_.samples.rows()) {
    throw DataError("UnitPredictor: stored GLS pack has unexpected shape");
  }
  if (unit_.samples.cols() != unit_.model->input_dim() + 1) {
    throw DataError("UnitPredictor: sample width does not match the input dimension");
  }
}

emulator::PredictiveT UnitPredictor::at(const Eigen::VectorXd& s0, int r) const {
  if (r < 0 || r >= retained()) throw ConfigError("UnitPredictor: draw index out of range");
  const emulator::NNGPModel& model = *unit_.model;
  const int rd = model.input_dim();
  const int q = unit_.q();

  const Eigen::VectorXd ranges = unit_.samples.row(r).head(rd);
  const double tau2 = unit_.samples(r, rd);

  const Eigen::VectorXd pack = unit_.gls_pack.row(r);
  emulator::GlsSummary g;
  g.beta = Eigen::Map<const Eigen::MatrixXd>(pack.data(), p_, q);
  g.htrih_inv = Eigen::Map<const Eigen::MatrixXd>(pack.data() + p_ * q, p_, p_);
  g.gls_cov = Eigen::Map<const Eigen::MatrixXd>(pack.data() + p_ * q + p_ * p_, q, q);
  g.dof = double(model.n() - p_);

  const emulator::Predictor pred(model, ranges, tau2, std::move(g), t_pred_);
  return pred.at(s0);
}

UnitPredictor::Moments UnitPredictor::moments(const Eigen::VectorXd& s0, int thin) const {
  if (thin < 1) throw ConfigError("UnitPredictor: thin must be positive");
  const int q = unit_.q();
  Moments out;
  out.mean = Eigen::VectorXd::Zero(q);
  out.var = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd mom2 = Eigen::VectorXd::Zero(q);
  int used = 0;
  for (int r = 0; r < retained(); r += thin) {
    const emulator::PredictiveT pt = at(s0, r);
    if (!(pt.dof > 2.0)) {
      throw NumericError("UnitPredictor: mixture variance undefined for dof <= 2");
    }
    const double tvar = pt.dof / (pt.dof - 2.0);
    for (int c = 0; c < q; ++c) {
      out.mean[c] += pt.mean[c];
      mom2[c] += pt.mean[c] * pt.mean[c];
      out.var[c] += pt.scale[c] * pt.scale[c] * tvar;
    }
    ++used;
  }
  out.mean /= double(used);
  for (int c = 0; c < q; ++c) {
    out.var[c] = out.var[c] / double(used) + mom2[c] / double(used) - out.mean[c] * out.mean[c];
    out.var[c] = std::max(0.0, out.var[c]);
  }
  return out;
}

std::vector<SoundingBand> emulate_sounding(const TrainedModel& tm, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& b, int draws, Rng& rng,
                                           const std::vector<std::string>& bands,
                                           const DrawSink& draw_sink) {
  if (draws < 1) throw ConfigError("emulate_sounding: draws must be positive");
  if (tm.units.empty()) throw DataError("emulate_sounding: model has no trained units");

  std::vector<int> selected;
  if (bands.empty()) {
    for (std::size_t i = 0; i < tm.bases.size(); ++i) selected.push_back(static_cast<int>(i));
  } else {
    for (const auto& name : bands) {
      const int bi = tm.band_index(name);
      if (bi < 0) throw DataError("emulate_sounding: no trained model for band '" + name + "'");
      selected.push_back(bi);
    }
  }
  std::vector<bool> want(tm.bases.size(), false);
  for (int bi : selected) want[static_cast<std::size_t>(bi)] = true;

  const Eigen::VectorXd s0 = tm.reduce(x, b);
  const int t_pred =
      tm.cfg.predict.t_pred > 0 ? tm.cfg.predict.t_pred : tm.cfg.model.neighbors;

  // Score draws per selected band, one t variate per component and draw.
  std::vector<Eigen::MatrixXd> z(tm.bases.size());
  for (int bi : selected) {
    z[static_cast<std::size_t>(bi)].resize(draws,
                                           tm.bases[static_cast<std::size_t>(bi)].components.cols());
  }
  for (const auto& unit : tm.units) {
    bool needed = false;
    for (const auto& [bi, c] : unit.targets) needed = needed || want[static_cast<std::size_t>(bi)];
    if (!needed) continue;
    const UnitPredictor up(unit, t_pred);
    const int ret = up.retained();
    for (int d = 0; d < draws; ++d) {
      const emulator::PredictiveT pt = up.at(s0, d % ret);
      std::student_t_distribution<double> tdist(pt.dof);
      for (int c = 0; c < unit.q(); ++c) {
        const auto [bi, comp] = unit.targets[static_cast<std::size_t>(c)];
        if (!want[static_cast<std::size_t>(bi)]) continue;
        z[static_cast<std::size_t>(bi)](d, comp) = pt.mean[c] + pt.scale[c] * tdist(rng);
      }
    }
  }

  std::vector<SoundingBand> out;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> buf(static_cast<std::size_t>(draws));
  for (int bi : selected) {
    const auto& basis = tm.bases[static_cast<std::size_t>(bi)];
    const fda::GridEval& ge = tm.grid_eval(bi);
    const int m = static_cast<int>(basis.grid.size());
    const Eigen::VectorXd& rsd = tm.resid_sd[static_cast<std::size_t>(bi)];

    Eigen::MatrixXd curves = z[static_cast<std::size_t>(bi)] * ge.components.transpose();
    curves.rowwise() += ge.mean.transpose();
    for (int j = 0; j < m; ++j) {
      if (rsd[j] <= 0.0) continue;
      for (int d = 0; d < draws; ++d) curves(d, j) += rsd[j] * normal(rng);
    }
    if (basis.log_scale) curves = curves.array().exp();
    if (draw_sink) draw_sink(bi, curves);

    SoundingBand sb;
    sb.band = basis.band_name;
    sb.wavelengths = basis.grid;
    sb.mean.resize(m);
    sb.sd.resize(m);
    sb.q025.resize(m);
    sb.q975.resize(m);
    for (int j = 0; j < m; ++j) {
      double sum = 0.0, ss = 0.0;
      for (int d = 0; d < draws; ++d) {
        const double v = curves(d, j);
        buf[static_cast<std::size_t>(d)] = v;
        sum += v;
        ss += v * v;
      }
      const double mean = sum / draws;
      sb.mean[j] = mean;
      sb.sd[j] = draws > 1 ? std::sqrt(std::max(0.0, (ss - draws * mean * mean) / (draws - 1)))
                           : 0.0;
      sb.q025[j] = quantile(buf, 0.025);
      sb.q975[j] = quantile(buf, 0.975);
    }
    out.push_back(std::move(sb));
  }
  return out;
}

}  // namespace specemu::pipeline
