/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <fstream>
#include <string>
#include <vector>

#include "specemu/config.hpp"
#include "specemu/emulator.hpp"
#include "specemu/errors.hpp"
#include "specemu/inference.hpp"
#include "specemu/kernels.hpp"
#include "specemu/subspace.hpp"

namespace specemu::config {
namespace {

using nlohmann::json;

[[noreturn]] void bad_type(const std::string& path, const char* want) {
  throw ConfigError("config: '" + path + "' must be " + want);
}

void read_field(const json& v, const std::string& path, double& out) {
  if (!v.is_number()) bad_type(path, "a number");
  out = v.get<double>();
}

void read_field(const json& v, const std::string& path, int& out) {
  if (!v.is_number_integer()) bad_type(path, "an integer");
  out = v.get<int>();
}

void read_field(const json& v, const std::string& path, std::uint64_t& out) {
  if (!v.is_number_unsigned() && !v.is_number_integer()) bad_type(path, "an integer");
  if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
    bad_type(path, "a nonnegative integer");
  }
  out = v.get<std::uint64_t>();
}

void read_field(const json& v, const std::string& path, bool& out) {
  if (!v.is_boolean()) bad_type(path, "a boolean");
  out = v.get<bool>();
}

void read_field(const json& v, const std::string& path, std::string& out) {
  if (!v.is_string()) bad_type(path, "a string");
  out = v.get<std::string>();
}

//! Strict section reader: every key present must match a registered field.
struct Section {
  const json& j;
  std::string name;

  template <typename T>
  Section& field(const char* key, T& out) {
    auto it = j.find(key);
    if (it != j.end()) read_field(*it, name + "." + key, out);
    return *this;
  }

  void finish(std::initializer_list<const char*> known) const {
    for (const auto& item : j.items()) {
      bool ok = false;
      for (const char* k : known) {
        if (item.key() == k) {
          ok = true;
          break;
        }
      }
      if (!ok) throw ConfigError("config: unknown key '" + name + "." + item.key() + "'");
    }
  }
};

Section section(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) {
    static const json empty = json::object();
    return Section{empty, name};
  }
  if (!it->is_object()) throw ConfigError(std::string("config: '") + name + "' must be an object");
  return Section{*it, name};
}

}  // namespace

void Config::validate() const {
  if (synth.n_train < 2) throw ConfigError("config: synth.n_train must be at least 2");
  if (synth.n_test < 0) throw ConfigError("config: synth.n_test must be nonnegative");
  if (synth.num_jacobians < -1 || synth.num_jacobians > synth.n_train) {
    throw ConfigError("config: synth.num_jacobians must be -1 or in [0, n_train]");
  }
  if (!(synth.missing_fraction >= 0.0) || !(synth.missing_fraction < 1.0)) {
    throw ConfigError("config: synth.missing_fraction must be in [0, 1)");
  }

  if (fda.num_basis < 4) throw ConfigError("config: fda.num_basis must be at least 4");
  if (fda.degree < 1 || fda.degree > 5) throw ConfigError("config: fda.degree must be in [1, 5]");
  if (!(fda.threshold > 0.0) || !(fda.threshold <= 1.0)) {
    throw ConfigError("config: fda.threshold must be in (0, 1]");
  }
  if (!(fda.lambda_pen >= 0.0)) throw ConfigError("config: fda.lambda_pen must be nonnegative");
  if (fda.ncomp < 0) throw ConfigError("config: fda.ncomp must be nonnegative");

  if (subspace.method != "gradient" && subspace.method != "input_pca") {
    throw ConfigError("config: subspace.method must be gradient or input_pca");
  }
  subspace::dimension_rule_from_string(subspace.rule);
  if (subspace.dim < 1) throw ConfigError("config: subspace.dim must be positive");
  if (!(subspace.cum_threshold > 0.0) || !(subspace.cum_threshold <= 1.0)) {
    throw ConfigError("config: subspace.cum_threshold must be in (0, 1]");
  }

  {
    kernels::KernelSpec spec;
    spec.family = kernels::family_from_string(kernel.family);
    spec.nu = kernel.nu;
    spec.alpha = kernel.alpha;
    spec.ranges = Eigen::VectorXd::Ones(1);
    spec.validate();
  }

  if (model.neighbors < 1) throw ConfigError("config: model.neighbors must be positive");
  emulator::trend_from_string(model.trend);

  {
    inference::ChainConfig chain;
    chain.iterations = mcmc.iterations;
    chain.burn_in = mcmc.burn_in;
    chain.retained = mcmc.retained;
    chain.initial_step = mcmc.initial_step;
    chain.target_rate = mcmc.target_rate;
    chain.adapt_window = mcmc.adapt_window;
    chain.validate(1);
  }
  if (!(mcmc.initial_nugget > 0.0)) {
    throw ConfigError("config: mcmc.initial_nugget must be positive");
  }

  if (predict.draws < 1) throw ConfigError("config: predict.draws must be positive");
  if (predict.t_pred < 0) throw ConfigError("config: predict.t_pred must be nonnegative");
}

nlohmann::json Config::to_json() const {
  json doc;
  doc["synth"] = {{"n_train", synth.n_train},
                  {"n_test", synth.n_test},
                  {"num_jacobians", synth.num_jacobians},
                  {"missing_fraction", synth.missing_fraction},
                  {"structure_seed", synth.structure_seed}};
  doc["fda"] = {{"num_basis", fda.num_basis},
                {"degree", fda.degree},
                {"threshold", fda.threshold},
                {"lambda_pen", fda.lambda_pen},
                {"log_scale", fda.log_scale},
                {"ncomp", fda.ncomp}};
  doc["subspace"] = {{"method", subspace.method},
                     {"rule", subspace.rule},
                     {"dim", subspace.dim},
                     {"cum_threshold", subspace.cum_threshold}};
  doc["kernel"] = {{"family", kernel.family}, {"nu", kernel.nu}, {"alpha", kernel.alpha}};
  doc["model"] = {{"neighbors", model.neighbors},
                  {"trend", model.trend},
                  {"separable_pair", model.separable_pair}};
  doc["mcmc"] = {{"iterations", mcmc.iterations},
                 {"burn_in", mcmc.burn_in},
                 {"retained", mcmc.retained},
                 {"initial_step", mcmc.initial_step},
                 {"target_rate", mcmc.target_rate},
                 {"adapt_window", mcmc.adapt_window},
                 {"initial_nugget", mcmc.initial_nugget}};
  doc["predict"] = {{"draws", predict.draws}, {"t_pred", predict.t_pred}};
  doc["seed"] = seed;
  return doc;
}

Config Config::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config: document root must be an object");
  for (const auto& item : doc.items()) {
    static const char* known[] = {"synth", "fda",  "subspace", "kernel",
                                  "model", "mcmc", "predict",  "seed"};
    bool ok = false;
    for (const char* k : known) {
      if (item.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config: unknown key '" + item.key() + "'");
  }

  Config c;
  section(doc, "synth")
      .field("n_train", c.synth.n_train)
      .field("n_test", c.synth.n_test)
      .field("num_jacobians", c.synth.num_jacobians)
      .field("missing_fraction", c.synth.missing_fraction)
      .field("structure_seed", c.synth.structure_seed)
      .finish({"n_train", "n_test", "num_jacobians", "missing_fraction", "structure_seed"});
  section(doc, "fda")
      .field("num_basis", c.fda.num_basis)
      .field("degree", c.fda.degree)
      .field("threshold", c.fda.threshold)
      .field("lambda_pen", c.fda.lambda_pen)
      .field("log_scale", c.fda.log_scale)
      .field("ncomp", c.fda.ncomp)
      .finish({"num_basis", "degree", "threshold", "lambda_pen", "log_scale", "ncomp"});
  section(doc, "subspace")
      .field("method", c.subspace.method)
      .field("rule", c.subspace.rule)
      .field("dim", c.subspace.dim)
      .field("cum_threshold", c.subspace.cum_threshold)
      .finish({"method", "rule", "dim", "cum_threshold"});
  section(doc, "kernel")
      .field("family", c.kernel.family)
      .field("nu", c.kernel.nu)
      .field("alpha", c.kernel.alpha)
      .finish({"family", "nu", "alpha"});
  section(doc, "model")
      .field("neighbors", c.model.neighbors)
      .field("trend", c.model.trend)
      .field("separable_pair", c.model.separable_pair)
      .finish({"neighbors", "trend", "separable_pair"});
  section(doc, "mcmc")
      .field("iterations", c.mcmc.iterations)
      .field("burn_in", c.mcmc.burn_in)
      .field("retained", c.mcmc.retained)
      .field("initial_step", c.mcmc.initial_step)
      .field("target_rate", c.mcmc.target_rate)
      .field("adapt_window", c.mcmc.adapt_window)
      .field("initial_nugget", c.mcmc.initial_nugget)
      .finish({"iterations", "burn_in", "retained", "initial_step", "target_rate", "adapt_window",
               "initial_nugget"});
  section(doc, "predict")
      .field("draws", c.predict.draws)
      .field("t_pred", c.predict.t_pred)
      .finish({"draws", "t_pred"});
  if (auto it = doc.find("seed"); it != doc.end()) read_field(*it, "seed", c.seed);
  return c;
}

Config Config::load(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    try {
      in >> doc;
    } catch (const json::parse_error& e) {
      throw ConfigError("config: parse failure in '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: '" + path + "' must hold a JSON object");
  }

  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("config: override '" + item + "' is not of the form path.key=value");
    }
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;  // bare strings need no quoting on the command line
    }

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw ConfigError("config: override path '" + key + "' has an empty part");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      json& next = (*node)[part];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) {
        throw ConfigError("config: override path '" + key + "' crosses a non-object value");
      }
      node = &next;
      start = dot + 1;
    }
  }

  Config c = from_json(doc);
  c.validate();
  return c;
}

}  // namespace specemu::config
