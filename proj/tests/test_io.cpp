#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "specemu/checkpoint.hpp"
#include "specemu/config.hpp"
#include "specemu/errors.hpp"
#include "specemu/io.hpp"

using namespace specemu;
namespace fs = std::filesystem;

namespace {

// Unique scratch directory per test case, removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("specemu_io_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
  }
  return m;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round trips awkward values") {
  for (double v : {0.1, 1.0 / 3.0, -0.0, 1e300, 5e-324, 123456.789, -2.5e-8}) {
    const std::string s = io::format_double(v);
    // strtod instead of stod: the latter raises on subnormal underflow
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "NaN");
  CHECK(io::format_double(1.0) == "1");
}

TEST_CASE("matrix and vector CSV round trips preserve NaN") {
  TempDir dir("mat");
  Eigen::MatrixXd m = random_matrix(7, 4, 3);
  m(2, 1) = std::numeric_limits<double>::quiet_NaN();
  io::write_matrix_csv(dir.file("m.csv"), m);
  const Eigen::MatrixXd back = io::read_matrix_csv(dir.file("m.csv"));
  REQUIRE(back.rows() == 7);
  REQUIRE(back.cols() == 4);
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (std::isnan(m(i, j))) {
        CHECK(std::isnan(back(i, j)));
      } else {
        CHECK(back(i, j) == m(i, j));
      }
    }
  }

  const Eigen::VectorXd v = random_matrix(9, 1, 4).col(0);
  io::write_vector_csv(dir.file("v.csv"), v);
  CHECK((io::read_vector_csv(dir.file("v.csv")) - v).cwiseAbs().maxCoeff() == 0.0);

  io::write_text_file(dir.file("ragged.csv"), "1,2\n3\n");
  CHECK_THROWS_AS(io::read_matrix_csv(dir.file("ragged.csv")), DataError);
  CHECK_THROWS_AS(io::read_matrix_csv(dir.file("missing.csv")), DataError);
}

TEST_CASE("spectra CSV keeps the grid in the first row") {
  TempDir dir("spec");
  io::SpectraFile sf;
  sf.wavelengths = Eigen::VectorXd::LinSpaced(5, 100.0, 104.0);
  sf.values = random_matrix(3, 5, 5);
  sf.values(1, 2) = std::numeric_limits<double>::quiet_NaN();
  io::write_spectra_csv(dir.file("s.csv"), sf);

  const io::SpectraFile back = io::read_spectra_csv(dir.file("s.csv"));
  CHECK((back.wavelengths - sf.wavelengths).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.values.rows() == 3);
  CHECK(std::isnan(back.values(1, 2)));
  CHECK(back.values(0, 0) == sf.values(0, 0));

  // first line of the file is the grid itself
  const std::string text = io::read_text_file(dir.file("s.csv"));
  CHECK(text.substr(0, text.find('\n')) == "100,101,102,103,104");
}

TEST_CASE("samples, trace, predictions, and rmspe writers emit pinned headers") {
  TempDir dir("head");
  const Eigen::MatrixXd samples = random_matrix(6, 3, 7).cwiseAbs();
  io::write_samples_csv(dir.file("samples.csv"), samples);
  const std::string s = io::read_text_file(dir.file("samples.csv"));
  CHECK(s.substr(0, s.find('\n')) == "theta_1,theta_2,tau2");
  const Eigen::MatrixXd back = io::read_samples_csv(dir.file("samples.csv"));
  CHECK((back - samples).cwiseAbs().maxCoeff() == 0.0);

  io::write_trace_csv(dir.file("trace.csv"), Eigen::VectorXd::LinSpaced(4, 0.0, 3.0));
  const std::string t = io::read_text_file(dir.file("trace.csv"));
  CHECK(t.substr(0, t.find('\n')) == "iterate,log_target");

  std::vector<io::PredictionRow> rows;
  rows.push_back({0, "o2", 757.1, 1.0, 0.1, 0.8, 1.2});
  io::write_predictions_csv(dir.file("pred.csv"), rows);
  const std::string p = io::read_text_file(dir.file("pred.csv"));
  CHECK(p.substr(0, p.find('\n')) == "run_id,band,wavelength,mean,sd,q025,q975");
  CHECK(p.find("0,o2,757.1,1,0.1,0.8,1.2\n") != std::string::npos);

  std::vector<io::RmspeRow> rr;
  rr.push_back({757.1, "o2", 0.02});
  io::write_rmspe_csv(dir.file("rmspe.csv"), rr);
  const std::string r = io::read_text_file(dir.file("rmspe.csv"));
  CHECK(r.substr(0, r.find('\n')) == "wavelength,band,rmspe");

  // a matrix CSV is not a samples file
  io::write_matrix_csv(dir.file("plain.csv"), samples);
  CHECK_THROWS_AS(io::read_samples_csv(dir.file("plain.csv")), DataError);
}

TEST_CASE("sha256 against published vectors") {
  CHECK(io::sha256_hex("", 0) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex("abc", 3) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const std::string msg = "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq";
  CHECK(io::sha256_hex(msg.data(), msg.size()) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");

  TempDir dir("sha");
  io::write_text_file(dir.file("f.txt"), "abc");
  CHECK(io::sha256_file(dir.file("f.txt")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest lists sizes and hashes of its files") {
  TempDir dir("man");
  io::write_text_file(dir.file("a.txt"), "abc");
  io::write_text_file(dir.file("b.txt"), "hello\n");
  io::write_manifest(dir.path.string(), {"a.txt", "b.txt"});

  const nlohmann::json j = nlohmann::json::parse(io::read_text_file(dir.file("manifest.json")));
  REQUIRE(j.contains("files"));
  CHECK(j["files"]["a.txt"]["bytes"].get<int>() == 3);
  CHECK(j["files"]["a.txt"]["sha256"].get<std::string>() ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(j["files"]["b.txt"]["bytes"].get<int>() == 6);

  CHECK_THROWS_AS(io::write_manifest(dir.path.string(), {"nope.txt"}), DataError);
}

TEST_CASE("checkpoints round trip and rewrite byte-identically") {
  TempDir dir("ckpt");
  checkpoint::Checkpoint ck;
  ck.meta["version"] = 1;
  ck.meta["kind"] = "test";
  ck.put("mat", Eigen::MatrixXd(random_matrix(5, 3, 11)));
  ck.put("vec", Eigen::VectorXd(random_matrix(4, 1, 12).col(0)));

  const std::string d1 = (dir.path / "one").string();
  const std::string d2 = (dir.path / "two").string();
  ck.save(d1);
  ck.save(d2);
  CHECK(io::read_text_file(d1 + "/model.json") == io::read_text_file(d2 + "/model.json"));
  CHECK(io::read_text_file(d1 + "/arrays.bin") == io::read_text_file(d2 + "/arrays.bin"));

  const checkpoint::Checkpoint back = checkpoint::Checkpoint::load(d1);
  CHECK(back.meta.at("version").get<int>() == 1);
  REQUIRE(back.has("mat"));
  REQUIRE(back.has("vec"));
  CHECK(!back.has("other"));
  CHECK((back.matrix("mat") - ck.matrix("mat")).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.vector("vec") - ck.vector("vec")).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("config defaults, file loading, and overrides") {
  TempDir dir("cfg");
  const config::Config def = config::Config::load("", {});
  CHECK(def.fda.num_basis == 150);
  CHECK(def.model.neighbors == 20);
  CHECK(def.mcmc.iterations == 3500);

  io::write_text_file(dir.file("cfg.json"),
                      R"({"fda": {"num_basis": 80}, "model": {"trend": "linear"}})");
  const config::Config fromfile = config::Config::load(dir.file("cfg.json"), {});
  CHECK(fromfile.fda.num_basis == 80);
  CHECK(fromfile.model.trend == "linear");
  CHECK(fromfile.mcmc.iterations == 3500);  // untouched sections keep defaults

  const config::Config overridden = config::Config::load(
      dir.file("cfg.json"),
      {"fda.num_basis=99", "synth.missing_fraction=0.25", "model.trend=constant",
       "seed=42"});
  CHECK(overridden.fda.num_basis == 99);
  CHECK(overridden.synth.missing_fraction == 0.25);
  CHECK(overridden.model.trend == "constant");
  CHECK(overridden.seed == 42);

  // unknown keys are rejected at every level
  io::write_text_file(dir.file("bad.json"), R"({"fda": {"nonsense": 1}})");
  CHECK_THROWS_AS(config::Config::load(dir.file("bad.json"), {}), ConfigError);
  io::write_text_file(dir.file("bad2.json"), R"({"somewhere": {}})");
  CHECK_THROWS_AS(config::Config::load(dir.file("bad2.json"), {}), ConfigError);
  CHECK_THROWS_AS(config::Config::load("", {"fda.nonsense=1"}), ConfigError);
  CHECK_THROWS_AS(config::Config::load("", {"no_equals_sign"}), ConfigError);
  CHECK_THROWS_AS(config::Config::load("", {"mcmc.iterations=0"}), ConfigError);

  // round trip through JSON
  const nlohmann::json j = overridden.to_json();
  const config::Config back = config::Config::from_json(j);
  CHECK(back.to_json() == j);
}

}  // TEST_SUITE
