/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "specemu/checkpoint.hpp"
#include "specemu/errors.hpp"
#include "specemu/io.hpp"

namespace specemu::checkpoint {
namespace {

static_assert(sizeof(double) == 8, "checkpoint format assumes 8-byte doubles");

bool is_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char first;
  std::memcpy(&first, &probe, 1);
  return first == 1;
}

void byteswap_doubles(double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char* p = reinterpret_cast<unsigned char*>(data + i);
    for (int a = 0; a < 4; ++a) std::swap(p[a], p[7 - a]);
  }
}

}  // namespace

void Checkpoint::put(const std::string& name, const Eigen::MatrixXd& value) {
  if (name.empty()) throw ConfigError("checkpoint: empty array name");
  arrays_[name] = value;
}

void Checkpoint::put(const std::string& name, const Eigen::VectorXd& value) {
  put(name, Eigen::MatrixXd(value));
}

bool Checkpoint::has(const std::string& name) const { return arrays_.count(name) != 0; }

const Eigen::MatrixXd& Checkpoint::matrix(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw DataError("checkpoint: missing array '" + name + "'");
  return it->second;
}

Eigen::VectorXd Checkpoint::vector(const std::string& name) const {
  const Eigen::MatrixXd& m = matrix(name);
  if (m.cols() != 1) throw DataError("checkpoint: array '" + name + "' is not a column");
  return m.col(0);
}

void Checkpoint::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json doc = meta;
  doc["arrays"] = nlohmann::json::object();

  std::string bin;
  std::uint64_t offset = 0;
  for (const auto& [name, m] : arrays_) {  // std::map iterates sorted by name
    doc["arrays"][name] = {{"offset", offset},
                           {"rows", static_cast<std::int64_t>(m.rows())},
                           {"cols", static_cast<std::int64_t>(m.cols())}};
    const std::size_t bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
    if (is_little_endian()) {
      bin.append(reinterpret_cast<const char*>(m.data()), bytes);
    } else {
      Eigen::MatrixXd tmp = m;
      byteswap_doubles(tmp.data(), static_cast<std::size_t>(tmp.size()));
      bin.append(reinterpret_cast<const char*>(tmp.data()), bytes);
    }
    offset += bytes;
  }

  io::write_text_file(dir + "/model.json", doc.dump(2) + "\n");
  std::ofstream out(dir + "/arrays.bin", std::ios::binary);
  if (!out) throw DataError("cannot write '" + dir + "/arrays.bin'");
  out.write(bin.data(), static_cast<std::streamsize>(bin.size()));
  if (!out) throw DataError("write failed for '" + dir + "/arrays.bin'");
}

Checkpoint Checkpoint::load(const std::string& dir) {
  Checkpoint cp;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text_file(dir + "/model.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("checkpoint: bad model.json in '" + dir + "': " + e.what());
  }
  if (!doc.contains("arrays") || !doc["arrays"].is_object()) {
    throw DataError("checkpoint: model.json in '" + dir + "' lacks an array directory");
  }

  std::ifstream in(dir + "/arrays.bin", std::ios::binary);
  if (!in) throw DataError("cannot open '" + dir + "/arrays.bin'");
  std::string bin((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  for (const auto& [name, entry] : doc["arrays"].items()) {
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    const std::int64_t rows = entry.at("rows").get<std::int64_t>();
    const std::int64_t cols = entry.at("cols").get<std::int64_t>();
    if (rows < 0 || cols < 0) throw DataError("checkpoint: negative shape for '" + name + "'");
    const std::uint64_t bytes = std::uint64_t(rows) * std::uint64_t(cols) * sizeof(double);
    if (offset + bytes > bin.size()) {
      throw DataError("checkpoint: array '" + name + "' exceeds arrays.bin");
    }
    Eigen::MatrixXd m(rows, cols);
    std::memcpy(m.data(), bin.data() + offset, bytes);
    if (!is_little_endian()) byteswap_doubles(m.data(), static_cast<std::size_t>(m.size()));
    cp.arrays_[name] = std::move(m);
  }

  doc.erase("arrays");
  cp.meta = std::move(doc);
  return cp;
}

}  // namespace specemu::checkpoint
