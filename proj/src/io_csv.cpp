/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "specemu/errors.hpp"
#include "specemu/io.hpp"

namespace specemu::io {
namespace {

double parse_field(const std::string& field, const std::string& path, std::size_t line) {
  if (field.empty() || field == "NaN" || field == "nan" || field == "NA") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw DataError(path + ":" + std::to_string(line) + ": bad numeric field '" + field + "'");
  }
  return v;
}

std::vector<std::vector<double>> read_rows(const std::string& path, std::size_t skip,
                                           std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno <= skip) {
      if (header != nullptr) {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) header->push_back(field);
      }
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string field = line.substr(start, comma == std::string::npos
                                                       ? std::string::npos
                                                       : comma - start);
      row.push_back(parse_field(field, path, lineno));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Eigen::MatrixXd();
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void append_row(std::string& out, const Eigen::MatrixXd& m, Eigen::Index i) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j > 0) out.push_back(',');
    out += format_double(m(i, j));
  }
  out.push_back('\n');
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 14 + 16);
  for (Eigen::Index i = 0; i < m.rows(); ++i) append_row(out, m, i);
  write_text_file(path, out);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  return rows_to_matrix(read_rows(path, 0, nullptr));
}

void write_vector_csv(const std::string& path, const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += format_double(v[i]);
    out.push_back('\n');
  }
  write_text_file(path, out);
}

Eigen::VectorXd read_vector_csv(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.size() == 0) throw DataError("'" + path + "' is empty");
  if (m.cols() != 1) throw DataError("'" + path + "' is not a single column");
  return m.col(0);
}

void write_spectra_csv(const std::string& path, const SpectraFile& spectra) {
  if (spectra.values.size() != 0 && spectra.values.cols() != spectra.wavelengths.size()) {
    throw ConfigError("write_spectra_csv: grid width mismatch");
  }
  std::string out;
  out.reserve(static_cast<std::size_t>(spectra.values.size() + spectra.wavelengths.size()) * 14);
  for (Eigen::Index j = 0; j < spectra.wavelengths.size(); ++j) {
    if (j > 0) out.push_back(',');
    out += format_double(spectra.wavelengths[j]);
  }
  out.push_back('\n');
  for (Eigen::Index i = 0; i < spectra.values.rows(); ++i) append_row(out, spectra.values, i);
  write_text_file(path, out);
}

SpectraFile read_spectra_csv(const std::string& path) {
  const Eigen::MatrixXd all = rows_to_matrix(read_rows(path, 0, nullptr));
  if (all.rows() < 1) throw DataError("'" + path + "' has no wavelength row");
  SpectraFile s;
  s.wavelengths = all.row(0).transpose();
  for (Eigen::Index j = 0; j < s.wavelengths.size(); ++j) {
    if (std::isnan(s.wavelengths[j])) {
      throw DataError("'" + path + "': wavelength row contains missing values");
    }
  }
  s.values = all.bottomRows(all.rows() - 1);
  return s;
}

void write_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows) {
  std::string out = "run_id,band,wavelength,mean,sd,q025,q975\n";
  for (const auto& r : rows) {
    out += std::to_string(r.run_id);
    out.push_back(',');
    out += r.band;
    out.push_back(',');
    out += format_double(r.wavelength);
    out.push_back(',');
    out += format_double(r.mean);
    out.push_back(',');
    out += format_double(r.sd);
    out.push_back(',');
    out += format_double(r.q025);
    out.push_back(',');
    out += format_double(r.q975);
    out.push_back('\n');
  }
  write_text_file(path, out);
}

void write_samples_csv(const std::string& path, const Eigen::MatrixXd& samples) {
  if (samples.cols() < 2) throw ConfigError("write_samples_csv: need ranges plus nugget");
  std::string out;
  const Eigen::Index k = samples.cols() - 1;
  for (Eigen::Index j = 0; j < k; ++j) {
    out += "theta_" + std::to_string(j + 1);
    out.push_back(',');
  }
  out += "tau2\n";
  for (Eigen::Index i = 0; i < samples.rows(); ++i) append_row(out, samples, i);
  write_text_file(path, out);
}

Eigen::MatrixXd read_samples_csv(const std::string& path) {
  std::vector<std::string> header;
  const Eigen::MatrixXd m = rows_to_matrix(read_rows(path, 1, &header));
  if (header.empty() || header.back() != "tau2") {
    throw DataError("'" + path + "' is not a samples file");
  }
  if (m.cols() != static_cast<Eigen::Index>(header.size())) {
    throw DataError("'" + path + "': header and data width differ");
  }
  return m;
}

void write_trace_csv(const std::string& path, const Eigen::VectorXd& trace) {
  std::string out = "iterate,log_target\n";
  for (Eigen::Index i = 0; i < trace.size(); ++i) {
    out += std::to_string(i);
    out.push_back(',');
    out += format_double(trace[i]);
    out.push_back('\n');
  }
  write_text_file(path, out);
}

void write_rmspe_csv(const std::string& path, const std::vector<RmspeRow>& rows) {
  std::string out = "wavelength,band,rmspe\n";
  for (const auto& r : rows) {
    out += format_double(r.wavelength);
    out.push_back(',');
    out += r.band;
    out.push_back(',');
    out += format_double(r.rmspe);
    out.push_back('\n');
  }
  write_text_file(path, out);
}

}  // namespace specemu::io
