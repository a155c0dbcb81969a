/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_IO_HPP_
#define SPECEMU_IO_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace specemu::io {

/*!
* Shortest round-trip decimal form of a double. All CSV writers go through
* this, so artifacts produced from the same seed are byte identical across
* runs; NaN is spelled "NaN".
*/
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

//! Headerless numeric CSV. Empty fields and "NaN"/"nan" read as NaN, the
//! writer emits "NaN" for missing values.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

void write_vector_csv(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector_csv(const std::string& path);

//! Spectra file: first row the wavelength grid, one row per run after it.
struct SpectraFile {
  Eigen::VectorXd wavelengths;
  Eigen::MatrixXd values;  // runs x wavelengths, NaN marks missing
};

void write_spectra_csv(const std::string& path, const SpectraFile& spectra);
SpectraFile read_spectra_csv(const std::string& path);

struct PredictionRow {
  int run_id = 0;
  std::string band;
  double wavelength = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

void write_predictions_csv(const std::string& path, const std::vector<PredictionRow>& rows);

//! Posterior draws, one row per kept iterate: theta_1..theta_k then tau2.
void write_samples_csv(const std::string& path, const Eigen::MatrixXd& samples);
Eigen::MatrixXd read_samples_csv(const std::string& path);

//! Per-iterate target values alongside the kept draws.
void write_trace_csv(const std::string& path, const Eigen::VectorXd& trace);

struct RmspeRow {
  double wavelength = 0.0;
  std::string band;
  double rmspe = 0.0;
};

void write_rmspe_csv(const std::string& path, const std::vector<RmspeRow>& rows);

//! Lowercase hex SHA-256.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_file(const std::string& path);

//! dir/manifest.json listing each file with its byte size and SHA-256.
void write_manifest(const std::string& dir, const std::vector<std::string>& files);

}  // namespace specemu::io

#endif
