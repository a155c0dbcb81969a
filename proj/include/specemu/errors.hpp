/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_ERRORS_HPP_
#define SPECEMU_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace specemu {

/*! Invalid configuration or argument values. CLI exit code 2. */
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/*! Malformed, missing, or inconsistent input data. CLI exit code 3. */
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/*! Numerical failure (non-SPD system, divergent quadrature, ...). CLI exit code 4. */
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace specemu

#endif
