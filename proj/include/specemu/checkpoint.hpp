/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_CHECKPOINT_HPP_
#define SPECEMU_CHECKPOINT_HPP_

#include <Eigen/Dense>
#include <map>
#include <string>

#include <json.hpp>

namespace specemu::checkpoint {

/*!
* Two-file model checkpoint: model.json holds scalar metadata plus the
* array directory, arrays.bin the concatenated column-major doubles in
* little-endian order. Arrays are laid out sorted by name and the JSON is
* emitted with sorted keys and no timestamps, so saving the same state twice
* produces byte-identical files.
*/
class Checkpoint {
 public:
  nlohmann::json meta;  //!< free-form metadata, "arrays" is reserved

  void put(const std::string& name, const Eigen::MatrixXd& value);
  void put(const std::string& name, const Eigen::VectorXd& value);

  bool has(const std::string& name) const;
  const Eigen::MatrixXd& matrix(const std::string& name) const;
  Eigen::VectorXd vector(const std::string& name) const;

  //! Write dir/model.json and dir/arrays.bin, creating dir if needed.
  void save(const std::string& dir) const;

  static Checkpoint load(const std::string& dir);

 private:
  std::map<std::string, Eigen::MatrixXd> arrays_;
};

}  // namespace specemu::checkpoint

#endif
