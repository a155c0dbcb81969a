/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_CLI_HPP_
#define SPECEMU_CLI_HPP_

namespace specemu {

/*!
* Command-line entry point: synth | fpca | subspace | train | predict |
* validate, each a pure function of its input files, the configuration, and
* the seed. Returns 0 on success, 2 on configuration errors, 3 on data
* errors, 4 on numerical failures.
*/
int cli_main(int argc, char** argv);

}  // namespace specemu

#endif
