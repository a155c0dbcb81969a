/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include "specemu/cli.hpp"

int main(int argc, char** argv) { return specemu::cli_main(argc, argv); }
