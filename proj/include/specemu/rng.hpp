/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_RNG_HPP_
#define SPECEMU_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace specemu {

using Rng = std::mt19937_64;

/*!
* Deterministic substream derivation: one root seed plus a stream name yields
* an independent seed. FNV-1a over the name bytes mixed with the root through
* splitmix64 finalizers; stable across platforms, unlike std::hash.
*/
std::uint64_t substream_seed(std::uint64_t root, std::string_view name);

Rng make_rng(std::uint64_t root, std::string_view name);

}  // namespace specemu

#endif
