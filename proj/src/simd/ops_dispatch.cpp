/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include <atomic>
#include <cstdlib>
#include <string>

#include "specemu/errors.hpp"
#include "specemu/log.hpp"
#include "specemu/simd/ops.hpp"

namespace specemu::simd {

// Defined in ops_avx2.cpp; returns nullptr when that TU was built without
// AVX2 support.
const Ops* detail_avx2_ops();

namespace {

[[maybe_unused]] bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend env_backend() {
  const char* v = std::getenv("SPECEMU_SIMD");
  if (v == nullptr) return Backend::Auto;
  const std::string s(v);
  if (s == "scalar") return Backend::Scalar;
  if (s == "avx2") return Backend::Avx2;
  if (s == "auto" || s.empty()) return Backend::Auto;
  log_warn("unrecognized SPECEMU_SIMD value '" + s + "', using auto detection");
  return Backend::Auto;
}

std::atomic<Backend> g_requested{env_backend()};

}  // namespace

const Ops* avx2_ops() {
#ifdef SPECEMU_HAVE_AVX2_BACKEND
  if (!cpu_has_avx2()) return nullptr;
  return detail_avx2_ops();
#else
  return nullptr;
#endif
}

void set_backend(Backend b) {
  if (b == Backend::Avx2 && avx2_ops() == nullptr) {
    throw ConfigError("avx2 backend requested but unavailable on this build/CPU");
  }
  g_requested.store(b);
}

Backend requested_backend() { return g_requested.load(); }

const Ops& active_ops() {
  switch (g_requested.load()) {
    case Backend::Scalar:
      return scalar_ops();
    case Backend::Avx2:
      return *avx2_ops();  // set_backend guarantees availability
    case Backend::Auto:
    default: {
      const Ops* v = avx2_ops();
      return v != nullptr ? *v : scalar_ops();
    }
  }
}

}  // namespace specemu::simd
