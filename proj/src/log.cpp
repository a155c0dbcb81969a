/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#include "specemu/log.hpp"

#include <cstdio>
#include <mutex>
#include <utility>

namespace specemu {

namespace {
std::mutex g_mutex;
LogSink g_sink;
}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lk(g_mutex);
  g_sink = std::move(sink);
}

static void emit(LogLevel level, const std::string& msg) {
  std::lock_guard<std::mutex> lk(g_mutex);
  if (g_sink) {
    g_sink(level, msg);
    return;
  }
  std::fprintf(stderr, "[specemu]%s %s\n", level == LogLevel::Warn ? " warning:" : "", msg.c_str());
}

void log_info(const std::string& msg) { emit(LogLevel::Info, msg); }
void log_warn(const std::string& msg) { emit(LogLevel::Warn, msg); }

}  // namespace specemu
