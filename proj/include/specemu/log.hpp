/*!
* This file is part of specemu, a C++ library for emulating expensive
* simulators with high-dimensional spectral output.
*
* Licensed under the Apache License Version 2.0. See LICENSE file in the
* project root for license information.
*/
#ifndef SPECEMU_LOG_HPP_
#define SPECEMU_LOG_HPP_

#include <functional>
#include <string>

namespace specemu {

enum class LogLevel { Info = 0, Warn = 1 };

/*! Sink receives every emitted message. Default prints to stderr. */
using LogSink = std::function<void(LogLevel, const std::string&)>;

void set_log_sink(LogSink sink);  // empty sink restores the default
void log_info(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace specemu

#endif
