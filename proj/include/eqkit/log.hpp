// Copyright 2026 The eqkit Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

namespace eqkit {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Level comes from EQKIT_LOG (error|info|debug), read once. Default: error.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("EQKIT_LOG");
    if (env == nullptr) return LogLevel::error;
    const std::string v(env);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    return LogLevel::error;
  }();
  return level;
}

namespace detail {
template <typename... Args>
void log_emit(const char* tag, const Args&... args) {
  std::ostringstream os;
  os << "[eqkit:" << tag << "] ";
  (os << ... << args);
  os << '\n';
  std::cerr << os.str();
}
}  // namespace detail

template <typename... Args>
void log_info(const Args&... args) {
  if (log_level() >= LogLevel::info) detail::log_emit("info", args...);
}

template <typename... Args>
void log_debug(const Args&... args) {
  if (log_level() >= LogLevel::debug) detail::log_emit("debug", args...);
}

template <typename... Args>
void log_error(const Args&... args) {
  detail::log_emit("error", args...);
}

}  // namespace eqkit
