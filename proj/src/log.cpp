// Copyright 2026 The edgekt Authors
//
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

#include "log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string>

namespace edgekt::detail {

namespace {

LogLevel parse_level(const char* text) noexcept {
  if (text == nullptr) return LogLevel::warn;
  const std::string_view s(text);
  if (s == "off") return LogLevel::off;
  if (s == "error") return LogLevel::error;
  if (s == "info") return LogLevel::info;
  if (s == "debug") return LogLevel::debug;
  return LogLevel::warn;
}

constexpr const char* kNames[] = {"off", "error", "warn", "info", "debug"};

}  // namespace

LogLevel log_level() noexcept {
  static const LogLevel level = parse_level(std::getenv("EDGEKT_LOG"));
  return level;
}

void log(LogLevel level, std::string_view message) {
  if (level == LogLevel::off || level > log_level()) return;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::fprintf(stderr, "edgekt [%s] %.*s\n", kNames[static_cast<int>(level)],
               static_cast<int>(message.size()), message.data());
}

}  // namespace edgekt::detail
