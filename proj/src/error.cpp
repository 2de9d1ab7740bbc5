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

#include "edgekt/error.hpp"

namespace edgekt {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::non_finite: return "non-finite value";
    case Errc::overflow: return "overflow";
    case Errc::bad_magic: return "bad magic";
    case Errc::truncated: return "truncated message";
    case Errc::unknown_type: return "unknown message type";
    case Errc::stale_version: return "stale version";
    case Errc::config: return "configuration error";
    case Errc::io: return "i/o error";
    case Errc::out_of_range: return "out of range";
    case Errc::channel_outage: return "channel outage";
  }
  return "unknown error";
}

}  // namespace edgekt
