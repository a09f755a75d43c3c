// Copyright 2026 The dialect-adapt Authors.
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

#pragma once

#include <iosfwd>

namespace dialect::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `dialect` command line. Results go to `out`; progress, the
/// resolved settings of the run (each line prefixed "# ") and errors go to
/// `err`. Errors are reported as "error[<code>]: <message>".
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dialect::cli
