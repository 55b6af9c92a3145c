// Copyright 2026 The iontomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace iontomo::cli {

/// Environment variable naming the directory for reports when --output is absent.
inline constexpr const char *kOutputDirEnv = "IONTOMO_OUTPUT_DIR";

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`; failures print one JSON line {"error": kind, "message": ...} to `err`.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Copy of `j` with every floating-point number rounded to `digits` significant
/// digits. digits <= 0 leaves values untouched.
nlohmann::json round_numbers(const nlohmann::json &j, int digits);

}  // namespace iontomo::cli
