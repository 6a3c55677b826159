/*
 * Copyright 2026 The twec-metaphor Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TWEC_CLI_HPP
#define TWEC_CLI_HPP

#include <memory>
#include <string>

namespace CLI {
class App;
}

namespace twec {

inline constexpr const char* kVersion = "0.1.0";

/// Parses argv and runs one subcommand. Returns the process exit code:
/// 0 success, 1 validation error, 2 data error.
int run(int argc, char** argv);

/// The configured command tree without running anything (used by the help
/// coverage test).
std::unique_ptr<CLI::App> build_app();

}  // namespace twec

#endif  // TWEC_CLI_HPP
