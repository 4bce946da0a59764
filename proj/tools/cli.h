/*
 * Copyright 2026 The Cardforge Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CARDFORGE_TOOLS_CLI_H_
#define CARDFORGE_TOOLS_CLI_H_

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace cardforge::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitViolations = 1,
  kExitUsage = 2,
  kExitDataError = 3,
};

// Option values bound by the parser; one instance per invocation.
struct Options;
struct OptionsDeleter {
  void operator()(Options* options) const;
};
using OptionsPtr = std::unique_ptr<Options, OptionsDeleter>;

// The full command tree with every flag registered. `options` must outlive
// the returned app.
std::unique_ptr<CLI::App> build_app(Options& options);
OptionsPtr make_options();

// Runs one invocation; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace cardforge::cli

#endif  // CARDFORGE_TOOLS_CLI_H_
