// Copyright 2026 The Dejavu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Subcommands: nb-fit, vision, vlm, synth, agree.
// Exit codes: 0 on success, 1 on a data error, 2 on a usage error.

#ifndef DEJAVU_CLI_H_
#define DEJAVU_CLI_H_

#include <string>
#include <string_view>
#include <vector>

namespace dejavu {

inline constexpr std::string_view kArtifactVersion = "1.0.0";

// `args` excludes the program name. Diagnostics go to standard error.
int RunCli(const std::vector<std::string>& args);

int RunCli(int argc, const char* const* argv);

}  // namespace dejavu

#endif  // DEJAVU_CLI_H_
