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

// Deterministic JSON rendering for reports. Object keys come out sorted and
// every floating-point number is written with 17 significant digits so the
// text round-trips to the exact double.

#ifndef DEJAVU_REPORT_JSON_H_
#define DEJAVU_REPORT_JSON_H_

#include <filesystem>
#include <string>

#include "json.hpp"

namespace dejavu {

std::string FormatDouble(double value);

std::string DumpJson(const nlohmann::json& value);

// Writes DumpJson(value) plus a trailing newline. Throws kIo on failure.
void WriteJsonFile(const nlohmann::json& value,
                   const std::filesystem::path& path);

void WriteTextFile(const std::string& text, const std::filesystem::path& path);

}  // namespace dejavu

#endif  // DEJAVU_REPORT_JSON_H_
