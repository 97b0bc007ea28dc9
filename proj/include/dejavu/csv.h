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

#ifndef DEJAVU_CSV_H_
#define DEJAVU_CSV_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dejavu {

// Minimal RFC 4180 field handling: fields containing a comma or a double
// quote are quoted, embedded quotes are doubled. Records never span lines.
std::vector<std::string> SplitCsvLine(std::string_view line);
std::string QuoteCsvField(std::string_view field);

// Reads every non-empty line of `path` as a CSV record. The header is
// returned as the first record. Throws kIo if the file cannot be opened.
std::vector<std::vector<std::string>> ReadCsvFile(
    const std::filesystem::path& path);

}  // namespace dejavu

#endif  // DEJAVU_CSV_H_
