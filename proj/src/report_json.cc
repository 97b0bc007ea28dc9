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

#include "dejavu/report_json.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include "dejavu/error.h"

namespace dejavu {
namespace {

void Indent(std::string& out, int depth) { out.append(2 * depth, ' '); }

void Render(const nlohmann::json& value, int depth, std::string& out) {
  using Type = nlohmann::json::value_t;
  switch (value.type()) {
    case Type::object: {
      if (value.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        Indent(out, depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        Render(it.value(), depth + 1, out);
      }
      out += "\n";
      Indent(out, depth);
      out += "}";
      return;
    }
    case Type::array: {
      if (value.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i > 0) out += ",\n";
        Indent(out, depth + 1);
        Render(value[i], depth + 1, out);
      }
      out += "\n";
      Indent(out, depth);
      out += "]";
      return;
    }
    case Type::number_float:
      out += FormatDouble(value.get<double>());
      return;
    default:
      out += value.dump();
      return;
  }
}

}  // namespace

std::string FormatDouble(double value) {
  // JSON has no spelling for non-finite numbers.
  if (!std::isfinite(value)) return "null";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  (void)ec;
  std::string text(buf, end);
  // Keep the token recognisably floating-point.
  if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
  return text;
}

std::string DumpJson(const nlohmann::json& value) {
  std::string out;
  Render(value, 0, out);
  return out;
}

void WriteTextFile(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void WriteJsonFile(const nlohmann::json& value,
                   const std::filesystem::path& path) {
  WriteTextFile(DumpJson(value) + "\n", path);
}

}  // namespace dejavu
