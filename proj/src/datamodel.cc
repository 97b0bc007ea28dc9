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

#include "dejavu/datamodel.h"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "dejavu/csv.h"
#include "dejavu/error.h"
#include "dejavu/report_json.h"
#include "json.hpp"

namespace dejavu {
namespace {

constexpr std::array<char, 4> kDvemMagic = {'D', 'V', 'E', 'M'};
constexpr std::uint32_t kDvemVersion = 1;
constexpr std::size_t kDvemHeaderBytes = 4 + 4 + 8 + 4 + 4;
constexpr double kUnitNormTolerance = 1e-4;
constexpr double kProbSumTolerance = 1e-5;

template <typename T>
void PutLittleEndian(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T GetLittleEndian(const std::string& in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(in[offset + i]))
             << (8 * i);
  }
  return value;
}

std::string ReadWholeFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string LineError(const std::filesystem::path& path, std::size_t line_no,
                      const std::string& what) {
  return path.string() + ": line " + std::to_string(line_no) + ": " + what;
}

double ParseDouble(std::string_view text, const std::filesystem::path& path,
                   std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                   value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParseError,
                LineError(path, line_no,
                          "not a number: '" + std::string(text) + "'"));
  }
  return value;
}

SampleId ParseId(const std::string& token, const std::filesystem::path& path,
                 std::size_t line_no) {
  try {
    return SampleId(token);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, LineError(path, line_no, e.what()));
  }
}

// Index of `name` in a sorted, unique vocabulary.
std::size_t SortedIndex(const std::vector<std::string>& names,
                        std::string_view name) {
  auto it = std::lower_bound(names.begin(), names.end(), name);
  return static_cast<std::size_t>(std::distance(names.begin(), it));
}

void CheckUniqueNames(const std::vector<std::string>& names,
                      std::string_view what) {
  std::set<std::string_view> seen;
  for (const auto& name : names) {
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(what) + " name '" + name + "' is repeated");
    }
  }
}

}  // namespace

SampleId::SampleId(std::string token) : token_(std::move(token)) {
  if (token_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sample id must be nonempty");
  }
  if (token_.find_first_of("\r\n") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample id must not contain a newline");
  }
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<SampleId> ids, std::size_t dim,
                                 std::vector<float> values, bool normalized)
    : ids_(std::move(ids)),
      dim_(dim),
      values_(std::move(values)),
      normalized_(normalized) {
  if (values_.size() != ids_.size() * dim_) {
    throw Error(ErrorCode::kDimMismatch,
                "embedding payload has " + std::to_string(values_.size()) +
                    " values, expected " + std::to_string(ids_.size()) + "x" +
                    std::to_string(dim_));
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw Error(ErrorCode::kDuplicateSample, ids_[i].str());
    }
    double norm_sq = 0.0;
    for (float v : row(i)) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFiniteValue, "row " + ids_[i].str());
      }
      norm_sq += static_cast<double>(v) * static_cast<double>(v);
    }
    if (normalized_) {
      if (norm_sq == 0.0) throw Error(ErrorCode::kZeroRow, ids_[i].str());
      if (std::abs(std::sqrt(norm_sq) - 1.0) > kUnitNormTolerance) {
        throw Error(ErrorCode::kNotNormalized, "row " + ids_[i].str());
      }
    }
  }
}

std::optional<std::size_t> EmbeddingMatrix::Find(const SampleId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LabelTable::LabelTable(std::vector<std::string> classes,
                       std::map<SampleId, std::size_t> entries)
    : classes_(std::move(classes)), entries_(std::move(entries)) {
  CheckUniqueNames(classes_, "class");
  for (const auto& [id, label] : entries_) {
    if (label >= classes_.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label index out of range for " + id.str());
    }
  }
}

LabelTable LabelTable::FromNames(
    const std::vector<std::pair<SampleId, std::string>>& rows) {
  std::set<std::string> names;
  for (const auto& row : rows) names.insert(row.second);
  std::vector<std::string> classes(names.begin(), names.end());
  std::map<SampleId, std::size_t> entries;
  for (const auto& [id, name] : rows) {
    if (!entries.emplace(id, SortedIndex(classes, name)).second) {
      throw Error(ErrorCode::kDuplicateSample, id.str());
    }
  }
  return LabelTable(std::move(classes), std::move(entries));
}

std::optional<std::size_t> LabelTable::Find(const SampleId& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> LabelTable::ClassIndex(std::string_view name) const {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i] == name) return i;
  }
  return std::nullopt;
}

LabelTable LabelTable::Reindexed(const std::vector<std::string>& classes) const {
  std::vector<std::size_t> remap(classes_.size());
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    auto it = std::find(classes.begin(), classes.end(), classes_[i]);
    if (it == classes.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "class '" + classes_[i] + "' missing from target class list");
    }
    remap[i] = static_cast<std::size_t>(std::distance(classes.begin(), it));
  }
  std::map<SampleId, std::size_t> entries;
  for (const auto& [id, label] : entries_) {
    entries.emplace_hint(entries.end(), id, remap[label]);
  }
  return LabelTable(classes, std::move(entries));
}

AnnotationTable::AnnotationTable(
    std::vector<std::string> vocabulary,
    std::map<SampleId, std::vector<ScoredObject>> entries)
    : vocabulary_(std::move(vocabulary)), entries_(std::move(entries)) {
  CheckUniqueNames(vocabulary_, "object");
  for (const auto& [id, objects] : entries_) {
    std::set<std::size_t> seen;
    for (const auto& obj : objects) {
      if (obj.object >= vocabulary_.size()) {
        throw Error(ErrorCode::kUnknownObject,
                    "object index " + std::to_string(obj.object) + " in " +
                        id.str());
      }
      if (!seen.insert(obj.object).second) {
        throw Error(ErrorCode::kInvalidArgument,
                    "object '" + vocabulary_[obj.object] + "' repeated in " +
                        id.str());
      }
      if (!std::isfinite(obj.score) || obj.score < 0.0 || obj.score > 1.0) {
        throw Error(ErrorCode::kScoreOutOfRange,
                    "score for '" + vocabulary_[obj.object] + "' in " +
                        id.str());
      }
    }
  }
}

const std::vector<ScoredObject>* AnnotationTable::Find(
    const SampleId& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<std::size_t> AnnotationTable::ObjectIndex(
    std::string_view name) const {
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    if (vocabulary_[i] == name) return i;
  }
  return std::nullopt;
}

AnnotationTable AnnotationTable::Reindexed(
    const std::vector<std::string>& vocabulary) const {
  std::vector<std::size_t> remap(vocabulary_.size());
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    auto it = std::find(vocabulary.begin(), vocabulary.end(), vocabulary_[i]);
    if (it == vocabulary.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "object '" + vocabulary_[i] +
                      "' missing from target vocabulary");
    }
    remap[i] = static_cast<std::size_t>(std::distance(vocabulary.begin(), it));
  }
  std::map<SampleId, std::vector<ScoredObject>> entries;
  for (const auto& [id, objects] : entries_) {
    std::vector<ScoredObject> mapped;
    mapped.reserve(objects.size());
    for (const auto& obj : objects) {
      mapped.push_back({remap[obj.object], obj.score});
    }
    entries.emplace_hint(entries.end(), id, std::move(mapped));
  }
  return AnnotationTable(vocabulary, std::move(entries));
}

ProbTable::ProbTable(std::vector<std::string> classes,
                     std::map<SampleId, std::vector<double>> entries)
    : classes_(std::move(classes)), entries_(std::move(entries)) {
  CheckUniqueNames(classes_, "class");
  for (const auto& [id, probs] : entries_) {
    if (probs.size() != classes_.size()) {
      throw Error(ErrorCode::kDimMismatch, "probability row for " + id.str());
    }
    double sum = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0) {
        throw Error(ErrorCode::kInvalidDistribution,
                    "probability row for " + id.str());
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbSumTolerance) {
      throw Error(ErrorCode::kInvalidDistribution,
                  "probability row for " + id.str() + " sums to " +
                      FormatDouble(sum));
    }
  }
}

const std::vector<double>* ProbTable::Find(const SampleId& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::filesystem::path IdsPathFor(const std::filesystem::path& dvem_path) {
  auto ids = dvem_path;
  ids.replace_extension(".ids");
  return ids;
}

EmbeddingMatrix LoadEmbeddings(const std::filesystem::path& path) {
  const std::string bytes = ReadWholeFile(path);
  if (bytes.size() < kDvemHeaderBytes ||
      !std::equal(kDvemMagic.begin(), kDvemMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::kMagicMismatch, path.string());
  }
  const auto version = GetLittleEndian<std::uint32_t>(bytes, 4);
  if (version != kDvemVersion) {
    throw Error(ErrorCode::kVersionUnsupported,
                path.string() + ": version " + std::to_string(version));
  }
  const auto n = GetLittleEndian<std::uint64_t>(bytes, 8);
  const auto d = GetLittleEndian<std::uint32_t>(bytes, 16);
  const auto reserved = GetLittleEndian<std::uint32_t>(bytes, 20);
  if (reserved != 0) {
    throw Error(ErrorCode::kParseError, path.string() + ": reserved field set");
  }
  const std::uint64_t count = n * static_cast<std::uint64_t>(d);
  if (d != 0 && count / d != n) {
    throw Error(ErrorCode::kParseError, path.string() + ": header overflow");
  }
  if (bytes.size() - kDvemHeaderBytes != count * sizeof(float)) {
    throw Error(ErrorCode::kParseError,
                path.string() + ": payload size does not match header");
  }

  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto raw = GetLittleEndian<std::uint32_t>(
        bytes, kDvemHeaderBytes + i * sizeof(float));
    values[i] = std::bit_cast<float>(raw);
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::kNonFiniteValue,
                  path.string() + ": row " + std::to_string(i / d));
    }
  }

  const auto ids_path = IdsPathFor(path);
  const std::string id_text = ReadWholeFile(ids_path);
  std::vector<SampleId> ids;
  std::size_t start = 0;
  while (start < id_text.size()) {
    std::size_t end = id_text.find('\n', start);
    if (end == std::string::npos) end = id_text.size();
    std::string token = id_text.substr(start, end - start);
    if (!token.empty() && token.back() == '\r') token.pop_back();
    ids.push_back(ParseId(token, ids_path, ids.size() + 1));
    start = end + 1;
  }
  if (ids.size() != n) {
    throw Error(ErrorCode::kIdCountMismatch,
                ids_path.string() + ": " + std::to_string(ids.size()) +
                    " ids for " + std::to_string(n) + " rows");
  }
  return EmbeddingMatrix(std::move(ids), d, std::move(values), false);
}

void SaveEmbeddings(const EmbeddingMatrix& matrix,
                    const std::filesystem::path& path) {
  std::string bytes(kDvemMagic.begin(), kDvemMagic.end());
  bytes.reserve(kDvemHeaderBytes + matrix.values().size() * sizeof(float));
  PutLittleEndian<std::uint32_t>(bytes, kDvemVersion);
  PutLittleEndian<std::uint64_t>(bytes, matrix.rows());
  PutLittleEndian<std::uint32_t>(bytes,
                                 static_cast<std::uint32_t>(matrix.dim()));
  PutLittleEndian<std::uint32_t>(bytes, 0);
  for (float v : matrix.values()) {
    PutLittleEndian<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(v));
  }
  WriteTextFile(bytes, path);

  std::string ids;
  for (const auto& id : matrix.ids()) {
    ids += id.str();
    ids += '\n';
  }
  WriteTextFile(ids, IdsPathFor(path));
}

EmbeddingMatrix NormalizeRows(const EmbeddingMatrix& matrix) {
  std::vector<float> values(matrix.values().size());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    const auto row = matrix.row(i);
    double norm_sq = 0.0;
    for (float v : row) norm_sq += static_cast<double>(v) * v;
    if (norm_sq == 0.0) {
      throw Error(ErrorCode::kZeroRow, matrix.ids()[i].str());
    }
    const double norm = std::sqrt(norm_sq);
    for (std::size_t j = 0; j < row.size(); ++j) {
      values[i * matrix.dim() + j] = static_cast<float>(row[j] / norm);
    }
  }
  return EmbeddingMatrix(matrix.ids(), matrix.dim(), std::move(values), true);
}

LabelTable LoadLabels(const std::filesystem::path& path) {
  const auto records = ReadCsvFile(path);
  if (records.empty() || records[0] != std::vector<std::string>{"id", "label"}) {
    throw Error(ErrorCode::kParseError,
                LineError(path, 1, "expected header 'id,label'"));
  }
  std::vector<std::pair<SampleId, std::string>> rows;
  std::set<SampleId> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != 2) {
      throw Error(ErrorCode::kParseError,
                  LineError(path, r + 1, "expected 2 fields"));
    }
    SampleId id = ParseId(rec[0], path, r + 1);
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kDuplicateSample, path.string() + ": " + rec[0]);
    }
    if (rec[1].empty()) {
      throw Error(ErrorCode::kParseError, LineError(path, r + 1, "empty label"));
    }
    rows.emplace_back(std::move(id), rec[1]);
  }
  return LabelTable::FromNames(rows);
}

void SaveLabels(const LabelTable& table, const std::filesystem::path& path) {
  std::string text = "id,label\n";
  for (const auto& [id, label] : table.entries()) {
    text += QuoteCsvField(id.str());
    text += ',';
    text += QuoteCsvField(table.classes()[label]);
    text += '\n';
  }
  WriteTextFile(text, path);
}

AnnotationTable LoadAnnotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());

  struct Row {
    SampleId id;
    std::vector<std::pair<std::string, double>> objects;
  };
  std::vector<Row> rows;
  std::set<SampleId> seen;
  std::set<std::string> names;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, LineError(path, line_no, e.what()));
    }
    if (!doc.is_object() || !doc.contains("id") || !doc["id"].is_string() ||
        !doc.contains("objects") || !doc["objects"].is_array()) {
      throw Error(ErrorCode::kParseError,
                  LineError(path, line_no, "expected {\"id\", \"objects\"}"));
    }
    Row row{ParseId(doc["id"].get<std::string>(), path, line_no), {}};
    if (!seen.insert(row.id).second) {
      throw Error(ErrorCode::kDuplicateSample,
                  path.string() + ": " + row.id.str());
    }
    std::set<std::string> line_names;
    for (const auto& obj : doc["objects"]) {
      if (!obj.is_object() || !obj.contains("name") ||
          !obj["name"].is_string() || !obj.contains("score") ||
          !obj["score"].is_number()) {
        throw Error(ErrorCode::kParseError,
                    LineError(path, line_no,
                              "object entries need a name and a score"));
      }
      auto name = obj["name"].get<std::string>();
      const double score = obj["score"].get<double>();
      if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
        throw Error(ErrorCode::kScoreOutOfRange,
                    LineError(path, line_no, "score for '" + name + "'"));
      }
      if (!line_names.insert(name).second) {
        throw Error(ErrorCode::kParseError,
                    LineError(path, line_no, "object '" + name + "' repeated"));
      }
      names.insert(name);
      row.objects.emplace_back(std::move(name), score);
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::string> vocabulary(names.begin(), names.end());
  std::map<SampleId, std::vector<ScoredObject>> entries;
  for (auto& row : rows) {
    std::vector<ScoredObject> objects;
    objects.reserve(row.objects.size());
    for (const auto& [name, score] : row.objects) {
      objects.push_back({SortedIndex(vocabulary, name), score});
    }
    entries.emplace(std::move(row.id), std::move(objects));
  }
  return AnnotationTable(std::move(vocabulary), std::move(entries));
}

void SaveAnnotations(const AnnotationTable& table,
                     const std::filesystem::path& path) {
  std::string text;
  for (const auto& [id, objects] : table.entries()) {
    text += "{\"id\":" + nlohmann::json(id.str()).dump() + ",\"objects\":[";
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (i > 0) text += ',';
      text += "{\"name\":" +
              nlohmann::json(table.vocabulary()[objects[i].object]).dump() +
              ",\"score\":" + FormatDouble(objects[i].score) + "}";
    }
    text += "]}\n";
  }
  WriteTextFile(text, path);
}

ProbTable LoadProbs(const std::filesystem::path& path) {
  const auto records = ReadCsvFile(path);
  if (records.empty() || records[0].size() < 2 || records[0][0] != "id") {
    throw Error(ErrorCode::kParseError,
                LineError(path, 1, "expected header 'id,<class>,...'"));
  }
  std::vector<std::string> header(records[0].begin() + 1, records[0].end());
  std::vector<std::string> classes = header;
  std::sort(classes.begin(), classes.end());
  if (std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
    throw Error(ErrorCode::kParseError,
                LineError(path, 1, "repeated class column"));
  }
  std::vector<std::size_t> column_to_class(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    column_to_class[c] = SortedIndex(classes, header[c]);
  }

  std::map<SampleId, std::vector<double>> entries;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::size_t line_no = r + 1;
    if (rec.size() != header.size() + 1) {
      throw Error(ErrorCode::kParseError,
                  LineError(path, line_no, "wrong number of fields"));
    }
    SampleId id = ParseId(rec[0], path, line_no);
    std::vector<double> probs(classes.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const double p = ParseDouble(rec[c + 1], path, line_no);
      if (!std::isfinite(p) || p < 0.0) {
        throw Error(ErrorCode::kParseError,
                    LineError(path, line_no, "probability out of range"));
      }
      probs[column_to_class[c]] = p;
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbSumTolerance) {
      throw Error(ErrorCode::kParseError,
                  LineError(path, line_no,
                            "probabilities sum to " + FormatDouble(sum)));
    }
    if (!entries.emplace(id, std::move(probs)).second) {
      throw Error(ErrorCode::kDuplicateSample, path.string() + ": " + rec[0]);
    }
  }
  return ProbTable(std::move(classes), std::move(entries));
}

void SaveProbs(const ProbTable& table, const std::filesystem::path& path) {
  std::string text = "id";
  for (const auto& name : table.classes()) text += "," + QuoteCsvField(name);
  text += '\n';
  for (const auto& [id, probs] : table.entries()) {
    text += QuoteCsvField(id.str());
    for (double p : probs) text += "," + FormatDouble(p);
    text += '\n';
  }
  WriteTextFile(text, path);
}

std::vector<std::string> MergeNames(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::set<std::string> names(a.begin(), a.end());
  names.insert(b.begin(), b.end());
  return {names.begin(), names.end()};
}

}  // namespace dejavu
