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

// Core domain types shared by every module, together with their on-disk
// formats:
//
//   * DVEM embedding files: little-endian header (magic "DVEM", u32 version,
//     u64 rows, u32 dim, u32 reserved) followed by rows*dim float32 values in
//     row-major order. Sample ids live in a sidecar `<stem>.ids` text file,
//     one id per line, so the payload stays memory-mappable.
//   * Labels: CSV with header `id,label`.
//   * Annotations: JSONL, {"id": str, "objects": [{"name": str, "score": f}]}.
//   * Probabilities: CSV with header `id,<class0>,<class1>,...`.
//
// Class lists and object vocabularies are always the sorted set of names seen
// in the data, so indexing never depends on file line order.

#ifndef DEJAVU_DATAMODEL_H_
#define DEJAVU_DATAMODEL_H_

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dejavu {

// Identifies one sample across every file describing the same dataset.
class SampleId {
 public:
  SampleId() = default;
  // Throws kInvalidArgument on an empty token or one containing a newline.
  explicit SampleId(std::string token);

  const std::string& str() const noexcept { return token_; }

  friend auto operator<=>(const SampleId&, const SampleId&) = default;
  friend bool operator==(const SampleId&, const SampleId&) = default;

 private:
  std::string token_;
};

struct SampleIdHash {
  std::size_t operator()(const SampleId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};

// n x d float32 matrix with one SampleId per row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Validates shape and finiteness, and rejects duplicate ids. When `normalized` is set,
  // every row must have unit L2 norm within 1e-4.
  EmbeddingMatrix(std::vector<SampleId> ids, std::size_t dim,
                  std::vector<float> values, bool normalized = false);

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool normalized() const noexcept { return normalized_; }
  const std::vector<SampleId>& ids() const noexcept { return ids_; }
  const std::vector<float>& values() const noexcept { return values_; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::optional<std::size_t> Find(const SampleId& id) const;

 private:
  std::vector<SampleId> ids_;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  bool normalized_ = false;
  std::unordered_map<SampleId, std::size_t, SampleIdHash> index_;
};

// Foreground class label per sample.
class LabelTable {
 public:
  LabelTable() = default;
  LabelTable(std::vector<std::string> classes,
             std::map<SampleId, std::size_t> entries);
  // Builds the class list as the sorted set of label names.
  static LabelTable FromNames(
      const std::vector<std::pair<SampleId, std::string>>& rows);

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const std::map<SampleId, std::size_t>& entries() const noexcept {
    return entries_;
  }
  std::size_t size() const noexcept { return entries_.size(); }
  std::optional<std::size_t> Find(const SampleId& id) const;
  std::optional<std::size_t> ClassIndex(std::string_view name) const;
  // Re-expresses every label against `classes`, which must contain all of
  // this table's class names.
  LabelTable Reindexed(const std::vector<std::string>& classes) const;

  friend bool operator==(const LabelTable&, const LabelTable&) = default;

 private:
  std::vector<std::string> classes_;
  std::map<SampleId, std::size_t> entries_;
};

struct ScoredObject {
  std::size_t object = 0;
  double score = 0.0;

  friend bool operator==(const ScoredObject&, const ScoredObject&) = default;
};

// Scored detected-object list per sample over an object vocabulary.
class AnnotationTable {
 public:
  AnnotationTable() = default;
  AnnotationTable(std::vector<std::string> vocabulary,
                  std::map<SampleId, std::vector<ScoredObject>> entries);

  const std::vector<std::string>& vocabulary() const noexcept {
    return vocabulary_;
  }
  const std::map<SampleId, std::vector<ScoredObject>>& entries()
      const noexcept {
    return entries_;
  }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<ScoredObject>* Find(const SampleId& id) const;
  std::optional<std::size_t> ObjectIndex(std::string_view name) const;
  AnnotationTable Reindexed(const std::vector<std::string>& vocabulary) const;

  friend bool operator==(const AnnotationTable&,
                         const AnnotationTable&) = default;

 private:
  std::vector<std::string> vocabulary_;
  std::map<SampleId, std::vector<ScoredObject>> entries_;
};

// Per-sample class probabilities produced by an externally trained
// classifier.
class ProbTable {
 public:
  ProbTable() = default;
  ProbTable(std::vector<std::string> classes,
            std::map<SampleId, std::vector<double>> entries);

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const std::map<SampleId, std::vector<double>>& entries() const noexcept {
    return entries_;
  }
  const std::vector<double>* Find(const SampleId& id) const;

  friend bool operator==(const ProbTable&, const ProbTable&) = default;

 private:
  std::vector<std::string> classes_;
  std::map<SampleId, std::vector<double>> entries_;
};

// `<stem>.ids` next to a DVEM file.
std::filesystem::path IdsPathFor(const std::filesystem::path& dvem_path);

EmbeddingMatrix LoadEmbeddings(const std::filesystem::path& path);
void SaveEmbeddings(const EmbeddingMatrix& matrix,
                    const std::filesystem::path& path);

// Scales every row to unit L2 norm (computed in double). Throws kZeroRow.
EmbeddingMatrix NormalizeRows(const EmbeddingMatrix& matrix);

LabelTable LoadLabels(const std::filesystem::path& path);
void SaveLabels(const LabelTable& table, const std::filesystem::path& path);

AnnotationTable LoadAnnotations(const std::filesystem::path& path);
void SaveAnnotations(const AnnotationTable& table,
                     const std::filesystem::path& path);

ProbTable LoadProbs(const std::filesystem::path& path);
void SaveProbs(const ProbTable& table, const std::filesystem::path& path);

// Sorted, deduplicated union of two name lists.
std::vector<std::string> MergeNames(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b);

}  // namespace dejavu

#endif  // DEJAVU_DATAMODEL_H_
