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

// Deja vu test for vision-language models: objects in a training image are
// predicted from its caption by taking the union of objects in the images of
// the caption's nearest public neighbors. The target model's prediction is
// compared with a text-embedding reference that can only exploit
// caption/object correlation.

#ifndef DEJAVU_VLM_TEST_H_
#define DEJAVU_VLM_TEST_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dejavu/datamodel.h"
#include "dejavu/knn.h"
#include "json.hpp"

namespace dejavu {

// Sorted, duplicate-free object indices.
using ObjectSet = std::vector<std::size_t>;

// Number of public samples in which each object appears.
std::vector<std::size_t> ObjectFrequencies(const AnnotationTable& table);

// Union of the neighbors' object sets. With `top_k_objects`, only the objects
// ranked highest by (neighbors containing it desc, `global_frequency` desc,
// name asc) are kept. Throws kMissingAnnotation for an unannotated neighbor.
ObjectSet PredictObjects(const NeighborList& neighbors,
                         const AnnotationTable& public_objects,
                         std::optional<std::size_t> top_k_objects,
                         std::span<const std::size_t> global_frequency);

ObjectSet PredictObjects(const KnnIndex& index, std::span<const float> query,
                         std::size_t k, const AnnotationTable& public_objects,
                         std::optional<std::size_t> top_k_objects);

ObjectSet Intersect(const ObjectSet& a, const ObjectSet& b);

// |pred & truth| / |pred|, 0 for an empty prediction.
double Precision(const ObjectSet& predicted, const ObjectSet& truth);
// |pred & truth| / |truth|. Throws kEmptyInput for an empty truth set; such
// samples are excluded before aggregation.
double Recall(const ObjectSet& predicted, const ObjectSet& truth);

struct MetricPair {
  double target = 0.0;
  double ref = 0.0;
};

// (#{target > ref} - #{target < ref}) / n; ties count for neither side.
// PPG over precision pairs, PRG over recall pairs. Throws kEmptyInput.
double PopulationGap(std::span<const MetricPair> pairs);
double Ppg(std::span<const MetricPair> precision_pairs);
double Prg(std::span<const MetricPair> recall_pairs);

// Integral over [0, 1] of CDF_ref(r) - CDF_target(r) with empirical
// right-continuous CDFs. Positive when target recalls dominate.
double Aucg(std::span<const double> target_recalls,
            std::span<const double> ref_recalls);

// Mean per-sample |A & B| / |A | B|, with two empty sets scoring 1.
// Throws kIdSetMismatch.
double JaccardAgreement(const std::map<SampleId, ObjectSet>& a,
                        const std::map<SampleId, ObjectSet>& b);

enum class SearchMode { kTextToImage, kTextToText };

std::string_view SearchModeName(SearchMode mode);

struct VlmConfig {
  // Target-model caption embeddings of the evaluated training samples.
  EmbeddingMatrix target_captions;
  // Target-model public embeddings: images for t2i, captions for t2t.
  EmbeddingMatrix target_public;
  SearchMode mode = SearchMode::kTextToImage;
  // Reference text-embedding model, captions of training and public samples.
  EmbeddingMatrix reference_captions;
  EmbeddingMatrix reference_public;
  // Ground-truth objects of the training images and objects of public images.
  AnnotationTable train_annotations;
  AnnotationTable public_annotations;
  std::optional<std::vector<SampleId>> eval_ids;
  std::size_t k = 10;
  std::optional<std::size_t> top_k_objects;
  int threads = 0;
};

struct VlmSampleResult {
  SampleId id;
  ObjectSet truth;
  ObjectSet target_pred;
  ObjectSet ref_pred;
  double prec_target = 0.0;
  double rec_target = 0.0;
  double prec_ref = 0.0;
  double rec_ref = 0.0;
};

struct GapEntry {
  SampleId id;
  double prec_gap = 0.0;
  double rec_gap = 0.0;
};

// Sorted by (rec_gap desc, prec_gap desc, id asc).
std::vector<GapEntry> GapRanking(std::span<const VlmSampleResult> samples);

struct VlmReport {
  std::vector<std::string> vocabulary;
  SearchMode mode = SearchMode::kTextToImage;
  std::size_t k = 0;
  std::optional<std::size_t> top_k_objects;
  // Samples whose ground-truth object set is empty are left out of every
  // aggregate.
  std::size_t excluded_empty_truth = 0;
  std::vector<VlmSampleResult> per_sample;
  double ppg = 0.0;
  double prg = 0.0;
  double aucg = 0.0;
  double mean_prec_target = 0.0;
  double mean_rec_target = 0.0;
  double mean_prec_ref = 0.0;
  double mean_rec_ref = 0.0;
  // Jaccard agreement of correctly predicted objects, target vs reference.
  double jaccard_target_ref = 0.0;
  std::vector<GapEntry> gap_ranking;
};

VlmReport RunVlmTest(const VlmConfig& config);

// Correctly predicted objects per sample for the target (or reference).
std::map<SampleId, ObjectSet> CorrectObjects(const VlmReport& report,
                                             bool target);

struct JaccardGrid {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;
};

JaccardGrid ComputeJaccardGrid(
    const std::vector<std::string>& labels,
    const std::vector<std::map<SampleId, ObjectSet>>& correct_sets);

// CSV matrix; the first row and column carry the configuration labels.
std::string JaccardGridCsv(const JaccardGrid& grid);

nlohmann::json VlmReportToJson(const VlmReport& report);

}  // namespace dejavu

#endif  // DEJAVU_VLM_TEST_H_
