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

// Synthetic worlds with a known class/object joint distribution and planted
// memorization, used as a ground-truth oracle for the tests.
//
// Generative model (generator indices, before any name-based reindexing):
//   class t ~ Uniform{0..C-1}
//   object k present independently with probability 0.1; the signature
//   object of class t (object t) is additionally emitted with probability
//   rho, so P(o_t | t) = rho + 0.9 * 0.1.
//   embedding = [one_hot(t) * labelled, 0.5 * objects] + N(0, sigma^2),
//   row-normalized. Public samples and memorized training samples carry the
//   label block; other training samples do not.
// Objects are conditionally independent given the class, so naive Bayes is
// the correct model family here.

#ifndef DEJAVU_SYNTH_H_
#define DEJAVU_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dejavu/datamodel.h"
#include "json.hpp"

namespace dejavu {

inline constexpr double kBackgroundObjectRate = 0.1;

struct WorldSpec {
  std::size_t n_classes = 10;
  std::size_t n_objects = 50;
  double correlation = 0.0;  // rho
  double mem_rate = 0.0;
  std::size_t n_train = 5000;
  std::size_t n_public = 20000;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  std::size_t embed_dim() const { return n_classes + n_objects; }
};

// Throws kInvalidSpec. Requires n_objects >= n_classes so every class owns a
// signature object.
void ValidateSpec(const WorldSpec& spec);

nlohmann::json WorldSpecToJson(const WorldSpec& spec);
WorldSpec WorldSpecFromJson(const nlohmann::json& doc);

// Zero-padded so lexicographic order equals generator order.
std::string ClassName(const WorldSpec& spec, std::size_t cls);
std::string ObjectName(const WorldSpec& spec, std::size_t object);

struct WorldOutput {
  EmbeddingMatrix train_embeddings;
  LabelTable train_labels;
  AnnotationTable train_annotations;
  EmbeddingMatrix public_embeddings;
  LabelTable public_labels;
  AnnotationTable public_annotations;
  // Sorted; exactly round(mem_rate * n_train) ids.
  std::vector<SampleId> memorized_ids;
};

// Deterministic in spec.seed.
WorldOutput Generate(const WorldSpec& spec);

struct BayesPrediction {
  std::size_t label = 0;
  std::vector<double> posterior;
};

// Exact class posterior given the set of present objects (generator
// indices), using both present and absent object factors. Ties go to the
// lowest class index.
BayesPrediction BayesOptimal(const WorldSpec& spec,
                             const std::vector<std::size_t>& present_objects);

// Accuracy of the Bayes-optimal class predictor on this world, in closed form.
double CorrelationAccuracy(const WorldSpec& spec);

// Expected deja vu score of an ideal attacker: memorized samples are always
// recovered, the rest only through correlation, and the reference is the
// Bayes-optimal predictor: mem_rate * (1 - CorrelationAccuracy).
double PlantedDvExpectation(const WorldSpec& spec);

// {"memorized_ids", "spec", "expected_dv", "correlation_accuracy"}.
nlohmann::json WorldTruthJson(const WorldSpec& spec,
                              const std::vector<SampleId>& memorized_ids);

// Writes train/public DVEM + ids, labels CSV and annotations JSONL into
// `dir` (created if needed).
void WriteWorldFiles(const WorldOutput& world, const std::filesystem::path& dir);

// Vision-language variant. Each sample has a topic t drawn like a class and
// an object set drawn as above. Embeddings (dimension C + V):
//   reference train captions: [one_hot(t), 0]
//   target train captions:    [one_hot(t), 0.5 * objects * memorized]
//   every public embedding:   [one_hot(t), 0.5 * objects]
// each plus independent N(0, sigma^2) noise and row-normalized. A caption
// that carries no object information faces the same public geometry in
// both models, so only memorized samples separate target from reference.
struct VlmWorldOutput {
  EmbeddingMatrix target_train_captions;
  EmbeddingMatrix target_public_images;
  EmbeddingMatrix target_public_captions;
  EmbeddingMatrix reference_train_captions;
  EmbeddingMatrix reference_public_captions;
  AnnotationTable train_annotations;
  AnnotationTable public_annotations;
  std::vector<SampleId> memorized_ids;
};

VlmWorldOutput GenerateVlm(const WorldSpec& spec);

void WriteVlmWorldFiles(const VlmWorldOutput& world,
                        const std::filesystem::path& dir);

}  // namespace dejavu

#endif  // DEJAVU_SYNTH_H_
