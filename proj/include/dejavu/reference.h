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

// Reference predictors that estimate what dataset-level correlation alone
// reveals about a sample's foreground class.

#ifndef DEJAVU_REFERENCE_H_
#define DEJAVU_REFERENCE_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dejavu/datamodel.h"
#include "dejavu/knn.h"
#include "json.hpp"

namespace dejavu {

// Naive Bayes over detected-object indicators, stored in log space.
//
// With n samples, n_t of class t, and alpha >= 0:
//   P(t)     = n_t / n
//   P(o_k|t) = (count(o_k and t) + alpha) / (n_t + 2 alpha)
//   P(o_k)   = (count(o_k) + alpha) / (n + 2 alpha)
// Only each sample's `top_k` highest-scoring objects are counted.
class NBModel {
 public:
  NBModel(std::vector<std::string> classes, std::vector<std::string> vocabulary,
          double alpha, std::size_t top_k, bool truncate_at_inference,
          std::vector<double> log_prior, std::vector<double> log_cond,
          std::vector<double> log_marginal);

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const std::vector<std::string>& vocabulary() const noexcept {
    return vocabulary_;
  }
  double alpha() const noexcept { return alpha_; }
  std::size_t top_k() const noexcept { return top_k_; }
  bool truncate_at_inference() const noexcept {
    return truncate_at_inference_;
  }
  const std::vector<double>& log_prior() const noexcept { return log_prior_; }
  const std::vector<double>& log_marginal() const noexcept {
    return log_marginal_;
  }
  double log_cond(std::size_t cls, std::size_t object) const {
    return log_cond_[cls * vocabulary_.size() + object];
  }

  // log(0) is written as null.
  nlohmann::json ToJson() const;
  static NBModel FromJson(const nlohmann::json& doc);

  friend bool operator==(const NBModel&, const NBModel&) = default;

 private:
  std::vector<std::string> classes_;
  std::vector<std::string> vocabulary_;
  double alpha_;
  std::size_t top_k_;
  bool truncate_at_inference_;
  std::vector<double> log_prior_;
  std::vector<double> log_cond_;  // classes x vocabulary, row-major
  std::vector<double> log_marginal_;
};

// The `k` highest-scoring objects, ordered by (score desc, name asc).
std::vector<ScoredObject> TopKObjects(std::span<const ScoredObject> objects,
                                      const std::vector<std::string>& vocabulary,
                                      std::size_t k);

// Fits over every annotated sample. Every annotated id must be labelled
// (kUnlabeledSample) and every class of `labels` needs at least one annotated
// sample (kEmptyClass).
NBModel FitNaiveBayes(const AnnotationTable& annotations,
                      const LabelTable& labels, double alpha,
                      std::size_t top_k_features,
                      bool truncate_at_inference = true);

// Normalized class posterior. The unnormalized log score of class t is
//   ln P(t) + sum over detected k of [ln P(o_k|t) - ln P(o_k)],
// normalized with log-sum-exp. Objects never seen at fit time (P(o_k) = 0,
// only possible with alpha = 0) carry no evidence and are skipped; if every
// class is ruled out the prior is returned. `objects` index the model
// vocabulary (kUnknownObject otherwise).
std::vector<double> NaiveBayesPosterior(const NBModel& model,
                                        std::span<const ScoredObject> objects);

// Re-expresses objects from `vocabulary` against the model vocabulary,
// dropping names the model has never seen.
std::vector<ScoredObject> MapToModelVocabulary(
    const NBModel& model, std::span<const ScoredObject> objects,
    const std::vector<std::string>& vocabulary);

enum class ReferenceKind { kNaiveBayes, kIngested, kAltKnn };

std::string_view ReferenceKindName(ReferenceKind kind);

// Per-sample inputs a backend may need, for batch evaluation.
struct ReferenceInputs {
  const AnnotationTable* annotations = nullptr;
  // Embeddings from the alternate model; rows must be unit norm.
  const EmbeddingMatrix* embeddings = nullptr;
};

// Uniform facade over the reference backends. Every backend yields a class
// distribution over classes().
class ReferencePredictor {
 public:
  static ReferencePredictor NaiveBayes(NBModel model);
  static ReferencePredictor Ingested(ProbTable table);
  // Two-model reference: KNN vote in a second model's embedding space.
  static ReferencePredictor AltKnn(std::shared_ptr<const KnnIndex> index,
                                   LabelTable labels, std::size_t k);

  ReferenceKind kind() const noexcept;
  const std::vector<std::string>& classes() const;

  // `objects` must index the NB model vocabulary. Throws kMissingInput when
  // the active backend's input is absent and kMissingSample for an id the
  // ingested table lacks.
  std::vector<double> Distribution(const SampleId& id,
                                   const std::vector<ScoredObject>* objects,
                                   std::span<const float> embedding) const;

  // Batch form. NB objects are looked up in `inputs.annotations` by id and
  // mapped by name; AltKnn embeddings are looked up by id.
  std::vector<std::vector<double>> Distributions(
      const std::vector<SampleId>& ids, const ReferenceInputs& inputs,
      int threads) const;

 private:
  struct NaiveBayesBackend {
    NBModel model;
  };
  struct IngestedBackend {
    ProbTable table;
  };
  struct AltKnnBackend {
    std::shared_ptr<const KnnIndex> index;
    LabelTable labels;
    std::size_t k;
  };
  using Backend = std::variant<NaiveBayesBackend, IngestedBackend,
                               AltKnnBackend>;

  explicit ReferencePredictor(Backend backend) : backend_(std::move(backend)) {}

  Backend backend_;
};

}  // namespace dejavu

#endif  // DEJAVU_REFERENCE_H_
