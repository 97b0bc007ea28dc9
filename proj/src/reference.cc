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

#include "dejavu/reference.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "dejavu/error.h"
#include "dejavu/parallel.h"

namespace dejavu {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double SafeLog(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

nlohmann::json LogVectorToJson(std::span<const double> values) {
  nlohmann::json out = nlohmann::json::array();
  for (double v : values) {
    out.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
  }
  return out;
}

std::vector<double> LogVectorFromJson(const nlohmann::json& values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    out.push_back(v.is_null() ? kNegInf : v.get<double>());
  }
  return out;
}

}  // namespace

NBModel::NBModel(std::vector<std::string> classes,
                 std::vector<std::string> vocabulary, double alpha,
                 std::size_t top_k, bool truncate_at_inference,
                 std::vector<double> log_prior, std::vector<double> log_cond,
                 std::vector<double> log_marginal)
    : classes_(std::move(classes)),
      vocabulary_(std::move(vocabulary)),
      alpha_(alpha),
      top_k_(top_k),
      truncate_at_inference_(truncate_at_inference),
      log_prior_(std::move(log_prior)),
      log_cond_(std::move(log_cond)),
      log_marginal_(std::move(log_marginal)) {
  if (!(alpha_ >= 0.0) || !std::isfinite(alpha_)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be >= 0");
  }
  if (top_k_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "top_k must be positive");
  }
  if (classes_.empty() || log_prior_.size() != classes_.size() ||
      log_cond_.size() != classes_.size() * vocabulary_.size() ||
      log_marginal_.size() != vocabulary_.size()) {
    throw Error(ErrorCode::kDimMismatch, "naive Bayes tables have wrong shape");
  }
  for (double v : log_prior_) {
    if (std::isnan(v) || v > 0.0) {
      throw Error(ErrorCode::kInvalidDistribution, "log prior out of range");
    }
  }
}

nlohmann::json NBModel::ToJson() const {
  nlohmann::json cond = nlohmann::json::array();
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    cond.push_back(LogVectorToJson(std::span<const double>(
        log_cond_.data() + c * vocabulary_.size(), vocabulary_.size())));
  }
  return {
      {"classes", classes_},
      {"vocabulary", vocabulary_},
      {"alpha", alpha_},
      {"top_k", top_k_},
      {"truncate_at_inference", truncate_at_inference_},
      {"log_prior", LogVectorToJson(log_prior_)},
      {"log_cond", std::move(cond)},
      {"log_marginal", LogVectorToJson(log_marginal_)},
  };
}

NBModel NBModel::FromJson(const nlohmann::json& doc) {
  try {
    std::vector<double> cond;
    for (const auto& row : doc.at("log_cond")) {
      auto values = LogVectorFromJson(row);
      cond.insert(cond.end(), values.begin(), values.end());
    }
    return NBModel(doc.at("classes").get<std::vector<std::string>>(),
                   doc.at("vocabulary").get<std::vector<std::string>>(),
                   doc.at("alpha").get<double>(),
                   doc.at("top_k").get<std::size_t>(),
                   doc.value("truncate_at_inference", true),
                   LogVectorFromJson(doc.at("log_prior")), std::move(cond),
                   LogVectorFromJson(doc.at("log_marginal")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("naive Bayes model: ") + e.what());
  }
}

std::vector<ScoredObject> TopKObjects(std::span<const ScoredObject> objects,
                                      const std::vector<std::string>& vocabulary,
                                      std::size_t k) {
  std::vector<ScoredObject> sorted(objects.begin(), objects.end());
  const std::size_t keep = std::min(k, sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + keep, sorted.end(),
                    [&](const ScoredObject& a, const ScoredObject& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return vocabulary[a.object] < vocabulary[b.object];
                    });
  sorted.resize(keep);
  return sorted;
}

NBModel FitNaiveBayes(const AnnotationTable& annotations,
                      const LabelTable& labels, double alpha,
                      std::size_t top_k_features, bool truncate_at_inference) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be >= 0");
  }
  if (top_k_features == 0) {
    throw Error(ErrorCode::kInvalidArgument, "top_k_features must be positive");
  }
  const std::size_t n_classes = labels.classes().size();
  const std::size_t n_objects = annotations.vocabulary().size();
  std::vector<double> class_count(n_classes, 0.0);
  std::vector<double> joint_count(n_classes * n_objects, 0.0);
  std::vector<double> object_count(n_objects, 0.0);

  for (const auto& [id, objects] : annotations.entries()) {
    auto label = labels.Find(id);
    if (!label) throw Error(ErrorCode::kUnlabeledSample, id.str());
    class_count[*label] += 1.0;
    for (const auto& obj :
         TopKObjects(objects, annotations.vocabulary(), top_k_features)) {
      joint_count[*label * n_objects + obj.object] += 1.0;
      object_count[obj.object] += 1.0;
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (class_count[c] == 0.0) {
      throw Error(ErrorCode::kEmptyClass, labels.classes()[c]);
    }
  }

  const double n = static_cast<double>(annotations.size());
  std::vector<double> log_prior(n_classes);
  std::vector<double> log_cond(n_classes * n_objects);
  std::vector<double> log_marginal(n_objects);
  for (std::size_t c = 0; c < n_classes; ++c) {
    log_prior[c] = std::log(class_count[c] / n);
    for (std::size_t k = 0; k < n_objects; ++k) {
      log_cond[c * n_objects + k] =
          SafeLog((joint_count[c * n_objects + k] + alpha) /
                  (class_count[c] + 2.0 * alpha));
    }
  }
  for (std::size_t k = 0; k < n_objects; ++k) {
    log_marginal[k] = SafeLog((object_count[k] + alpha) / (n + 2.0 * alpha));
  }
  return NBModel(labels.classes(), annotations.vocabulary(), alpha,
                 top_k_features, truncate_at_inference, std::move(log_prior),
                 std::move(log_cond), std::move(log_marginal));
}

std::vector<double> NaiveBayesPosterior(const NBModel& model,
                                        std::span<const ScoredObject> objects) {
  std::set<std::size_t> seen;
  for (const auto& obj : objects) {
    if (obj.object >= model.vocabulary().size()) {
      throw Error(ErrorCode::kUnknownObject, std::to_string(obj.object));
    }
    if (!seen.insert(obj.object).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "object '" + model.vocabulary()[obj.object] + "' repeated");
    }
  }
  const std::vector<ScoredObject> used =
      model.truncate_at_inference()
          ? TopKObjects(objects, model.vocabulary(), model.top_k())
          : TopKObjects(objects, model.vocabulary(), objects.size());

  const std::size_t n_classes = model.classes().size();
  std::vector<double> score(model.log_prior());
  for (const auto& obj : used) {
    const double log_marginal = model.log_marginal()[obj.object];
    if (log_marginal == kNegInf) continue;
    for (std::size_t c = 0; c < n_classes; ++c) {
      score[c] += model.log_cond(c, obj.object) - log_marginal;
    }
  }

  const double top = *std::max_element(score.begin(), score.end());
  if (top == kNegInf) return NaiveBayesPosterior(model, {});
  double total = 0.0;
  for (double& s : score) {
    s = std::exp(s - top);
    total += s;
  }
  for (double& s : score) s /= total;
  return score;
}

std::vector<ScoredObject> MapToModelVocabulary(
    const NBModel& model, std::span<const ScoredObject> objects,
    const std::vector<std::string>& vocabulary) {
  const auto& model_vocab = model.vocabulary();
  std::vector<ScoredObject> mapped;
  mapped.reserve(objects.size());
  for (const auto& obj : objects) {
    const std::string& name = vocabulary.at(obj.object);
    auto it = std::lower_bound(model_vocab.begin(), model_vocab.end(), name);
    if (it != model_vocab.end() && *it == name) {
      mapped.push_back(
          {static_cast<std::size_t>(std::distance(model_vocab.begin(), it)),
           obj.score});
    }
  }
  return mapped;
}

std::string_view ReferenceKindName(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::kNaiveBayes: return "naive_bayes";
    case ReferenceKind::kIngested: return "ingested";
    case ReferenceKind::kAltKnn: return "alt_knn";
  }
  return "unknown";
}

ReferencePredictor ReferencePredictor::NaiveBayes(NBModel model) {
  return ReferencePredictor(NaiveBayesBackend{std::move(model)});
}

ReferencePredictor ReferencePredictor::Ingested(ProbTable table) {
  return ReferencePredictor(IngestedBackend{std::move(table)});
}

ReferencePredictor ReferencePredictor::AltKnn(
    std::shared_ptr<const KnnIndex> index, LabelTable labels, std::size_t k) {
  if (!index) throw Error(ErrorCode::kMissingInput, "alternate KNN index");
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  return ReferencePredictor(AltKnnBackend{std::move(index), std::move(labels), k});
}

ReferenceKind ReferencePredictor::kind() const noexcept {
  switch (backend_.index()) {
    case 0: return ReferenceKind::kNaiveBayes;
    case 1: return ReferenceKind::kIngested;
    default: return ReferenceKind::kAltKnn;
  }
}

const std::vector<std::string>& ReferencePredictor::classes() const {
  if (const auto* nb = std::get_if<NaiveBayesBackend>(&backend_)) {
    return nb->model.classes();
  }
  if (const auto* ing = std::get_if<IngestedBackend>(&backend_)) {
    return ing->table.classes();
  }
  return std::get<AltKnnBackend>(backend_).labels.classes();
}

std::vector<double> ReferencePredictor::Distribution(
    const SampleId& id, const std::vector<ScoredObject>* objects,
    std::span<const float> embedding) const {
  if (const auto* nb = std::get_if<NaiveBayesBackend>(&backend_)) {
    if (objects == nullptr) {
      throw Error(ErrorCode::kMissingInput, "detected objects for " + id.str());
    }
    return NaiveBayesPosterior(nb->model, *objects);
  }
  if (const auto* ing = std::get_if<IngestedBackend>(&backend_)) {
    const auto* row = ing->table.Find(id);
    if (row == nullptr) throw Error(ErrorCode::kMissingSample, id.str());
    return *row;
  }
  const auto& alt = std::get<AltKnnBackend>(backend_);
  if (embedding.empty()) {
    throw Error(ErrorCode::kMissingInput, "embedding for " + id.str());
  }
  return Vote(alt.index->Query(embedding, alt.k), alt.labels).probs;
}

std::vector<std::vector<double>> ReferencePredictor::Distributions(
    const std::vector<SampleId>& ids, const ReferenceInputs& inputs,
    int threads) const {
  std::vector<std::vector<double>> out(ids.size());
  if (const auto* nb = std::get_if<NaiveBayesBackend>(&backend_)) {
    if (inputs.annotations == nullptr) {
      throw Error(ErrorCode::kMissingInput, "annotations for the NB reference");
    }
    ParallelFor(ids.size(), threads, 256, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const auto* objects = inputs.annotations->Find(ids[i]);
        if (objects == nullptr) {
          throw Error(ErrorCode::kMissingSample,
                      "no annotations for " + ids[i].str());
        }
        out[i] = NaiveBayesPosterior(
            nb->model, MapToModelVocabulary(nb->model, *objects,
                                            inputs.annotations->vocabulary()));
      }
    });
    return out;
  }
  if (std::holds_alternative<IngestedBackend>(backend_)) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out[i] = Distribution(ids[i], nullptr, {});
    }
    return out;
  }

  const auto& alt = std::get<AltKnnBackend>(backend_);
  if (inputs.embeddings == nullptr) {
    throw Error(ErrorCode::kMissingInput, "embeddings for the KNN reference");
  }
  const std::size_t d = inputs.embeddings->dim();
  std::vector<float> queries;
  queries.reserve(ids.size() * d);
  for (const auto& id : ids) {
    auto row = inputs.embeddings->Find(id);
    if (!row) throw Error(ErrorCode::kMissingSample, "no embedding for " + id.str());
    auto values = inputs.embeddings->row(*row);
    queries.insert(queries.end(), values.begin(), values.end());
  }
  auto neighbors = alt.index->QueryMany(queries, ids.size(), alt.k, threads);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[i] = Vote(neighbors[i], alt.labels).probs;
  }
  return out;
}

}  // namespace dejavu
