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

#include "dejavu/synth.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dejavu/error.h"
#include "dejavu/report_json.h"

namespace dejavu {
namespace {

enum Stream : std::uint32_t {
  kMemorizationStream = 1,
  kTrainStream = 2,
  kPublicStream = 3,
};

std::mt19937_64 MakeStream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::string Padded(std::string_view prefix, std::size_t value,
                   std::size_t count) {
  std::size_t width = 1;
  for (std::size_t v = count > 0 ? count - 1 : 0; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(value);
  return std::string(prefix) + std::string(width - std::min(width, digits.size()), '0') +
         digits;
}

struct DrawnSample {
  std::size_t cls = 0;
  std::vector<ScoredObject> objects;  // generator object indices
};

DrawnSample DrawSample(const WorldSpec& spec, std::mt19937_64& rng) {
  DrawnSample s;
  s.cls = std::uniform_int_distribution<std::size_t>(0, spec.n_classes - 1)(rng);
  std::bernoulli_distribution background(kBackgroundObjectRate);
  std::bernoulli_distribution signature(spec.correlation);
  std::uniform_real_distribution<double> score(0.3, 1.0);
  for (std::size_t k = 0; k < spec.n_objects; ++k) {
    bool present = background(rng);
    if (k == s.cls && signature(rng)) present = true;
    if (present) s.objects.push_back({k, score(rng)});
  }
  return s;
}

// [label_weight * one_hot(cls), object_weight * objects] + noise, normalized.
// A row that is exactly zero (only possible without noise) becomes the
// uniform unit vector.
void AppendEmbedding(const WorldSpec& spec, std::size_t cls, double label_weight,
                     const std::vector<ScoredObject>& objects,
                     double object_weight, std::mt19937_64& rng,
                     std::vector<float>& out) {
  std::vector<double> row(spec.embed_dim(), 0.0);
  row[cls] = label_weight;
  for (const auto& obj : objects) row[spec.n_classes + obj.object] = object_weight;
  if (spec.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (double& v : row) v += noise(rng);
  }
  double norm_sq = 0.0;
  for (double v : row) norm_sq += v * v;
  if (norm_sq == 0.0) {
    std::fill(row.begin(), row.end(), 1.0);
    norm_sq = static_cast<double>(row.size());
  }
  const double norm = std::sqrt(norm_sq);
  for (double v : row) out.push_back(static_cast<float>(v / norm));
}

struct SplitTables {
  LabelTable labels;
  AnnotationTable annotations;
};

// Builds tables by name so the in-memory vocabulary matches what the file
// loaders would derive.
SplitTables BuildTables(const WorldSpec& spec, const std::vector<SampleId>& ids,
                        const std::vector<DrawnSample>& samples) {
  std::vector<std::pair<SampleId, std::string>> label_rows;
  std::vector<bool> seen(spec.n_objects, false);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    label_rows.emplace_back(ids[i], ClassName(spec, samples[i].cls));
    for (const auto& obj : samples[i].objects) seen[obj.object] = true;
  }
  std::vector<std::string> vocabulary;
  std::vector<std::size_t> remap(spec.n_objects, 0);
  for (std::size_t k = 0; k < spec.n_objects; ++k) {
    if (!seen[k]) continue;
    remap[k] = vocabulary.size();
    vocabulary.push_back(ObjectName(spec, k));
  }
  std::map<SampleId, std::vector<ScoredObject>> entries;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::vector<ScoredObject> objects;
    for (const auto& obj : samples[i].objects) {
      objects.push_back({remap[obj.object], obj.score});
    }
    entries.emplace(ids[i], std::move(objects));
  }
  return {LabelTable::FromNames(label_rows),
          AnnotationTable(std::move(vocabulary), std::move(entries))};
}

std::vector<SampleId> MakeIds(std::string_view prefix, std::size_t n) {
  std::vector<SampleId> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.emplace_back(Padded(prefix, i, n));
  return ids;
}

// Exactly round(mem_rate * n) training rows, chosen by a seeded shuffle.
std::vector<bool> ChooseMemorized(const WorldSpec& spec) {
  const auto count = static_cast<std::size_t>(
      std::llround(spec.mem_rate * static_cast<double>(spec.n_train)));
  std::vector<std::size_t> order(spec.n_train);
  std::iota(order.begin(), order.end(), 0);
  auto rng = MakeStream(spec.seed, kMemorizationStream);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> memorized(spec.n_train, false);
  for (std::size_t i = 0; i < count; ++i) memorized[order[i]] = true;
  return memorized;
}

std::vector<SampleId> SelectIds(const std::vector<SampleId>& ids,
                                const std::vector<bool>& mask) {
  std::vector<SampleId> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (mask[i]) out.push_back(ids[i]);
  }
  return out;
}

}  // namespace

void ValidateSpec(const WorldSpec& spec) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidSpec, what);
  };
  if (spec.n_classes == 0) fail("n_classes must be positive");
  if (spec.n_objects == 0) fail("n_objects must be positive");
  if (spec.n_objects < spec.n_classes) {
    fail("n_objects must be >= n_classes (one signature object per class)");
  }
  if (spec.n_train == 0 || spec.n_public == 0) fail("split sizes must be positive");
  if (!(spec.correlation >= 0.0 && spec.correlation <= 1.0)) {
    fail("correlation must lie in [0, 1]");
  }
  if (!(spec.mem_rate >= 0.0 && spec.mem_rate <= 1.0)) {
    fail("mem_rate must lie in [0, 1]");
  }
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    fail("noise_sigma must be >= 0");
  }
}

nlohmann::json WorldSpecToJson(const WorldSpec& spec) {
  return {{"n_classes", spec.n_classes},     {"n_objects", spec.n_objects},
          {"correlation", spec.correlation}, {"mem_rate", spec.mem_rate},
          {"n_train", spec.n_train},         {"n_public", spec.n_public},
          {"noise_sigma", spec.noise_sigma}, {"seed", spec.seed},
          {"embed_dim", spec.embed_dim()}};
}

WorldSpec WorldSpecFromJson(const nlohmann::json& doc) {
  WorldSpec spec;
  try {
    spec.n_classes = doc.at("n_classes").get<std::size_t>();
    spec.n_objects = doc.at("n_objects").get<std::size_t>();
    spec.correlation = doc.at("correlation").get<double>();
    spec.mem_rate = doc.at("mem_rate").get<double>();
    spec.n_train = doc.at("n_train").get<std::size_t>();
    spec.n_public = doc.at("n_public").get<std::size_t>();
    spec.noise_sigma = doc.at("noise_sigma").get<double>();
    spec.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, e.what());
  }
  ValidateSpec(spec);
  return spec;
}

std::string ClassName(const WorldSpec& spec, std::size_t cls) {
  return Padded("class_", cls, spec.n_classes);
}

std::string ObjectName(const WorldSpec& spec, std::size_t object) {
  return Padded("obj_", object, spec.n_objects);
}

WorldOutput Generate(const WorldSpec& spec) {
  ValidateSpec(spec);
  const auto memorized = ChooseMemorized(spec);
  const std::size_t d = spec.embed_dim();

  auto make_split = [&](std::string_view prefix, std::size_t n, Stream stream,
                        const std::vector<bool>* labelled) {
    auto rng = MakeStream(spec.seed, stream);
    const auto ids = MakeIds(prefix, n);
    std::vector<DrawnSample> samples;
    samples.reserve(n);
    std::vector<float> values;
    values.reserve(n * d);
    for (std::size_t i = 0; i < n; ++i) {
      samples.push_back(DrawSample(spec, rng));
      const bool has_label = labelled == nullptr || (*labelled)[i];
      AppendEmbedding(spec, samples.back().cls, has_label ? 1.0 : 0.0,
                      samples.back().objects, 0.5, rng, values);
    }
    auto tables = BuildTables(spec, ids, samples);
    return std::make_pair(EmbeddingMatrix(ids, d, std::move(values), true),
                          std::move(tables));
  };

  auto [train_matrix, train_tables] =
      make_split("train_", spec.n_train, kTrainStream, &memorized);
  auto [public_matrix, public_tables] =
      make_split("public_", spec.n_public, kPublicStream, nullptr);

  WorldOutput out;
  out.memorized_ids = SelectIds(train_matrix.ids(), memorized);
  out.train_embeddings = std::move(train_matrix);
  out.train_labels = std::move(train_tables.labels);
  out.train_annotations = std::move(train_tables.annotations);
  out.public_embeddings = std::move(public_matrix);
  out.public_labels = std::move(public_tables.labels);
  out.public_annotations = std::move(public_tables.annotations);
  return out;
}

BayesPrediction BayesOptimal(const WorldSpec& spec,
                             const std::vector<std::size_t>& present_objects) {
  ValidateSpec(spec);
  const double q0 = kBackgroundObjectRate;
  const double q1 = spec.correlation + (1.0 - spec.correlation) * q0;
  std::vector<bool> present(spec.n_objects, false);
  for (std::size_t k : present_objects) present.at(k) = true;

  // Factors of non-signature objects and of other classes' signatures are
  // shared by every class and cancel; only the own-signature ratio remains.
  BayesPrediction out;
  out.posterior.resize(spec.n_classes);
  double total = 0.0;
  for (std::size_t t = 0; t < spec.n_classes; ++t) {
    out.posterior[t] = present[t] ? q1 / q0 : (1.0 - q1) / (1.0 - q0);
    total += out.posterior[t];
  }
  for (double& p : out.posterior) p /= total;
  out.label = static_cast<std::size_t>(std::distance(
      out.posterior.begin(),
      std::max_element(out.posterior.begin(), out.posterior.end())));
  return out;
}

double CorrelationAccuracy(const WorldSpec& spec) {
  ValidateSpec(spec);
  const double q0 = kBackgroundObjectRate;
  const double q1 = spec.correlation + (1.0 - spec.correlation) * q0;
  const auto c = static_cast<double>(spec.n_classes);
  // Class t is predicted iff its signature is present and no lower-indexed
  // signature is; class 0 additionally wins when no signature is present.
  double correct = 0.0;
  for (std::size_t t = 0; t < spec.n_classes; ++t) {
    correct += q1 * std::pow(1.0 - q0, static_cast<double>(t));
  }
  correct += (1.0 - q1) * std::pow(1.0 - q0, c - 1.0);
  return correct / c;
}

double PlantedDvExpectation(const WorldSpec& spec) {
  return spec.mem_rate * (1.0 - CorrelationAccuracy(spec));
}

nlohmann::json WorldTruthJson(const WorldSpec& spec,
                              const std::vector<SampleId>& memorized_ids) {
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& id : memorized_ids) ids.push_back(id.str());
  return {{"memorized_ids", std::move(ids)},
          {"spec", WorldSpecToJson(spec)},
          {"expected_dv", PlantedDvExpectation(spec)},
          {"correlation_accuracy", CorrelationAccuracy(spec)}};
}

void WriteWorldFiles(const WorldOutput& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SaveEmbeddings(world.train_embeddings, dir / "train.dvem");
  SaveLabels(world.train_labels, dir / "train_labels.csv");
  SaveAnnotations(world.train_annotations, dir / "train_annotations.jsonl");
  SaveEmbeddings(world.public_embeddings, dir / "public.dvem");
  SaveLabels(world.public_labels, dir / "public_labels.csv");
  SaveAnnotations(world.public_annotations, dir / "public_annotations.jsonl");
}

VlmWorldOutput GenerateVlm(const WorldSpec& spec) {
  ValidateSpec(spec);
  const auto memorized = ChooseMemorized(spec);
  const std::size_t d = spec.embed_dim();
  const std::vector<ScoredObject> none;

  VlmWorldOutput out;
  {
    auto rng = MakeStream(spec.seed, kTrainStream);
    const auto ids = MakeIds("train_", spec.n_train);
    std::vector<DrawnSample> samples;
    std::vector<float> target, reference;
    for (std::size_t i = 0; i < spec.n_train; ++i) {
      samples.push_back(DrawSample(spec, rng));
      const auto& s = samples.back();
      AppendEmbedding(spec, s.cls, 1.0, s.objects, memorized[i] ? 0.5 : 0.0,
                      rng, target);
      AppendEmbedding(spec, s.cls, 1.0, none, 0.0, rng, reference);
    }
    out.target_train_captions = EmbeddingMatrix(ids, d, std::move(target), true);
    out.reference_train_captions =
        EmbeddingMatrix(ids, d, std::move(reference), true);
    out.train_annotations = BuildTables(spec, ids, samples).annotations;
    out.memorized_ids = SelectIds(ids, memorized);
  }
  {
    auto rng = MakeStream(spec.seed, kPublicStream);
    const auto ids = MakeIds("public_", spec.n_public);
    std::vector<DrawnSample> samples;
    std::vector<float> images, captions, reference;
    for (std::size_t i = 0; i < spec.n_public; ++i) {
      samples.push_back(DrawSample(spec, rng));
      const auto& s = samples.back();
      AppendEmbedding(spec, s.cls, 1.0, s.objects, 0.5, rng, images);
      AppendEmbedding(spec, s.cls, 1.0, s.objects, 0.5, rng, captions);
      AppendEmbedding(spec, s.cls, 1.0, s.objects, 0.5, rng, reference);
    }
    out.target_public_images = EmbeddingMatrix(ids, d, std::move(images), true);
    out.target_public_captions =
        EmbeddingMatrix(ids, d, std::move(captions), true);
    out.reference_public_captions =
        EmbeddingMatrix(ids, d, std::move(reference), true);
    out.public_annotations = BuildTables(spec, ids, samples).annotations;
  }
  return out;
}

void WriteVlmWorldFiles(const VlmWorldOutput& world,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SaveEmbeddings(world.target_train_captions, dir / "target_train_captions.dvem");
  SaveEmbeddings(world.target_public_images, dir / "target_public_images.dvem");
  SaveEmbeddings(world.target_public_captions,
                 dir / "target_public_captions.dvem");
  SaveEmbeddings(world.reference_train_captions,
                 dir / "reference_train_captions.dvem");
  SaveEmbeddings(world.reference_public_captions,
                 dir / "reference_public_captions.dvem");
  SaveAnnotations(world.train_annotations, dir / "train_annotations.jsonl");
  SaveAnnotations(world.public_annotations, dir / "public_annotations.jsonl");
}

}  // namespace dejavu
