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

#include "dejavu/cli.h"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "CLI11.hpp"
#include "dejavu/csv.h"
#include "dejavu/datamodel.h"
#include "dejavu/error.h"
#include "dejavu/knn.h"
#include "dejavu/reference.h"
#include "dejavu/report_json.h"
#include "dejavu/synth.h"
#include "dejavu/vision_test.h"
#include "dejavu/vlm_test.h"
#include "json.hpp"

namespace dejavu {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

// A combination of flags that parses but cannot be run.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string Sha256File(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buffer;
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx.get(), buffer.data(),
                       static_cast<std::size_t>(in.gcount()));
    }
  }
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for " + path.string());
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

// JSON config files hold long option names (without dashes) mapped to
// values. A nested object addresses the subcommand it is named after;
// top-level scalars apply to the subcommand given on the command line.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool,
                        std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      doc = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config file is not valid JSON: " +
                                 std::string(e.what()));
    }
    if (!doc.is_object()) {
      throw CLI::ConversionError("config file must hold a JSON object");
    }
    std::vector<std::string> active;
    const auto subs = app_->get_subcommands();
    if (!subs.empty()) active.push_back(subs.front()->get_name());

    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      if (value.is_object()) {
        for (const auto& [inner_key, inner] : value.items()) {
          items.push_back(Item({key}, inner_key, inner));
        }
      } else {
        items.push_back(Item(active, key, value));
      }
    }
    return items;
  }

 private:
  static std::string Scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value " + v.dump());
  }

  static CLI::ConfigItem Item(std::vector<std::string> parents,
                              const std::string& name, const json& value) {
    CLI::ConfigItem item;
    item.parents = std::move(parents);
    item.name = name;
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(Scalar(v));
    } else {
      item.inputs.push_back(Scalar(value));
    }
    return item;
  }

  const CLI::App* app_;
};

std::string KeyOf(const std::string& flag) {
  std::string key = flag.substr(0, flag.find(','));
  key.erase(0, key.find_first_not_of('-'));
  return key;
}

const CLI::Validator kPercent(
    [](std::string& s) -> std::string {
      double v = 0;
      if (!CLI::detail::lexical_cast(s, v) || !(v > 0.0 && v <= 100.0)) {
        return "percent must lie in (0, 100]: " + s;
      }
      return {};
    },
    "(0,100]");

const CLI::Validator kAtLeastOne(
    [](std::string& s) -> std::string {
      std::size_t v = 0;
      if (!CLI::detail::lexical_cast(s, v) || v < 1) {
        return "expected an integer >= 1, got " + s;
      }
      return {};
    },
    ">=1");

// Registers options on one subcommand and remembers which of them are
// input files and which are recorded in the report's config block.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& about)
      : app_(parent.add_subcommand(name, about)) {
    app_->add_option("--threads", threads_,
                     "Worker threads; 0 uses every core. Output is the same "
                     "for any value.")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
  }

  CLI::App* app() const { return app_; }
  int threads() const { return threads_; }

  CLI::Option* Input(const std::string& flag, std::string& path,
                     const std::string& about) {
    inputs_.emplace_back(KeyOf(flag), &path);
    return app_->add_option(flag, path, about);
  }

  CLI::Option* Output(const std::string& flag, std::string& path,
                      const std::string& about) {
    return app_->add_option(flag, path, about)->required();
  }

  template <typename T>
  CLI::Option* Param(const std::string& flag, T& value,
                     const std::string& about) {
    params_.emplace_back(
        [key = KeyOf(flag), &value](json& config) { config[key] = value; });
    return app_->add_option(flag, value, about)->capture_default_str();
  }

  CLI::Option* Flag(const std::string& flag, bool& value,
                    const std::string& about) {
    params_.emplace_back(
        [key = KeyOf(flag), &value](json& config) { config[key] = value; });
    return app_->add_flag(flag, value, about);
  }

  // Adds an input discovered after parsing (repeatable NAME=PATH options).
  void ExtraInput(const std::string& key, const std::string& path) {
    extra_inputs_.emplace_back(key, path);
  }

  // Digests every given input, failing with the path of the first missing
  // file, then snapshots the parameter values.
  json Meta() const {
    json inputs = json::object();
    auto add = [&](const std::string& key, const std::string& path) {
      if (path.empty()) return;
      inputs[key] = {{"file", fs::path(path).filename().string()},
                     {"sha256", Sha256File(path)}};
      if (fs::path(path).extension() == ".dvem") {
        const fs::path ids = IdsPathFor(path);
        inputs[key + ".ids"] = {{"file", ids.filename().string()},
                                {"sha256", Sha256File(ids)}};
      }
    };
    for (const auto& [key, path] : inputs_) add(key, *path);
    for (const auto& [key, path] : extra_inputs_) add(key, path);
    json config = json::object();
    for (const auto& dump : params_) dump(config);
    return {{"artifact_version", std::string(kArtifactVersion)},
            {"command", app_->get_name()},
            {"config", std::move(config)},
            {"inputs", std::move(inputs)}};
  }

 private:
  CLI::App* app_;
  int threads_ = 0;
  std::vector<std::pair<std::string, std::string*>> inputs_;
  std::vector<std::pair<std::string, std::string>> extra_inputs_;
  std::vector<std::function<void(json&)>> params_;
};

fs::path SiblingPath(const fs::path& out, const std::string& suffix) {
  return out.parent_path() / (out.stem().string() + suffix);
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

std::vector<SampleId> LoadIdList(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<SampleId> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ids.emplace_back(line);
  }
  return ids;
}

std::optional<std::vector<SampleId>> OptionalIds(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return LoadIdList(path);
}

void Require(const std::string& value, const std::string& what) {
  if (value.empty()) throw UsageError(what);
}

// ---------------------------------------------------------------- nb-fit

struct NbFitArgs {
  std::string annotations, labels, out;
  double alpha = 1.0;
  std::size_t top_k_features = 20;
  bool truncate_at_inference = true;
};

void AddNbFit(Command& cmd, NbFitArgs& a) {
  cmd.Input("--annotations", a.annotations, "Detected objects (JSONL)")
      ->required();
  cmd.Input("--labels", a.labels, "Class labels (CSV id,label)")->required();
  cmd.Param("--alpha", a.alpha, "Additive smoothing")
      ->check(CLI::NonNegativeNumber);
  cmd.Param("--top-k-features", a.top_k_features,
            "Highest-scoring objects kept per sample")
      ->check(kAtLeastOne);
  cmd.Flag("--truncate-at-inference,!--no-truncate-at-inference",
           a.truncate_at_inference,
           "Also truncate object lists when predicting (default on)");
  cmd.Output("--out", a.out, "Model JSON path");
}

void RunNbFit(const Command& cmd, const NbFitArgs& a) {
  json meta = cmd.Meta();
  const NBModel model =
      FitNaiveBayes(LoadAnnotations(a.annotations), LoadLabels(a.labels),
                    a.alpha, a.top_k_features, a.truncate_at_inference);
  json doc = model.ToJson();
  doc["meta"] = std::move(meta);
  WriteJsonFile(doc, a.out);
}

// ---------------------------------------------------------------- vision

struct VisionArgs {
  std::string target, public_embeddings, public_labels, labels, ids;
  std::string reference = "nb";
  std::string annotations, nb_model, fit_annotations, fit_labels;
  std::string probs, alt_target, alt_public;
  std::size_t k = 10;
  std::vector<double> percents = {20.0};
  double alpha = 1.0;
  std::size_t top_k_features = 20;
  std::size_t bins = 50;
  std::string hist_filter = "all";
  std::string agreement = "prediction";
  std::string out;
};

void AddVision(Command& cmd, VisionArgs& a) {
  cmd.Input("--target", a.target,
            "Target-model embeddings of the evaluated crops (DVEM)")
      ->required();
  cmd.Input("--public", a.public_embeddings,
            "Target-model embeddings of the labelled public set (DVEM)")
      ->required();
  cmd.Input("--public-labels", a.public_labels, "Public-set labels (CSV)")
      ->required();
  cmd.Input("--labels", a.labels, "True labels of the evaluated samples (CSV)")
      ->required();
  cmd.Input("--ids", a.ids, "Evaluate only these ids (one per line)");
  cmd.Param("--reference", a.reference, "Reference predictor")
      ->check(CLI::IsMember({"nb", "ingested", "alt-knn"}));
  cmd.Input("--annotations", a.annotations,
            "Detected objects of the evaluated samples (nb reference)");
  cmd.Input("--nb-model", a.nb_model, "Fitted model from nb-fit");
  cmd.Input("--fit-annotations", a.fit_annotations,
            "Fit the nb reference on these annotations instead of --nb-model");
  cmd.Input("--fit-labels", a.fit_labels, "Labels for --fit-annotations");
  cmd.Input("--probs", a.probs, "Class probabilities (ingested reference)");
  cmd.Input("--alt-target", a.alt_target,
            "Second model's embeddings of the evaluated crops (alt-knn)");
  cmd.Input("--alt-public", a.alt_public,
            "Second model's public-set embeddings (alt-knn)");
  cmd.Param("--k", a.k, "Neighbors per query")->check(kAtLeastOne);
  cmd.Param("--p", a.percents, "Percent for score@p; repeatable")
      ->check(kPercent);
  cmd.Param("--alpha", a.alpha, "Smoothing when fitting the nb reference")
      ->check(CLI::NonNegativeNumber);
  cmd.Param("--top-k-features", a.top_k_features,
            "Object truncation when fitting the nb reference")
      ->check(kAtLeastOne);
  cmd.Param("--bins", a.bins, "MemConf histogram bins")
      ->check(kAtLeastOne);
  cmd.Param("--hist-filter", a.hist_filter, "Samples in the histogram")
      ->check(CLI::IsMember({"all", "target-correct-ref-wrong"}));
  cmd.Param("--agreement", a.agreement,
            "Compare predicted classes or correctness")
      ->check(CLI::IsMember({"prediction", "correctness"}));
  cmd.Output("--out", a.out,
             "Report JSON path; the histogram goes to <stem>.memconf_hist.csv");
}

void RunVision(const Command& cmd, const VisionArgs& a) {
  json meta = cmd.Meta();

  std::optional<AnnotationTable> annotations;
  std::optional<EmbeddingMatrix> alt_target;
  std::optional<ReferencePredictor> reference;
  if (a.reference == "nb") {
    Require(a.annotations, "--reference nb needs --annotations");
    annotations = LoadAnnotations(a.annotations);
    if (!a.nb_model.empty()) {
      reference = ReferencePredictor::NaiveBayes(
          NBModel::FromJson(ReadJsonFile(a.nb_model)));
    } else {
      Require(a.fit_annotations,
              "--reference nb needs --nb-model or --fit-annotations");
      Require(a.fit_labels, "--fit-annotations needs --fit-labels");
      reference = ReferencePredictor::NaiveBayes(FitNaiveBayes(
          LoadAnnotations(a.fit_annotations), LoadLabels(a.fit_labels),
          a.alpha, a.top_k_features));
    }
  } else if (a.reference == "ingested") {
    Require(a.probs, "--reference ingested needs --probs");
    reference = ReferencePredictor::Ingested(LoadProbs(a.probs));
  } else {
    Require(a.alt_target, "--reference alt-knn needs --alt-target");
    Require(a.alt_public, "--reference alt-knn needs --alt-public");
    alt_target = NormalizeRows(LoadEmbeddings(a.alt_target));
    auto index = std::make_shared<const KnnIndex>(
        NormalizeRows(LoadEmbeddings(a.alt_public)));
    reference = ReferencePredictor::AltKnn(std::move(index),
                                           LoadLabels(a.public_labels), a.k);
  }

  VisionConfig config{
      .target = LoadEmbeddings(a.target),
      .public_embeddings = LoadEmbeddings(a.public_embeddings),
      .public_labels = LoadLabels(a.public_labels),
      .labels = LoadLabels(a.labels),
      .reference = std::move(*reference),
      .reference_inputs = {annotations ? &*annotations : nullptr,
                           alt_target ? &*alt_target : nullptr},
      .eval_ids = OptionalIds(a.ids),
      .k = a.k,
      .percents = a.percents,
      .histogram_bins = a.bins,
      .histogram_filter = a.hist_filter == "all"
                              ? HistogramFilter::kAll
                              : HistogramFilter::kTargetCorrectRefWrong,
      .agreement_on_correctness = a.agreement == "correctness",
      .threads = cmd.threads(),
  };
  const VisionReport report = RunVisionTest(config);
  json doc = VisionReportToJson(report);
  doc["meta"] = std::move(meta);
  WriteJsonFile(doc, a.out);
  WriteTextFile(HistogramCsv(report.histogram),
                SiblingPath(a.out, ".memconf_hist.csv"));
}

// ---------------------------------------------------------------- vlm

struct VlmArgs {
  std::string target_captions, target_public_images, target_public_captions;
  std::string ref_captions, ref_public, train_annotations, public_annotations;
  std::string ids;
  std::string mode = "t2i";
  std::size_t k = 10;
  std::size_t top_k_objects = 0;
  std::string out;
};

void AddVlm(Command& cmd, VlmArgs& a) {
  cmd.Input("--target-captions", a.target_captions,
            "Target-model caption embeddings of the evaluated samples")
      ->required();
  cmd.Input("--target-public-images", a.target_public_images,
            "Target-model public image embeddings (t2i)");
  cmd.Input("--target-public-captions", a.target_public_captions,
            "Target-model public caption embeddings (t2t)");
  cmd.Input("--ref-captions", a.ref_captions,
            "Reference text-model caption embeddings of the evaluated samples")
      ->required();
  cmd.Input("--ref-public", a.ref_public,
            "Reference text-model public caption embeddings")
      ->required();
  cmd.Input("--train-annotations", a.train_annotations,
            "Ground-truth objects of the evaluated images (JSONL)")
      ->required();
  cmd.Input("--public-annotations", a.public_annotations,
            "Objects of the public images (JSONL)")
      ->required();
  cmd.Input("--ids", a.ids, "Evaluate only these ids (one per line)");
  cmd.Param("--mode", a.mode, "Target search mode")
      ->check(CLI::IsMember({"t2i", "t2t"}));
  cmd.Param("--k", a.k, "Neighbors per query")->check(kAtLeastOne);
  cmd.Param("--top-k-objects", a.top_k_objects,
            "Objects kept per prediction; 0 keeps the full union");
  cmd.Output("--out", a.out,
             "Report JSON path; the Jaccard grid goes to <stem>.jaccard.csv");
}

void RunVlm(const Command& cmd, const VlmArgs& a) {
  const std::string& primary =
      a.mode == "t2i" ? a.target_public_images : a.target_public_captions;
  Require(primary, "--mode " + a.mode + " needs --target-public-" +
                       (a.mode == "t2i" ? "images" : "captions"));
  json meta = cmd.Meta();

  VlmConfig config{
      .target_captions = LoadEmbeddings(a.target_captions),
      .target_public = {},
      .mode = a.mode == "t2i" ? SearchMode::kTextToImage
                              : SearchMode::kTextToText,
      .reference_captions = LoadEmbeddings(a.ref_captions),
      .reference_public = LoadEmbeddings(a.ref_public),
      .train_annotations = LoadAnnotations(a.train_annotations),
      .public_annotations = LoadAnnotations(a.public_annotations),
      .eval_ids = OptionalIds(a.ids),
      .k = a.k,
      .top_k_objects = a.top_k_objects == 0
                           ? std::nullopt
                           : std::optional<std::size_t>(a.top_k_objects),
      .threads = cmd.threads(),
  };

  // Jaccard grid rows: every target mode with public embeddings, then the
  // reference.
  std::vector<std::string> labels;
  std::vector<std::map<SampleId, ObjectSet>> correct;
  std::optional<VlmReport> main_report;
  for (const auto& [mode, name, path] :
       {std::tuple{SearchMode::kTextToImage, "target-t2i",
                   &a.target_public_images},
        std::tuple{SearchMode::kTextToText, "target-t2t",
                   &a.target_public_captions}}) {
    if (path->empty()) continue;
    config.mode = mode;
    config.target_public = LoadEmbeddings(*path);
    VlmReport report = RunVlmTest(config);
    labels.emplace_back(name);
    correct.push_back(CorrectObjects(report, true));
    if (SearchModeName(mode) == a.mode) main_report = std::move(report);
  }
  labels.emplace_back("reference");
  correct.push_back(CorrectObjects(*main_report, false));

  json doc = VlmReportToJson(*main_report);
  doc["meta"] = std::move(meta);
  WriteJsonFile(doc, a.out);
  WriteTextFile(JaccardGridCsv(ComputeJaccardGrid(labels, correct)),
                SiblingPath(a.out, ".jaccard.csv"));
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  WorldSpec spec;
  bool vlm = false;
  std::string out_dir;
};

void AddSynth(Command& cmd, SynthArgs& a) {
  cmd.Param("--classes", a.spec.n_classes, "Number of classes")
      ->check(kAtLeastOne);
  cmd.Param("--objects", a.spec.n_objects, "Object vocabulary size")
      ->check(kAtLeastOne);
  cmd.Param("--rho", a.spec.correlation, "Signature-object correlation")
      ->check(CLI::Range(0.0, 1.0));
  cmd.Param("--mem-rate", a.spec.mem_rate, "Fraction of memorized samples")
      ->check(CLI::Range(0.0, 1.0));
  cmd.Param("--n-train", a.spec.n_train, "Training samples")
      ->check(kAtLeastOne);
  cmd.Param("--n-public", a.spec.n_public, "Public samples")
      ->check(kAtLeastOne);
  cmd.Param("--sigma", a.spec.noise_sigma, "Embedding noise")
      ->check(CLI::NonNegativeNumber);
  cmd.Param("--seed", a.spec.seed, "Random seed");
  cmd.Flag("--vlm", a.vlm, "Write a vision-language world instead");
  cmd.Output("--out-dir", a.out_dir, "Directory for the generated files");
}

void RunSynth(const Command& cmd, const SynthArgs& a) {
  try {
    ValidateSpec(a.spec);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  json meta = cmd.Meta();
  std::vector<SampleId> memorized;
  if (a.vlm) {
    const auto world = GenerateVlm(a.spec);
    WriteVlmWorldFiles(world, a.out_dir);
    memorized = world.memorized_ids;
  } else {
    const auto world = Generate(a.spec);
    WriteWorldFiles(world, a.out_dir);
    memorized = world.memorized_ids;
  }
  json truth = WorldTruthJson(a.spec, memorized);
  truth["meta"] = std::move(meta);
  WriteJsonFile(truth, fs::path(a.out_dir) / "world_truth.json");
}

// ---------------------------------------------------------------- agree

struct AgreeArgs {
  std::vector<std::string> preds;
  std::string truth, probe, confidence;
  double top_percent = 100.0;
  std::string out;
};

void AddAgree(Command& cmd, AgreeArgs& a) {
  cmd.app()
      ->add_option("--pred", a.preds,
                   "Predictions as NAME=PATH (CSV id,label); repeatable")
      ->required();
  cmd.Input("--truth", a.truth, "True labels; enables accuracy and --probe");
  cmd.Param("--probe", a.probe,
            "Predictor scored on the ids every other predictor gets right");
  cmd.Input("--confidence", a.confidence,
            "Probe confidence per id (CSV id,confidence) for --top-percent");
  cmd.Param("--top-percent", a.top_percent,
            "Restrict to the probe's most confident percent")
      ->check(kPercent);
  cmd.Output("--out", a.out, "Report JSON path");
}

std::map<SampleId, double> LoadConfidence(const fs::path& path) {
  const auto rows = ReadCsvFile(path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"id", "confidence"}) {
    throw Error(ErrorCode::kParseError,
                path.string() + ": header must be id,confidence");
  }
  std::map<SampleId, double> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) {
      throw Error(ErrorCode::kParseError,
                  path.string() + ": expected 2 fields on row " +
                      std::to_string(i + 1));
    }
    double v = 0;
    if (!CLI::detail::lexical_cast(rows[i][1], v) || !std::isfinite(v)) {
      throw Error(ErrorCode::kParseError,
                  path.string() + ": bad confidence '" + rows[i][1] + "'");
    }
    if (!out.emplace(SampleId(rows[i][0]), v).second) {
      throw Error(ErrorCode::kDuplicateSample, rows[i][0]);
    }
  }
  return out;
}

void RunAgree(Command& cmd, const AgreeArgs& a) {
  std::vector<std::string> names;
  std::vector<std::string> paths;
  for (const auto& spec : a.preds) {
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    const std::string name =
        eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
    if (name.empty() || path.empty()) {
      throw UsageError("--pred expects NAME=PATH, got '" + spec + "'");
    }
    if (std::find(names.begin(), names.end(), name) != names.end()) {
      throw UsageError("duplicate predictor name '" + name + "'");
    }
    names.push_back(name);
    paths.push_back(path);
    cmd.ExtraInput("pred:" + name, path);
  }
  if (!a.probe.empty()) {
    Require(a.truth, "--probe needs --truth");
    if (std::find(names.begin(), names.end(), a.probe) == names.end()) {
      throw UsageError("--probe '" + a.probe + "' names no --pred");
    }
    if (names.size() < 2) throw UsageError("--probe needs another --pred");
  }
  if (!a.confidence.empty() && a.probe.empty()) {
    throw UsageError("--confidence needs --probe");
  }
  json meta = cmd.Meta();

  std::vector<LabelTable> tables;
  for (const auto& path : paths) tables.push_back(LoadLabels(path));
  std::optional<LabelTable> truth;
  if (!a.truth.empty()) truth = LoadLabels(a.truth);

  std::vector<std::string> classes;
  for (const auto& t : tables) classes = MergeNames(classes, t.classes());
  if (truth) classes = MergeNames(classes, truth->classes());
  std::vector<Predictions> preds;
  for (const auto& t : tables) {
    const LabelTable reindexed = t.Reindexed(classes);
    preds.emplace_back(reindexed.entries().begin(), reindexed.entries().end());
  }

  json agreement = json::array();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < preds.size(); ++j) {
      row.push_back(AgreementFraction(preds[i], preds[j]));
    }
    agreement.push_back(std::move(row));
  }
  json doc = {{"predictors", names}, {"agreement", std::move(agreement)}};

  if (truth) {
    const LabelTable truth_table = truth->Reindexed(classes);
    std::vector<Correctness> correct;
    json accuracy = json::object();
    for (std::size_t i = 0; i < preds.size(); ++i) {
      Correctness c;
      std::size_t hits = 0;
      for (const auto& [id, label] : preds[i]) {
        auto want = truth_table.Find(id);
        if (!want) throw Error(ErrorCode::kMissingLabel, id.str());
        c.emplace(id, label == *want);
        hits += label == *want ? 1 : 0;
      }
      accuracy[names[i]] =
          preds[i].empty() ? 0.0
                           : static_cast<double>(hits) /
                                 static_cast<double>(preds[i].size());
      correct.push_back(std::move(c));
    }
    doc["accuracy"] = std::move(accuracy);

    if (!a.probe.empty()) {
      const auto probe_index = static_cast<std::size_t>(
          std::find(names.begin(), names.end(), a.probe) - names.begin());
      std::vector<Correctness> base;
      json base_names = json::array();
      for (std::size_t i = 0; i < correct.size(); ++i) {
        if (i == probe_index) continue;
        base.push_back(correct[i]);
        base_names.push_back(names[i]);
      }
      std::optional<TopPercentRestriction> restriction;
      if (!a.confidence.empty()) {
        restriction = TopPercentRestriction{a.top_percent,
                                            LoadConfidence(a.confidence)};
      } else if (a.top_percent != 100.0) {
        throw UsageError("--top-percent needs --confidence");
      }
      doc["intersection"] = {
          {"probe", a.probe},
          {"base", std::move(base_names)},
          {"top_percent", a.top_percent},
          {"accuracy", IntersectionAccuracy(base, correct[probe_index],
                                            restriction)}};
    }
  }
  doc["meta"] = std::move(meta);
  WriteJsonFile(doc, a.out);
}

}  // namespace

int RunCli(const std::vector<std::string>& args) {
  CLI::App app{"Deja vu memorization measurement from precomputed embeddings",
               "dejavu"};
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "",
                 "JSON file of option values; command-line flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kArtifactVersion));

  Command nb_fit(app, "nb-fit", "Fit the naive Bayes reference");
  Command vision(app, "vision", "Image deja vu test");
  Command vlm(app, "vlm", "Vision-language deja vu test");
  Command synth(app, "synth", "Generate a synthetic world");
  Command agree(app, "agree", "Agreement between prediction files");
  NbFitArgs nb_fit_args;
  VisionArgs vision_args;
  VlmArgs vlm_args;
  SynthArgs synth_args;
  AgreeArgs agree_args;
  AddNbFit(nb_fit, nb_fit_args);
  AddVision(vision, vision_args);
  AddVlm(vlm, vlm_args);
  AddSynth(synth, synth_args);
  AddAgree(agree, agree_args);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << e.what() << "\n"
              << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(nb_fit.app())) {
      RunNbFit(nb_fit, nb_fit_args);
    } else if (app.got_subcommand(vision.app())) {
      RunVision(vision, vision_args);
    } else if (app.got_subcommand(vlm.app())) {
      RunVlm(vlm, vlm_args);
    } else if (app.got_subcommand(synth.app())) {
      RunSynth(synth, synth_args);
    } else {
      RunAgree(agree, agree_args);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}

int RunCli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return RunCli(args);
}

}  // namespace dejavu
