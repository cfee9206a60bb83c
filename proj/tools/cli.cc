/*
 * Copyright 2026 The vlscore Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "json.hpp"
#include "vlscore/bundle.h"
#include "vlscore/default_vocab.h"
#include "vlscore/metrics.h"
#include "vlscore/scoring.h"
#include "vlscore/status_macros.h"
#include "vlscore/synth.h"
#include "vlscore/tensor_io.h"
#include "vlscore/vocab.h"

namespace vlscore {
namespace {

using Json = nlohmann::ordered_json;

constexpr char kDefaultVocabEnv[] = "VLSCORE_DEFAULT_VOCAB";

struct GenFixtureArgs {
  uint64_t seed = 0;
  std::string out;
  std::string spec;
  std::string vocab = "default";
};

struct ScoreArgs {
  std::string bundle;
  std::string vocab = "default";
  std::string merge = "none";
  std::string ood_prompts = "none";
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> temperature;
  std::string out;
  std::string report;
};

struct EvalArgs {
  std::vector<std::string> scores;
  std::vector<std::string> labels;
  size_t grid = kDefaultGridSize;
  std::string report;
  std::string pr_csv;
  std::string curve_csv;
};

struct CurveArgs {
  std::vector<std::string> scores;
  std::vector<std::string> labels;
  std::vector<std::string> id_scores;
  std::vector<std::string> id_labels;
  std::string out;
};

absl::StatusOr<VocabConfig> LoadVocab(const std::string& spec) {
  if (spec == "default") {
    const char* env = std::getenv(kDefaultVocabEnv);
    if (env == nullptr || *env == '\0') return DefaultVocab();
    ASSIGN_OR_RETURN(std::string text, ReadFileBytes(env));
    return ParseVocabConfig(text);
  }
  ASSIGN_OR_RETURN(std::string text, ReadFileBytes(spec));
  return ParseVocabConfig(text);
}

// "none", a class count equal to the vocab size, or a merging name.
absl::StatusOr<const Merging*> ResolveMerge(const VocabConfig& cfg,
                                            const std::string& merge) {
  if (merge == "none" || merge == std::to_string(cfg.classes.size())) {
    return nullptr;
  }
  if (const Merging* m = cfg.FindMerging(merge)) return m;
  return absl::InvalidArgumentError(
      absl::StrCat("--merge ", merge, ": the vocabulary defines no such merging"));
}

absl::StatusOr<std::vector<std::string>> ResolveOodPrompts(
    const VocabConfig& cfg, const std::string& name) {
  if (name == "none") return std::vector<std::string>{};
  if (absl::StartsWith(name, "file:")) {
    ASSIGN_OR_RETURN(std::string text, ReadFileBytes(name.substr(5)));
    std::vector<std::string> classes;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      absl::string_view trimmed = absl::StripAsciiWhitespace(line);
      if (trimmed.empty() || trimmed.front() == '#') continue;
      classes.emplace_back(trimmed);
    }
    return classes;
  }
  if (const OodPromptSet* set = cfg.FindOodPromptSet(name)) return set->classes;
  return absl::InvalidArgumentError(
      absl::StrCat("--ood-prompts ", name, ": unknown OOD prompt set"));
}

absl::Status WriteJson(const std::string& path, const Json& j) {
  return WriteFileAtomic(path, j.dump(2) + "\n");
}

std::string FormatNumber(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return absl::StrFormat("%.9g", v);
}

absl::Status RunGenFixture(const GenFixtureArgs& a, std::ostream& out) {
  FixtureSpec spec;
  if (!a.spec.empty()) {
    ASSIGN_OR_RETURN(std::string text, ReadFileBytes(a.spec));
    ASSIGN_OR_RETURN(spec, ParseFixtureSpec(text));
    spec.seed = a.seed;
  } else {
    ASSIGN_OR_RETURN(VocabConfig vocab, LoadVocab(a.vocab));
    ASSIGN_OR_RETURN(spec, DefaultFixtureSpec(vocab, a.seed));
  }
  RETURN_IF_ERROR(GenFixture(spec, a.out));
  out << "wrote fixture " << a.out << " (seed " << spec.seed << ", "
      << spec.classes.size() << " classes, " << spec.ood_prompts.size()
      << " OOD prompts)\n";
  return absl::OkStatus();
}

absl::Status RunScore(const ScoreArgs& a, std::ostream& out) {
  ASSIGN_OR_RETURN(InferenceBundle bundle, LoadBundle(a.bundle));
  ASSIGN_OR_RETURN(VocabConfig cfg, LoadVocab(a.vocab));
  if (bundle.class_names != cfg.classes) {
    return absl::InvalidArgumentError(
        "bundle class_names do not match the vocabulary classes");
  }
  if (a.alpha) bundle.alpha = *a.alpha;
  if (a.beta) bundle.beta = *a.beta;
  if (a.temperature) bundle.temperature = *a.temperature;
  RETURN_IF_ERROR(ValidateBundle(bundle));

  ASSIGN_OR_RETURN(const Merging* merging, ResolveMerge(cfg, a.merge));
  ASSIGN_OR_RETURN(ClassIndex idx,
                   BuildClassIndex(cfg, merging, bundle.concept_index));
  ASSIGN_OR_RETURN(auto ood_classes, ResolveOodPrompts(cfg, a.ood_prompts));
  if (!ood_classes.empty()) {
    ASSIGN_OR_RETURN(auto rows, ResolveOodRows(bundle.concept_index, ood_classes));
    ASSIGN_OR_RETURN(idx, ExtendWithOod(idx, rows, ood_classes));
  }
  ASSIGN_OR_RETURN(ScoreResult result, ScoreBundle(bundle, idx));
  RETURN_IF_ERROR(WriteTensor(result.uncertainty, a.out));

  Json meta;
  meta["vocab"] = a.vocab;
  meta["merge"] = merging == nullptr ? std::string("none") : merging->name;
  meta["id_channels"] = result.id_channels;
  meta["ood_prompts"] = a.ood_prompts;
  meta["ood_channels"] = result.ood_channels;
  meta["activation"] = ActivationName(result.activation);
  meta["temperature"] = bundle.temperature;
  meta["alpha"] = bundle.alpha;
  meta["beta"] = bundle.beta;
  meta["height"] = result.uncertainty.dim(0);
  meta["width"] = result.uncertainty.dim(1);
  RETURN_IF_ERROR(WriteJson(a.out + ".json", meta));
  if (!a.report.empty()) RETURN_IF_ERROR(WriteJson(a.report, meta));
  out << "scored " << a.bundle << ": " << result.id_channels
      << " ID channels, " << result.ood_channels << " OOD channels, "
      << ActivationName(result.activation) << ", T=" << bundle.temperature
      << " alpha=" << bundle.alpha << " beta=" << bundle.beta << "\n";
  return absl::OkStatus();
}

absl::Status LoadPairs(const std::vector<std::string>& score_paths,
                       const std::vector<std::string>& label_paths,
                       std::vector<Tensor>* scores,
                       std::vector<Tensor>* labels) {
  if (score_paths.size() != label_paths.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        score_paths.size(), " score maps but ", label_paths.size(),
        " label maps"));
  }
  for (size_t i = 0; i < score_paths.size(); ++i) {
    ASSIGN_OR_RETURN(Tensor u, ReadTensor(score_paths[i]));
    ASSIGN_OR_RETURN(Tensor l, ReadTensor(label_paths[i]));
    if (u.dtype() != DType::kF32 || u.rank() != 2) {
      return absl::InvalidArgumentError(absl::StrCat(
          score_paths[i], ": expected an f32 [H, W] map, got ", u.ShapeString()));
    }
    RETURN_IF_ERROR(ValidateLabelMap(l, kOodLabel));
    scores->push_back(std::move(u));
    labels->push_back(std::move(l));
  }
  return absl::OkStatus();
}

std::string CurveCsv(const std::vector<RetentionPoint>& curve) {
  std::string csv = "threshold,ood_recall,id_retention\n";
  for (const RetentionPoint& p : curve) {
    absl::StrAppend(&csv, FormatNumber(p.threshold), ",",
                    FormatNumber(p.ood_recall), ",",
                    FormatNumber(p.id_retention), "\n");
  }
  return csv;
}

absl::Status RunEval(const EvalArgs& a, std::ostream& out) {
  std::vector<Tensor> scores, labels;
  RETURN_IF_ERROR(LoadPairs(a.scores, a.labels, &scores, &labels));
  EvalOptions options;
  options.grid_size = a.grid;
  ASSIGN_OR_RETURN(MetricsReport report, Evaluate(scores, labels, options));

  Json j;
  j["ap"] = report.ap;
  j["fpr_at_95tpr"] = report.fpr_at_95tpr;
  j["siou_gt"] = report.siou_gt;
  j["ppv"] = report.ppv;
  j["mean_f1"] = report.mean_f1;
  Json curve = Json::array();
  for (const RetentionPoint& p : report.curve) {
    curve.push_back({p.ood_recall, p.id_retention});
  }
  j["curve"] = std::move(curve);
  j["counts"] = {{"images", report.images},
                 {"pixels", report.pixels},
                 {"ood_pixels", report.ood_pixels},
                 {"component_images", report.component_images}};
  Json config;
  config["grid"] = options.grid_size;
  config["target_tpr"] = options.target_tpr;
  config["connectivity"] = static_cast<int>(options.connectivity);
  Json scoring = Json::array();
  for (const std::string& path : a.scores) {
    auto sidecar = ReadFileBytes(path + ".json");
    if (!sidecar.ok()) {
      scoring.push_back(nullptr);
      continue;
    }
    try {
      scoring.push_back(Json::parse(*sidecar));
    } catch (const Json::exception& e) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ".json: ", e.what()));
    }
  }
  config["scoring"] = std::move(scoring);
  j["config"] = std::move(config);
  RETURN_IF_ERROR(WriteJson(a.report, j));

  if (!a.curve_csv.empty()) {
    RETURN_IF_ERROR(WriteFileAtomic(a.curve_csv, CurveCsv(report.curve)));
  }
  if (!a.pr_csv.empty()) {
    ScoredPixels pooled;
    for (size_t i = 0; i < scores.size(); ++i) {
      ASSIGN_OR_RETURN(ScoredPixels p, CollectScoredPixels(scores[i], labels[i]));
      pooled.Append(p);
    }
    ASSIGN_OR_RETURN(auto pr, PrecisionRecallCurve(pooled));
    std::string csv = "threshold,recall,precision\n";
    for (const PrPoint& p : pr) {
      absl::StrAppend(&csv, FormatNumber(p.threshold), ",",
                      FormatNumber(p.recall), ",", FormatNumber(p.precision),
                      "\n");
    }
    RETURN_IF_ERROR(WriteFileAtomic(a.pr_csv, csv));
  }
  out << absl::StrFormat(
      "AP %.4f  FPR@95TPR %.4f  sIoU_gt %.4f  PPV %.4f  mF1 %.4f\n", report.ap,
      report.fpr_at_95tpr, report.siou_gt, report.ppv, report.mean_f1);
  return absl::OkStatus();
}

absl::Status RunCurve(const CurveArgs& a, std::ostream& out) {
  std::vector<Tensor> scores, labels;
  RETURN_IF_ERROR(LoadPairs(a.scores, a.labels, &scores, &labels));
  ScoredPixels ood;
  for (size_t i = 0; i < scores.size(); ++i) {
    ASSIGN_OR_RETURN(ScoredPixels p, CollectScoredPixels(scores[i], labels[i]));
    ood.Append(p);
  }
  std::vector<float> id_scores;
  if (a.id_scores.empty()) {
    for (size_t i = 0; i < ood.scores.size(); ++i) {
      if (!ood.is_ood[i]) id_scores.push_back(ood.scores[i]);
    }
  } else {
    std::vector<Tensor> id_maps, id_labels;
    RETURN_IF_ERROR(LoadPairs(a.id_scores, a.id_labels, &id_maps, &id_labels));
    for (size_t i = 0; i < id_maps.size(); ++i) {
      ASSIGN_OR_RETURN(ScoredPixels p,
                       CollectScoredPixels(id_maps[i], id_labels[i]));
      id_scores.insert(id_scores.end(), p.scores.begin(), p.scores.end());
    }
  }
  ASSIGN_OR_RETURN(auto curve, RetentionCurve(ood, id_scores));
  RETURN_IF_ERROR(WriteFileAtomic(a.out, CurveCsv(curve)));
  out << "wrote " << curve.size() << " curve points to " << a.out << "\n";
  return absl::OkStatus();
}

int ExitCode(const absl::Status& status, std::ostream& err) {
  if (status.ok()) return kExitOk;
  err << "error: " << status.message() << "\n";
  return IsIoError(status) ? kExitIo : kExitValidation;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Vision-language anomaly scoring and benchmark evaluation",
               "vlscore"};
  app.require_subcommand(1);

  GenFixtureArgs gen;
  auto* gen_cmd = app.add_subcommand(
      "gen-fixture", "Write a deterministic synthetic bundle with labels");
  gen_cmd->add_option("--seed", gen.seed, "PRNG seed");
  gen_cmd->add_option("--out", gen.out, "Output bundle directory")->required();
  gen_cmd->add_option("--spec", gen.spec, "Fixture spec JSON (optional)");
  gen_cmd->add_option("--vocab", gen.vocab,
                      "Vocabulary for the default scene: 'default' or a path");

  ScoreArgs score;
  auto* score_cmd =
      app.add_subcommand("score", "Compute the uncertainty map of a bundle");
  score_cmd->add_option("--bundle", score.bundle, "Bundle directory")->required();
  score_cmd->add_option("--vocab", score.vocab, "'default' or a vocab.json path");
  score_cmd->add_option("--merge", score.merge,
                        "Superclass count: 19 (none), 8, 3 or 1");
  score_cmd->add_option("--ood-prompts", score.ood_prompts,
                        "none, ra19, smiyc, rba or file:PATH");
  score_cmd->add_option("--alpha", score.alpha, "ID-channel ensemble exponent")
      ->check(CLI::Range(0.0, 1.0));
  score_cmd->add_option("--beta", score.beta, "OOD-channel ensemble exponent")
      ->check(CLI::Range(0.0, 1.0));
  score_cmd->add_option("--temp", score.temperature, "Softmax temperature")
      ->check(CLI::PositiveNumber);
  score_cmd->add_option("--out", score.out, "Output uncertainty map (.vlt)")
      ->required();
  score_cmd->add_option("--report", score.report,
                        "Also write the scoring metadata JSON here");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand(
      "eval", "Pixel and component metrics of uncertainty maps");
  eval_cmd->add_option("--scores", eval.scores, "Uncertainty map(s)")
      ->required();
  eval_cmd->add_option("--labels", eval.labels, "Label map(s), same order")
      ->required();
  eval_cmd->add_option("--grid", eval.grid, "Component threshold count")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--report", eval.report, "Output report JSON")
      ->required();
  eval_cmd->add_option("--pr-csv", eval.pr_csv, "Precision-recall curve CSV");
  eval_cmd->add_option("--curve-csv", eval.curve_csv, "Retention curve CSV");

  CurveArgs curve;
  auto* curve_cmd = app.add_subcommand(
      "curve", "OOD recall vs ID retention trade-off as CSV");
  curve_cmd->add_option("--scores", curve.scores, "OOD-dataset map(s)")
      ->required();
  curve_cmd->add_option("--labels", curve.labels, "OOD-dataset label map(s)")
      ->required();
  curve_cmd->add_option("--id-scores", curve.id_scores, "ID-dataset map(s)");
  curve_cmd->add_option("--id-labels", curve.id_labels,
                        "ID-dataset label map(s); 255 pixels are dropped");
  curve_cmd->add_option("--out", curve.out, "Output CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty()
                              ? &app
                              : app.get_subcommands().front();
    err << sub->help();
    return kExitValidation;
  }

  absl::Status status;
  if (gen_cmd->parsed()) {
    status = RunGenFixture(gen, out);
  } else if (score_cmd->parsed()) {
    status = RunScore(score, out);
  } else if (eval_cmd->parsed()) {
    status = RunEval(eval, out);
  } else {
    status = RunCurve(curve, out);
  }
  return ExitCode(status, err);
}

}  // namespace vlscore
