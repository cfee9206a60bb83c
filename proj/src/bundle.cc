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

#include "vlscore/bundle.h"

#include <cmath>
#include <set>
#include <system_error>
#include <utility>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "vlscore/status_macros.h"
#include "vlscore/tensor_io.h"

namespace vlscore {
namespace {

using Json = nlohmann::ordered_json;

absl::Status Invalid(absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat("invalid bundle: ", what));
}

absl::Status CheckF32(const Tensor& t, absl::string_view name, size_t rank) {
  if (t.dtype() != DType::kF32 || t.rank() != rank) {
    return Invalid(absl::StrCat(name, " must be a rank-", rank,
                                " f32 tensor, got ", t.ShapeString()));
  }
  return absl::OkStatus();
}

absl::Status CheckConceptIndex(const InferenceBundle& b) {
  const size_t prompts = b.n_prompts();
  if (b.concept_index.empty()) return Invalid("concept_index is empty");
  const size_t templates = b.concept_index.front().template_rows.size();
  std::vector<bool> seen(prompts, false);
  std::set<std::pair<std::string, std::string>> names;
  for (const ConceptEntry& e : b.concept_index) {
    const std::string where =
        absl::StrCat("concept_index entry (", e.class_name, ", ",
                     e.concept_name, ")");
    if (!names.emplace(e.class_name, e.concept_name).second) {
      return Invalid(absl::StrCat(where, " is duplicated"));
    }
    if (e.template_rows.empty()) {
      return Invalid(absl::StrCat(where, " has no template rows"));
    }
    if (e.template_rows.size() != templates) {
      return Invalid(absl::StrCat(where, " has ", e.template_rows.size(),
                                  " template rows, expected ", templates));
    }
    for (uint64_t row : e.template_rows) {
      if (row >= prompts) {
        return Invalid(absl::StrCat(where, " references row ", row,
                                    " but text_raw has ", prompts, " rows"));
      }
      if (seen[row]) {
        return Invalid(absl::StrCat(where, " reuses text_raw row ", row));
      }
      seen[row] = true;
    }
  }
  if (prompts != b.concept_index.size() * templates) {
    return Invalid(absl::StrCat("text_raw has ", prompts, " rows but ",
                                b.concept_index.size(), " concepts x ",
                                templates, " templates were declared"));
  }
  return absl::OkStatus();
}

template <typename T>
absl::StatusOr<T> Field(const Json& meta, const char* key) {
  if (!meta.contains(key)) {
    return Invalid(absl::StrCat("meta.json is missing \"", key, "\""));
  }
  try {
    return meta.at(key).get<T>();
  } catch (const Json::exception& e) {
    return Invalid(absl::StrCat("meta.json field \"", key, "\": ", e.what()));
  }
}

template <typename T>
absl::StatusOr<T> OptionalField(const Json& meta, const char* key, T fallback) {
  if (!meta.contains(key) || meta.at(key).is_null()) return fallback;
  return Field<T>(meta, key);
}

absl::Status CheckDim(absl::string_view name, uint64_t declared,
                      uint64_t actual, absl::string_view tensor) {
  if (declared != actual) {
    return Invalid(absl::StrCat("meta.json ", name, "=", declared, " but ",
                                tensor, " has ", actual));
  }
  return absl::OkStatus();
}

absl::StatusOr<Tensor> ReadBundleTensor(const std::filesystem::path& dir,
                                        const char* file) {
  return ReadTensor(dir / file);
}

}  // namespace

absl::Status ValidateLabelMap(const Tensor& labels, size_t class_count) {
  if (labels.dtype() != DType::kU8 || labels.rank() != 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "label map must be a rank-2 u8 tensor, got ", labels.ShapeString()));
  }
  const auto codes = labels.u8();
  for (size_t i = 0; i < codes.size(); ++i) {
    const uint8_t v = codes[i];
    if (v < class_count || v == kOodLabel || v == kIgnoreLabel) continue;
    return absl::InvalidArgumentError(
        absl::StrCat("label map value ", static_cast<int>(v), " at pixel ", i,
                     " is neither an ID class (< ", class_count,
                     "), 254 (OOD) nor 255 (ignore)"));
  }
  return absl::OkStatus();
}

absl::Status ValidateBundle(const InferenceBundle& b) {
  RETURN_IF_ERROR(CheckF32(b.mask_scores, "mask_scores", 3));
  RETURN_IF_ERROR(CheckF32(b.vis_in, "vis_in", 2));
  RETURN_IF_ERROR(CheckF32(b.vis_out, "vis_out", 2));
  RETURN_IF_ERROR(CheckF32(b.text_raw, "text_raw", 2));
  const auto n = b.mask_scores.dim(0);
  const auto d = b.vis_in.dim(1);
  if (n == 0 || b.height() == 0 || b.width() == 0 || d == 0) {
    return Invalid("N, H, W and D must all be positive");
  }
  if (b.vis_in.dim(0) != n || b.vis_out.dim(0) != n) {
    return Invalid(absl::StrCat("mask_scores has ", n, " queries but vis_in ",
                                b.vis_in.ShapeString(), " and vis_out ",
                                b.vis_out.ShapeString()));
  }
  if (b.vis_out.dim(1) != d || b.text_raw.dim(1) != d) {
    return Invalid(absl::StrCat("embedding width mismatch: vis_in ",
                                b.vis_in.ShapeString(), ", vis_out ",
                                b.vis_out.ShapeString(), ", text_raw ",
                                b.text_raw.ShapeString()));
  }
  const auto s = b.mask_scores.f32();
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 0.0f || s[i] > 1.0f) {
      return Invalid(absl::StrCat("mask_scores element ", i, " = ", s[i],
                                  " is outside [0, 1]"));
    }
  }
  if (!(b.temperature > 0.0) || !std::isfinite(b.temperature)) {
    return Invalid(absl::StrCat("temperature must be > 0, got ", b.temperature));
  }
  if (!(b.alpha >= 0.0 && b.alpha <= 1.0)) {
    return Invalid(absl::StrCat("alpha must lie in [0, 1], got ", b.alpha));
  }
  if (!(b.beta >= 0.0 && b.beta <= 1.0)) {
    return Invalid(absl::StrCat("beta must lie in [0, 1], got ", b.beta));
  }
  if (b.class_names.empty()) return Invalid("class_names is empty");
  if (b.class_names.size() >= kOodLabel) {
    return Invalid("at most 253 ID classes fit the u8 label codes");
  }
  std::set<std::string> unique(b.class_names.begin(), b.class_names.end());
  if (unique.size() != b.class_names.size()) {
    return Invalid("class_names contains duplicates");
  }
  RETURN_IF_ERROR(CheckConceptIndex(b));
  if (b.labels.has_value()) {
    if (b.labels->dtype() != DType::kU8 || b.labels->rank() != 2 ||
        b.labels->dim(0) != b.height() || b.labels->dim(1) != b.width()) {
      return Invalid(absl::StrCat("labels must be u8 [", b.height(), ",",
                                  b.width(), "], got ",
                                  b.labels->ShapeString()));
    }
    auto st = ValidateLabelMap(*b.labels, b.class_names.size());
    if (!st.ok()) return Invalid(st.message());
  }
  return absl::OkStatus();
}

absl::StatusOr<InferenceBundle> LoadBundle(const std::filesystem::path& dir) {
  ASSIGN_OR_RETURN(std::string meta_text, ReadFileBytes(dir / "meta.json"));
  Json meta;
  try {
    meta = Json::parse(meta_text);
  } catch (const Json::exception& e) {
    return Invalid(absl::StrCat("meta.json: ", e.what()));
  }
  if (!meta.is_object()) return Invalid("meta.json must hold an object");

  InferenceBundle b;
  ASSIGN_OR_RETURN(b.mask_scores, ReadBundleTensor(dir, "mask_scores.vlt"));
  ASSIGN_OR_RETURN(b.vis_in, ReadBundleTensor(dir, "vis_in.vlt"));
  ASSIGN_OR_RETURN(b.vis_out, ReadBundleTensor(dir, "vis_out.vlt"));
  ASSIGN_OR_RETURN(b.text_raw, ReadBundleTensor(dir, "text_raw.vlt"));
  if (std::filesystem::exists(dir / "labels.vlt")) {
    ASSIGN_OR_RETURN(b.labels, ReadBundleTensor(dir, "labels.vlt"));
  }

  ASSIGN_OR_RETURN(b.temperature,
                   OptionalField<double>(meta, "temperature",
                                         kDefaultTemperature));
  ASSIGN_OR_RETURN(b.alpha, OptionalField<double>(meta, "alpha", kDefaultAlpha));
  ASSIGN_OR_RETURN(b.beta, OptionalField<double>(meta, "beta", kDefaultBeta));
  ASSIGN_OR_RETURN(b.class_names,
                   Field<std::vector<std::string>>(meta, "class_names"));
  ASSIGN_OR_RETURN(Json index, Field<Json>(meta, "concept_index"));
  if (!index.is_array()) return Invalid("concept_index must be a list");
  for (const Json& item : index) {
    ConceptEntry e;
    ASSIGN_OR_RETURN(e.class_name, Field<std::string>(item, "class"));
    ASSIGN_OR_RETURN(e.concept_name, Field<std::string>(item, "concept"));
    ASSIGN_OR_RETURN(e.template_rows,
                     Field<std::vector<uint64_t>>(item, "template_rows"));
    b.concept_index.push_back(std::move(e));
  }
  if (meta.contains("prng")) {
    Provenance p;
    ASSIGN_OR_RETURN(p.prng, Field<std::string>(meta, "prng"));
    ASSIGN_OR_RETURN(p.seed, Field<uint64_t>(meta, "seed"));
    b.provenance = std::move(p);
  }

  // Shapes first so the meta cross-check can index dimensions safely.
  RETURN_IF_ERROR(CheckF32(b.mask_scores, "mask_scores", 3));
  RETURN_IF_ERROR(CheckF32(b.vis_in, "vis_in", 2));
  RETURN_IF_ERROR(CheckF32(b.text_raw, "text_raw", 2));
  ASSIGN_OR_RETURN(uint64_t n, Field<uint64_t>(meta, "n_queries"));
  ASSIGN_OR_RETURN(uint64_t d, Field<uint64_t>(meta, "dim"));
  ASSIGN_OR_RETURN(uint64_t h, Field<uint64_t>(meta, "height"));
  ASSIGN_OR_RETURN(uint64_t w, Field<uint64_t>(meta, "width"));
  ASSIGN_OR_RETURN(uint64_t p, Field<uint64_t>(meta, "n_prompts"));
  RETURN_IF_ERROR(CheckDim("n_queries", n, b.mask_scores.dim(0), "mask_scores"));
  RETURN_IF_ERROR(CheckDim("height", h, b.mask_scores.dim(1), "mask_scores"));
  RETURN_IF_ERROR(CheckDim("width", w, b.mask_scores.dim(2), "mask_scores"));
  RETURN_IF_ERROR(CheckDim("dim", d, b.vis_in.dim(1), "vis_in"));
  RETURN_IF_ERROR(CheckDim("n_prompts", p, b.text_raw.dim(0), "text_raw"));

  RETURN_IF_ERROR(ValidateBundle(b));
  return b;
}

std::string BundleMetaJson(const InferenceBundle& b) {
  Json meta;
  meta["n_queries"] = b.n_queries();
  meta["dim"] = b.dim();
  meta["height"] = b.height();
  meta["width"] = b.width();
  meta["n_prompts"] = b.n_prompts();
  meta["temperature"] = b.temperature;
  meta["alpha"] = b.alpha;
  meta["beta"] = b.beta;
  meta["class_names"] = b.class_names;
  Json index = Json::array();
  for (const ConceptEntry& e : b.concept_index) {
    index.push_back({{"class", e.class_name},
                     {"concept", e.concept_name},
                     {"template_rows", e.template_rows}});
  }
  meta["concept_index"] = std::move(index);
  if (b.provenance.has_value()) {
    meta["prng"] = b.provenance->prng;
    meta["seed"] = b.provenance->seed;
  }
  return meta.dump(2) + "\n";
}

absl::Status WriteBundle(const InferenceBundle& b,
                         const std::filesystem::path& dir) {
  RETURN_IF_ERROR(ValidateBundle(b));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
  }
  RETURN_IF_ERROR(WriteTensor(b.mask_scores, dir / "mask_scores.vlt"));
  RETURN_IF_ERROR(WriteTensor(b.vis_in, dir / "vis_in.vlt"));
  RETURN_IF_ERROR(WriteTensor(b.vis_out, dir / "vis_out.vlt"));
  RETURN_IF_ERROR(WriteTensor(b.text_raw, dir / "text_raw.vlt"));
  if (b.labels.has_value()) {
    RETURN_IF_ERROR(WriteTensor(*b.labels, dir / "labels.vlt"));
  }
  return WriteFileAtomic(dir / "meta.json", BundleMetaJson(b));
}

}  // namespace vlscore
