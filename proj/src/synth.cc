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

#include "vlscore/synth.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "vlscore/prng.h"
#include "vlscore/status_macros.h"

namespace vlscore {
namespace {

using Json = nlohmann::ordered_json;
using Vec = std::vector<double>;

absl::Status SpecError(absl::string_view what) {
  return absl::InvalidArgumentError(absl::StrCat("fixture spec: ", what));
}

void Normalize(Vec* v) {
  double n2 = 0.0;
  for (double x : *v) n2 += x * x;
  const double n = std::sqrt(n2);
  for (double& x : *v) x /= n;
}

Vec GaussianVec(SplitMix64* rng, size_t dim, double scale) {
  Vec v(dim);
  for (double& x : v) x = scale * rng->Normal();
  return v;
}

size_t OodPrototypeCount(const FixtureSpec& spec) {
  size_t count = spec.ood_prompts.size();
  for (const Blob& b : spec.blobs) {
    if (b.kind == BlobKind::kOod) count = std::max(count, b.index + 1);
  }
  return count;
}

// `count` unit vectors whose pairwise cosine is at most 1 - margin.
absl::StatusOr<std::vector<Vec>> Prototypes(SplitMix64* rng, size_t count,
                                            size_t dim, double margin) {
  if (count > dim) {
    return absl::InvalidArgumentError(absl::StrCat(
        "fixture generation: ", count, " prototypes do not fit in dim ", dim));
  }
  // Modified Gram-Schmidt on seeded Gaussian vectors.
  std::vector<Vec> basis;
  while (basis.size() < count) {
    Vec v = GaussianVec(rng, dim, 1.0);
    for (const Vec& b : basis) {
      double dot = 0.0;
      for (size_t d = 0; d < dim; ++d) dot += v[d] * b[d];
      for (size_t d = 0; d < dim; ++d) v[d] -= dot * b[d];
    }
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 < 1e-12) continue;
    Normalize(&v);
    basis.push_back(std::move(v));
  }
  if (margin <= 1.0 || count < 2) return basis;

  // Regular simplex: pairwise cosine -1 / (count - 1).
  const double best = 1.0 + 1.0 / static_cast<double>(count - 1);
  if (margin > best) {
    return absl::InvalidArgumentError(absl::StrCat(
        "fixture generation: margin ", margin, " is unsatisfiable for ", count,
        " prototypes (at most ", best, ")"));
  }
  Vec centroid(dim, 0.0);
  for (const Vec& b : basis) {
    for (size_t d = 0; d < dim; ++d) centroid[d] += b[d] / count;
  }
  for (Vec& b : basis) {
    for (size_t d = 0; d < dim; ++d) b[d] -= centroid[d];
    Normalize(&b);
  }
  return basis;
}

std::vector<float> ToFloat(const std::vector<Vec>& rows) {
  std::vector<float> out;
  for (const Vec& r : rows) {
    for (double x : r) out.push_back(static_cast<float>(x));
  }
  return out;
}

}  // namespace

absl::Status ValidateFixtureSpec(const FixtureSpec& spec) {
  if (spec.classes.empty()) return SpecError("needs at least one ID class");
  if (spec.n_queries == 0 || spec.dim == 0 || spec.height == 0 ||
      spec.width == 0 || spec.templates == 0) {
    return SpecError("n_queries, dim, height, width and templates must be > 0");
  }
  if (!(spec.margin > 0.0 && spec.margin < 2.0)) {
    return SpecError(absl::StrCat("margin ", spec.margin, " outside (0, 2)"));
  }
  if (spec.blobs.size() > spec.n_queries) {
    return SpecError(absl::StrCat(spec.blobs.size(), " blobs need at least as "
                                  "many queries, got ", spec.n_queries));
  }
  std::set<std::string> names;
  for (const FixtureClass& c : spec.classes) {
    if (c.concepts.empty()) {
      return SpecError(absl::StrCat("class \"", c.name, "\" has no concepts"));
    }
    if (!names.insert(c.name).second) {
      return SpecError(absl::StrCat("duplicate class \"", c.name, "\""));
    }
  }
  for (const std::string& o : spec.ood_prompts) {
    if (!names.insert(o).second) {
      return SpecError(absl::StrCat("OOD prompt \"", o,
                                    "\" clashes with another name"));
    }
  }
  for (size_t i = 0; i < spec.blobs.size(); ++i) {
    const Blob& b = spec.blobs[i];
    const std::string where = absl::StrCat("blob ", i, ": ");
    if (b.rect.height == 0 || b.rect.width == 0 ||
        b.rect.top + b.rect.height > spec.height ||
        b.rect.left + b.rect.width > spec.width) {
      return SpecError(absl::StrCat(where, "rectangle outside the image"));
    }
    if (b.kind == BlobKind::kId && b.index >= spec.classes.size()) {
      return SpecError(absl::StrCat(where, "class ", b.index, " out of range"));
    }
    if (b.mix_class.has_value() && *b.mix_class >= spec.classes.size()) {
      return SpecError(absl::StrCat(where, "mix class out of range"));
    }
  }
  const double probs[] = {spec.mask_inside, spec.mask_outside};
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) return SpecError("mask levels outside [0, 1]");
  }
  if (!(spec.temperature > 0.0)) return SpecError("temperature must be > 0");
  if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0 && spec.beta >= 0.0 &&
        spec.beta <= 1.0)) {
    return SpecError("alpha and beta must lie in [0, 1]");
  }
  return absl::OkStatus();
}

VocabConfig FixtureVocab(const FixtureSpec& spec) {
  VocabConfig cfg;
  for (const FixtureClass& c : spec.classes) {
    cfg.classes.push_back(c.name);
    cfg.concepts.push_back(c.concepts);
  }
  for (size_t t = 0; t < spec.templates; ++t) {
    cfg.templates.push_back(absl::StrCat("template ", t, ": {}"));
  }
  if (!spec.ood_prompts.empty()) {
    cfg.ood_prompt_sets.push_back({"default", spec.ood_prompts});
  }
  return cfg;
}

absl::StatusOr<InferenceBundle> MakeFixture(const FixtureSpec& spec) {
  RETURN_IF_ERROR(ValidateFixtureSpec(spec));
  SplitMix64 rng(spec.seed);
  const size_t k_count = spec.classes.size();
  const size_t dim = spec.dim;
  const double sigma = 1.0 / std::sqrt(static_cast<double>(dim));

  ASSIGN_OR_RETURN(auto protos, Prototypes(&rng, k_count + OodPrototypeCount(spec),
                                           dim, spec.margin));
  auto ood_proto = [&](size_t q) -> const Vec& { return protos[k_count + q]; };

  // Text rows: prototype + per-concept offset + per-template noise.
  const VocabConfig vocab = FixtureVocab(spec);
  std::vector<ConceptEntry> index =
      MakeConceptIndex(vocab, spec.ood_prompts, spec.templates);
  std::vector<Vec> text(index.size() * spec.templates);
  for (size_t m = 0; m < index.size(); ++m) {
    const Vec& base = m < index.size() - spec.ood_prompts.size()
                          ? protos[std::find(vocab.classes.begin(),
                                             vocab.classes.end(),
                                             index[m].class_name) -
                                   vocab.classes.begin()]
                          : ood_proto(m - (index.size() - spec.ood_prompts.size()));
    const Vec offset = GaussianVec(&rng, dim, spec.concept_noise * sigma);
    for (uint64_t row : index[m].template_rows) {
      Vec v = GaussianVec(&rng, dim, spec.template_noise * sigma);
      for (size_t d = 0; d < dim; ++d) v[d] += base[d] + offset[d];
      text[row] = std::move(v);
    }
  }

  // Query targets: one per blob, leftover queries sit on class prototypes.
  std::vector<Vec> vis_in, vis_out;
  for (size_t i = 0; i < spec.n_queries; ++i) {
    Vec target;
    if (i < spec.blobs.size()) {
      const Blob& b = spec.blobs[i];
      target = b.kind == BlobKind::kId ? protos[b.index] : ood_proto(b.index);
      if (b.mix_class.has_value()) {
        for (size_t d = 0; d < dim; ++d) {
          target[d] += b.mix_weight * protos[*b.mix_class][d];
        }
      }
      Normalize(&target);
    } else {
      target = protos[i % k_count];
    }
    for (auto* out : {&vis_in, &vis_out}) {
      Vec v = GaussianVec(&rng, dim, spec.visual_noise * sigma);
      for (size_t d = 0; d < dim; ++d) v[d] += target[d];
      out->push_back(std::move(v));
    }
  }

  // Pixel ownership: last blob covering a pixel wins.
  const size_t pixels = spec.height * spec.width;
  std::vector<int> owner(pixels, -1);
  for (size_t i = 0; i < spec.blobs.size(); ++i) {
    const Rect& r = spec.blobs[i].rect;
    for (size_t y = r.top; y < r.top + r.height; ++y) {
      for (size_t x = r.left; x < r.left + r.width; ++x) {
        owner[y * spec.width + x] = static_cast<int>(i);
      }
    }
  }
  std::vector<float> masks(spec.n_queries * pixels);
  for (size_t i = 0; i < spec.n_queries; ++i) {
    for (size_t p = 0; p < pixels; ++p) {
      const double level = owner[p] == static_cast<int>(i) ? spec.mask_inside
                                                           : spec.mask_outside;
      const double jitter = spec.mask_jitter * (2.0 * rng.Uniform() - 1.0);
      masks[i * pixels + p] =
          static_cast<float>(std::clamp(level + jitter, 0.0, 1.0));
    }
  }
  std::vector<uint8_t> labels(pixels, kIgnoreLabel);
  for (size_t p = 0; p < pixels; ++p) {
    if (owner[p] < 0) continue;
    const Blob& b = spec.blobs[owner[p]];
    labels[p] = b.kind == BlobKind::kId ? static_cast<uint8_t>(b.index)
                                        : kOodLabel;
  }

  InferenceBundle bundle;
  ASSIGN_OR_RETURN(bundle.mask_scores,
                   Tensor::FromF32({spec.n_queries, spec.height, spec.width},
                                   std::move(masks)));
  ASSIGN_OR_RETURN(bundle.vis_in,
                   Tensor::FromF32({spec.n_queries, dim}, ToFloat(vis_in)));
  ASSIGN_OR_RETURN(bundle.vis_out,
                   Tensor::FromF32({spec.n_queries, dim}, ToFloat(vis_out)));
  ASSIGN_OR_RETURN(bundle.text_raw,
                   Tensor::FromF32({text.size(), dim}, ToFloat(text)));
  ASSIGN_OR_RETURN(bundle.labels,
                   Tensor::FromU8({spec.height, spec.width}, std::move(labels)));
  bundle.temperature = spec.temperature;
  bundle.alpha = spec.alpha;
  bundle.beta = spec.beta;
  bundle.class_names = vocab.classes;
  bundle.concept_index = std::move(index);
  bundle.provenance = Provenance{SplitMix64::kName, spec.seed};
  RETURN_IF_ERROR(ValidateBundle(bundle));
  return bundle;
}

absl::Status GenFixture(const FixtureSpec& spec,
                        const std::filesystem::path& out) {
  ASSIGN_OR_RETURN(InferenceBundle bundle, MakeFixture(spec));
  return WriteBundle(bundle, out);
}

absl::StatusOr<FixtureSpec> DefaultFixtureSpec(const VocabConfig& vocab,
                                               uint64_t seed) {
  FixtureSpec spec;
  spec.seed = seed;
  spec.n_queries = 8;
  spec.dim = 64;
  spec.height = 64;
  spec.width = 64;
  spec.templates = vocab.templates.size();
  for (size_t k = 0; k < vocab.classes.size(); ++k) {
    spec.classes.push_back({vocab.classes[k], vocab.concepts[k]});
  }
  std::set<std::string> seen;
  for (const OodPromptSet& s : vocab.ood_prompt_sets) {
    for (const std::string& c : s.classes) {
      if (seen.insert(c).second) spec.ood_prompts.push_back(c);
    }
  }
  auto class_id = [&](absl::string_view name) -> absl::StatusOr<size_t> {
    for (size_t k = 0; k < vocab.classes.size(); ++k) {
      if (vocab.classes[k] == name) return k;
    }
    return absl::InvalidArgumentError(absl::StrCat(
        "default fixture needs class \"", name, "\" in the vocabulary"));
  };
  ASSIGN_OR_RETURN(size_t road, class_id("road"));
  ASSIGN_OR_RETURN(size_t sky, class_id("sky"));
  ASSIGN_OR_RETURN(size_t building, class_id("building"));
  ASSIGN_OR_RETURN(size_t vegetation, class_id("vegetation"));
  ASSIGN_OR_RETURN(size_t car, class_id("car"));
  ASSIGN_OR_RETURN(size_t person, class_id("person"));
  // First prompt stands in for a prompted anomaly; index Q has no prompt.
  const size_t prompted = 0;
  const size_t unprompted = spec.ood_prompts.size();
  spec.blobs = {
      {{0, 0, 64, 64}, BlobKind::kId, road, std::nullopt, 0.0},
      {{0, 0, 16, 64}, BlobKind::kId, sky, std::nullopt, 0.0},
      {{16, 0, 18, 24}, BlobKind::kId, building, std::nullopt, 0.0},
      {{16, 40, 18, 24}, BlobKind::kId, vegetation, std::nullopt, 0.0},
      {{38, 4, 14, 18}, BlobKind::kId, car, std::nullopt, 0.0},
      {{34, 28, 18, 6}, BlobKind::kId, person, std::nullopt, 0.0},
      {{40, 42, 12, 12}, BlobKind::kOod, prompted, std::nullopt, 0.0},
      {{20, 27, 8, 8}, BlobKind::kOod, unprompted, std::nullopt, 0.0},
  };
  return spec;
}

FixtureSpec RandomFixtureSpec(uint64_t seed, size_t classes,
                              size_t ood_prompts, size_t n_queries,
                              size_t height, size_t width) {
  SplitMix64 rng(seed ^ 0x5EEDF1C7u);
  FixtureSpec spec;
  spec.seed = seed;
  spec.n_queries = std::max<size_t>(n_queries, 1);
  spec.height = height;
  spec.width = width;
  spec.templates = 1 + rng.Below(3);
  for (size_t k = 0; k < classes; ++k) {
    FixtureClass c{absl::StrCat("class", k), {}};
    const size_t concepts = 1 + rng.Below(3);
    for (size_t j = 0; j < concepts; ++j) {
      c.concepts.push_back(absl::StrCat("class", k, " concept", j));
    }
    spec.classes.push_back(std::move(c));
  }
  for (size_t q = 0; q < ood_prompts; ++q) {
    spec.ood_prompts.push_back(absl::StrCat("ood", q));
  }
  spec.dim = std::max<size_t>(16, classes + ood_prompts + spec.n_queries + 1);
  spec.temperature = 0.02 + 0.2 * rng.Uniform();
  spec.alpha = rng.Uniform();
  spec.beta = rng.Uniform();
  spec.visual_noise = 0.3 * rng.Uniform();
  spec.blobs.push_back({{0, 0, height, width}, BlobKind::kId,
                        rng.Below(classes), std::nullopt, 0.0});
  for (size_t i = 1; i < spec.n_queries; ++i) {
    Blob b;
    b.rect.height = 1 + rng.Below(height);
    b.rect.width = 1 + rng.Below(width);
    b.rect.top = rng.Below(height - b.rect.height + 1);
    b.rect.left = rng.Below(width - b.rect.width + 1);
    if (rng.Uniform() < 0.3) {
      b.kind = BlobKind::kOod;
      b.index = rng.Below(ood_prompts + 1);
    } else {
      b.index = rng.Below(classes);
    }
    if (rng.Uniform() < 0.3) {
      b.mix_class = rng.Below(classes);
      b.mix_weight = rng.Uniform();
    }
    spec.blobs.push_back(b);
  }
  return spec;
}

absl::StatusOr<FixtureSpec> ParseFixtureSpec(absl::string_view text) {
  FixtureSpec spec;
  try {
    const Json j = Json::parse(text);
    if (!j.is_object()) return SpecError("expected a JSON object");
    auto get = [&](const char* key, auto* field) {
      if (j.contains(key)) *field = j.at(key).get<std::decay_t<decltype(*field)>>();
    };
    get("seed", &spec.seed);
    get("n_queries", &spec.n_queries);
    get("dim", &spec.dim);
    get("height", &spec.height);
    get("width", &spec.width);
    get("templates", &spec.templates);
    get("ood_prompts", &spec.ood_prompts);
    get("margin", &spec.margin);
    get("concept_noise", &spec.concept_noise);
    get("template_noise", &spec.template_noise);
    get("visual_noise", &spec.visual_noise);
    get("mask_inside", &spec.mask_inside);
    get("mask_outside", &spec.mask_outside);
    get("mask_jitter", &spec.mask_jitter);
    get("temperature", &spec.temperature);
    get("alpha", &spec.alpha);
    get("beta", &spec.beta);
    if (j.contains("classes")) {
      for (const Json& c : j.at("classes")) {
        FixtureClass fc;
        if (c.is_string()) {
          fc.name = c.get<std::string>();
          fc.concepts = {fc.name};
        } else {
          fc.name = c.at("name").get<std::string>();
          fc.concepts = c.at("concepts").get<std::vector<std::string>>();
        }
        spec.classes.push_back(std::move(fc));
      }
    }
    if (j.contains("blobs")) {
      for (const Json& b : j.at("blobs")) {
        Blob blob;
        const auto r = b.at("rect").get<std::vector<size_t>>();
        if (r.size() != 4) return SpecError("blob rect needs 4 numbers");
        blob.rect = {r[0], r[1], r[2], r[3]};
        const std::string kind = b.value("kind", std::string("id"));
        if (kind != "id" && kind != "ood") {
          return SpecError(absl::StrCat("unknown blob kind \"", kind, "\""));
        }
        blob.kind = kind == "id" ? BlobKind::kId : BlobKind::kOod;
        blob.index = b.at("index").get<size_t>();
        if (b.contains("mix_class")) {
          blob.mix_class = b.at("mix_class").get<size_t>();
          blob.mix_weight = b.value("mix_weight", 0.0);
        }
        spec.blobs.push_back(blob);
      }
    }
  } catch (const Json::exception& e) {
    return SpecError(e.what());
  }
  RETURN_IF_ERROR(ValidateFixtureSpec(spec));
  return spec;
}

}  // namespace vlscore
