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

#ifndef VLSCORE_BUNDLE_H_
#define VLSCORE_BUNDLE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "vlscore/tensor.h"

namespace vlscore {

inline constexpr uint8_t kOodLabel = 254;
inline constexpr uint8_t kIgnoreLabel = 255;

inline constexpr double kDefaultTemperature = 0.01;
inline constexpr double kDefaultAlpha = 0.4;
inline constexpr double kDefaultBeta = 0.8;

// One alternative concept of a class and the rows of `text_raw` holding its
// per-template embeddings.
struct ConceptEntry {
  std::string class_name;
  std::string concept_name;
  std::vector<uint64_t> template_rows;
};

struct Provenance {
  std::string prng;
  uint64_t seed = 0;
};

// One image's exported model outputs.
//
//   mask_scores  f32 [N, H, W], values in [0, 1]
//   vis_in       f32 [N, D], decoder-processed query embeddings
//   vis_out      f32 [N, D], mask-pooled frozen-encoder embeddings
//   text_raw     f32 [P, D], one row per (concept, template) pair
//   labels       u8  [H, W], optional ground truth
struct InferenceBundle {
  Tensor mask_scores;
  Tensor vis_in;
  Tensor vis_out;
  Tensor text_raw;
  std::optional<Tensor> labels;

  double temperature = kDefaultTemperature;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;

  // ID class names; label code k refers to class_names[k].
  std::vector<std::string> class_names;
  std::vector<ConceptEntry> concept_index;
  std::optional<Provenance> provenance;

  size_t n_queries() const { return mask_scores.dim(0); }
  size_t height() const { return mask_scores.dim(1); }
  size_t width() const { return mask_scores.dim(2); }
  size_t dim() const { return vis_in.dim(1); }
  size_t n_prompts() const { return text_raw.dim(0); }
};

// Checks every bundle invariant. Errors are InvalidArgument.
absl::Status ValidateBundle(const InferenceBundle& bundle);

// Label maps: every code is < class_count, or 254 (OOD), or 255 (ignore).
absl::Status ValidateLabelMap(const Tensor& labels, size_t class_count);

// Reads meta.json, mask_scores.vlt, vis_in.vlt, vis_out.vlt, text_raw.vlt and
// (if present) labels.vlt from `dir`. Meta dimensions are cross-checked
// against the tensors; temperature, alpha and beta fall back to the defaults
// above when absent.
absl::StatusOr<InferenceBundle> LoadBundle(const std::filesystem::path& dir);

// Validates and writes the same layout. Creates `dir` if needed.
absl::Status WriteBundle(const InferenceBundle& bundle,
                         const std::filesystem::path& dir);

std::string BundleMetaJson(const InferenceBundle& bundle);

}  // namespace vlscore

#endif  // VLSCORE_BUNDLE_H_
