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

#ifndef VLSCORE_SYNTH_H_
#define VLSCORE_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "vlscore/bundle.h"
#include "vlscore/vocab.h"

namespace vlscore {

struct Rect {
  size_t top = 0;
  size_t left = 0;
  size_t height = 0;
  size_t width = 0;
};

enum class BlobKind {
  kId,
  kOod,
};

// A rectangle owned by one object query. Later blobs paint over earlier
// ones. For kId, `index` is the class; for kOod it selects an OOD
// prototype: indices below the prompt count share the prototype of that OOD
// prompt, larger ones get prototypes no prompt describes. With `mix_class`
// set, the query embedding leans towards that ID class by `mix_weight`.
struct Blob {
  Rect rect;
  BlobKind kind = BlobKind::kId;
  size_t index = 0;
  std::optional<size_t> mix_class;
  double mix_weight = 0.0;
};

struct FixtureClass {
  std::string name;
  std::vector<std::string> concepts;
};

struct FixtureSpec {
  uint64_t seed = 0;
  size_t n_queries = 8;
  size_t dim = 64;
  size_t height = 32;
  size_t width = 32;
  std::vector<FixtureClass> classes;     // K ID classes
  std::vector<std::string> ood_prompts;  // Q OOD prompt classes
  size_t templates = 2;
  std::vector<Blob> blobs;
  // Required cosine gap 1 - max_{a != b} cos(p_a, p_b) between prototypes.
  double margin = 1.0;
  double concept_noise = 0.1;
  double template_noise = 0.05;
  double visual_noise = 0.05;
  double mask_inside = 0.95;
  double mask_outside = 0.02;
  double mask_jitter = 0.02;
  double temperature = 0.05;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
};

absl::Status ValidateFixtureSpec(const FixtureSpec& spec);

// JSON form of FixtureSpec; absent fields keep their defaults. Blob kind is
// "id" or "ood"; rect is [top, left, height, width].
absl::StatusOr<FixtureSpec> ParseFixtureSpec(absl::string_view text);

// Scene over the classes of `vocab` with every OOD prompt set of the vocab
// available as prompts: background, sky, buildings, vegetation, a car, a
// person, one prompted OOD object and one unprompted OOD object.
absl::StatusOr<FixtureSpec> DefaultFixtureSpec(const VocabConfig& vocab,
                                               uint64_t seed);

// Small random scene for property tests: `classes` ID classes with 1-3
// concepts each, `ood_prompts` prompts, a background blob plus
// n_queries - 1 random blobs.
FixtureSpec RandomFixtureSpec(uint64_t seed, size_t classes, size_t ood_prompts,
                              size_t n_queries, size_t height, size_t width);

// Deterministic bundle (with labels) for `spec`. Prototypes are
// orthonormalized seeded Gaussian vectors, or a regular simplex when the
// margin exceeds 1. Text rows and query embeddings are prototypes plus
// seeded noise; mask scores are soft indicators of each query's blob.
absl::StatusOr<InferenceBundle> MakeFixture(const FixtureSpec& spec);

absl::Status GenFixture(const FixtureSpec& spec,
                        const std::filesystem::path& out);

// VocabConfig matching the classes and prompts of a fixture, with a single
// template per concept and no mergings.
VocabConfig FixtureVocab(const FixtureSpec& spec);

}  // namespace vlscore

#endif  // VLSCORE_SYNTH_H_
