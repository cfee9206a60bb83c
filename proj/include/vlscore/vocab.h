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

#ifndef VLSCORE_VOCAB_H_
#define VLSCORE_VOCAB_H_

#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "vlscore/bundle.h"
#include "vlscore/tensor.h"

namespace vlscore {

struct Superclass {
  std::string name;
  std::vector<std::string> members;
};

// A partition of all ID classes into superclasses, in channel order.
struct Merging {
  std::string name;
  std::vector<Superclass> superclasses;
};

struct OodPromptSet {
  std::string name;
  std::vector<std::string> classes;
};

// Concept dictionary and test-time vocabulary options.
//
// JSON layout (object key order is significant and preserved):
//
//   {
//     "classes": ["road", ...],
//     "concepts": {"road": ["road", "railroad"], ...},
//     "templates": ["A photo of a {}.", ...],
//     "mergings": {"3": {"human": ["person", "rider"], ...}, ...},
//     "ood_prompt_sets": {"ra19": ["animal", ...], ...}
//   }
//
// The single-valued forms "merging": {superclass: [...]} and
// "ood_classes": [...] are also accepted; they are stored as the merging
// named after its superclass count and as the OOD set "default".
struct VocabConfig {
  std::vector<std::string> classes;
  // concepts[k] lists the alternative concepts of classes[k].
  std::vector<std::vector<std::string>> concepts;
  std::vector<std::string> templates;
  std::vector<Merging> mergings;
  std::vector<OodPromptSet> ood_prompt_sets;

  // nullptr when absent.
  const Merging* FindMerging(absl::string_view name) const;
  const OodPromptSet* FindOodPromptSet(absl::string_view name) const;
  const std::vector<std::string>* ConceptsOf(absl::string_view class_name) const;
};

// Parses and validates a vocab document. Errors carry a JSON-path-like
// location, e.g. `mergings["3"]["human"][1]`.
absl::StatusOr<VocabConfig> ParseVocabConfig(absl::string_view text);

// Validation shared by the parser and programmatic construction.
absl::Status ValidateVocabConfig(const VocabConfig& cfg);

// Output-channel layout of the classifier. Channel c gathers the concept
// rows groups()[c]; channels [0, id_channel_count) are ID (classes or
// superclasses), the remaining ood_count() channels are OOD prompts.
class ClassIndex {
 public:
  // Groups must be non-empty and pairwise disjoint; names.size() must equal
  // groups.size().
  static absl::StatusOr<ClassIndex> Create(
      std::vector<std::vector<size_t>> groups, std::vector<std::string> names,
      size_t id_channel_count);

  size_t id_channel_count() const { return id_channels_; }
  size_t ood_count() const { return groups_.size() - id_channels_; }
  size_t channel_count() const { return groups_.size(); }
  const std::vector<std::vector<size_t>>& groups() const { return groups_; }
  const std::vector<std::string>& channel_names() const { return names_; }
  // Largest referenced row + 1.
  size_t min_concept_rows() const;

 private:
  ClassIndex() = default;

  std::vector<std::vector<size_t>> groups_;
  std::vector<std::string> names_;
  size_t id_channels_ = 0;
};

// Concept layout of the M x D table produced by AggregateTemplateEmbeddings:
// row m belongs to concept_index[m].
//
// Without a merging each class becomes one channel holding its concept
// rows; with one each superclass holds the union of its members' rows.
// Every (class, concept) pair of the config must appear in concept_index.
absl::StatusOr<ClassIndex> BuildClassIndex(
    const VocabConfig& cfg, const Merging* merging,
    std::span<const ConceptEntry> concept_index);

// Appends one OOD channel per entry of `ood_rows`, after the existing
// channels. Rows already used by any channel are a conflict.
absl::StatusOr<ClassIndex> ExtendWithOod(
    const ClassIndex& idx, const std::vector<std::vector<size_t>>& ood_rows,
    const std::vector<std::string>& ood_names);

// Concept rows whose class is each OOD prompt class, in prompt order.
absl::StatusOr<std::vector<std::vector<size_t>>> ResolveOodRows(
    std::span<const ConceptEntry> concept_index,
    std::span<const std::string> ood_classes);

// Per concept: L2-normalize each template row, average, and L2-normalize the
// mean. Fails on a zero row or a mean with norm below 1e-8.
absl::StatusOr<Tensor> AggregateTemplateEmbeddings(
    const Tensor& text_raw, std::span<const ConceptEntry> concept_index);

// Row layout a well-formed export uses for `cfg`: every (class, concept)
// pair, then one concept per OOD class, each owning `templates` consecutive
// rows of text_raw.
std::vector<ConceptEntry> MakeConceptIndex(
    const VocabConfig& cfg, std::span<const std::string> ood_classes,
    size_t templates);

}  // namespace vlscore

#endif  // VLSCORE_VOCAB_H_
