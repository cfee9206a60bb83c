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

#ifndef VLSCORE_DEFAULT_VOCAB_H_
#define VLSCORE_DEFAULT_VOCAB_H_

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "vlscore/vocab.h"

namespace vlscore {

// The shipped vocabulary: 19 urban-scene classes with their alternative
// concepts, 14 prompt templates, the 8/3/1 superclass mergings and the
// "smiyc", "ra19" and "rba" OOD prompt sets. Same content as
// data/default_vocab.json.
absl::string_view DefaultVocabJson();

absl::StatusOr<VocabConfig> DefaultVocab();

}  // namespace vlscore

#endif  // VLSCORE_DEFAULT_VOCAB_H_
