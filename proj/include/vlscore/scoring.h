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

#ifndef VLSCORE_SCORING_H_
#define VLSCORE_SCORING_H_

#include <cstddef>

#include "absl/status/statusor.h"
#include "vlscore/bundle.h"
#include "vlscore/tensor.h"
#include "vlscore/vocab.h"

namespace vlscore {

enum class Activation {
  kSoftmax,
  kSigmoid,
};

const char* ActivationName(Activation a);

// Per-query class probabilities, f32 [N, C].
struct MaskClassification {
  Tensor probs;
  Activation mode = Activation::kSoftmax;
};

// Sigmoid is only used for a single ID channel without OOD channels, where a
// softmax would be identically 1.
Activation SelectActivation(const ClassIndex& idx);

// f32 [N, M]: cosine similarity of every row of `v` [N, D] with every row of
// `t` [M, D], clamped to [-1, 1]. Rows with L2 norm below 1e-8 are rejected.
absl::StatusOr<Tensor> CosineMatrix(const Tensor& v, const Tensor& t);

// f32 [N, C]: for every channel, the maximum cosine over the channel's
// concept rows. First index wins on ties.
absl::StatusOr<Tensor> MaxLogitReduce(const Tensor& cos, const ClassIndex& idx);

// Softmax over each row of logits / T, or element-wise sigmoid(logit / T).
absl::StatusOr<MaskClassification> ClassifyMasks(const Tensor& logits,
                                                 double temperature,
                                                 Activation mode);

// Geometric ensemble of the in-vocabulary (`c_in`) and out-of-vocabulary
// (`c_out`) probabilities:
//
//   c[i, j] = c_in^(1 - alpha) * c_out^alpha   for j <  id_count
//   c[i, j] = c_in^(1 - beta)  * c_out^beta    for j >= id_count
//
// with 0^0 = 1. The result is not renormalized.
absl::StatusOr<Tensor> GeometricEnsemble(const Tensor& c_in,
                                         const Tensor& c_out, double alpha,
                                         double beta, size_t id_count);

// f32 [H, W]: u[h, w] = -max_{k < id_count} sum_i s[i, h, w] * c[i, k].
// Larger is more anomalous. Channels at or past id_count never enter the
// max; they only act through the normalization of `c`.
absl::StatusOr<Tensor> UncertaintyMap(const Tensor& mask_scores,
                                      const Tensor& probs, size_t id_count);

struct ScoreResult {
  Tensor uncertainty;
  Activation activation = Activation::kSoftmax;
  size_t id_channels = 0;
  size_t ood_channels = 0;
};

// Full head on one bundle: template aggregation, cosine logits for vis_in
// and vis_out, max-logit reduction over `idx`, classification, geometric
// ensemble and pixel aggregation. Uses the bundle's T, alpha and beta.
absl::StatusOr<ScoreResult> ScoreBundle(const InferenceBundle& bundle,
                                        const ClassIndex& idx);

}  // namespace vlscore

#endif  // VLSCORE_SCORING_H_
