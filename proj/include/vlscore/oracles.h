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

#ifndef VLSCORE_ORACLES_H_
#define VLSCORE_ORACLES_H_

#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "vlscore/bundle.h"
#include "vlscore/metrics.h"
#include "vlscore/vocab.h"

// Brute-force reference implementations. They read the same containers as
// the library but share none of its arithmetic: every quantity is recomputed
// with direct loops in double precision. Meant for small inputs.
namespace vlscore::oracle {

// Full scoring head evaluated per pixel, per channel, per query. Returns the
// H x W map in row-major order.
absl::StatusOr<std::vector<double>> Uncertainty(const InferenceBundle& bundle,
                                                const ClassIndex& idx);

// Enumerates every distinct threshold and counts precision and recall
// directly.
absl::StatusOr<double> Ap(const ScoredPixels& p);

absl::StatusOr<double> FprAtTpr(const ScoredPixels& p, double target_tpr);

// Recall and retention at one threshold by direct counting.
RetentionPoint RetentionAt(const ScoredPixels& ood,
                           std::span<const float> id_scores, double threshold);

// Component metrics with breadth-first flood fill and explicit pixel sets.
absl::StatusOr<ComponentScores> Components(const Tensor& uncertainty,
                                           const Tensor& labels,
                                           std::span<const double> grid,
                                           bool eight_connected = true);

}  // namespace vlscore::oracle

#endif  // VLSCORE_ORACLES_H_
