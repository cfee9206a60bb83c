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

#ifndef VLSCORE_METRICS_H_
#define VLSCORE_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "vlscore/components.h"
#include "vlscore/tensor.h"

namespace vlscore {

// Flat anomaly scores (higher = more anomalous) with binary ground truth.
// OOD is the positive class. Ignore pixels are dropped before this point.
struct ScoredPixels {
  std::vector<float> scores;
  std::vector<uint8_t> is_ood;  // 1 = OOD, 0 = ID

  size_t positives() const;
  size_t negatives() const { return scores.size() - positives(); }
  void Append(const ScoredPixels& other);
};

// Non-ignore pixels of an uncertainty map; label 254 is OOD, every other
// code except 255 is ID.
absl::StatusOr<ScoredPixels> CollectScoredPixels(const Tensor& uncertainty,
                                                 const Tensor& labels);

// Average precision: sum over distinct thresholds (descending) of
// (R_k - R_{k-1}) * P_k, each group of equal scores taken at once.
absl::StatusOr<double> PixelAp(const ScoredPixels& p);

// FPR at the largest threshold whose TPR reaches `target_tpr`. Thresholds are
// the distinct scores; no interpolation.
absl::StatusOr<double> FprAtTpr(const ScoredPixels& p, double target_tpr = 0.95);

struct PrPoint {
  double threshold;
  double recall;
  double precision;
};

// One point per distinct score, in descending threshold order.
absl::StatusOr<std::vector<PrPoint>> PrecisionRecallCurve(const ScoredPixels& p);

struct RetentionPoint {
  double threshold;
  double ood_recall;    // OOD pixels of the OOD dataset with score >= t
  double id_retention;  // pixels of the ID dataset with score < t
};

// Trade-off between OOD recall on one dataset and ID retention on another.
// Thresholds are the distinct scores of `ood`, descending, framed by +inf
// (recall 0, retention 1) and -inf (recall 1, retention 0).
absl::StatusOr<std::vector<RetentionPoint>> RetentionCurve(
    const ScoredPixels& ood, std::span<const float> id_scores);

struct ComponentScores {
  double siou_gt = 0.0;
  double ppv = 0.0;
  double mean_f1 = 0.0;
};

// Component-level scores averaged over `grid`. At each threshold t the
// prediction P is {u >= t} minus ignore pixels; G is the OOD ground truth.
//
//   sIoU(k)  = |k & P| / |k | (P \ A_k)|, A_k = G minus component k
//   PPV(k^)  = |k^ & G| / |k^|
//   TP: GT components with sIoU > 0.5, FP: predicted components with
//   PPV <= 0.5, F1 = 2 TP / (2 TP + FN + FP).
//
// Per threshold, sIoU and PPV are averaged over components; no predicted
// component counts as PPV 0. Requires at least one OOD component.
absl::StatusOr<ComponentScores> ComponentMetrics(
    const Tensor& uncertainty, const Tensor& labels,
    std::span<const double> grid,
    Connectivity connectivity = Connectivity::kEight);

// `count` evenly spaced thresholds from the minimum to the maximum score of
// the non-ignore pixels.
std::vector<double> UniformGrid(const Tensor& uncertainty, const Tensor& labels,
                                size_t count);

inline constexpr size_t kDefaultGridSize = 40;

struct EvalOptions {
  size_t grid_size = kDefaultGridSize;
  double target_tpr = 0.95;
  Connectivity connectivity = Connectivity::kEight;
};

struct MetricsReport {
  double ap = 0.0;
  double fpr_at_95tpr = 0.0;
  double siou_gt = 0.0;
  double ppv = 0.0;
  double mean_f1 = 0.0;
  std::vector<RetentionPoint> curve;

  size_t images = 0;
  size_t pixels = 0;
  size_t ood_pixels = 0;
  // Images that contributed component metrics (those with an OOD region).
  size_t component_images = 0;
  EvalOptions options;
};

// Pixel metrics pool all images; component metrics are computed per image
// and averaged. The curve uses the pooled ID pixels as the ID dataset.
absl::StatusOr<MetricsReport> Evaluate(std::span<const Tensor> uncertainty,
                                       std::span<const Tensor> labels,
                                       const EvalOptions& options = {});

}  // namespace vlscore

#endif  // VLSCORE_METRICS_H_
