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

#include "vlscore/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "vlscore/bundle.h"
#include "vlscore/status_macros.h"

namespace vlscore {
namespace {

absl::Status Undefined(absl::string_view what) {
  return absl::FailedPreconditionError(absl::StrCat("undefined metric: ", what));
}

struct SweepStep {
  float threshold;
  size_t tp;  // positives with score >= threshold
  size_t fp;  // negatives with score >= threshold
};

absl::Status CheckPixels(const ScoredPixels& p) {
  if (p.scores.size() != p.is_ood.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat(p.scores.size(), " scores but ", p.is_ood.size(),
                     " labels"));
  }
  return absl::OkStatus();
}

// Cumulative counts after each group of equal scores, highest score first.
std::vector<SweepStep> Sweep(const ScoredPixels& p) {
  std::vector<size_t> order(p.scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return p.scores[a] > p.scores[b]; });
  std::vector<SweepStep> steps;
  size_t tp = 0, fp = 0;
  for (size_t i = 0; i < order.size();) {
    const float t = p.scores[order[i]];
    for (; i < order.size() && p.scores[order[i]] == t; ++i) {
      if (p.is_ood[order[i]]) {
        ++tp;
      } else {
        ++fp;
      }
    }
    steps.push_back({t, tp, fp});
  }
  return steps;
}

}  // namespace

size_t ScoredPixels::positives() const {
  return static_cast<size_t>(std::count_if(
      is_ood.begin(), is_ood.end(), [](uint8_t v) { return v != 0; }));
}

void ScoredPixels::Append(const ScoredPixels& other) {
  scores.insert(scores.end(), other.scores.begin(), other.scores.end());
  is_ood.insert(is_ood.end(), other.is_ood.begin(), other.is_ood.end());
}

absl::StatusOr<ScoredPixels> CollectScoredPixels(const Tensor& uncertainty,
                                                 const Tensor& labels) {
  if (uncertainty.dtype() != DType::kF32 || uncertainty.rank() != 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "uncertainty map must be f32 [H, W], got ", uncertainty.ShapeString()));
  }
  if (labels.dtype() != DType::kU8 || labels.shape() != uncertainty.shape()) {
    return absl::InvalidArgumentError(
        absl::StrCat("label map ", labels.ShapeString(),
                     " does not match uncertainty map ",
                     uncertainty.ShapeString()));
  }
  ScoredPixels p;
  const auto u = uncertainty.f32();
  const auto l = labels.u8();
  for (size_t i = 0; i < u.size(); ++i) {
    if (l[i] == kIgnoreLabel) continue;
    p.scores.push_back(u[i]);
    p.is_ood.push_back(l[i] == kOodLabel ? 1 : 0);
  }
  return p;
}

absl::StatusOr<double> PixelAp(const ScoredPixels& p) {
  RETURN_IF_ERROR(CheckPixels(p));
  const size_t positives = p.positives();
  if (positives == 0) return Undefined("AP needs at least one OOD pixel");
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const SweepStep& s : Sweep(p)) {
    const double recall = static_cast<double>(s.tp) / positives;
    const double precision = static_cast<double>(s.tp) / (s.tp + s.fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

absl::StatusOr<double> FprAtTpr(const ScoredPixels& p, double target_tpr) {
  RETURN_IF_ERROR(CheckPixels(p));
  if (!(target_tpr > 0.0 && target_tpr <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("target TPR must lie in (0, 1], got ", target_tpr));
  }
  const size_t positives = p.positives();
  const size_t negatives = p.scores.size() - positives;
  if (positives == 0) return Undefined("FPR needs at least one OOD pixel");
  if (negatives == 0) return Undefined("FPR needs at least one ID pixel");
  for (const SweepStep& s : Sweep(p)) {
    if (static_cast<double>(s.tp) / positives >= target_tpr) {
      return static_cast<double>(s.fp) / negatives;
    }
  }
  return 1.0;  // unreachable: the last step has TPR 1
}

absl::StatusOr<std::vector<PrPoint>> PrecisionRecallCurve(
    const ScoredPixels& p) {
  RETURN_IF_ERROR(CheckPixels(p));
  const size_t positives = p.positives();
  if (positives == 0) return Undefined("PR curve needs at least one OOD pixel");
  std::vector<PrPoint> curve;
  for (const SweepStep& s : Sweep(p)) {
    curve.push_back({s.threshold, static_cast<double>(s.tp) / positives,
                     static_cast<double>(s.tp) / (s.tp + s.fp)});
  }
  return curve;
}

absl::StatusOr<std::vector<RetentionPoint>> RetentionCurve(
    const ScoredPixels& ood, std::span<const float> id_scores) {
  RETURN_IF_ERROR(CheckPixels(ood));
  std::vector<float> positives;
  for (size_t i = 0; i < ood.scores.size(); ++i) {
    if (ood.is_ood[i]) positives.push_back(ood.scores[i]);
  }
  if (positives.empty()) {
    return Undefined("retention curve needs at least one OOD pixel");
  }
  if (id_scores.empty()) {
    return Undefined("retention curve needs at least one ID-dataset pixel");
  }
  std::sort(positives.begin(), positives.end());
  std::vector<float> id(id_scores.begin(), id_scores.end());
  std::sort(id.begin(), id.end());
  std::vector<float> thresholds = ood.scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<float>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  const double n_ood = static_cast<double>(positives.size());
  const double n_id = static_cast<double>(id.size());
  std::vector<RetentionPoint> curve;
  curve.reserve(thresholds.size() + 2);
  curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  for (float t : thresholds) {
    const auto detected = static_cast<double>(
        positives.end() - std::lower_bound(positives.begin(), positives.end(), t));
    const auto retained = static_cast<double>(
        std::lower_bound(id.begin(), id.end(), t) - id.begin());
    curve.push_back({t, detected / n_ood, retained / n_id});
  }
  curve.push_back({-std::numeric_limits<double>::infinity(), 1.0, 0.0});
  return curve;
}

std::vector<double> UniformGrid(const Tensor& uncertainty, const Tensor& labels,
                                size_t count) {
  const auto u = uncertainty.f32();
  const auto l = labels.u8();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (size_t i = 0; i < u.size(); ++i) {
    if (l[i] == kIgnoreLabel) continue;
    lo = std::min(lo, double{u[i]});
    hi = std::max(hi, double{u[i]});
  }
  if (count == 0 || lo > hi) return {};
  if (count == 1) return {0.5 * (lo + hi)};
  std::vector<double> grid(count);
  for (size_t i = 0; i < count; ++i) {
    grid[i] = i + 1 == count ? hi : lo + (hi - lo) * i / (count - 1);
  }
  return grid;
}

absl::StatusOr<ComponentScores> ComponentMetrics(const Tensor& uncertainty,
                                                 const Tensor& labels,
                                                 std::span<const double> grid,
                                                 Connectivity connectivity) {
  if (grid.empty()) {
    return absl::InvalidArgumentError("component metrics need a non-empty "
                                      "threshold grid");
  }
  // Shape checks.
  RETURN_IF_ERROR(CollectScoredPixels(uncertainty, labels).status());
  const size_t h = labels.dim(0), w = labels.dim(1), pixels = h * w;
  const auto u = uncertainty.f32();
  const auto l = labels.u8();

  std::vector<uint8_t> gt_mask(pixels);
  for (size_t i = 0; i < pixels; ++i) gt_mask[i] = l[i] == kOodLabel;
  const ComponentLabels gt = LabelComponents(gt_mask, h, w, connectivity);
  if (gt.count == 0) {
    return Undefined("component metrics need at least one OOD component");
  }
  std::vector<size_t> gt_size(gt.count + 1, 0);
  for (uint32_t c : gt.labels) ++gt_size[c];

  ComponentScores total;
  std::vector<uint8_t> pred_mask(pixels);
  for (double t : grid) {
    for (size_t i = 0; i < pixels; ++i) {
      pred_mask[i] = l[i] != kIgnoreLabel && u[i] >= t;
    }
    const ComponentLabels pred = LabelComponents(pred_mask, h, w, connectivity);

    // |k & P| per GT component, |P \ G|, and per predicted component its size
    // and overlap with G.
    std::vector<size_t> hit(gt.count + 1, 0);
    std::vector<size_t> pred_size(pred.count + 1, 0);
    std::vector<size_t> pred_on_gt(pred.count + 1, 0);
    size_t pred_off_gt = 0;
    for (size_t i = 0; i < pixels; ++i) {
      if (!pred_mask[i]) continue;
      const uint32_t k = gt.labels[i];
      const uint32_t p = pred.labels[i];
      ++pred_size[p];
      if (k != 0) {
        ++hit[k];
        ++pred_on_gt[p];
      } else {
        ++pred_off_gt;
      }
    }

    // k | (P \ A_k) = k | (P \ G) because k and A_k partition G.
    double siou_sum = 0.0;
    size_t tp = 0;
    for (size_t k = 1; k <= gt.count; ++k) {
      const double siou =
          static_cast<double>(hit[k]) / static_cast<double>(gt_size[k] + pred_off_gt);
      siou_sum += siou;
      if (siou > 0.5) ++tp;
    }
    double ppv_sum = 0.0;
    size_t fp = 0;
    for (size_t p = 1; p <= pred.count; ++p) {
      const double ppv =
          static_cast<double>(pred_on_gt[p]) / static_cast<double>(pred_size[p]);
      ppv_sum += ppv;
      if (ppv <= 0.5) ++fp;
    }
    const size_t fn = gt.count - tp;
    total.siou_gt += siou_sum / gt.count;
    total.ppv += pred.count == 0 ? 0.0 : ppv_sum / pred.count;
    total.mean_f1 += 2.0 * tp / static_cast<double>(2 * tp + fn + fp);
  }
  const double n = static_cast<double>(grid.size());
  total.siou_gt /= n;
  total.ppv /= n;
  total.mean_f1 /= n;
  return total;
}

absl::StatusOr<MetricsReport> Evaluate(std::span<const Tensor> uncertainty,
                                       std::span<const Tensor> labels,
                                       const EvalOptions& options) {
  if (uncertainty.size() != labels.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat(uncertainty.size(), " uncertainty maps but ",
                     labels.size(), " label maps"));
  }
  if (uncertainty.empty()) return absl::InvalidArgumentError("no images given");
  if (options.grid_size == 0) {
    return absl::InvalidArgumentError("threshold grid size must be positive");
  }

  MetricsReport report;
  report.options = options;
  report.images = uncertainty.size();
  ScoredPixels pooled;
  ComponentScores components;
  for (size_t i = 0; i < uncertainty.size(); ++i) {
    auto pixels = CollectScoredPixels(uncertainty[i], labels[i]);
    if (!pixels.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("image ", i, ": ", pixels.status().message()));
    }
    pooled.Append(*pixels);
    if (pixels->positives() == 0) continue;
    const auto grid = UniformGrid(uncertainty[i], labels[i], options.grid_size);
    ASSIGN_OR_RETURN(ComponentScores s,
                     ComponentMetrics(uncertainty[i], labels[i], grid,
                                      options.connectivity));
    components.siou_gt += s.siou_gt;
    components.ppv += s.ppv;
    components.mean_f1 += s.mean_f1;
    ++report.component_images;
  }
  report.pixels = pooled.scores.size();
  report.ood_pixels = pooled.positives();
  ASSIGN_OR_RETURN(report.ap, PixelAp(pooled));
  ASSIGN_OR_RETURN(report.fpr_at_95tpr, FprAtTpr(pooled, options.target_tpr));
  if (report.component_images > 0) {
    const double n = static_cast<double>(report.component_images);
    report.siou_gt = components.siou_gt / n;
    report.ppv = components.ppv / n;
    report.mean_f1 = components.mean_f1 / n;
  }
  std::vector<float> id_scores;
  for (size_t i = 0; i < pooled.scores.size(); ++i) {
    if (!pooled.is_ood[i]) id_scores.push_back(pooled.scores[i]);
  }
  ASSIGN_OR_RETURN(report.curve, RetentionCurve(pooled, id_scores));
  return report;
}

}  // namespace vlscore
