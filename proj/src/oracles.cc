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

#include "vlscore/oracles.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <set>

#include "absl/strings/str_cat.h"

namespace vlscore::oracle {
namespace {

double Dot(const float* a, const float* b, size_t dim) {
  double s = 0.0;
  for (size_t d = 0; d < dim; ++d) s += static_cast<double>(a[d]) * b[d];
  return s;
}

// Connected regions of `mask` as lists of pixel indices.
std::vector<std::vector<size_t>> FloodFill(const std::vector<bool>& mask,
                                           size_t h, size_t w, bool eight) {
  std::vector<bool> seen(mask.size(), false);
  std::vector<std::vector<size_t>> regions;
  for (size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    regions.emplace_back();
    std::deque<size_t> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
      const size_t at = queue.front();
      queue.pop_front();
      regions.back().push_back(at);
      const long y = static_cast<long>(at / w), x = static_cast<long>(at % w);
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          if (!eight && dy != 0 && dx != 0) continue;
          const long ny = y + dy, nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<long>(h) ||
              nx >= static_cast<long>(w)) {
            continue;
          }
          const size_t n = static_cast<size_t>(ny) * w + static_cast<size_t>(nx);
          if (mask[n] && !seen[n]) {
            seen[n] = true;
            queue.push_back(n);
          }
        }
      }
    }
  }
  return regions;
}

}  // namespace

absl::StatusOr<std::vector<double>> Uncertainty(const InferenceBundle& b,
                                                const ClassIndex& idx) {
  const size_t n = b.n_queries(), h = b.height(), w = b.width(), dim = b.dim();
  const auto raw = b.text_raw.f32();

  // Concept embeddings: mean of unit template rows, renormalized.
  std::vector<std::vector<double>> concepts;
  for (const ConceptEntry& e : b.concept_index) {
    std::vector<double> mean(dim, 0.0);
    for (uint64_t r : e.template_rows) {
      const float* row = raw.data() + r * dim;
      const double norm = std::sqrt(Dot(row, row, dim));
      for (size_t d = 0; d < dim; ++d) mean[d] += row[d] / norm;
    }
    double norm2 = 0.0;
    for (double x : mean) norm2 += x * x;
    for (double& x : mean) x /= std::sqrt(norm2);
    concepts.push_back(std::move(mean));
  }

  const size_t channels = idx.channel_count();
  const size_t k_id = idx.id_channel_count();
  const bool sigmoid = k_id == 1 && channels == 1;

  // probs[v][i][c] for v = in, out.
  auto classify = [&](const Tensor& vis) {
    std::vector<std::vector<double>> probs(n, std::vector<double>(channels));
    const auto vv = vis.f32();
    for (size_t i = 0; i < n; ++i) {
      const float* vi = vv.data() + i * dim;
      const double vnorm = std::sqrt(Dot(vi, vi, dim));
      std::vector<double> logit(channels);
      for (size_t c = 0; c < channels; ++c) {
        double best = -2.0;
        for (size_t m : idx.groups()[c]) {
          double dot = 0.0;
          for (size_t d = 0; d < dim; ++d) dot += vi[d] * concepts[m][d];
          double cos = dot / vnorm;  // concept rows are unit length
          cos = std::min(1.0, std::max(-1.0, cos));
          best = std::max(best, cos);
        }
        logit[c] = best / b.temperature;
      }
      if (sigmoid) {
        probs[i][0] = 1.0 / (1.0 + std::exp(-logit[0]));
        continue;
      }
      double denom = 0.0;
      const double top = *std::max_element(logit.begin(), logit.end());
      for (size_t c = 0; c < channels; ++c) denom += std::exp(logit[c] - top);
      for (size_t c = 0; c < channels; ++c) {
        probs[i][c] = std::exp(logit[c] - top) / denom;
      }
    }
    return probs;
  };
  const auto c_in = classify(b.vis_in);
  const auto c_out = classify(b.vis_out);

  const auto s = b.mask_scores.f32();
  std::vector<double> u(h * w);
  for (size_t y = 0; y < h; ++y) {
    for (size_t x = 0; x < w; ++x) {
      double best = -1.0;
      for (size_t k = 0; k < k_id; ++k) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
          // Only ID channels reach this sum, so beta never applies here.
          const double c = std::pow(c_in[i][k], 1.0 - b.alpha) *
                           std::pow(c_out[i][k], b.alpha);
          total += s[(i * h + y) * w + x] * c;
        }
        best = std::max(best, total);
      }
      u[y * w + x] = -best;
    }
  }
  return u;
}

absl::StatusOr<double> Ap(const ScoredPixels& p) {
  size_t positives = 0;
  for (uint8_t v : p.is_ood) positives += v != 0;
  if (positives == 0) {
    return absl::FailedPreconditionError("undefined metric: no OOD pixels");
  }
  const std::set<float, std::greater<float>> thresholds(p.scores.begin(),
                                                        p.scores.end());
  double ap = 0.0;
  double prev_recall = 0.0;
  for (float t : thresholds) {
    size_t tp = 0, fp = 0;
    for (size_t i = 0; i < p.scores.size(); ++i) {
      if (p.scores[i] < t) continue;
      if (p.is_ood[i]) {
        ++tp;
      } else {
        ++fp;
      }
    }
    const double recall = static_cast<double>(tp) / positives;
    const double precision = static_cast<double>(tp) / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

absl::StatusOr<double> FprAtTpr(const ScoredPixels& p, double target_tpr) {
  size_t positives = 0;
  for (uint8_t v : p.is_ood) positives += v != 0;
  const size_t negatives = p.scores.size() - positives;
  if (positives == 0 || negatives == 0) {
    return absl::FailedPreconditionError("undefined metric: need both classes");
  }
  // Scan every distinct threshold and keep the largest qualifying one.
  double best_threshold = -INFINITY;
  double fpr = 1.0;
  for (float t : std::set<float>(p.scores.begin(), p.scores.end())) {
    size_t tp = 0, fp = 0;
    for (size_t i = 0; i < p.scores.size(); ++i) {
      if (p.scores[i] >= t) (p.is_ood[i] ? tp : fp)++;
    }
    if (static_cast<double>(tp) / positives >= target_tpr && t > best_threshold) {
      best_threshold = t;
      fpr = static_cast<double>(fp) / negatives;
    }
  }
  return fpr;
}

RetentionPoint RetentionAt(const ScoredPixels& ood,
                           std::span<const float> id_scores, double threshold) {
  size_t positives = 0, detected = 0;
  for (size_t i = 0; i < ood.scores.size(); ++i) {
    if (!ood.is_ood[i]) continue;
    ++positives;
    if (ood.scores[i] >= threshold) ++detected;
  }
  size_t retained = 0;
  for (float s : id_scores) retained += s < threshold;
  return {threshold, static_cast<double>(detected) / positives,
          static_cast<double>(retained) / id_scores.size()};
}

absl::StatusOr<ComponentScores> Components(const Tensor& uncertainty,
                                           const Tensor& labels,
                                           std::span<const double> grid,
                                           bool eight_connected) {
  if (grid.empty()) return absl::InvalidArgumentError("empty grid");
  const size_t h = labels.dim(0), w = labels.dim(1);
  const auto u = uncertainty.f32();
  const auto l = labels.u8();
  std::vector<bool> gt_mask(h * w);
  for (size_t i = 0; i < h * w; ++i) gt_mask[i] = l[i] == 254;
  const auto gt = FloodFill(gt_mask, h, w, eight_connected);
  if (gt.empty()) return absl::FailedPreconditionError("no OOD component");

  ComponentScores out;
  for (double t : grid) {
    std::vector<bool> pred_mask(h * w);
    for (size_t i = 0; i < h * w; ++i) pred_mask[i] = l[i] != 255 && u[i] >= t;
    const auto pred = FloodFill(pred_mask, h, w, eight_connected);
    const std::set<size_t> predicted = [&] {
      std::set<size_t> s;
      for (size_t i = 0; i < h * w; ++i) {
        if (pred_mask[i]) s.insert(i);
      }
      return s;
    }();

    double siou_sum = 0.0;
    int tp = 0;
    for (size_t k = 0; k < gt.size(); ++k) {
      std::set<size_t> others;
      for (size_t j = 0; j < gt.size(); ++j) {
        if (j != k) others.insert(gt[j].begin(), gt[j].end());
      }
      std::set<size_t> unite(gt[k].begin(), gt[k].end());
      size_t inter = 0;
      for (size_t px : gt[k]) inter += predicted.count(px);
      for (size_t px : predicted) {
        if (!others.count(px)) unite.insert(px);
      }
      const double siou = static_cast<double>(inter) / unite.size();
      siou_sum += siou;
      tp += siou > 0.5;
    }
    double ppv_sum = 0.0;
    int fp = 0;
    for (const auto& comp : pred) {
      size_t on_gt = 0;
      for (size_t px : comp) on_gt += gt_mask[px];
      const double ppv = static_cast<double>(on_gt) / comp.size();
      ppv_sum += ppv;
      fp += ppv <= 0.5;
    }
    const int fn = static_cast<int>(gt.size()) - tp;
    out.siou_gt += siou_sum / gt.size();
    out.ppv += pred.empty() ? 0.0 : ppv_sum / pred.size();
    out.mean_f1 += 2.0 * tp / (2.0 * tp + fn + fp);
  }
  out.siou_gt /= grid.size();
  out.ppv /= grid.size();
  out.mean_f1 /= grid.size();
  return out;
}

}  // namespace vlscore::oracle
