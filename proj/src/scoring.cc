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

#include "vlscore/scoring.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "absl/strings/str_cat.h"
#include "vlscore/status_macros.h"

namespace vlscore {
namespace {

absl::Status CheckMatrix(const Tensor& t, absl::string_view name) {
  if (t.dtype() != DType::kF32 || t.rank() != 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        name, " must be an f32 matrix, got ", t.ShapeString()));
  }
  return absl::OkStatus();
}

// Inverse L2 norms of the rows of a [rows, dim] matrix.
absl::StatusOr<std::vector<double>> InverseRowNorms(std::span<const float> m,
                                                    size_t rows, size_t dim,
                                                    absl::string_view name) {
  std::vector<double> inv(rows);
  for (size_t r = 0; r < rows; ++r) {
    double norm2 = 0.0;
    for (size_t d = 0; d < dim; ++d) {
      const double x = m[r * dim + d];
      norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    if (norm < 1e-8) {
      return absl::InvalidArgumentError(absl::StrCat(
          "degenerate vector: ", name, " row ", r, " has norm ", norm));
    }
    inv[r] = 1.0 / norm;
  }
  return inv;
}

// x^e for x in [0, 1], e in [0, 1], with exact results at e = 0 and e = 1.
double PowUnit(double x, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return x;
  return std::pow(x, e);
}

}  // namespace

const char* ActivationName(Activation a) {
  return a == Activation::kSigmoid ? "sigmoid" : "softmax";
}

Activation SelectActivation(const ClassIndex& idx) {
  return idx.id_channel_count() == 1 && idx.ood_count() == 0
             ? Activation::kSigmoid
             : Activation::kSoftmax;
}

absl::StatusOr<Tensor> CosineMatrix(const Tensor& v, const Tensor& t) {
  RETURN_IF_ERROR(CheckMatrix(v, "visual embeddings"));
  RETURN_IF_ERROR(CheckMatrix(t, "text embeddings"));
  const size_t n = v.dim(0), m = t.dim(0), dim = v.dim(1);
  if (t.dim(1) != dim) {
    return absl::InvalidArgumentError(
        absl::StrCat("embedding width mismatch: ", v.ShapeString(), " vs ",
                     t.ShapeString()));
  }
  const auto vv = v.f32();
  const auto tt = t.f32();
  ASSIGN_OR_RETURN(auto inv_v, InverseRowNorms(vv, n, dim, "visual"));
  ASSIGN_OR_RETURN(auto inv_t, InverseRowNorms(tt, m, dim, "text"));
  std::vector<float> out(n * m);
  for (size_t i = 0; i < n; ++i) {
    const float* vi = vv.data() + i * dim;
    for (size_t j = 0; j < m; ++j) {
      const float* tj = tt.data() + j * dim;
      double dot = 0.0;
      for (size_t d = 0; d < dim; ++d) dot += double{vi[d]} * tj[d];
      out[i * m + j] =
          static_cast<float>(std::clamp(dot * inv_v[i] * inv_t[j], -1.0, 1.0));
    }
  }
  return Tensor::FromF32({n, m}, std::move(out));
}

absl::StatusOr<Tensor> MaxLogitReduce(const Tensor& cos, const ClassIndex& idx) {
  RETURN_IF_ERROR(CheckMatrix(cos, "cosine matrix"));
  const size_t n = cos.dim(0), m = cos.dim(1);
  const size_t channels = idx.channel_count();
  if (idx.min_concept_rows() > m) {
    return absl::InvalidArgumentError(
        absl::StrCat("class index references concept row ",
                     idx.min_concept_rows() - 1, " but only ", m,
                     " concept embeddings exist"));
  }
  const auto c = cos.f32();
  std::vector<float> out(n * channels);
  for (size_t i = 0; i < n; ++i) {
    const float* row = c.data() + i * m;
    for (size_t k = 0; k < channels; ++k) {
      const auto& group = idx.groups()[k];
      float best = row[group.front()];
      for (size_t r : group) {
        if (row[r] > best) best = row[r];
      }
      out[i * channels + k] = best;
    }
  }
  return Tensor::FromF32({n, channels}, std::move(out));
}

absl::StatusOr<MaskClassification> ClassifyMasks(const Tensor& logits,
                                                 double temperature,
                                                 Activation mode) {
  RETURN_IF_ERROR(CheckMatrix(logits, "logits"));
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    return absl::InvalidArgumentError(
        absl::StrCat("temperature must be > 0, got ", temperature));
  }
  const size_t n = logits.dim(0), c = logits.dim(1);
  const auto x = logits.f32();
  std::vector<float> probs(n * c);
  if (mode == Activation::kSigmoid) {
    for (size_t i = 0; i < n * c; ++i) {
      const double z = x[i] / temperature;
      const double p =
          z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      probs[i] = static_cast<float>(p);
    }
  } else {
    std::vector<double> e(c);
    for (size_t i = 0; i < n; ++i) {
      const float* row = x.data() + i * c;
      double peak = row[0] / temperature;
      for (size_t k = 1; k < c; ++k) peak = std::max(peak, row[k] / temperature);
      double sum = 0.0;
      for (size_t k = 0; k < c; ++k) {
        e[k] = std::exp(row[k] / temperature - peak);
        sum += e[k];
      }
      for (size_t k = 0; k < c; ++k) {
        probs[i * c + k] = static_cast<float>(e[k] / sum);
      }
    }
  }
  ASSIGN_OR_RETURN(Tensor t, Tensor::FromF32({n, c}, std::move(probs)));
  return MaskClassification{std::move(t), mode};
}

absl::StatusOr<Tensor> GeometricEnsemble(const Tensor& c_in,
                                         const Tensor& c_out, double alpha,
                                         double beta, size_t id_count) {
  RETURN_IF_ERROR(CheckMatrix(c_in, "in-vocabulary probabilities"));
  RETURN_IF_ERROR(CheckMatrix(c_out, "out-of-vocabulary probabilities"));
  if (c_in.shape() != c_out.shape()) {
    return absl::InvalidArgumentError(
        absl::StrCat("ensemble shape mismatch: ", c_in.ShapeString(), " vs ",
                     c_out.ShapeString()));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "alpha and beta must lie in [0, 1], got ", alpha, ", ", beta));
  }
  const size_t n = c_in.dim(0), c = c_in.dim(1);
  const auto a = c_in.f32();
  const auto b = c_out.f32();
  std::vector<float> out(n * c);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < c; ++j) {
      const size_t at = i * c + j;
      const double w = j < id_count ? alpha : beta;
      if (!(a[at] >= 0.0f && a[at] <= 1.0f && b[at] >= 0.0f && b[at] <= 1.0f)) {
        return absl::InvalidArgumentError(
            absl::StrCat("ensemble input at (", i, ", ", j, ") is outside [0, 1]"));
      }
      out[at] = static_cast<float>(PowUnit(a[at], 1.0 - w) * PowUnit(b[at], w));
    }
  }
  return Tensor::FromF32({n, c}, std::move(out));
}

absl::StatusOr<Tensor> UncertaintyMap(const Tensor& mask_scores,
                                      const Tensor& probs, size_t id_count) {
  if (mask_scores.dtype() != DType::kF32 || mask_scores.rank() != 3) {
    return absl::InvalidArgumentError(absl::StrCat(
        "mask scores must be f32 [N, H, W], got ", mask_scores.ShapeString()));
  }
  RETURN_IF_ERROR(CheckMatrix(probs, "mask classification"));
  const size_t n = mask_scores.dim(0);
  const size_t pixels = mask_scores.dim(1) * mask_scores.dim(2);
  const size_t channels = probs.dim(1);
  if (probs.dim(0) != n) {
    return absl::InvalidArgumentError(
        absl::StrCat("dimension mismatch: ", n, " mask maps but ",
                     probs.dim(0), " classified queries"));
  }
  if (id_count == 0 || id_count > channels) {
    return absl::InvalidArgumentError(
        absl::StrCat("dimension mismatch: ", id_count, " ID channels requested, ",
                     channels, " available"));
  }
  const auto s = mask_scores.f32();
  const auto c = probs.f32();
  // acc[p * id_count + k] = sum_i s[i, p] * c[i, k]
  std::vector<double> acc(pixels * id_count, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const float* si = s.data() + i * pixels;
    const float* ci = c.data() + i * channels;
    for (size_t p = 0; p < pixels; ++p) {
      const double sp = si[p];
      if (sp == 0.0) continue;
      double* ap = acc.data() + p * id_count;
      for (size_t k = 0; k < id_count; ++k) ap[k] += sp * ci[k];
    }
  }
  std::vector<float> u(pixels);
  for (size_t p = 0; p < pixels; ++p) {
    const double* ap = acc.data() + p * id_count;
    u[p] = static_cast<float>(-*std::max_element(ap, ap + id_count));
  }
  return Tensor::FromF32({mask_scores.dim(1), mask_scores.dim(2)}, std::move(u));
}

absl::StatusOr<ScoreResult> ScoreBundle(const InferenceBundle& bundle,
                                        const ClassIndex& idx) {
  ASSIGN_OR_RETURN(Tensor concepts, AggregateTemplateEmbeddings(
                                        bundle.text_raw, bundle.concept_index));
  ASSIGN_OR_RETURN(Tensor cos_in, CosineMatrix(bundle.vis_in, concepts));
  ASSIGN_OR_RETURN(Tensor cos_out, CosineMatrix(bundle.vis_out, concepts));
  ASSIGN_OR_RETURN(Tensor logits_in, MaxLogitReduce(cos_in, idx));
  ASSIGN_OR_RETURN(Tensor logits_out, MaxLogitReduce(cos_out, idx));
  const Activation mode = SelectActivation(idx);
  ASSIGN_OR_RETURN(auto c_in, ClassifyMasks(logits_in, bundle.temperature, mode));
  ASSIGN_OR_RETURN(auto c_out,
                   ClassifyMasks(logits_out, bundle.temperature, mode));
  ASSIGN_OR_RETURN(Tensor c, GeometricEnsemble(c_in.probs, c_out.probs,
                                               bundle.alpha, bundle.beta,
                                               idx.id_channel_count()));
  ASSIGN_OR_RETURN(Tensor u, UncertaintyMap(bundle.mask_scores, c,
                                            idx.id_channel_count()));
  ScoreResult result;
  result.uncertainty = std::move(u);
  result.activation = mode;
  result.id_channels = idx.id_channel_count();
  result.ood_channels = idx.ood_count();
  return result;
}

}  // namespace vlscore
