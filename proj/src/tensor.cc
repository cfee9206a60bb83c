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

#include "vlscore/tensor.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace vlscore {

const char* DTypeName(DType dtype) {
  switch (dtype) {
    case DType::kF32:
      return "f32";
    case DType::kU8:
      return "u8";
  }
  return "unknown";
}

absl::StatusOr<uint64_t> ElementCount(const Tensor::Shape& shape) {
  uint64_t count = 1;
  for (uint64_t d : shape) {
    if (d != 0 && count > std::numeric_limits<uint64_t>::max() / d) {
      return absl::InvalidArgumentError(
          absl::StrCat("shape [", absl::StrJoin(shape, ","),
                       "] overflows the element count"));
    }
    count *= d;
  }
  return count;
}

namespace {

absl::Status CheckShape(const Tensor::Shape& shape, size_t stored) {
  if (shape.empty() || shape.size() > kMaxRank) {
    return absl::InvalidArgumentError(
        absl::StrCat("rank ", shape.size(), " outside [1, ", kMaxRank, "]"));
  }
  auto count = ElementCount(shape);
  if (!count.ok()) return count.status();
  if (*count != stored) {
    return absl::InvalidArgumentError(
        absl::StrCat("shape [", absl::StrJoin(shape, ","), "] needs ", *count,
                     " elements, got ", stored));
  }
  return absl::OkStatus();
}

}  // namespace

Tensor::Tensor() : dtype_(DType::kF32), shape_{0} {}

absl::StatusOr<Tensor> Tensor::FromF32(Shape shape, std::vector<float> values) {
  if (auto s = CheckShape(shape, values.size()); !s.ok()) return s;
  for (size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      return absl::InvalidArgumentError(
          absl::StrCat("non-finite value at element ", i));
    }
  }
  Tensor t;
  t.dtype_ = DType::kF32;
  t.shape_ = std::move(shape);
  t.f32_ = std::move(values);
  return t;
}

absl::StatusOr<Tensor> Tensor::FromU8(Shape shape,
                                      std::vector<uint8_t> values) {
  if (auto s = CheckShape(shape, values.size()); !s.ok()) return s;
  Tensor t;
  t.dtype_ = DType::kU8;
  t.shape_ = std::move(shape);
  t.u8_ = std::move(values);
  return t;
}

size_t Tensor::size() const {
  return dtype_ == DType::kF32 ? f32_.size() : u8_.size();
}

std::span<const float> Tensor::f32() const {
  assert(dtype_ == DType::kF32);
  return f32_;
}

std::span<const uint8_t> Tensor::u8() const {
  assert(dtype_ == DType::kU8);
  return u8_;
}

std::string Tensor::ShapeString() const {
  return absl::StrCat(DTypeName(dtype_), "[", absl::StrJoin(shape_, ","), "]");
}

bool BitwiseEqual(const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype() || a.shape() != b.shape()) return false;
  if (a.dtype() == DType::kU8) {
    return std::equal(a.u8().begin(), a.u8().end(), b.u8().begin());
  }
  return a.size() == 0 ||
         std::memcmp(a.f32().data(), b.f32().data(),
                     a.size() * sizeof(float)) == 0;
}

}  // namespace vlscore
