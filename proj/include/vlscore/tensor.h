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

#ifndef VLSCORE_TENSOR_H_
#define VLSCORE_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"

namespace vlscore {

// On-disk dtype codes. The numeric values are part of the file format.
enum class DType : uint8_t {
  kF32 = 1,
  kU8 = 2,
};

const char* DTypeName(DType dtype);

inline constexpr size_t kMaxRank = 4;

// Dense row-major array. Immutable once constructed: every accessor is const
// and the factories validate the shape against the payload, so a Tensor can
// be shared read-only between threads.
class Tensor {
 public:
  using Shape = std::vector<uint64_t>;

  // Empty f32 tensor of shape [0].
  Tensor();

  // Rejects rank outside [1, 4], a shape/payload size mismatch, and any
  // non-finite value.
  static absl::StatusOr<Tensor> FromF32(Shape shape, std::vector<float> values);
  static absl::StatusOr<Tensor> FromU8(Shape shape,
                                       std::vector<uint8_t> values);

  DType dtype() const { return dtype_; }
  const Shape& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t dim(size_t axis) const { return static_cast<size_t>(shape_[axis]); }
  size_t size() const;

  // Payload views. Calling the accessor of the other dtype is a programming
  // error.
  std::span<const float> f32() const;
  std::span<const uint8_t> u8() const;

  std::string ShapeString() const;

 private:
  DType dtype_;
  Shape shape_;
  std::vector<float> f32_;
  std::vector<uint8_t> u8_;
};

// Same dtype, same shape, same payload bits.
bool BitwiseEqual(const Tensor& a, const Tensor& b);

// Product of the dimensions, or an error on overflow.
absl::StatusOr<uint64_t> ElementCount(const Tensor::Shape& shape);

}  // namespace vlscore

#endif  // VLSCORE_TENSOR_H_
