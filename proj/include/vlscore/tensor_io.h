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

#ifndef VLSCORE_TENSOR_IO_H_
#define VLSCORE_TENSOR_IO_H_

#include <filesystem>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "vlscore/tensor.h"

namespace vlscore {

// VLT wire format, little-endian throughout:
//
//   offset 0   4 bytes   magic "VLT1"
//   offset 4   1 byte    dtype code (1 = f32, 2 = u8)
//   offset 5   1 byte    ndim, 1..4
//   offset 6   2 bytes   zero padding
//   offset 8   ndim x 8  dims as uint64
//   then                 row-major payload
//
// The header is exactly 8 + 8 * ndim bytes.
inline constexpr absl::string_view kVltMagic = "VLT1";

size_t VltHeaderSize(size_t ndim);

std::string EncodeTensor(const Tensor& t);

// `source` names the origin in error messages (usually a path).
absl::StatusOr<Tensor> DecodeTensor(absl::string_view bytes,
                                    absl::string_view source = "<memory>");

absl::Status WriteTensor(const Tensor& t, const std::filesystem::path& path);
absl::StatusOr<Tensor> ReadTensor(const std::filesystem::path& path);

// Whole-file helpers. Writes go to a sibling temp file that is renamed over
// `path`, so readers never see a partial file. Failures to open, read or
// write map to NotFound (missing input) or Unavailable (other I/O).
absl::StatusOr<std::string> ReadFileBytes(const std::filesystem::path& path);
absl::Status WriteFileAtomic(const std::filesystem::path& path,
                             absl::string_view bytes);

// True for the status codes the I/O helpers above produce.
bool IsIoError(const absl::Status& status);

}  // namespace vlscore

#endif  // VLSCORE_TENSOR_IO_H_
