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

#include "vlscore/tensor_io.h"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <system_error>
#include <vector>

#include "absl/strings/str_cat.h"
#include "vlscore/status_macros.h"

namespace vlscore {
namespace {

void PutU64(std::string* out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back(static_cast<char>(v >> (8 * i)));
}

void PutU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>(v >> (8 * i)));
}

uint64_t GetU64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

uint32_t GetU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

absl::Status FormatError(absl::string_view source, absl::string_view field,
                         absl::string_view detail) {
  return absl::InvalidArgumentError(
      absl::StrCat(source, ": bad VLT ", field, ": ", detail));
}

}  // namespace

size_t VltHeaderSize(size_t ndim) { return 8 + 8 * ndim; }

std::string EncodeTensor(const Tensor& t) {
  std::string out;
  const size_t elem = t.dtype() == DType::kF32 ? 4 : 1;
  out.reserve(VltHeaderSize(t.rank()) + elem * t.size());
  out.append(kVltMagic.data(), kVltMagic.size());
  out.push_back(static_cast<char>(t.dtype()));
  out.push_back(static_cast<char>(t.rank()));
  out.push_back('\0');
  out.push_back('\0');
  for (uint64_t d : t.shape()) PutU64(&out, d);
  if (t.dtype() == DType::kF32) {
    for (float v : t.f32()) PutU32(&out, std::bit_cast<uint32_t>(v));
  } else {
    for (uint8_t v : t.u8()) out.push_back(static_cast<char>(v));
  }
  return out;
}

absl::StatusOr<Tensor> DecodeTensor(absl::string_view bytes,
                                    absl::string_view source) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8) {
    return FormatError(source, "header",
                       absl::StrCat("file has ", bytes.size(),
                                    " bytes, need at least 8"));
  }
  if (bytes.substr(0, 4) != kVltMagic) {
    return FormatError(source, "magic",
                       absl::StrCat("expected \"VLT1\", got \"",
                                    bytes.substr(0, 4), "\""));
  }
  const uint8_t code = p[4];
  if (code != static_cast<uint8_t>(DType::kF32) &&
      code != static_cast<uint8_t>(DType::kU8)) {
    return FormatError(source, "dtype", absl::StrCat("unknown code ", code));
  }
  const auto dtype = static_cast<DType>(code);
  const size_t ndim = p[5];
  if (ndim < 1 || ndim > kMaxRank) {
    return FormatError(source, "ndim",
                       absl::StrCat(ndim, " outside [1, ", kMaxRank, "]"));
  }
  if (p[6] != 0 || p[7] != 0) {
    return FormatError(source, "padding", "reserved bytes are not zero");
  }
  const size_t header = VltHeaderSize(ndim);
  if (bytes.size() < header) {
    return FormatError(source, "dims",
                       absl::StrCat("header truncated: ", bytes.size(),
                                    " of ", header, " bytes"));
  }
  Tensor::Shape shape(ndim);
  for (size_t i = 0; i < ndim; ++i) shape[i] = GetU64(p + 8 + 8 * i);
  auto count = ElementCount(shape);
  if (!count.ok()) return FormatError(source, "dims", count.status().message());
  const uint64_t elem = dtype == DType::kF32 ? 4 : 1;
  const uint64_t payload = bytes.size() - header;
  if (*count > payload / elem || payload != *count * elem) {
    return absl::InvalidArgumentError(absl::StrCat(
        source, ": payload length mismatch: shape declares ", *count,
        " elements (", *count * elem, " bytes), file holds ", payload,
        " bytes"));
  }
  const unsigned char* data = p + header;
  absl::StatusOr<Tensor> t;
  if (dtype == DType::kF32) {
    std::vector<float> values(*count);
    for (uint64_t i = 0; i < *count; ++i) {
      values[i] = std::bit_cast<float>(GetU32(data + 4 * i));
    }
    t = Tensor::FromF32(std::move(shape), std::move(values));
  } else {
    t = Tensor::FromU8(std::move(shape), std::vector<uint8_t>(data, data + *count));
  }
  if (!t.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(source, ": invalid payload: ", t.status().message()));
  }
  return t;
}

absl::Status WriteTensor(const Tensor& t, const std::filesystem::path& path) {
  return WriteFileAtomic(path, EncodeTensor(t));
}

absl::StatusOr<Tensor> ReadTensor(const std::filesystem::path& path) {
  ASSIGN_OR_RETURN(std::string bytes, ReadFileBytes(path));
  return DecodeTensor(bytes, path.string());
}

absl::StatusOr<std::string> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) {
    return absl::UnavailableError(absl::StrCat("read error on ", path.string()));
  }
  return bytes;
}

absl::Status WriteFileAtomic(const std::filesystem::path& path,
                             absl::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::UnavailableError(
          absl::StrCat("cannot write ", path.string()));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      return absl::UnavailableError(
          absl::StrCat("write error on ", path.string()));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    return absl::UnavailableError(
        absl::StrCat("cannot write ", path.string(), ": rename failed"));
  }
  return absl::OkStatus();
}

bool IsIoError(const absl::Status& status) {
  return absl::IsNotFound(status) || absl::IsUnavailable(status) ||
         absl::IsPermissionDenied(status);
}

}  // namespace vlscore
