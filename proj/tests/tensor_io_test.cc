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


#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"
#include "vlscore/tensor.h"
#include "vlscore/tensor_io.h"

namespace vlscore {
namespace {

using ::vlscore::testing::F32;
using ::vlscore::testing::TempDir;
using ::vlscore::testing::U8;

TEST(TensorTest, RejectsBadShapes) {
  EXPECT_FALSE(Tensor::FromF32({}, {}).ok());
  EXPECT_FALSE(Tensor::FromF32({1, 1, 1, 1, 1}, {0.f}).ok());
  EXPECT_FALSE(Tensor::FromF32({2, 2}, {1.f, 2.f, 3.f}).ok());
  EXPECT_FALSE(Tensor::FromU8({3}, {1, 2}).ok());
}

TEST(TensorTest, RejectsNonFiniteValues) {
  EXPECT_FALSE(
      Tensor::FromF32({1}, {std::numeric_limits<float>::quiet_NaN()}).ok());
  EXPECT_FALSE(
      Tensor::FromF32({1}, {std::numeric_limits<float>::infinity()}).ok());
}

TEST(TensorIoTest, ScalarZeroEncodesToHeaderPlusFourZeroBytes) {
  const std::string bytes = EncodeTensor(F32({1}, {0.0f}));
  ASSERT_EQ(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(0, 4), "VLT1");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 1);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[7], 0);
  EXPECT_EQ(bytes.substr(8, 8), std::string("\x01\0\0\0\0\0\0\0", 8));
  EXPECT_EQ(bytes.substr(16), std::string(4, '\0'));
}

TEST(TensorIoTest, U8PayloadIsRawBytes) {
  const std::string bytes = EncodeTensor(U8({2, 2}, {0, 1, 254, 255}));
  ASSERT_EQ(bytes.size(), VltHeaderSize(2) + 4);
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes.substr(VltHeaderSize(2)), std::string("\x00\x01\xFE\xFF", 4));
}

TEST(TensorIoTest, F32IsLittleEndian) {
  const std::string bytes = EncodeTensor(F32({1}, {1.0f}));
  EXPECT_EQ(bytes.substr(16), std::string("\x00\x00\x80\x3F", 4));
}

TEST(TensorIoTest, RandomRoundTripIsBitwiseEqual) {
  std::mt19937 rng(11);
  std::normal_distribution<float> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor::Shape shape = {1 + rng() % 4, 1 + rng() % 5, 1 + rng() % 6};
    std::vector<float> values(shape[0] * shape[1] * shape[2]);
    for (float& v : values) v = normal(rng);
    const Tensor t = F32(shape, values);
    ASSERT_OK_AND_ASSIGN(Tensor back, DecodeTensor(EncodeTensor(t)));
    EXPECT_TRUE(BitwiseEqual(t, back));
    EXPECT_EQ(back.shape(), shape);
  }
}

TEST(TensorIoTest, FileRoundTrip) {
  TempDir dir;
  const Tensor t = F32({2, 3}, {0.5f, -1.f, 2.f, 3.25f, 0.f, -0.f});
  ASSERT_OK(WriteTensor(t, dir / "t.vlt"));
  ASSERT_OK_AND_ASSIGN(Tensor back, ReadTensor(dir / "t.vlt"));
  EXPECT_EQ(back.dtype(), DType::kF32);
  EXPECT_TRUE(BitwiseEqual(t, back));
  EXPECT_FALSE(std::filesystem::exists(dir / "t.vlt.tmp"));
}

TEST(TensorIoTest, BadMagicIsFormatError) {
  std::string bytes = EncodeTensor(F32({1}, {0.f}));
  bytes.replace(0, 4, "XXXX");
  const auto r = DecodeTensor(bytes, "bad.vlt");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_NE(r.status().message().find("magic"), absl::string_view::npos);
  EXPECT_NE(r.status().message().find("bad.vlt"), absl::string_view::npos);
}

TEST(TensorIoTest, TruncatedPayloadIsLengthMismatch) {
  std::string bytes = EncodeTensor(F32({8}, std::vector<float>(8, 1.f)));
  bytes.resize(bytes.size() - 4);
  const auto r = DecodeTensor(bytes);
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.status().message().find("payload length mismatch"),
            absl::string_view::npos);
}

TEST(TensorIoTest, HeaderFieldErrors) {
  const std::string good = EncodeTensor(U8({2}, {1, 2}));
  std::string dtype = good;
  dtype[4] = 7;
  std::string ndim = good;
  ndim[5] = 0;
  std::string pad = good;
  pad[6] = 1;
  EXPECT_NE(DecodeTensor(dtype).status().message().find("dtype"),
            absl::string_view::npos);
  EXPECT_NE(DecodeTensor(ndim).status().message().find("ndim"),
            absl::string_view::npos);
  EXPECT_NE(DecodeTensor(pad).status().message().find("padding"),
            absl::string_view::npos);
  EXPECT_FALSE(DecodeTensor(good.substr(0, 10)).ok());
}

TEST(TensorIoTest, NanPayloadIsRejected) {
  std::string bytes = EncodeTensor(F32({1}, {0.f}));
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + 16, &nan, 4);
  const auto r = DecodeTensor(bytes);
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.status().message().find("non-finite"), absl::string_view::npos);
}

TEST(TensorIoTest, MissingFileIsIoError) {
  TempDir dir;
  const auto r = ReadTensor(dir / "absent.vlt");
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(IsIoError(r.status()));
}

TEST(TensorIoTest, UnwritableDestinationIsIoError) {
  TempDir dir;
  const absl::Status s =
      WriteTensor(F32({1}, {0.f}), dir.path() / "no" / "such" / "dir.vlt");
  ASSERT_FALSE(s.ok());
  EXPECT_TRUE(IsIoError(s));
}

}  // namespace
}  // namespace vlscore
