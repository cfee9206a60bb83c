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


#ifndef VLSCORE_TESTS_TEST_UTIL_H_
#define VLSCORE_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "gtest/gtest.h"
#include "vlscore/tensor.h"

#define VLS_CONCAT_INNER(a, b) a##b
#define VLS_CONCAT(a, b) VLS_CONCAT_INNER(a, b)

#define ASSERT_OK(expr)                                   \
  do {                                                    \
    const absl::Status _st = ::vlscore::testing::ToStatus(expr); \
    ASSERT_TRUE(_st.ok()) << _st;                         \
  } while (0)

#define EXPECT_OK(expr) \
  EXPECT_TRUE(::vlscore::testing::ToStatus(expr).ok()) \
      << ::vlscore::testing::ToStatus(expr)

#define ASSERT_OK_AND_ASSIGN(lhs, rexpr) \
  ASSERT_OK_AND_ASSIGN_IMPL(VLS_CONCAT(_statusor_, __LINE__), lhs, rexpr)

#define ASSERT_OK_AND_ASSIGN_IMPL(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                              \
  ASSERT_TRUE(tmp.ok()) << tmp.status();           \
  lhs = std::move(tmp).value()

namespace vlscore::testing {

inline absl::Status ToStatus(const absl::Status& s) { return s; }

template <typename T>
absl::Status ToStatus(const absl::StatusOr<T>& s) {
  return s.status();
}

inline Tensor F32(Tensor::Shape shape, std::vector<float> values) {
  return Tensor::FromF32(std::move(shape), std::move(values)).value();
}

inline Tensor U8(Tensor::Shape shape, std::vector<uint8_t> values) {
  return Tensor::FromU8(std::move(shape), std::move(values)).value();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "vlscore_test";
    if (info != nullptr) {
      name += std::string("_") + info->test_suite_name() + "_" + info->name();
    }
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& leaf) const {
    return (path_ / leaf).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace vlscore::testing

#endif  // VLSCORE_TESTS_TEST_UTIL_H_
