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

#ifndef VLSCORE_COMPONENTS_H_
#define VLSCORE_COMPONENTS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vlscore {

enum class Connectivity {
  kFour = 4,
  kEight = 8,
};

// Component label image: 0 is background, foreground pixels carry labels
// 1..count in raster order of their first pixel.
struct ComponentLabels {
  std::vector<uint32_t> labels;
  size_t count = 0;
};

// Two-pass union-find labeling of the non-zero pixels of a row-major
// height x width mask.
ComponentLabels LabelComponents(std::span<const uint8_t> mask, size_t height,
                                size_t width,
                                Connectivity connectivity = Connectivity::kEight);

}  // namespace vlscore

#endif  // VLSCORE_COMPONENTS_H_
