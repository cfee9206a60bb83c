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

#include "vlscore/components.h"

#include <algorithm>
#include <cassert>
#include <numeric>

namespace vlscore {
namespace {

class DisjointSet {
 public:
  uint32_t Add() {
    parent_.push_back(static_cast<uint32_t>(parent_.size()));
    return parent_.back();
  }

  uint32_t Find(uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void Union(uint32_t a, uint32_t b) {
    a = Find(a);
    b = Find(b);
    if (a == b) return;
    // Smaller root wins so final labels follow raster order.
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

  size_t size() const { return parent_.size(); }

 private:
  std::vector<uint32_t> parent_;
};

}  // namespace

ComponentLabels LabelComponents(std::span<const uint8_t> mask, size_t height,
                                size_t width, Connectivity connectivity) {
  assert(mask.size() == height * width);
  ComponentLabels out;
  out.labels.assign(mask.size(), 0);
  DisjointSet sets;
  sets.Add();  // label 0 is background

  const bool eight = connectivity == Connectivity::kEight;
  for (size_t y = 0; y < height; ++y) {
    for (size_t x = 0; x < width; ++x) {
      const size_t at = y * width + x;
      if (mask[at] == 0) continue;
      // Already-visited neighbours: W, and N / NW / NE for the row above.
      uint32_t found[4];
      int n = 0;
      if (x > 0 && out.labels[at - 1]) found[n++] = out.labels[at - 1];
      if (y > 0) {
        const size_t up = at - width;
        if (out.labels[up]) found[n++] = out.labels[up];
        if (eight && x > 0 && out.labels[up - 1]) found[n++] = out.labels[up - 1];
        if (eight && x + 1 < width && out.labels[up + 1]) {
          found[n++] = out.labels[up + 1];
        }
      }
      if (n == 0) {
        out.labels[at] = sets.Add();
        continue;
      }
      uint32_t label = found[0];
      for (int i = 1; i < n; ++i) label = std::min(label, found[i]);
      for (int i = 0; i < n; ++i) sets.Union(label, found[i]);
      out.labels[at] = label;
    }
  }

  // Compact roots to 1..count.
  std::vector<uint32_t> compact(sets.size(), 0);
  uint32_t next = 0;
  for (uint32_t l = 1; l < sets.size(); ++l) {
    const uint32_t root = sets.Find(l);
    if (root == l) compact[l] = ++next;
  }
  for (uint32_t& l : out.labels) {
    if (l != 0) l = compact[sets.Find(l)];
  }
  out.count = next;
  return out;
}

}  // namespace vlscore
