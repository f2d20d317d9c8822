// Copyright 2026 The aggstat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aggstat/numeric.hpp"

#include <cassert>

namespace aggstat {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 32;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void PairwiseAccumulator::push(std::span<const double> block) {
  assert(block.size() == width_);
  std::vector<double> carry(block.begin(), block.end());
  std::size_t level = 0;
  while (true) {
    if (level == levels_.size()) {
      levels_.push_back(std::move(carry));
      counts_.push_back(1);
      return;
    }
    if (counts_[level] == 0) {
      levels_[level] = std::move(carry);
      counts_[level] = 1;
      return;
    }
    for (std::size_t i = 0; i < width_; ++i) carry[i] = levels_[level][i] + carry[i];
    counts_[level] = 0;
    ++level;
  }
}

std::vector<double> PairwiseAccumulator::total() const {
  std::vector<double> out(width_, 0.0);
  for (std::size_t level = 0; level < levels_.size(); ++level) {
    if (counts_[level] == 0) continue;
    for (std::size_t i = 0; i < width_; ++i) out[i] += levels_[level][i];
  }
  return out;
}

}  // namespace aggstat
