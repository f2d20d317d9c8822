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

// Small numeric helpers shared by the kernels: pairwise summation and a
// streaming pairwise accumulator for fixed-size vectors.

#ifndef AGGSTAT_NUMERIC_HPP_
#define AGGSTAT_NUMERIC_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace aggstat {

/// Pairwise (cascade) sum. The recursion splits at fixed midpoints, so the
/// result depends only on the input order.
double pairwise_sum(std::span<const double> values);

/// Accumulates equal-length blocks of partial sums and combines them as a
/// binary counter: block k is merged with its neighbour once both halves of
/// a power-of-two range are complete. The summation tree therefore depends
/// only on the number of blocks pushed, never on who computed them.
class PairwiseAccumulator {
 public:
  explicit PairwiseAccumulator(std::size_t width) : width_(width) {}

  std::size_t width() const { return width_; }

  void push(std::span<const double> block);

  /// Folds the pending partial sums (smallest first) into one vector.
  std::vector<double> total() const;

 private:
  std::size_t width_;
  std::vector<std::vector<double>> levels_;
  std::vector<std::size_t> counts_;
};

}  // namespace aggstat

#endif  // AGGSTAT_NUMERIC_HPP_
