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

// Fixed-size chunking shared by the sampling and generation kernels. Each
// chunk owns an RNG substream keyed by its index, so the output does not
// depend on how chunks are scheduled across threads.

#ifndef AGGSTAT_DETAIL_CHUNKED_HPP_
#define AGGSTAT_DETAIL_CHUNKED_HPP_

#include <cstddef>
#include <cstdint>
#include <span>

#include "aggstat/rng.hpp"

namespace aggstat::detail {

inline constexpr std::size_t kSampleChunk = 65536;

template <class Draw>
void fill_chunked(std::span<double> out, std::uint64_t seed, bool parallel, Draw draw) {
  const std::size_t n = out.size();
  const auto n_chunks = static_cast<std::int64_t>((n + kSampleChunk - 1) / kSampleChunk);
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(c));
    const std::size_t lo = static_cast<std::size_t>(c) * kSampleChunk;
    const std::size_t hi = lo + kSampleChunk < n ? lo + kSampleChunk : n;
    for (std::size_t i = lo; i < hi; ++i) out[i] = draw(rng);
  }
}

}  // namespace aggstat::detail

#endif  // AGGSTAT_DETAIL_CHUNKED_HPP_
