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

// Seeded random streams. Every stochastic kernel derives an independent
// substream per work item (image, sample chunk) from (seed, item index), so
// results never depend on how items are scheduled across threads.

#ifndef AGGSTAT_RNG_HPP_
#define AGGSTAT_RNG_HPP_

#include <cstdint>
#include <random>

namespace aggstat {

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream number `stream` of the master seed.
  static Rng substream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal (Marsaglia polar method).
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Gamma(shape, scale) variate; Marsaglia-Tsang squeeze/rejection, with the
/// U^(1/shape) boost for shape < 1. Exact for every shape > 0.
double gamma_variate(Rng& rng, double shape, double scale);

}  // namespace aggstat

#endif  // AGGSTAT_RNG_HPP_
