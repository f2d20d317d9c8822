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


// Synthetic blocks shared by the propagation, simulator and acceptance tests.

#ifndef AGGSTAT_TESTS_FIXTURES_HPP_
#define AGGSTAT_TESTS_FIXTURES_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "aggstat/simulator.hpp"

namespace fixture {

/// F filters whose Gamma part has scale `s`, zero mass and shape spread over
/// [0.15, 0.45] and [1, 3]. `shift` perturbs the parameters so two classes differ.
inline std::vector<aggstat::ZeroGammaParams> filters(std::size_t n, double s, double shift = 0.0) {
  std::vector<aggstat::ZeroGammaParams> out;
  for (std::size_t f = 0; f < n; ++f) {
    const double u = n > 1 ? static_cast<double>(f) / static_cast<double>(n - 1) : 0.5;
    out.push_back({0.15 + 0.3 * u, 1.0 + 2.0 * (1.0 - u) + shift, s * (1.0 + 0.25 * shift)});
  }
  return out;
}

inline aggstat::SyntheticSpec block(std::size_t n_filters, std::size_t r, double rho_pix,
                                    double rho_filt, std::size_t n_images, std::uint64_t seed,
                                    double s = 0.5, double shift = 0.0,
                                    std::string label = "0") {
  aggstat::SyntheticSpec spec;
  spec.filters = filters(n_filters, s, shift);
  spec.rho_pix = rho_pix;
  spec.rho_filt = rho_filt;
  spec.r_pixels = r;
  spec.n_images = n_images;
  spec.seed = seed;
  spec.label = std::move(label);
  return spec;
}

/// Positive weights of unit order.
inline aggstat::FCWeights weights(std::size_t n) {
  aggstat::FCWeights w;
  for (std::size_t i = 0; i < n; ++i) w.weights.push_back((i % 2 == 0 ? 1.0 : 0.6) + 0.05 * static_cast<double>(i));
  return w;
}

}  // namespace fixture

#endif  // AGGSTAT_TESTS_FIXTURES_HPP_
