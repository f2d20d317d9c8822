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

// Data-parallel hot loops. Each kernel has an OpenMP version and a serial
// reference in kernels::reference computing the same quantity; the two are
// compared by the tests and by the benchmark target.
//
// The OpenMP versions fix their work decomposition from the problem size
// alone, so results do not depend on the number of threads.

#ifndef AGGSTAT_KERNELS_HPP_
#define AGGSTAT_KERNELS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aggstat/distributions.hpp"

namespace aggstat::kernels {

/// E[v v^T] over the rows of an n_rows x dim row-major matrix (dim x dim result).
std::vector<double> gram_mean(std::span<const double> data, std::size_t n_rows, std::size_t dim);

/// Gaussian-copula generator state: lower Cholesky factor (packed by rows) of
/// the latent unit correlation matrix, and the ZeroGamma marginal of each unit.
struct CopulaPlan {
  std::size_t n_units = 0;
  std::vector<double> chol;  // row i holds L(i, 0..i)
  std::vector<ZeroGammaParams> marginal;
};

/// Fills out[image * n_units + unit]; image i draws from RNG substream i.
void copula_fill(const CopulaPlan& plan, std::uint64_t seed, std::size_t first_image,
                 std::size_t n_images, std::span<double> out);

struct ForwardParams {
  double alpha = 1.0;
  double beta = 1.0;
  bool identity = false;
  double gamma_exp = 1.0;
  double eps = 0.0;
  std::size_t n_filters = 0;
  std::size_t r_pixels = 0;
  std::vector<double> weights;
};

/// Empirical forward pass over n images of conv values [image][filter][pixel].
/// Writes activated (same shape), gap and deact ([image][filter]) and output
/// ([image]). Returns false if any activated value is not finite.
bool forward(const ForwardParams& fp, std::span<const double> conv, std::size_t n_images,
             std::span<double> activated, std::span<double> gap, std::span<double> deact,
             std::span<double> output);

namespace reference {

std::vector<double> gram_mean(std::span<const double> data, std::size_t n_rows, std::size_t dim);

void copula_fill(const CopulaPlan& plan, std::uint64_t seed, std::size_t first_image,
                 std::size_t n_images, std::span<double> out);

bool forward(const ForwardParams& fp, std::span<const double> conv, std::size_t n_images,
             std::span<double> activated, std::span<double> gap, std::span<double> deact,
             std::span<double> output);

}  // namespace reference

/// Quantile of the ZeroGamma law at u, given u and 1 - u separately so the
/// upper tail keeps full precision.
double zero_gamma_quantile(const ZeroGammaParams& params, double u, double one_minus_u);

}  // namespace aggstat::kernels

#endif  // AGGSTAT_KERNELS_HPP_
