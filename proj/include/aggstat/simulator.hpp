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

// Monte Carlo oracle: synthetic correlated activations with exact ZeroGamma
// marginals (Gaussian copula), the empirical forward pass through the
// aggregation block, and the observed per-layer statistics.

#ifndef AGGSTAT_SIMULATOR_HPP_
#define AGGSTAT_SIMULATOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aggstat/distributions.hpp"
#include "aggstat/fitting.hpp"
#include "aggstat/kernels.hpp"
#include "aggstat/propagation.hpp"

namespace aggstat {

struct SyntheticSpec {
  std::vector<ZeroGammaParams> filters;
  double rho_pix = 0.0;   // latent correlation of two pixels of one filter
  double rho_filt = 0.0;  // latent correlation of pixels of different filters
  std::size_t r_pixels = 1;
  std::size_t n_images = 0;
  std::uint64_t seed = 0;
  std::string label = "0";
  void validate() const;
};

/// Copula plan for the spec; throws CorrelationError if the latent matrix is not positive definite.
kernels::CopulaPlan make_copula_plan(const SyntheticSpec& spec);

/// Images are numbered from first_image in the RNG stream space, so several
/// classes can share one seed without overlapping streams.
ActivationDump generate(const SyntheticSpec& spec, std::size_t first_image = 0);

struct ForwardTrace {
  std::size_t n_images = 0;
  std::size_t n_filters = 0;
  std::size_t n_pixels = 0;
  std::vector<Moments> conv;         // per filter, pooled over images and pixels
  std::vector<double> activated;     // [image][filter][pixel]
  std::vector<double> gap;           // [image][filter]
  std::vector<double> deactivated;   // [image][filter]
  std::vector<double> output;        // [image]
};

/// Throws OverflowError if the exponential activation leaves the double range.
ForwardTrace forward(const ActivationDump& dump, const ActivationConfig& cfg, const FCWeights& w);

struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<std::size_t> counts;
};

/// Freedman-Diaconis bin width over the sample range.
Histogram histogram(std::span<const double> samples, std::size_t max_bins = 4096);

struct Observation {
  std::vector<Moments> conv;
  std::vector<Moments> activated;
  std::vector<Moments> gap;
  std::vector<Moments> deactivated;
  CovMatrix gap_cov;
  CovMatrix deact_cov;
  Moments output;
  Histogram output_hist;
  std::vector<Histogram> gap_hist;
};

Observation observe(const ForwardTrace& trace);

/// Unbiased sample covariance matrix of the columns of an n x d row-major matrix.
CovMatrix sample_cov(std::span<const double> data, std::size_t n_rows, std::size_t dim);

}  // namespace aggstat

#endif  // AGGSTAT_SIMULATOR_HPP_
