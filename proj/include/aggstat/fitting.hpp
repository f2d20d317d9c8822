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

// Estimation from observed last-conv-layer activations: zero-Gamma fits,
// pixel and filter cross-moment tables, output Gaussians, observed KL.

#ifndef AGGSTAT_FITTING_HPP_
#define AGGSTAT_FITTING_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aggstat/distributions.hpp"
#include "aggstat/propagation.hpp"

namespace aggstat {

/// Activations of n images, stored [image][filter][pixel], with a class label per image.
struct ActivationDump {
  std::size_t n_images = 0;
  std::size_t n_filters = 0;
  std::size_t n_pixels = 0;
  std::vector<double> values;
  std::vector<std::string> labels;

  double at(std::size_t image, std::size_t filter, std::size_t pixel) const {
    return values[(image * n_filters + filter) * n_pixels + pixel];
  }
  std::span<const double> image(std::size_t i) const {
    return {values.data() + i * n_filters * n_pixels, n_filters * n_pixels};
  }

  /// Throws FormatError on shape mismatch and DomainError on negative or non-finite values.
  void validate() const;

  /// Distinct labels in order of first appearance.
  std::vector<std::string> classes() const;

  /// Sub-dump of the images whose label equals (or, with negate, differs from) `label`.
  ActivationDump select(const std::string& label, bool negate = false) const;

  /// All values of one filter, image-major then pixel.
  std::vector<double> filter_values(std::size_t filter) const;
};

struct FitReport {
  ZeroGammaParams params;
  std::size_t n_zero = 0;
  std::size_t n_pos = 0;
  double log_likelihood = 0.0;
  double ks_stat = 0.0;
  int iterations = 0;
};

inline constexpr double kDefaultZeroThreshold = 1e-12;

/// Point mass = fraction of samples <= zero_threshold; Gamma(a, s) on the rest
/// by maximum likelihood (Newton on ln a - digamma(a) = ln mean - mean ln).
FitReport fit_zero_gamma(std::span<const double> samples,
                         double zero_threshold = kDefaultZeroThreshold, double tol = 1e-12);

/// Pixel moment tables of one filter.
PixelStats estimate_pixel_stats(const ActivationDump& dump, std::size_t filter);

/// Whole-filter sums for all filter pairs.
FilterSums estimate_filter_sums(const ActivationDump& dump);

BlockStats estimate_block_stats(const ActivationDump& dump);

/// Sample mean and unbiased standard deviation.
GaussianParams fit_gaussian(std::span<const double> samples);

double observed_kl(std::span<const double> pos, std::span<const double> neg);

/// Two-pass unbiased sample variance with pairwise sums.
Moments sample_moments(std::span<const double> samples);

}  // namespace aggstat

#endif  // AGGSTAT_FITTING_HPP_
