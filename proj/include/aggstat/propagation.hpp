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

// Analytic propagation of moments and covariances through the aggregation
// block: exponential activation -> global average pooling -> power
// deactivation -> fully connected output node, and the closed-form KL
// divergence between the two class-conditional output Gaussians.

#ifndef AGGSTAT_PROPAGATION_HPP_
#define AGGSTAT_PROPAGATION_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "aggstat/distributions.hpp"

namespace aggstat {

/// Dense symmetric matrix, row-major.
class CovMatrix {
 public:
  CovMatrix() = default;
  explicit CovMatrix(std::size_t dim) : dim_(dim), entries_(dim * dim, 0.0) {}

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return entries_[i * dim_ + j]; }
  const std::vector<double>& entries() const { return entries_; }

  /// Sets (i, j) and (j, i) together.
  void set_sym(std::size_t i, std::size_t j, double v) {
    entries_[i * dim_ + j] = v;
    entries_[j * dim_ + i] = v;
  }

  /// Throws DomainError unless symmetric within `tol` with a non-negative diagonal.
  void validate(double tol = 1e-12) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> entries_;
};

/// Moments of the R pixels of one filter. Tables are R x R row-major:
///   e11(i, j) = E[W_i W_j], e12(i, j) = E[W_i W_j^2], e22(i, j) = E[W_i^2 W_j^2].
/// E[W_i^2] is e11(i, i). A NaN entry means "not estimated".
struct PixelStats {
  std::size_t n_pixels = 0;
  std::vector<double> m1;
  std::vector<double> e11;
  std::vector<double> e12;
  std::vector<double> e22;

  static PixelStats from_product_moments(const std::vector<double>& m1,
                                         const std::vector<double>& m2,
                                         const std::vector<double>& m3,
                                         const std::vector<double>& m4);

  double second(std::size_t i) const { return e11[i * n_pixels + i]; }
  void validate() const;
};

/// Whole-filter sums used for GAP-feature covariances. With
/// T1_f = sum_k W_{f,k} and T2_f = sum_k W_{f,k}^2 over the pixels of filter f:
///   t1(f) = E[T1_f], t2(f) = E[T2_f],
///   s11(f, g) = E[T1_f T1_g], s12(f, g) = E[T1_f T2_g], s22(f, g) = E[T2_f T2_g].
/// Matrices are F x F row-major; s12 is not symmetric.
struct FilterSums {
  std::size_t n_filters = 0;
  std::vector<double> t1;
  std::vector<double> t2;
  std::vector<double> s11;
  std::vector<double> s12;
  std::vector<double> s22;
  void validate() const;
};

/// Everything estimated from one class's last-conv-layer activations.
struct BlockStats {
  std::size_t r_pixels = 0;
  std::vector<PixelStats> filters;
  FilterSums sums;  // empty (n_filters == 0) if cross-filter moments were not estimated

  std::size_t n_filters() const { return filters.size(); }
  bool has_cross_filter() const { return sums.n_filters == filters.size() && !filters.empty(); }
  void validate() const;
};

enum class Activation { kExp, kIdentity };

struct ActivationConfig {
  double alpha = 1.0;
  double beta = 0.01;
  double gamma_exp = 1.0;
  double eps = 0.0;
  std::size_t r_pixels = 1;
  Activation activation = Activation::kExp;
  unsigned eps_order = kDefaultEpsOrder;
  void validate() const;
};

struct FCWeights {
  std::vector<double> weights;
  void validate() const;
};

struct GaussianPair {
  GaussianParams pos;
  GaussianParams neg;
};

/// Second-order Taylor data of the activation at 0.
struct Taylor2 {
  double a = 0.0;  // g(0) g'(0)
  double b = 0.0;  // g'(0)^2
  double c = 0.0;  // g'(0) g''(0) / 2
  double d = 0.0;  // g''(0)^2 / 4
  double g0 = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;

  /// Second-order approximation of E[g(W)] from E[W], E[W^2].
  double mean(double ew, double ew2) const { return g0 + g1 * ew + 0.5 * g2 * ew2; }
};

Taylor2 taylor2_coeffs(const ActivationConfig& cfg);

/// E[g(W_i) g(W_j)] from the second-order expansion of g at 0.
double activated_cross_expectation(const PixelStats& stats, const ActivationConfig& cfg,
                                   std::size_t i, std::size_t j);

/// Cov_S(i, j) = E[g(W_i) g(W_j)] - mu_i mu_j with Taylor means.
CovMatrix pixel_cov_matrix(const PixelStats& stats, const ActivationConfig& cfg);

/// Moments of the average of R activated pixels with marginal `act`.
Moments gap_moments(const Moments& act, const CovMatrix& cov, std::size_t r_pixels);

/// Gamma(a, s) with the given mean and variance.
GammaShapeScale match_gamma(const Moments& m);

/// Cov_G(f, g) between the GAP features of filters f and g.
double gap_feature_cov(const BlockStats& stats, std::size_t f, std::size_t g,
                       const ActivationConfig& cfg);

/// Covariance of (X + eps)^gamma and (Y + eps)^gamma by linearizing at 2 eps.
double deact_cov(double cov_g, double mu_i, double mu_j, double gamma_exp, double eps);

/// eps = 0 counterpart: linearizes x^gamma at the two GAP means.
double deact_cov_at_means(double cov_g, double mu_i, double mu_j, double gamma_exp);

GaussianParams output_gaussian(const std::vector<Moments>& features, const CovMatrix& cov_d,
                               const FCWeights& w);

/// KL(N(mu+, s+^2) || N(mu-, s-^2)).
double kl_gaussian(const GaussianPair& pair);

struct PredictOptions {
  bool ignore_covariance = false;  // drop every pixel and feature covariance term
};

struct BlockPrediction {
  std::vector<Moments> conv;
  std::vector<Moments> activated;
  std::vector<Moments> gap;
  std::vector<GammaShapeScale> gap_gamma;
  std::vector<Moments> deactivated;
  CovMatrix gap_cov;    // diagonal holds the GAP variances
  CovMatrix deact_cov;  // diagonal holds the deactivated variances
  GaussianParams output;
};

/// Runs the full chain for one class. Failures are rethrown as
/// PropagationError tagged with the layer that failed.
BlockPrediction predict_block(const std::vector<ZeroGammaParams>& per_filter,
                              const BlockStats& stats, const ActivationConfig& cfg,
                              const FCWeights& w, const PredictOptions& opts = {});

}  // namespace aggstat

#endif  // AGGSTAT_PROPAGATION_HPP_
