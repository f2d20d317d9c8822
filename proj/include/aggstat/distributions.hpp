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

// The distribution families of the aggregation block: zero-Gamma
// (ReLU outputs), exp-Gamma / zero-ExpGamma (after the exponential
// activation), generalized Gamma (after the power deactivation), and the
// Gaussian used for the output node.
//
// Mixed families report the point mass at zero and the continuous density
// as separate channels (MixedValue) rather than pretending the mixture has a
// density.

#ifndef AGGSTAT_DISTRIBUTIONS_HPP_
#define AGGSTAT_DISTRIBUTIONS_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace aggstat {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

struct MixedValue {
  double point_mass = 0.0;  // probability attached to x (non-zero only at x = 0)
  double density = 0.0;     // continuous density at x
};

/// Point mass p at zero plus (1 - p) Gamma(a, s) on x > 0.
struct ZeroGammaParams {
  double p = 0.0;
  double a = 1.0;
  double s = 1.0;
  void validate() const;
};

/// Law of alpha (exp(beta X) - 1) with X ~ Gamma(a, s).
struct ExpGammaParams {
  double a = 1.0;
  double s = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  void validate() const;
};

/// Exp-Gamma with a point mass p at g(0) = 0.
struct ZeroExpGammaParams {
  double p = 0.0;
  ExpGammaParams inner;
  void validate() const;
};

/// Law of (X + eps)^gamma_exp with X ~ Gamma(a, s).
struct GenGammaParams {
  double a = 1.0;
  double s = 1.0;
  double gamma_exp = 1.0;
  double eps = 0.0;
  void validate() const;
};

struct GaussianParams {
  double mu = 0.0;
  double sigma = 1.0;
  void validate() const;
};

/// Plain Gamma shape/scale pair (GAP features after moment matching).
struct GammaShapeScale {
  double a = 1.0;
  double s = 1.0;
};

double gamma_pdf(double a, double s, double x);

MixedValue zero_gamma_pdf(const ZeroGammaParams& params, double x);
Moments zero_gamma_moments(const ZeroGammaParams& params);

double exp_gamma_pdf(const ExpGammaParams& params, double x);
MixedValue zero_exp_gamma_pdf(const ZeroExpGammaParams& params, double x);

/// Mean and variance of the zero-ExpGamma law. Requires beta * s < 1/2;
/// throws DivergenceError otherwise because the second moment is infinite.
Moments zero_exp_gamma_moments(const ZeroExpGammaParams& params);

/// Density of X^gamma for X ~ Gamma(a, s); params.eps must be 0.
double gen_gamma_pdf(const GenGammaParams& params, double x);

/// Closed-form moments of X^gamma; params.eps must be 0.
Moments gen_gamma_moments(const GenGammaParams& params);

inline constexpr unsigned kDefaultEpsOrder = 3;

/// E[(X + eps)^(gamma n)] for X ~ Gamma(a, s), expanded in z = eps / s and
/// truncated after z^order. The expansion has a regular part
///   sum_k C(m, k) eps^k s^(m-k) Gamma(a+m-k) / Gamma(a),   m = gamma n
/// and a boundary part of order z^(a+m) coming from the region X < eps,
///   s^m z^(a+m) Gamma(-a-m) / Gamma(-m) sum_j (a)_j / ((a+m+1)_j j!) z^j.
/// Terms with total power of z above `order` are dropped. With eps = 0 it
/// reduces to s^m Gamma(a+m) / Gamma(a).
/// Throws DomainError if a retained Gamma argument a+m-k is a pole.
double eps_deact_moment(const GenGammaParams& params, unsigned n,
                        unsigned order = kDefaultEpsOrder);

/// Mean and variance from eps_deact_moment with n = 1, 2.
Moments eps_deact_moments(const GenGammaParams& params, unsigned order = kDefaultEpsOrder);

double gaussian_pdf(const GaussianParams& params, double x);

// Sampling. Deterministic for a fixed seed and independent of the OpenMP
// thread count; transformed families are generated by transforming exact
// Gamma draws.
std::vector<double> sample(const ZeroGammaParams& params, std::size_t n, std::uint64_t seed);
std::vector<double> sample(const ExpGammaParams& params, std::size_t n, std::uint64_t seed);
std::vector<double> sample(const ZeroExpGammaParams& params, std::size_t n, std::uint64_t seed);
std::vector<double> sample(const GenGammaParams& params, std::size_t n, std::uint64_t seed);
std::vector<double> sample(const GaussianParams& params, std::size_t n, std::uint64_t seed);

}  // namespace aggstat

#endif  // AGGSTAT_DISTRIBUTIONS_HPP_
