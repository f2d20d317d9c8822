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

// Scalar special functions: Gamma and friends, digamma/trigamma, the
// generalized binomial coefficient and the regularized incomplete Gamma
// functions with their inverse.
//
// All functions are pure and thread-safe. Domain violations throw
// aggstat::DomainError, overflow throws aggstat::OverflowError.

#ifndef AGGSTAT_SPECFUN_HPP_
#define AGGSTAT_SPECFUN_HPP_

namespace aggstat {

/// Gamma function. Lanczos approximation, reflection below 1/2.
/// Throws DomainError at non-positive integers, OverflowError above ~171.6.
double gamma_fn(double z);

/// 1/Gamma(z); zero at the poles instead of throwing.
double rgamma_fn(double z);

/// log Gamma(z) for z > 0, accurate in relative terms near the roots z = 1, 2.
double lgamma_fn(double z);

/// Digamma psi(z) for z > 0.
double digamma_fn(double z);

/// Trigamma psi'(z) for z > 0. Used by the Gamma maximum-likelihood solver.
double trigamma_fn(double z);

/// a (a-1) ... (a-k+1) / k!
double gen_binomial(double a, unsigned k);

/// Regularized lower incomplete Gamma P(a, x). x may be +inf.
double reg_lower_incomplete_gamma(double a, double x);

/// Regularized upper incomplete Gamma Q(a, x) = 1 - P(a, x), computed
/// without cancellation in the upper tail.
double reg_upper_incomplete_gamma(double a, double x);

/// Solves P(a, x) = p for x. `q` must equal 1 - p; passing it separately
/// keeps upper-tail quantiles accurate when p is within rounding of 1.
double inverse_reg_incomplete_gamma(double a, double p, double q);

/// Standard normal CDF and its complement.
double normal_cdf(double z);
double normal_ccdf(double z);

}  // namespace aggstat

#endif  // AGGSTAT_SPECFUN_HPP_
