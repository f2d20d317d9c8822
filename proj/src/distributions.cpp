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

#include "aggstat/distributions.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "aggstat/errors.hpp"
#include "aggstat/rng.hpp"
#include "aggstat/specfun.hpp"
#include "detail/chunked.hpp"

namespace aggstat {
namespace {

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ln Gamma(a + d) - ln Gamma(a) for a, a + d > 0.
double log_gamma_ratio(double a, double d) { return lgamma_fn(a + d) - lgamma_fn(a); }

// Gamma(x) / Gamma(a) for a > 0 and x not a pole, without overflow for large a.
double gamma_ratio(double x, double a) {
  if (x > 0.0) return std::exp(lgamma_fn(x) - lgamma_fn(a));
  return gamma_fn(x) * rgamma_fn(a);
}

double log_gamma_density(double a, double s, double x) {
  return (a - 1.0) * std::log(x) - x / s - lgamma_fn(a) - a * std::log(s);
}

}  // namespace

void ZeroGammaParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("ZeroGamma: p must lie in [0, 1], got " + num(p));
  if (!positive_finite(a)) throw DomainError("ZeroGamma: shape a must be > 0, got " + num(a));
  if (!positive_finite(s)) throw DomainError("ZeroGamma: scale s must be > 0, got " + num(s));
}

void ExpGammaParams::validate() const {
  if (!positive_finite(a)) throw DomainError("ExpGamma: shape a must be > 0, got " + num(a));
  if (!positive_finite(s)) throw DomainError("ExpGamma: scale s must be > 0, got " + num(s));
  if (!positive_finite(alpha)) throw DomainError("ExpGamma: alpha must be > 0, got " + num(alpha));
  if (!positive_finite(beta)) throw DomainError("ExpGamma: beta must be > 0, got " + num(beta));
}

void ZeroExpGammaParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("ZeroExpGamma: p must lie in [0, 1], got " + num(p));
  inner.validate();
}

void GenGammaParams::validate() const {
  if (!positive_finite(a)) throw DomainError("GenGamma: shape a must be > 0, got " + num(a));
  if (!positive_finite(s)) throw DomainError("GenGamma: scale s must be > 0, got " + num(s));
  if (!positive_finite(gamma_exp)) {
    throw DomainError("GenGamma: exponent gamma must be > 0, got " + num(gamma_exp));
  }
  if (!(eps >= 0.0 && std::isfinite(eps))) {
    throw DomainError("GenGamma: eps must be >= 0, got " + num(eps));
  }
}

void GaussianParams::validate() const {
  if (!std::isfinite(mu)) throw DomainError("Gaussian: mean must be finite");
  if (!positive_finite(sigma)) throw DomainError("Gaussian: sigma must be > 0, got " + num(sigma));
}

double gamma_pdf(double a, double s, double x) {
  if (!(x > 0.0)) throw DomainError("gamma_pdf: requires x > 0, got " + num(x));
  return std::exp(log_gamma_density(a, s, x));
}

MixedValue zero_gamma_pdf(const ZeroGammaParams& params, double x) {
  params.validate();
  if (!(x >= 0.0)) throw DomainError("zero_gamma_pdf: requires x >= 0, got " + num(x));
  if (x == 0.0) return {params.p, 0.0};
  if (params.p == 1.0) return {0.0, 0.0};
  return {0.0, (1.0 - params.p) * gamma_pdf(params.a, params.s, x)};
}

Moments zero_gamma_moments(const ZeroGammaParams& params) {
  params.validate();
  const double q = 1.0 - params.p;
  const double mean = q * params.a * params.s;
  const double var = q * params.a * params.s * params.s * (1.0 + params.a * params.p);
  return {mean, var};
}

double exp_gamma_pdf(const ExpGammaParams& params, double x) {
  params.validate();
  if (!(x > 0.0)) throw DomainError("exp_gamma_pdf: requires x > 0, got " + num(x));
  const double bs = params.beta * params.s;
  const double l = std::log1p(x / params.alpha);
  const double log_pdf = -std::log(params.alpha) - lgamma_fn(params.a) - params.a * std::log(bs) +
                         (params.a - 1.0) * std::log(l) - (bs + 1.0) / bs * l;
  return std::exp(log_pdf);
}

MixedValue zero_exp_gamma_pdf(const ZeroExpGammaParams& params, double x) {
  params.validate();
  if (!(x >= 0.0)) throw DomainError("zero_exp_gamma_pdf: requires x >= 0, got " + num(x));
  if (x == 0.0) return {params.p, 0.0};
  if (params.p == 1.0) return {0.0, 0.0};
  return {0.0, (1.0 - params.p) * exp_gamma_pdf(params.inner, x)};
}

Moments zero_exp_gamma_moments(const ZeroExpGammaParams& params) {
  params.validate();
  const auto& g = params.inner;
  const double t = g.beta * g.s;
  if (!(t < 0.5)) {
    throw DivergenceError("zero_exp_gamma_moments: beta*s = " + num(t) +
                          " >= 1/2, the second moment of alpha(exp(beta X) - 1) is infinite");
  }
  const double q = 1.0 - params.p;
  // u = E[exp(beta X)] - 1; w = Var[exp(beta X)], both free of cancellation.
  const double u = std::expm1(-g.a * std::log1p(-t));
  const double w = (1.0 + u) * (1.0 + u) * std::expm1(g.a * std::log1p(t * t / (1.0 - 2.0 * t)));
  const double mean = g.alpha * q * u;
  const double var = g.alpha * g.alpha * q * (w + params.p * u * u);
  return {mean, var};
}

double gen_gamma_pdf(const GenGammaParams& params, double x) {
  params.validate();
  if (params.eps != 0.0) throw DomainError("gen_gamma_pdf: defined for eps = 0 only");
  if (!(x > 0.0)) throw DomainError("gen_gamma_pdf: requires x > 0, got " + num(x));
  const double g = params.gamma_exp;
  const double log_pdf = -std::log(g) - lgamma_fn(params.a) - params.a * std::log(params.s) +
                         (params.a / g - 1.0) * std::log(x) - std::pow(x, 1.0 / g) / params.s;
  return std::exp(log_pdf);
}

Moments gen_gamma_moments(const GenGammaParams& params) {
  params.validate();
  if (params.eps != 0.0) throw DomainError("gen_gamma_moments: defined for eps = 0 only");
  const double g = params.gamma_exp;
  const double ls = std::log(params.s);
  const double lr1 = log_gamma_ratio(params.a, g);
  const double lr2 = log_gamma_ratio(params.a, 2.0 * g);
  const double mean = std::exp(g * ls + lr1);
  // s^{2g} Gamma(a+2g)/Gamma(a) (1 - Gamma(a+g)^2 / (Gamma(a) Gamma(a+2g)))
  const double var = -std::exp(2.0 * g * ls + lr2) * std::expm1(2.0 * lr1 - lr2);
  return {mean, var};
}

double eps_deact_moment(const GenGammaParams& params, unsigned n, unsigned order) {
  params.validate();
  if (n == 0) return 1.0;
  const double a = params.a;
  const double s = params.s;
  const double m = params.gamma_exp * static_cast<double>(n);
  if (params.eps == 0.0) return std::exp(m * std::log(s) + log_gamma_ratio(a, m));

  const double z = params.eps / s;
  double regular = 0.0;
  double zk = 1.0;
  for (unsigned k = 0; k <= order; ++k) {
    const double arg = a + m - static_cast<double>(k);
    if (arg <= 0.0 && arg == std::floor(arg)) {
      throw DomainError("eps_deact_moment: Gamma pole at a + gamma*n - k = " + num(arg) +
                        " (a=" + num(a) + ", gamma*n=" + num(m) + ", k=" + std::to_string(k) + ")");
    }
    regular += gen_binomial(m, k) * zk * gamma_ratio(arg, a);
    zk *= z;
  }

  double boundary = 0.0;
  const double lead = a + m;
  const double inv_gamma_neg_m = rgamma_fn(-m);
  if (inv_gamma_neg_m != 0.0 && lead < static_cast<double>(order) + 1.0) {
    double term = 1.0;  // (a)_j / ((a+m+1)_j j!)
    double sum = 0.0;
    for (unsigned j = 0; lead + j < static_cast<double>(order) + 1.0; ++j) {
      sum += term * std::pow(z, static_cast<double>(j));
      term *= (a + j) / ((lead + 1.0 + j) * (j + 1.0));
    }
    boundary = std::pow(z, lead) * gamma_fn(-lead) * inv_gamma_neg_m * sum;
  }
  return std::pow(s, m) * (regular + boundary);
}

Moments eps_deact_moments(const GenGammaParams& params, unsigned order) {
  if (params.eps == 0.0) return gen_gamma_moments(params);
  const double m1 = eps_deact_moment(params, 1, order);
  const double m2 = eps_deact_moment(params, 2, order);
  const double var = m2 - m1 * m1;
  if (!(var > 0.0)) {
    throw NonPositiveVarianceError("eps_deact_moments: truncated series gives variance " + num(var));
  }
  return {m1, var};
}

double gaussian_pdf(const GaussianParams& params, double x) {
  params.validate();
  const double z = (x - params.mu) / params.sigma;
  return std::exp(-0.5 * z * z) / (params.sigma * std::sqrt(2.0 * std::numbers::pi));
}

std::vector<double> sample(const ZeroGammaParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  std::vector<double> out(n);
  detail::fill_chunked(out, seed, true, [&](Rng& rng) {
    if (rng.uniform() < params.p) return 0.0;
    return gamma_variate(rng, params.a, params.s);
  });
  return out;
}

std::vector<double> sample(const ExpGammaParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  std::vector<double> out(n);
  detail::fill_chunked(out, seed, true, [&](Rng& rng) {
    return params.alpha * std::expm1(params.beta * gamma_variate(rng, params.a, params.s));
  });
  return out;
}

std::vector<double> sample(const ZeroExpGammaParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  const auto& g = params.inner;
  std::vector<double> out(n);
  detail::fill_chunked(out, seed, true, [&](Rng& rng) {
    if (rng.uniform() < params.p) return 0.0;
    return g.alpha * std::expm1(g.beta * gamma_variate(rng, g.a, g.s));
  });
  return out;
}

std::vector<double> sample(const GenGammaParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  std::vector<double> out(n);
  detail::fill_chunked(out, seed, true, [&](Rng& rng) {
    return std::pow(gamma_variate(rng, params.a, params.s) + params.eps, params.gamma_exp);
  });
  return out;
}

std::vector<double> sample(const GaussianParams& params, std::size_t n, std::uint64_t seed) {
  params.validate();
  std::vector<double> out(n);
  detail::fill_chunked(out, seed, true,
                       [&](Rng& rng) { return params.mu + params.sigma * rng.normal(); });
  return out;
}

}  // namespace aggstat
