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

#include <gtest/gtest.h>
#include <omp.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "aggstat/distributions.hpp"
#include "aggstat/errors.hpp"
#include "oracles.hpp"

namespace {

using namespace aggstat;

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

double boost_gamma_pdf(double a, double s, double x) {
  if (x <= 0.0) return a < 1.0 ? std::numeric_limits<double>::infinity() : (a == 1.0 ? 1.0 / s : 0.0);
  return std::exp((a - 1.0) * std::log(x) - x / s - boost::math::lgamma(a) - a * std::log(s));
}

// ---- zero-Gamma ----

TEST(ZeroGamma, PdfExamples) {
  EXPECT_NEAR(zero_gamma_pdf({0.0, 1.0, 1.0}, 0.5).density, std::exp(-0.5), 1e-15);
  EXPECT_NEAR(zero_gamma_pdf({0.3, 2.0, 1.0}, 1.0).density, 0.7 * std::exp(-1.0), 1e-15);
  EXPECT_EQ(zero_gamma_pdf({1.0, 2.0, 1.0}, 0.7).density, 0.0);
  const MixedValue at0 = zero_gamma_pdf({0.3, 2.0, 1.0}, 0.0);
  EXPECT_EQ(at0.point_mass, 0.3);
  EXPECT_EQ(at0.density, 0.0);
  EXPECT_THROW(zero_gamma_pdf({0.3, 2.0, 1.0}, -1.0), DomainError);
}

TEST(ZeroGamma, ContinuousMassIsOneMinusP) {
  const ZeroGammaParams zg{0.3, 2.0, 1.0};
  const double hi = oracle::gamma_quantile(2.0, 1.0, 1.0 - 1e-12);
  const double mass = oracle::integrate([&](double x) { return zero_gamma_pdf(zg, x).density; }, 0.0, hi);
  EXPECT_NEAR(mass, 0.7, 1e-8);
}

TEST(ZeroGamma, MomentExamples) {
  Moments m = zero_gamma_moments({0.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(m.mean, 6.0);
  EXPECT_DOUBLE_EQ(m.variance, 12.0);
  m = zero_gamma_moments({1.0, 3.0, 2.0});
  EXPECT_EQ(m.mean, 0.0);
  EXPECT_EQ(m.variance, 0.0);
  m = zero_gamma_moments({0.5, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(m.mean, 1.0);
  EXPECT_DOUBLE_EQ(m.variance, 2.0);
}

TEST(ZeroGamma, MonteCarloMoments) {
  const auto xs = sample(ZeroGammaParams{0.5, 2.0, 1.0}, 10'000'000, 101);
  oracle::MomentAccumulator acc;
  acc.xs = xs;
  const auto r = acc.result();
  EXPECT_LE(rel(r.mean, 1.0), 0.005);
  EXPECT_LE(rel(r.var, 2.0), 0.005);
}

TEST(ZeroGamma, ValidatesParams) {
  EXPECT_THROW(zero_gamma_moments({1.5, 1.0, 1.0}), DomainError);
  EXPECT_THROW(zero_gamma_moments({0.5, 0.0, 1.0}), DomainError);
  EXPECT_THROW(zero_gamma_moments({0.5, 1.0, -1.0}), DomainError);
}

// ---- exp-Gamma ----

TEST(ExpGamma, PdfExample) {
  EXPECT_NEAR(exp_gamma_pdf({1.0, 1.0, 1.0, 0.5}, 1.0), 0.25, 1e-15);
  // Change of variables: f_Y(y) = f_X(x(y)) |dx/dy| with x = ln(1 + y/alpha)/beta.
  const ExpGammaParams eg{2.3, 0.4, 3.0, 0.7};
  for (double y : {0.01, 0.3, 2.0, 15.0}) {
    const double x = std::log1p(y / eg.alpha) / eg.beta;
    const double jac = 1.0 / (eg.beta * (eg.alpha + y));
    EXPECT_LE(rel(exp_gamma_pdf(eg, y), boost_gamma_pdf(eg.a, eg.s, x) * jac), 1e-12);
  }
  EXPECT_THROW(exp_gamma_pdf(eg, 0.0), DomainError);
}

TEST(ExpGamma, Normalizes) {
  for (const ExpGammaParams& eg : {ExpGammaParams{1.0, 1.0, 1.0, 0.5}, ExpGammaParams{2.0, 0.3, 1.0, 0.5},
                                   ExpGammaParams{0.6, 1.5, 4.0, 0.2}}) {
    const double total = oracle::integrate_to_inf([&](double y) { return exp_gamma_pdf(eg, y); });
    EXPECT_NEAR(total, 1.0, 1e-8);
  }
}

TEST(ExpGamma, KolmogorovSmirnovAgainstSamples) {
  const ExpGammaParams eg{2.0, 0.3, 1.0, 0.5};
  auto g = [&](double x) { return eg.alpha * std::expm1(eg.beta * x); };
  const oracle::QuadratureCdf cdf([&](double y) { return y > 0 ? exp_gamma_pdf(eg, y) : 0.0; }, 0.0,
                                  oracle::transformed_gamma_grid(eg.a, eg.s, 20000, g));
  ASSERT_LT(cdf.max_step(), 2e-4);
  const double d = oracle::ks_statistic(sample(eg, 1'000'000, 202), cdf);
  EXPECT_LT(d + cdf.max_step(), 0.002);
}

TEST(ZeroExpGamma, MomentExamples) {
  // The beta*s = 1/2 example has a finite mean (1) but no variance; the single
  // moments contract rejects it.
  EXPECT_THROW(zero_exp_gamma_moments({0.0, {1.0, 1.0, 1.0, 0.5}}), DivergenceError);
  const Moments near = zero_exp_gamma_moments({0.0, {1.0, 1.0, 1.0, 0.49}});
  EXPECT_LE(rel(near.mean, 1.0 / 0.51 - 1.0), 1e-14);

  const Moments m = zero_exp_gamma_moments({1.0, {2.0, 0.3, 1.0, 0.5}});
  EXPECT_EQ(m.mean, 0.0);
  EXPECT_EQ(m.variance, 0.0);
  const MixedValue at0 = zero_exp_gamma_pdf({0.4, {2.0, 0.3, 1.0, 0.5}}, 0.0);
  EXPECT_EQ(at0.point_mass, 0.4);
}

TEST(ZeroExpGamma, MatchesDirectFormula) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> up(0.0, 0.9), ua(0.5, 5.0), ubs(0.05, 0.45), ual(0.5, 8.0);
  for (int i = 0; i < 200; ++i) {
    const double p = up(gen), a = ua(gen), bs = ubs(gen), alpha = ual(gen);
    const double s = 1.0, beta = bs;
    const double c1 = std::pow(1.0 - bs, -a), c2 = std::pow(1.0 - 2.0 * bs, -a);
    const double mean = alpha * (1.0 - p) * (c1 - 1.0);
    const double var = alpha * alpha * (1.0 - p) * (c2 - (1.0 - p) * c1 * c1 - 2.0 * p * c1 + p);
    const Moments m = zero_exp_gamma_moments({p, {a, s, alpha, beta}});
    EXPECT_LE(rel(m.mean, mean), 1e-12);
    EXPECT_LE(rel(m.variance, var), 1e-9);
  }
}

TEST(ZeroExpGamma, QuadratureMoments) {
  for (const ZeroExpGammaParams& z : {ZeroExpGammaParams{0.3, {2.0, 0.3, 1.0, 0.5}},
                                      ZeroExpGammaParams{0.0, {0.7, 1.2, 2.0, 0.1}}}) {
    auto pdf = [&](double y) { return zero_exp_gamma_pdf(z, y).density; };
    const double m1 = oracle::integrate_to_inf([&](double y) { return y * pdf(y); });
    const double m2 = oracle::integrate_to_inf([&](double y) { return y * y * pdf(y); });
    const Moments m = zero_exp_gamma_moments(z);
    EXPECT_LE(rel(m.mean, m1), 1e-8);
    EXPECT_LE(rel(m.variance, m2 - m1 * m1), 1e-8);
  }
}

TEST(ZeroExpGamma, MonteCarloMoments) {
  const ZeroExpGammaParams z{0.3, {2.0, 0.3, 1.0, 0.5}};
  oracle::MomentAccumulator acc;
  acc.xs = sample(z, 10'000'000, 303);
  const auto r = acc.result();
  const Moments m = zero_exp_gamma_moments(z);
  EXPECT_LE(rel(r.mean, m.mean), 0.005);
  EXPECT_LE(rel(r.var, m.variance), 0.005);
}

TEST(ZeroExpGamma, SmallBetaLimit) {
  const ZeroExpGammaParams z{0.0, {2.0, 0.7, 3.0, 1e-6}};
  const double first_order = z.inner.alpha * z.inner.beta * z.inner.a * z.inner.s;
  EXPECT_LE(rel(zero_exp_gamma_moments(z).mean, first_order), 1e-3);
  // Variance has the matching limit alpha^2 beta^2 a s^2 without cancellation.
  const double var0 = std::pow(z.inner.alpha * z.inner.beta * z.inner.s, 2) * z.inner.a;
  EXPECT_LE(rel(zero_exp_gamma_moments(z).variance, var0), 1e-3);
}

// ---- generalized Gamma ----

TEST(GenGamma, GammaOneIsGammaPdf) {
  const GenGammaParams gg{2.7, 0.6, 1.0, 0.0};
  for (int i = 1; i <= 1000; ++i) {
    const double x = 0.01 * i;
    EXPECT_LE(rel(gen_gamma_pdf(gg, x), boost_gamma_pdf(2.7, 0.6, x)), 1e-12) << x;
  }
}

TEST(GenGamma, Normalizes) {
  const GenGammaParams gg{2.0, 0.5, 0.8, 0.0};
  EXPECT_NEAR(oracle::integrate_to_inf([&](double x) { return gen_gamma_pdf(gg, x); }), 1.0, 1e-8);
  const GenGammaParams small{0.6, 1.4, 0.3, 0.0};
  EXPECT_NEAR(oracle::integrate_to_inf([&](double x) { return gen_gamma_pdf(small, x); }), 1.0, 1e-8);
}

TEST(GenGamma, KolmogorovSmirnovAgainstSamples) {
  const GenGammaParams gg{2.0, 0.5, 0.8, 0.0};
  const oracle::QuadratureCdf cdf([&](double x) { return x > 0 ? gen_gamma_pdf(gg, x) : 0.0; }, 0.0,
                                  oracle::transformed_gamma_grid(2.0, 0.5, 20000,
                                                                 [](double x) { return std::pow(x, 0.8); }));
  const double d = oracle::ks_statistic(sample(gg, 1'000'000, 404), cdf);
  EXPECT_LT(d + cdf.max_step(), 0.002);
}

TEST(GenGamma, MomentExamples) {
  Moments m = gen_gamma_moments({3.0, 2.0, 1.0, 0.0});
  EXPECT_LE(rel(m.mean, 6.0), 1e-14);
  EXPECT_LE(rel(m.variance, 12.0), 1e-13);
  m = gen_gamma_moments({2.0, 0.5, 0.5, 0.0});
  EXPECT_LE(rel(m.mean, 0.93998560298662518841), 1e-14);
  EXPECT_THROW(gen_gamma_moments({2.0, 0.5, 0.5, 0.1}), DomainError);
}

TEST(GenGamma, QuadratureAndMonteCarloMoments) {
  const GenGammaParams gg{2.0, 0.5, 0.8, 0.0};
  const Moments m = gen_gamma_moments(gg);
  const double q1 = oracle::integrate_to_inf([&](double x) { return x * gen_gamma_pdf(gg, x); });
  const double q2 = oracle::integrate_to_inf([&](double x) { return x * x * gen_gamma_pdf(gg, x); });
  EXPECT_LE(rel(m.mean, q1), 1e-8);
  EXPECT_LE(rel(m.variance, q2 - q1 * q1), 1e-8);
  oracle::MomentAccumulator acc;
  acc.xs = sample(gg, 10'000'000, 505);
  const auto r = acc.result();
  EXPECT_LE(rel(r.mean, m.mean), 0.005);
  EXPECT_LE(rel(r.var, m.variance), 0.005);
}

// ---- eps-shifted deactivation moments ----

TEST(EpsDeact, ZeroEpsCollapsesToClosedForm) {
  const GenGammaParams gg{2.0, 0.5, 0.8, 0.0};
  for (unsigned order : {0u, 1u, 3u, 6u}) {
    EXPECT_LE(rel(eps_deact_moment(gg, 1, order), gen_gamma_moments(gg).mean), 1e-14);
  }
}

TEST(EpsDeact, HighPrecisionReference) {
  // E[(X + eps)^(gamma n)] by 40-digit quadrature.
  EXPECT_LE(rel(eps_deact_moment({2.0, 0.5, 0.8, 1e-3}, 1), 0.96374679657124205407), 1e-10);
  EXPECT_LE(rel(eps_deact_moment({2.0, 0.5, 0.8, 1e-3}, 2), 1.2276702810603715366), 1e-10);
  EXPECT_LE(rel(eps_deact_moment({0.7, 1.3, 0.6, 0.01}, 1), 0.81986060522768662744), 1e-7);
  EXPECT_LE(rel(eps_deact_moment({0.7, 1.3, 0.6, 0.01}, 2), 1.0255810244692973406), 1e-7);
}

TEST(EpsDeact, QuadratureOracleOnRandomSets) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> ua(0.5, 5.0), us(0.1, 2.0), ug(0.2, 1.0), ue(0.0, 0.01);
  for (int i = 0; i < 100; ++i) {
    const double a = ua(gen), s = us(gen), g = ug(gen), eps = ue(gen) * s;
    const GenGammaParams gg{a, s, g, eps};
    for (unsigned n : {1u, 2u}) {
      double got;
      try {
        got = eps_deact_moment(gg, n);
      } catch (const DomainError&) {
        continue;  // a + gamma n hit an integer within the retained orders
      }
      const double want = oracle::integrate_to_inf(
          [&](double x) {
            if (x <= 0.0) return 0.0;
            return std::exp(g * n * std::log(x + eps) + (a - 1.0) * std::log(x) - x / s - boost::math::lgamma(a) -
                            a * std::log(s));
          });
      EXPECT_LE(rel(got, want), 1e-6) << "a=" << a << " s=" << s << " g=" << g << " eps=" << eps;
    }
  }
}

TEST(EpsDeact, MonteCarloExamples) {
  const GenGammaParams gg{2.0, 0.5, 0.8, 1e-3};
  oracle::MomentAccumulator acc;
  acc.xs = sample(gg, 10'000'000, 606);
  const auto r = acc.result();
  const Moments m = eps_deact_moments(gg);
  EXPECT_LE(rel(r.mean, m.mean), 0.001);
  EXPECT_LE(rel(r.var, m.variance), 0.005);
}

TEST(EpsDeact, PoleIsDomainError) {
  // a + gamma = 1 makes Gamma(a + gamma - 1) a pole for the k = 1 term.
  EXPECT_THROW(eps_deact_moment({0.2, 1.0, 0.8, 1e-3}, 1), DomainError);
}

// ---- Gaussian ----

TEST(Gaussian, Pdf) {
  EXPECT_NEAR(gaussian_pdf({0.0, 1.0}, 0.0), 0.3989422804014327, 1e-16);
  EXPECT_EQ(gaussian_pdf({1.5, 0.7}, 1.5 + 0.3), gaussian_pdf({1.5, 0.7}, 1.5 - 0.3));
  const double total = oracle::integrate([](double x) { return gaussian_pdf({1.5, 0.7}, x); }, -20.0, 20.0);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_THROW(gaussian_pdf({0.0, 0.0}, 1.0), DomainError);
}

// ---- sampling ----

TEST(Sampling, GammaMeanLawOfLargeNumbers) {
  const std::size_t n = 10'000'000;
  oracle::MomentAccumulator acc;
  acc.xs = sample(ZeroGammaParams{0.0, 2.0, 0.3}, n, 707);
  const auto r = acc.result();
  const double sd = std::sqrt(2.0) * 0.3;
  EXPECT_NEAR(r.mean, 0.6, 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST(Sampling, DeterministicForSeed) {
  const ZeroGammaParams zg{0.4, 0.7, 1.1};
  EXPECT_EQ(sample(zg, 200'000, 9), sample(zg, 200'000, 9));
  EXPECT_NE(sample(zg, 1000, 9), sample(zg, 1000, 10));
}

TEST(Sampling, IndependentOfThreadCount) {
  const GenGammaParams gg{1.3, 0.8, 0.6, 0.01};
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = sample(gg, 300'000, 77);
  omp_set_num_threads(4);
  const auto four = sample(gg, 300'000, 77);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, four);
}

TEST(Sampling, ZeroFraction) {
  const auto xs = sample(ZeroGammaParams{0.4, 2.0, 1.0}, 1'000'000, 808);
  std::size_t zeros = 0;
  for (double x : xs) zeros += x == 0.0;
  EXPECT_NEAR(static_cast<double>(zeros) / 1e6, 0.4, 0.002);
}

TEST(Sampling, SmallShapeGammaQuantiles) {
  // Marsaglia-Tsang with the shape boost for a < 1, checked against Boost's CDF.
  const double a = 0.3, s = 2.0;
  const auto xs = sample(ZeroGammaParams{0.0, a, s}, 1'000'000, 909);
  const double d = oracle::ks_statistic(xs, [&](double x) { return boost::math::gamma_p(a, x / s); });
  EXPECT_LT(d, 0.002);
}

}  // namespace
