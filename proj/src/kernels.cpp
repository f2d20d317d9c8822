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

#include "aggstat/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "aggstat/errors.hpp"
#include "aggstat/numeric.hpp"
#include "aggstat/rng.hpp"
#include "aggstat/specfun.hpp"

namespace aggstat::kernels {
namespace {

constexpr std::size_t kGramBlock = 512;

void check_gram_args(std::span<const double> data, std::size_t n_rows, std::size_t dim) {
  if (data.size() != n_rows * dim) throw DomainError("gram_mean: data size does not match shape");
  if (n_rows == 0) throw InsufficientDataError("gram_mean: no rows");
}

// Upper triangle of sum_r v_r v_r^T over rows [lo, hi), mirrored on return.
void gram_block(const double* data, std::size_t lo, std::size_t hi, std::size_t dim, double* acc) {
  std::fill(acc, acc + dim * dim, 0.0);
  for (std::size_t r = lo; r < hi; ++r) {
    const double* v = data + r * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      const double vi = v[i];
      double* row = acc + i * dim;
      for (std::size_t j = i; j < dim; ++j) row[j] += vi * v[j];
    }
  }
}

std::vector<double> mirror_and_scale(std::vector<double> upper, std::size_t dim, double scale) {
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      const double v = upper[i * dim + j] * scale;
      upper[i * dim + j] = v;
      upper[j * dim + i] = v;
    }
  }
  return upper;
}

void copula_image(const CopulaPlan& plan, std::uint64_t seed, std::size_t image, double* out,
                  std::vector<double>& e) {
  const std::size_t n = plan.n_units;
  Rng rng = Rng::substream(seed, image);
  for (std::size_t i = 0; i < n; ++i) e[i] = rng.normal();
  const double* row = plan.chol.data();
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j <= i; ++j) z += row[j] * e[j];
    row += i + 1;
    out[i] = zero_gamma_quantile(plan.marginal[i], normal_cdf(z), normal_ccdf(z));
  }
}

void check_copula_args(const CopulaPlan& plan, std::size_t n_images, std::span<double> out) {
  if (plan.chol.size() != plan.n_units * (plan.n_units + 1) / 2 ||
      plan.marginal.size() != plan.n_units) {
    throw DomainError("copula_fill: inconsistent plan");
  }
  if (out.size() != n_images * plan.n_units) throw DomainError("copula_fill: output size mismatch");
}

bool forward_image(const ForwardParams& fp, const double* conv, double* act, double* gap,
                   double* deact, double* output) {
  const std::size_t r = fp.r_pixels;
  bool finite = true;
  double o = 0.0;
  for (std::size_t f = 0; f < fp.n_filters; ++f) {
    double sum = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      const double x = conv[f * r + k];
      const double y = fp.identity ? x : fp.alpha * std::expm1(fp.beta * x);
      finite = finite && std::isfinite(y);
      act[f * r + k] = y;
      sum += y;
    }
    const double g = sum / static_cast<double>(r);
    gap[f] = g;
    const double base = g + fp.eps;
    deact[f] = base > 0.0 ? std::pow(base, fp.gamma_exp) : 0.0;
    o += fp.weights[f] * deact[f];
  }
  *output = o;
  return finite;
}

void check_forward_args(const ForwardParams& fp, std::span<const double> conv, std::size_t n,
                        std::span<double> act, std::span<double> gap, std::span<double> deact,
                        std::span<double> output) {
  const std::size_t units = fp.n_filters * fp.r_pixels;
  if (fp.weights.size() != fp.n_filters) throw DomainError("forward: weight count mismatch");
  if (conv.size() != n * units || act.size() != n * units || gap.size() != n * fp.n_filters ||
      deact.size() != n * fp.n_filters || output.size() != n) {
    throw DomainError("forward: buffer size mismatch");
  }
}

}  // namespace

double zero_gamma_quantile(const ZeroGammaParams& params, double u, double one_minus_u) {
  if (u <= params.p || params.p >= 1.0) return 0.0;
  const double q = 1.0 - params.p;
  const double pp = std::clamp((u - params.p) / q, 0.0, 1.0);
  const double qq = std::clamp(one_minus_u / q, 0.0, 1.0);
  return params.s * inverse_reg_incomplete_gamma(params.a, pp, qq);
}

std::vector<double> gram_mean(std::span<const double> data, std::size_t n_rows, std::size_t dim) {
  check_gram_args(data, n_rows, dim);
  const std::size_t n_blocks = (n_rows + kGramBlock - 1) / kGramBlock;
  const std::size_t d2 = dim * dim;
  std::vector<double> partial(n_blocks * d2);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(n_blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kGramBlock;
    gram_block(data.data(), lo, std::min(n_rows, lo + kGramBlock), dim, partial.data() + b * d2);
  }
  PairwiseAccumulator acc(d2);
  for (std::size_t b = 0; b < n_blocks; ++b) acc.push({partial.data() + b * d2, d2});
  return mirror_and_scale(acc.total(), dim, 1.0 / static_cast<double>(n_rows));
}

void copula_fill(const CopulaPlan& plan, std::uint64_t seed, std::size_t first_image,
                 std::size_t n_images, std::span<double> out) {
  check_copula_args(plan, n_images, out);
#pragma omp parallel
  {
    std::vector<double> e(plan.n_units);
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_images); ++i) {
      copula_image(plan, seed, first_image + static_cast<std::size_t>(i),
                   out.data() + static_cast<std::size_t>(i) * plan.n_units, e);
    }
  }
}

bool forward(const ForwardParams& fp, std::span<const double> conv, std::size_t n_images,
             std::span<double> activated, std::span<double> gap, std::span<double> deact,
             std::span<double> output) {
  check_forward_args(fp, conv, n_images, activated, gap, deact, output);
  const std::size_t units = fp.n_filters * fp.r_pixels;
  const std::size_t nf = fp.n_filters;
  bool finite = true;
#pragma omp parallel for schedule(static) reduction(&& : finite)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_images); ++i) {
    const auto n = static_cast<std::size_t>(i);
    finite = forward_image(fp, conv.data() + n * units, activated.data() + n * units,
                           gap.data() + n * nf, deact.data() + n * nf, output.data() + n) &&
             finite;
  }
  return finite;
}

namespace reference {

std::vector<double> gram_mean(std::span<const double> data, std::size_t n_rows, std::size_t dim) {
  check_gram_args(data, n_rows, dim);
  std::vector<double> acc(dim * dim);
  gram_block(data.data(), 0, n_rows, dim, acc.data());
  return mirror_and_scale(std::move(acc), dim, 1.0 / static_cast<double>(n_rows));
}

void copula_fill(const CopulaPlan& plan, std::uint64_t seed, std::size_t first_image,
                 std::size_t n_images, std::span<double> out) {
  check_copula_args(plan, n_images, out);
  std::vector<double> e(plan.n_units);
  for (std::size_t i = 0; i < n_images; ++i) {
    copula_image(plan, seed, first_image + i, out.data() + i * plan.n_units, e);
  }
}

bool forward(const ForwardParams& fp, std::span<const double> conv, std::size_t n_images,
             std::span<double> activated, std::span<double> gap, std::span<double> deact,
             std::span<double> output) {
  check_forward_args(fp, conv, n_images, activated, gap, deact, output);
  const std::size_t units = fp.n_filters * fp.r_pixels;
  const std::size_t nf = fp.n_filters;
  bool finite = true;
  for (std::size_t n = 0; n < n_images; ++n) {
    finite = forward_image(fp, conv.data() + n * units, activated.data() + n * units,
                           gap.data() + n * nf, deact.data() + n * nf, output.data() + n) &&
             finite;
  }
  return finite;
}

}  // namespace reference
}  // namespace aggstat::kernels
