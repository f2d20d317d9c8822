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

#include "aggstat/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "aggstat/errors.hpp"
#include "aggstat/numeric.hpp"

namespace aggstat {

void SyntheticSpec::validate() const {
  if (filters.empty()) throw DomainError("synthetic spec needs at least one filter");
  for (const auto& f : filters) f.validate();
  if (!(rho_pix >= 0.0 && rho_pix < 1.0)) throw DomainError("rho_pix must lie in [0, 1)");
  if (!(rho_filt >= 0.0 && rho_filt < 1.0)) throw DomainError("rho_filt must lie in [0, 1)");
  if (r_pixels == 0) throw DomainError("r_pixels must be >= 1");
}

kernels::CopulaPlan make_copula_plan(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t r = spec.r_pixels;
  const std::size_t n = spec.filters.size() * r;
  auto corr = [&](std::size_t i, std::size_t j) {
    if (i == j) return 1.0;
    return i / r == j / r ? spec.rho_pix : spec.rho_filt;
  };
  kernels::CopulaPlan plan;
  plan.n_units = n;
  plan.chol.assign(n * (n + 1) / 2, 0.0);
  auto L = [&](std::size_t i, std::size_t j) -> double& { return plan.chol[i * (i + 1) / 2 + j]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = corr(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (!(s > 1e-12)) {
          throw CorrelationError("latent correlation matrix is not positive definite (rho_pix=" +
                                 std::to_string(spec.rho_pix) +
                                 ", rho_filt=" + std::to_string(spec.rho_filt) + ")");
        }
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
  plan.marginal.reserve(n);
  for (std::size_t u = 0; u < n; ++u) plan.marginal.push_back(spec.filters[u / r]);
  return plan;
}

ActivationDump generate(const SyntheticSpec& spec, std::size_t first_image) {
  const kernels::CopulaPlan plan = make_copula_plan(spec);
  ActivationDump dump;
  dump.n_images = spec.n_images;
  dump.n_filters = spec.filters.size();
  dump.n_pixels = spec.r_pixels;
  dump.values.resize(spec.n_images * plan.n_units);
  dump.labels.assign(spec.n_images, spec.label);
  kernels::copula_fill(plan, spec.seed, first_image, spec.n_images, dump.values);
  return dump;
}

ForwardTrace forward(const ActivationDump& dump, const ActivationConfig& cfg, const FCWeights& w) {
  cfg.validate();
  w.validate();
  if (w.weights.size() != dump.n_filters) {
    throw DomainError("forward: " + std::to_string(w.weights.size()) + " weights for " +
                      std::to_string(dump.n_filters) + " filters");
  }
  if (dump.n_pixels != cfg.r_pixels) {
    throw DomainError("forward: dump has R = " + std::to_string(dump.n_pixels) + ", config has R = " +
                      std::to_string(cfg.r_pixels));
  }
  ForwardTrace t;
  t.n_images = dump.n_images;
  t.n_filters = dump.n_filters;
  t.n_pixels = dump.n_pixels;
  const std::size_t n = dump.n_images;
  t.activated.resize(dump.values.size());
  t.gap.resize(n * t.n_filters);
  t.deactivated.resize(n * t.n_filters);
  t.output.resize(n);
  kernels::ForwardParams fp;
  fp.alpha = cfg.alpha;
  fp.beta = cfg.beta;
  fp.identity = cfg.activation == Activation::kIdentity;
  fp.gamma_exp = cfg.gamma_exp;
  fp.eps = cfg.eps;
  fp.n_filters = t.n_filters;
  fp.r_pixels = t.n_pixels;
  fp.weights = w.weights;
  if (!kernels::forward(fp, dump.values, n, t.activated, t.gap, t.deactivated, t.output)) {
    throw OverflowError("forward: exponential activation overflowed (beta * activation too large)");
  }
  if (n >= 2) {
    for (std::size_t f = 0; f < t.n_filters; ++f) t.conv.push_back(sample_moments(dump.filter_values(f)));
  }
  return t;
}

Histogram histogram(std::span<const double> samples, std::size_t max_bins) {
  Histogram h;
  if (samples.empty()) return h;
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  const double lo = v.front();
  const double hi = v.back();
  h.lo = lo;
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return k + 1 < v.size() ? v[k] + frac * (v[k + 1] - v[k]) : v[k];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  std::size_t bins = 1;
  if (hi > lo) {
    double width = 2.0 * iqr / std::cbrt(static_cast<double>(v.size()));
    if (!(width > 0.0)) width = (hi - lo) / std::max(1.0, std::ceil(std::sqrt(static_cast<double>(v.size()))));
    bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    bins = std::clamp<std::size_t>(bins, 1, max_bins);
    h.width = (hi - lo) / static_cast<double>(bins);
  }
  h.counts.assign(bins, 0);
  for (double x : v) {
    auto b = hi > lo ? static_cast<std::size_t>((x - lo) / h.width) : 0;
    h.counts[std::min(b, bins - 1)] += 1;
  }
  return h;
}

CovMatrix sample_cov(std::span<const double> data, std::size_t n_rows, std::size_t dim) {
  if (n_rows < 2) throw InsufficientDataError("sample_cov: need at least 2 rows");
  // Centre on the first row, then on the mean of the shifted columns.
  std::vector<double> shifted(data.begin(), data.end());
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < dim; ++j) shifted[i * dim + j] -= data[j];
  }
  std::vector<double> mean(dim);
  std::vector<double> col(n_rows);
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < n_rows; ++i) col[i] = shifted[i * dim + j];
    mean[j] = pairwise_sum(col) / static_cast<double>(n_rows);
  }
  CovMatrix c(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      for (std::size_t i = 0; i < n_rows; ++i) {
        col[i] = (shifted[i * dim + a] - mean[a]) * (shifted[i * dim + b] - mean[b]);
      }
      c.set_sym(a, b, pairwise_sum(col) / static_cast<double>(n_rows - 1));
    }
  }
  return c;
}

Observation observe(const ForwardTrace& trace) {
  if (trace.n_images < 2) throw InsufficientDataError("observe: need at least 2 images");
  const std::size_t n = trace.n_images;
  const std::size_t nf = trace.n_filters;
  const std::size_t r = trace.n_pixels;
  Observation o;
  o.conv = trace.conv;
  std::vector<double> col;
  for (std::size_t f = 0; f < nf; ++f) {
    col.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = trace.activated.data() + (i * nf + f) * r;
      col.insert(col.end(), row, row + r);
    }
    o.activated.push_back(sample_moments(col));
  }
  o.gap_cov = sample_cov(trace.gap, n, nf);
  o.deact_cov = sample_cov(trace.deactivated, n, nf);
  for (std::size_t f = 0; f < nf; ++f) {
    col.resize(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = trace.gap[i * nf + f];
    o.gap.push_back({pairwise_sum(col) / static_cast<double>(n), o.gap_cov(f, f)});
    o.gap_hist.push_back(histogram(col));
    for (std::size_t i = 0; i < n; ++i) col[i] = trace.deactivated[i * nf + f];
    o.deactivated.push_back({pairwise_sum(col) / static_cast<double>(n), o.deact_cov(f, f)});
  }
  o.output = sample_moments(trace.output);
  o.output_hist = histogram(trace.output);
  return o;
}

}  // namespace aggstat
