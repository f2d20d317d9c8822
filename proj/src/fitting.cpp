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

#include "aggstat/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "aggstat/errors.hpp"
#include "aggstat/kernels.hpp"
#include "aggstat/numeric.hpp"
#include "aggstat/specfun.hpp"

namespace aggstat {

void ActivationDump::validate() const {
  if (n_images == 0 || n_filters == 0 || n_pixels == 0) {
    throw FormatError("activation dump has an empty dimension");
  }
  if (values.size() != n_images * n_filters * n_pixels) {
    throw FormatError("activation dump holds " + std::to_string(values.size()) + " values, shape needs " +
                      std::to_string(n_images * n_filters * n_pixels));
  }
  if (labels.size() != n_images) throw FormatError("activation dump needs one label per image");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("activation values must be finite and >= 0");
    }
  }
}

std::vector<std::string> ActivationDump::classes() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (seen.insert(l).second) out.push_back(l);
  }
  return out;
}

ActivationDump ActivationDump::select(const std::string& label, bool negate) const {
  ActivationDump out;
  out.n_filters = n_filters;
  out.n_pixels = n_pixels;
  const std::size_t stride = n_filters * n_pixels;
  for (std::size_t i = 0; i < n_images; ++i) {
    if ((labels[i] == label) == negate) continue;
    out.values.insert(out.values.end(), values.begin() + i * stride, values.begin() + (i + 1) * stride);
    out.labels.push_back(labels[i]);
    ++out.n_images;
  }
  return out;
}

std::vector<double> ActivationDump::filter_values(std::size_t filter) const {
  std::vector<double> out;
  out.reserve(n_images * n_pixels);
  for (std::size_t i = 0; i < n_images; ++i) {
    const double* row = values.data() + (i * n_filters + filter) * n_pixels;
    out.insert(out.end(), row, row + n_pixels);
  }
  return out;
}

FitReport fit_zero_gamma(std::span<const double> samples, double zero_threshold, double tol) {
  std::vector<double> pos;
  pos.reserve(samples.size());
  std::size_t n_zero = 0;
  for (double x : samples) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("fit_zero_gamma: samples must be finite and >= 0");
    if (x <= zero_threshold) {
      ++n_zero;
    } else {
      pos.push_back(x);
    }
  }
  if (pos.size() < 10) {
    throw InsufficientDataError("fit_zero_gamma: " + std::to_string(pos.size()) +
                                " positive samples, need at least 10");
  }
  const double n_pos = static_cast<double>(pos.size());
  const double mean = pairwise_sum(pos) / n_pos;
  std::vector<double> work(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) work[i] = (pos[i] - mean) * (pos[i] - mean);
  const double var = pairwise_sum(work) / n_pos;
  for (std::size_t i = 0; i < pos.size(); ++i) work[i] = std::log(pos[i]);
  const double mean_log = pairwise_sum(work) / n_pos;
  const double target = std::log(mean) - mean_log;
  if (!(target > 0.0) || !(var > 0.0)) {
    throw DegenerateError("fit_zero_gamma: positive samples are constant");
  }

  double a = mean * mean / var;
  int iter = 0;
  for (;; ++iter) {
    if (iter >= 100) {
      throw ConvergenceError("fit_zero_gamma: Newton iteration did not converge (a=" +
                             std::to_string(a) + ")");
    }
    const double f = std::log(a) - digamma_fn(a) - target;
    const double df = 1.0 / a - trigamma_fn(a);
    double next = a - f / df;
    if (!(next > 0.0)) next = 0.5 * a;
    const double step = std::abs(next - a);
    a = next;
    if (step <= tol * a) break;
  }

  FitReport rep;
  rep.params = {static_cast<double>(n_zero) / static_cast<double>(samples.size()), a, mean / a};
  rep.n_zero = n_zero;
  rep.n_pos = pos.size();
  rep.iterations = iter + 1;

  const double s = rep.params.s;
  const double ll_pos = (a - 1.0) * n_pos * mean_log - n_pos * mean / s -
                        n_pos * (lgamma_fn(a) + a * std::log(s));
  double ll = ll_pos;
  if (n_zero > 0) ll += static_cast<double>(n_zero) * std::log(rep.params.p);
  if (rep.params.p < 1.0) ll += n_pos * std::log1p(-rep.params.p);
  rep.log_likelihood = ll;

  std::sort(pos.begin(), pos.end());
  double d = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const double cdf = reg_lower_incomplete_gamma(a, pos[i] / s);
    d = std::max({d, cdf - static_cast<double>(i) / n_pos, static_cast<double>(i + 1) / n_pos - cdf});
  }
  rep.ks_stat = d;
  return rep;
}

PixelStats estimate_pixel_stats(const ActivationDump& dump, std::size_t filter) {
  if (dump.n_images < 2) throw InsufficientDataError("estimate_pixel_stats: need at least 2 images");
  if (filter >= dump.n_filters) throw DomainError("estimate_pixel_stats: filter index out of range");
  const std::size_t r = dump.n_pixels;
  const std::size_t dim = 2 * r + 1;
  std::vector<double> rows(dump.n_images * dim);
  for (std::size_t i = 0; i < dump.n_images; ++i) {
    double* row = rows.data() + i * dim;
    row[0] = 1.0;
    for (std::size_t k = 0; k < r; ++k) {
      const double w = dump.at(i, filter, k);
      row[1 + k] = w;
      row[1 + r + k] = w * w;
    }
  }
  const std::vector<double> g = kernels::gram_mean(rows, dump.n_images, dim);
  PixelStats st;
  st.n_pixels = r;
  st.m1.resize(r);
  st.e11.resize(r * r);
  st.e12.resize(r * r);
  st.e22.resize(r * r);
  for (std::size_t i = 0; i < r; ++i) {
    st.m1[i] = g[1 + i];
    for (std::size_t j = 0; j < r; ++j) {
      st.e11[i * r + j] = g[(1 + i) * dim + 1 + j];
      st.e12[i * r + j] = g[(1 + i) * dim + 1 + r + j];
      st.e22[i * r + j] = g[(1 + r + i) * dim + 1 + r + j];
    }
  }
  return st;
}

FilterSums estimate_filter_sums(const ActivationDump& dump) {
  if (dump.n_images < 2) throw InsufficientDataError("estimate_filter_sums: need at least 2 images");
  const std::size_t nf = dump.n_filters;
  const std::size_t r = dump.n_pixels;
  const std::size_t dim = 2 * nf + 1;
  std::vector<double> rows(dump.n_images * dim);
  for (std::size_t i = 0; i < dump.n_images; ++i) {
    double* row = rows.data() + i * dim;
    row[0] = 1.0;
    for (std::size_t f = 0; f < nf; ++f) {
      double t1 = 0.0;
      double t2 = 0.0;
      for (std::size_t k = 0; k < r; ++k) {
        const double w = dump.at(i, f, k);
        t1 += w;
        t2 += w * w;
      }
      row[1 + f] = t1;
      row[1 + nf + f] = t2;
    }
  }
  const std::vector<double> g = kernels::gram_mean(rows, dump.n_images, dim);
  FilterSums s;
  s.n_filters = nf;
  s.t1.resize(nf);
  s.t2.resize(nf);
  s.s11.resize(nf * nf);
  s.s12.resize(nf * nf);
  s.s22.resize(nf * nf);
  for (std::size_t f = 0; f < nf; ++f) {
    s.t1[f] = g[1 + f];
    s.t2[f] = g[1 + nf + f];
    for (std::size_t h = 0; h < nf; ++h) {
      s.s11[f * nf + h] = g[(1 + f) * dim + 1 + h];
      s.s12[f * nf + h] = g[(1 + f) * dim + 1 + nf + h];
      s.s22[f * nf + h] = g[(1 + nf + f) * dim + 1 + nf + h];
    }
  }
  return s;
}

BlockStats estimate_block_stats(const ActivationDump& dump) {
  BlockStats st;
  st.r_pixels = dump.n_pixels;
  st.filters.reserve(dump.n_filters);
  for (std::size_t f = 0; f < dump.n_filters; ++f) st.filters.push_back(estimate_pixel_stats(dump, f));
  st.sums = estimate_filter_sums(dump);
  return st;
}

Moments sample_moments(std::span<const double> samples) {
  if (samples.size() < 2) throw InsufficientDataError("sample moments need at least 2 samples");
  const double n = static_cast<double>(samples.size());
  // Shifting by the first sample keeps constant inputs exact.
  const double x0 = samples[0];
  std::vector<double> dev(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) dev[i] = samples[i] - x0;
  const double shift = pairwise_sum(dev) / n;
  for (std::size_t i = 0; i < samples.size(); ++i) dev[i] = (dev[i] - shift) * (dev[i] - shift);
  return {x0 + shift, pairwise_sum(dev) / (n - 1.0)};
}

GaussianParams fit_gaussian(std::span<const double> samples) {
  const Moments m = sample_moments(samples);
  if (!(m.variance > 0.0)) throw DegenerateError("fit_gaussian: all samples are equal");
  return {m.mean, std::sqrt(m.variance)};
}

double observed_kl(std::span<const double> pos, std::span<const double> neg) {
  return kl_gaussian({fit_gaussian(pos), fit_gaussian(neg)});
}

}  // namespace aggstat
