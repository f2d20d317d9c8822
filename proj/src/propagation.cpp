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

#include "aggstat/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>

#include "aggstat/errors.hpp"
#include "aggstat/numeric.hpp"

namespace aggstat {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double require(double v, const char* what, std::size_t i, std::size_t j) {
  if (std::isnan(v)) {
    throw MissingMomentError(std::string("missing moment ") + what + "(" + std::to_string(i) +
                             ", " + std::to_string(j) + ")");
  }
  return v;
}

void check_size(const std::vector<double>& v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw DomainError(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                      std::to_string(v.size()));
  }
}

template <class F>
auto tagged(const char* layer, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const PropagationError&) {
    throw;
  } catch (const Error& e) {
    throw PropagationError(layer, e.what(), std::current_exception());
  }
}

}  // namespace

void CovMatrix::validate(double tol) const {
  if (entries_.size() != dim_ * dim_) throw DomainError("CovMatrix: storage does not match dim");
  for (std::size_t i = 0; i < dim_; ++i) {
    if (!(entries_[i * dim_ + i] >= 0.0)) {
      throw DomainError("CovMatrix: negative diagonal entry at " + std::to_string(i));
    }
    for (std::size_t j = i + 1; j < dim_; ++j) {
      const double x = entries_[i * dim_ + j];
      const double y = entries_[j * dim_ + i];
      if (std::abs(x - y) > tol * std::max({1.0, std::abs(x), std::abs(y)})) {
        throw DomainError("CovMatrix: asymmetric at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
    }
  }
}

PixelStats PixelStats::from_product_moments(const std::vector<double>& m1,
                                            const std::vector<double>& m2,
                                            const std::vector<double>& m3,
                                            const std::vector<double>& m4) {
  const std::size_t r = m1.size();
  check_size(m2, r, "from_product_moments m2");
  check_size(m3, r, "from_product_moments m3");
  check_size(m4, r, "from_product_moments m4");
  PixelStats st;
  st.n_pixels = r;
  st.m1 = m1;
  st.e11.assign(r * r, 0.0);
  st.e12.assign(r * r, 0.0);
  st.e22.assign(r * r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      const bool same = i == j;
      st.e11[i * r + j] = same ? m2[i] : m1[i] * m1[j];
      st.e12[i * r + j] = same ? m3[i] : m1[i] * m2[j];
      st.e22[i * r + j] = same ? m4[i] : m2[i] * m2[j];
    }
  }
  return st;
}

void PixelStats::validate() const {
  const std::size_t r = n_pixels;
  if (r == 0) throw DomainError("PixelStats: no pixels");
  check_size(m1, r, "PixelStats m1");
  check_size(e11, r * r, "PixelStats e11");
  check_size(e12, r * r, "PixelStats e12");
  check_size(e22, r * r, "PixelStats e22");
}

void FilterSums::validate() const {
  const std::size_t f = n_filters;
  check_size(t1, f, "FilterSums t1");
  check_size(t2, f, "FilterSums t2");
  check_size(s11, f * f, "FilterSums s11");
  check_size(s12, f * f, "FilterSums s12");
  check_size(s22, f * f, "FilterSums s22");
}

void BlockStats::validate() const {
  for (const auto& st : filters) {
    st.validate();
    if (st.n_pixels != r_pixels) {
      throw DomainError("BlockStats: filter has " + std::to_string(st.n_pixels) +
                        " pixels, expected " + std::to_string(r_pixels));
    }
  }
  if (sums.n_filters != 0) {
    if (sums.n_filters != filters.size()) {
      throw DomainError("BlockStats: filter sums cover " + std::to_string(sums.n_filters) +
                        " filters, expected " + std::to_string(filters.size()));
    }
    sums.validate();
  }
}

void ActivationConfig::validate() const {
  if (activation == Activation::kExp) {
    if (!(alpha > 0.0 && std::isfinite(alpha))) throw DomainError("alpha must be > 0, got " + num(alpha));
    if (!(beta > 0.0 && std::isfinite(beta))) throw DomainError("beta must be > 0, got " + num(beta));
  }
  if (!(gamma_exp > 0.0 && gamma_exp <= 1.0)) {
    throw DomainError("gamma must lie in (0, 1], got " + num(gamma_exp));
  }
  if (!(eps >= 0.0 && std::isfinite(eps))) throw DomainError("eps must be >= 0, got " + num(eps));
  if (r_pixels == 0) throw DomainError("r_pixels must be >= 1");
}

void FCWeights::validate() const {
  if (weights.empty()) throw DomainError("FC weights must be non-empty");
  for (double w : weights) {
    if (!std::isfinite(w)) throw DomainError("FC weights must be finite");
  }
}

Taylor2 taylor2_coeffs(const ActivationConfig& cfg) {
  Taylor2 t;
  if (cfg.activation == Activation::kIdentity) {
    t.g1 = 1.0;
  } else {
    t.g0 = 0.0;
    t.g1 = cfg.alpha * cfg.beta;
    t.g2 = cfg.alpha * cfg.beta * cfg.beta;
  }
  t.a = t.g0 * t.g1;
  t.b = t.g1 * t.g1;
  t.c = 0.5 * t.g1 * t.g2;
  t.d = 0.25 * t.g2 * t.g2;
  return t;
}

namespace {

// E[g(U) g(W)] given the mixed moments of (U, W).
double expand_pair(const Taylor2& t, double eu, double ew, double eu2, double ew2, double euw,
                   double eu2w, double euw2, double eu2w2) {
  const double g0_g2_half = 0.5 * t.g0 * t.g2;
  return t.g0 * t.g0 + t.a * (eu + ew) + g0_g2_half * (eu2 + ew2) + t.b * euw +
         t.c * (eu2w + euw2) + t.d * eu2w2;
}

}  // namespace

double activated_cross_expectation(const PixelStats& stats, const ActivationConfig& cfg,
                                   std::size_t i, std::size_t j) {
  const std::size_t r = stats.n_pixels;
  if (i >= r || j >= r) throw DomainError("activated_cross_expectation: pixel index out of range");
  const Taylor2 t = taylor2_coeffs(cfg);
  const double eu = require(stats.m1[i], "E[W]", i, i);
  const double ew = require(stats.m1[j], "E[W]", j, j);
  return expand_pair(t, eu, ew, require(stats.e11[i * r + i], "E[W^2]", i, i),
                     require(stats.e11[j * r + j], "E[W^2]", j, j),
                     require(stats.e11[i * r + j], "E[WW]", i, j),
                     require(stats.e12[j * r + i], "E[WW^2]", j, i),
                     require(stats.e12[i * r + j], "E[WW^2]", i, j),
                     require(stats.e22[i * r + j], "E[W^2W^2]", i, j));
}

CovMatrix pixel_cov_matrix(const PixelStats& stats, const ActivationConfig& cfg) {
  stats.validate();
  const std::size_t r = stats.n_pixels;
  const Taylor2 t = taylor2_coeffs(cfg);
  std::vector<double> mu(r);
  for (std::size_t i = 0; i < r; ++i) {
    mu[i] = t.mean(require(stats.m1[i], "E[W]", i, i), require(stats.second(i), "E[W^2]", i, i));
  }
  CovMatrix cov(r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = i; j < r; ++j) {
      cov.set_sym(i, j, activated_cross_expectation(stats, cfg, i, j) - mu[i] * mu[j]);
    }
  }
  return cov;
}

Moments gap_moments(const Moments& act, const CovMatrix& cov, std::size_t r_pixels) {
  if (cov.dim() != r_pixels) {
    throw DomainError("gap_moments: covariance has dim " + std::to_string(cov.dim()) +
                      ", expected R = " + std::to_string(r_pixels));
  }
  const double r = static_cast<double>(r_pixels);
  std::vector<double> off;
  off.reserve(r_pixels * r_pixels);
  for (std::size_t i = 0; i < r_pixels; ++i) {
    for (std::size_t j = 0; j < r_pixels; ++j) {
      if (i != j) off.push_back(cov(i, j));
    }
  }
  const double var = act.variance / r + pairwise_sum(off) / (r * r);
  if (var < 0.0) {
    throw NonPositiveVarianceError("gap_moments: negative GAP variance " + num(var) +
                                   " (inconsistent pixel covariance)");
  }
  return {act.mean, var};
}

GammaShapeScale match_gamma(const Moments& m) {
  if (!(m.mean > 0.0) || !(m.variance > 0.0) || !std::isfinite(m.mean) ||
      !std::isfinite(m.variance)) {
    throw DomainError("match_gamma: requires mean > 0 and variance > 0, got mean=" + num(m.mean) +
                      " variance=" + num(m.variance));
  }
  return {m.mean * m.mean / m.variance, m.variance / m.mean};
}

double gap_feature_cov(const BlockStats& stats, std::size_t f, std::size_t g,
                       const ActivationConfig& cfg) {
  const std::size_t nf = stats.n_filters();
  if (f >= nf || g >= nf) throw DomainError("gap_feature_cov: filter index out of range");
  if (!stats.has_cross_filter()) {
    throw MissingMomentError("gap_feature_cov: cross-filter moments were not estimated");
  }
  const FilterSums& s = stats.sums;
  const double r = static_cast<double>(stats.r_pixels);
  const Taylor2 t = taylor2_coeffs(cfg);
  const double t1f = require(s.t1[f], "T1", f, f);
  const double t1g = require(s.t1[g], "T1", g, g);
  const double t2f = require(s.t2[f], "T2", f, f);
  const double t2g = require(s.t2[g], "T2", g, g);
  // Sum over all pixel pairs (k in f, l in g) of the pairwise expansion.
  const double total = expand_pair(t, r * t1f, r * t1g, r * t2f, r * t2g,
                                   require(s.s11[f * nf + g], "T1T1", f, g),
                                   require(s.s12[g * nf + f], "T1T2", g, f),
                                   require(s.s12[f * nf + g], "T1T2", f, g),
                                   require(s.s22[f * nf + g], "T2T2", f, g)) +
                       (r * r - 1.0) * t.g0 * t.g0;
  const double mu_f = t.mean(t1f / r, t2f / r);
  const double mu_g = t.mean(t1g / r, t2g / r);
  return total / (r * r) - mu_f * mu_g;
}

double deact_cov(double cov_g, double mu_i, double mu_j, double gamma_exp, double eps) {
  (void)mu_i;
  (void)mu_j;
  if (!(eps > 0.0)) throw DomainError("deact_cov: requires eps > 0, got " + num(eps));
  const double d = gamma_exp * std::pow(2.0 * eps, gamma_exp - 1.0);
  return d * d * cov_g;
}

double deact_cov_at_means(double cov_g, double mu_i, double mu_j, double gamma_exp) {
  if (cov_g == 0.0) return 0.0;
  if (!(mu_i > 0.0) || !(mu_j > 0.0)) {
    throw DomainError("deact_cov_at_means: GAP means must be > 0, got " + num(mu_i) + ", " +
                      num(mu_j));
  }
  const double di = gamma_exp * std::pow(mu_i, gamma_exp - 1.0);
  const double dj = gamma_exp * std::pow(mu_j, gamma_exp - 1.0);
  return di * dj * cov_g;
}

GaussianParams output_gaussian(const std::vector<Moments>& features, const CovMatrix& cov_d,
                               const FCWeights& w) {
  w.validate();
  const std::size_t n = features.size();
  if (w.weights.size() != n || cov_d.dim() != n) {
    throw DomainError("output_gaussian: " + std::to_string(n) + " features, " +
                      std::to_string(w.weights.size()) + " weights, covariance dim " +
                      std::to_string(cov_d.dim()));
  }
  std::vector<double> mean_terms(n);
  std::vector<double> var_terms;
  var_terms.reserve(n * (n + 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.weights[i];
    mean_terms[i] = wi * features[i].mean;
    var_terms.push_back(wi * wi * features[i].variance);
    for (std::size_t j = i + 1; j < n; ++j) var_terms.push_back(2.0 * wi * w.weights[j] * cov_d(i, j));
  }
  const double mu = pairwise_sum(mean_terms);
  const double var = pairwise_sum(var_terms);
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw NonPositiveVarianceError("output_gaussian: output variance " + num(var) + " is not positive");
  }
  return {mu, std::sqrt(var)};
}

double kl_gaussian(const GaussianPair& pair) {
  pair.pos.validate();
  pair.neg.validate();
  const double sp = pair.pos.sigma;
  const double sn = pair.neg.sigma;
  const double t = (sp - sn) * (sp + sn) / (sn * sn);  // sigma+^2 / sigma-^2 - 1
  double h;                                              // t - log1p(t)
  if (std::abs(t) < 0.01) {
    double term = t * t;
    h = 0.0;
    for (int k = 2; k <= 12; ++k) {
      h += (k % 2 == 0 ? 1.0 : -1.0) * term / k;
      term *= t;
    }
  } else {
    h = t - std::log1p(t);
  }
  const double dmu = pair.pos.mu - pair.neg.mu;
  return 0.5 * h + dmu * dmu / (2.0 * sn * sn);
}

BlockPrediction predict_block(const std::vector<ZeroGammaParams>& per_filter,
                              const BlockStats& stats, const ActivationConfig& cfg,
                              const FCWeights& w, const PredictOptions& opts) {
  tagged("config", [&] {
    cfg.validate();
    w.validate();
    stats.validate();
    if (per_filter.empty()) throw DomainError("no filters");
    if (stats.n_filters() != per_filter.size()) {
      throw DomainError("pixel statistics cover " + std::to_string(stats.n_filters()) +
                        " filters, fits cover " + std::to_string(per_filter.size()));
    }
    if (stats.r_pixels != cfg.r_pixels) {
      throw DomainError("pixel statistics have R = " + std::to_string(stats.r_pixels) +
                        ", config has R = " + std::to_string(cfg.r_pixels));
    }
    if (w.weights.size() != per_filter.size()) {
      throw DomainError(std::to_string(w.weights.size()) + " FC weights for " +
                        std::to_string(per_filter.size()) + " filters");
    }
    return 0;
  });

  const std::size_t nf = per_filter.size();
  const std::size_t r = cfg.r_pixels;
  BlockPrediction out;
  out.conv.resize(nf);
  out.activated.resize(nf);
  out.gap.resize(nf);
  out.gap_gamma.resize(nf);
  out.deactivated.resize(nf);
  out.gap_cov = CovMatrix(nf);
  out.deact_cov = CovMatrix(nf);

  for (std::size_t f = 0; f < nf; ++f) {
    out.conv[f] = tagged("conv", [&] { return zero_gamma_moments(per_filter[f]); });
    out.activated[f] = tagged("activation", [&] {
      if (cfg.activation == Activation::kIdentity) return out.conv[f];
      ZeroExpGammaParams zeg{per_filter[f].p,
                             {per_filter[f].a, per_filter[f].s, cfg.alpha, cfg.beta}};
      return zero_exp_gamma_moments(zeg);
    });
    out.gap[f] = tagged("gap", [&] {
      if (opts.ignore_covariance) return gap_moments(out.activated[f], CovMatrix(r), r);
      return gap_moments(out.activated[f], pixel_cov_matrix(stats.filters[f], cfg), r);
    });
    out.gap_cov(f, f) = out.gap[f].variance;

    const bool degenerate = out.gap[f].mean == 0.0 && out.gap[f].variance == 0.0;
    out.deactivated[f] = tagged("deactivation", [&]() -> Moments {
      if (degenerate) {
        out.gap_gamma[f] = {0.0, 0.0};
        return {cfg.eps > 0.0 ? std::pow(cfg.eps, cfg.gamma_exp) : 0.0, 0.0};
      }
      out.gap_gamma[f] = match_gamma(out.gap[f]);
      GenGammaParams gg{out.gap_gamma[f].a, out.gap_gamma[f].s, cfg.gamma_exp, cfg.eps};
      return cfg.eps > 0.0 ? eps_deact_moments(gg, cfg.eps_order) : gen_gamma_moments(gg);
    });
    out.deact_cov(f, f) = out.deactivated[f].variance;
  }

  if (!opts.ignore_covariance) {
    for (std::size_t f = 0; f < nf; ++f) {
      for (std::size_t g = f + 1; g < nf; ++g) {
        const double cg = tagged("gap_cov", [&] { return gap_feature_cov(stats, f, g, cfg); });
        out.gap_cov.set_sym(f, g, cg);
        const double cd = tagged("deact_cov", [&] {
          const double mf = out.gap[f].mean;
          const double mg = out.gap[g].mean;
          return cfg.eps > 0.0 ? deact_cov(cg, mf, mg, cfg.gamma_exp, cfg.eps)
                               : deact_cov_at_means(cg, mf, mg, cfg.gamma_exp);
        });
        out.deact_cov.set_sym(f, g, cd);
      }
    }
  }

  out.output = tagged("output", [&] { return output_gaussian(out.deactivated, out.deact_cov, w); });
  return out;
}

}  // namespace aggstat
