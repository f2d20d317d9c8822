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

#include "aggstat/klopt.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "aggstat/errors.hpp"
#include "aggstat/numeric.hpp"
#include "aggstat/specfun.hpp"

namespace aggstat {
namespace {

struct NodeMoments {
  double mu = 0.0;
  double var = 0.0;
};

NodeMoments node_moments(const FCWeights& w, const ClassFeatures& cls) {
  const GaussianParams g = output_gaussian(cls.moments, cls.cov_d, w);
  return {g.mu, g.sigma * g.sigma};
}

bool has_cov(const ClassGapGamma& cls) { return cls.cov_g.dim() == cls.features.size(); }

void check_class(const ClassGapGamma& cls, std::size_t n) {
  if (cls.features.size() != n) throw DomainError("klopt: feature count mismatch between classes");
  if (cls.cov_g.dim() != 0 && cls.cov_g.dim() != n) {
    throw DomainError("klopt: Cov_G dimension does not match the feature count");
  }
  for (const auto& f : cls.features) {
    if (!(f.a > 0.0) || !(f.s > 0.0)) throw DomainError("klopt: GAP Gamma parameters must be positive");
  }
}

// d(mu_O)/dgamma and d(sigma_O^2)/dgamma for one class.
std::pair<double, double> class_gamma_derivs(double g, const ClassGapGamma& cls, const FCWeights& w) {
  const std::size_t n = cls.features.size();
  std::vector<double> dmu(n);
  std::vector<double> dvar;
  dvar.reserve(n * (n + 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& fi = cls.features[i];
    dmu[i] = w.weights[i] * deact_mean_dgamma(fi.a, fi.s, g);
    dvar.push_back(w.weights[i] * w.weights[i] * deact_var_dgamma(fi.a, fi.s, g));
  }
  if (has_cov(cls)) {
    std::vector<double> m(n), pw(n), dd(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cls.features[i].a * cls.features[i].s;
      pw[i] = std::pow(m[i], g - 1.0);
      dd[i] = pw[i] * (1.0 + g * std::log(m[i]));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d_prod = dd[i] * g * pw[j] + g * pw[i] * dd[j];
        dvar.push_back(2.0 * w.weights[i] * w.weights[j] * cls.cov_g(i, j) * d_prod);
      }
    }
  }
  return {pairwise_sum(dmu), pairwise_sum(dvar)};
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::string describe(const FCWeights& w, double g) {
  std::ostringstream os;
  os.precision(17);
  os << "gamma=" << g << " weights=[";
  for (std::size_t i = 0; i < w.weights.size(); ++i) os << (i ? "," : "") << w.weights[i];
  os << "]";
  return os.str();
}

}  // namespace

KlPartials kl_partials(const GaussianPair& pair) {
  pair.pos.validate();
  pair.neg.validate();
  const double sp = pair.pos.sigma;
  const double sn = pair.neg.sigma;
  const double dmu = pair.pos.mu - pair.neg.mu;
  const double sn2 = sn * sn;
  KlPartials k;
  k.d_sigma_pos = (sp - sn) * (sp + sn) / (sp * sn2);
  k.d_sigma_neg = ((sn - sp) * (sn + sp) - dmu * dmu) / (sn2 * sn);
  k.d_mu_pos = dmu / sn2;
  k.d_mu_neg = -dmu / sn2;
  return k;
}

std::vector<double> fc_weight_gradient(const FCWeights& w, const ClassFeatures& pos,
                                       const ClassFeatures& neg) {
  const NodeMoments mp = node_moments(w, pos);
  const NodeMoments mn = node_moments(w, neg);
  const double sp = std::sqrt(mp.var);
  const double sn = std::sqrt(mn.var);
  const KlPartials k = kl_partials({{mp.mu, sp}, {mn.mu, sn}});
  const std::size_t n = w.weights.size();
  auto dsigma = [&](const ClassFeatures& c, double sigma, std::size_t i) {
    std::vector<double> terms(n);
    for (std::size_t j = 0; j < n; ++j) {
      terms[j] = j == i ? w.weights[i] * c.moments[i].variance : w.weights[j] * c.cov_d(i, j);
    }
    return pairwise_sum(terms) / sigma;
  };
  std::vector<double> grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = k.d_mu_pos * pos.moments[i].mean + k.d_mu_neg * neg.moments[i].mean +
              k.d_sigma_pos * dsigma(pos, sp, i) + k.d_sigma_neg * dsigma(neg, sn, i);
  }
  return grad;
}

double deact_mean_dgamma(double a, double s, double gamma_exp) {
  const double mean = std::exp(gamma_exp * std::log(s) + lgamma_fn(a + gamma_exp) - lgamma_fn(a));
  return mean * (std::log(s) + digamma_fn(a + gamma_exp));
}

double deact_var_dgamma(double a, double s, double gamma_exp) {
  const double g = gamma_exp;
  const double ls = std::log(s);
  const double lr1 = lgamma_fn(a + g) - lgamma_fn(a);
  const double lr2 = lgamma_fn(a + 2.0 * g) - lgamma_fn(a);
  const double r1sq = std::exp(2.0 * lr1);
  const double r2 = std::exp(lr2);
  const double diff = -r2 * std::expm1(2.0 * lr1 - lr2);  // r2 - r1^2
  return std::exp(2.0 * g * ls) *
         (2.0 * ls * diff + 2.0 * r2 * digamma_fn(a + 2.0 * g) - 2.0 * r1sq * digamma_fn(a + g));
}

double gamma_gradient(double gamma_exp, const ClassGapGamma& pos, const ClassGapGamma& neg,
                      const FCWeights& w) {
  const KlObjective obj(pos, neg);
  const GaussianPair pair = obj.outputs(w, gamma_exp);
  const KlPartials k = kl_partials(pair);
  const auto [dmu_p, dvar_p] = class_gamma_derivs(gamma_exp, pos, w);
  const auto [dmu_n, dvar_n] = class_gamma_derivs(gamma_exp, neg, w);
  return k.d_mu_pos * dmu_p + k.d_mu_neg * dmu_n + k.d_sigma_pos * dvar_p / (2.0 * pair.pos.sigma) +
         k.d_sigma_neg * dvar_n / (2.0 * pair.neg.sigma);
}

KlObjective::KlObjective(ClassGapGamma pos, ClassGapGamma neg) : pos_(std::move(pos)), neg_(std::move(neg)) {
  if (pos_.features.empty()) throw DomainError("klopt: no features");
  check_class(pos_, pos_.features.size());
  check_class(neg_, pos_.features.size());
}

ClassFeatures KlObjective::deactivated(const ClassGapGamma& cls, double gamma_exp) const {
  const std::size_t n = cls.features.size();
  ClassFeatures out;
  out.moments.reserve(n);
  out.cov_d = CovMatrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = cls.features[i];
    out.moments.push_back(gen_gamma_moments({f.a, f.s, gamma_exp, 0.0}));
    out.cov_d(i, i) = out.moments[i].variance;
  }
  if (has_cov(cls)) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& fi = cls.features[i];
        const auto& fj = cls.features[j];
        out.cov_d.set_sym(i, j, deact_cov_at_means(cls.cov_g(i, j), fi.a * fi.s, fj.a * fj.s, gamma_exp));
      }
    }
  }
  return out;
}

GaussianPair KlObjective::outputs(const FCWeights& w, double gamma_exp) const {
  const ClassFeatures p = deactivated(pos_, gamma_exp);
  const ClassFeatures n = deactivated(neg_, gamma_exp);
  return {output_gaussian(p.moments, p.cov_d, w), output_gaussian(n.moments, n.cov_d, w)};
}

double KlObjective::value(const FCWeights& w, double gamma_exp) const {
  return kl_gaussian(outputs(w, gamma_exp));
}

KlObjective::Gradient KlObjective::gradient(const FCWeights& w, double gamma_exp) const {
  Gradient g;
  g.weights = fc_weight_gradient(w, deactivated(pos_, gamma_exp), deactivated(neg_, gamma_exp));
  g.gamma_exp = gamma_gradient(gamma_exp, pos_, neg_, w);
  return g;
}

OptState ascend(OptState state, const KlObjective& objective, const AscendOptions& opts) {
  const std::size_t n = objective.n_features();
  if (state.weights.weights.size() != n) {
    throw DomainError("ascend: " + std::to_string(state.weights.weights.size()) + " weights for " +
                      std::to_string(n) + " features");
  }
  if (!opts.free_weights.empty() && opts.free_weights.size() != n) {
    throw DomainError("ascend: free-weight mask has the wrong length");
  }
  if (!(state.step_size > 0.0)) throw DomainError("ascend: step size must be > 0");
  auto is_free = [&](std::size_t i) { return opts.free_weights.empty() || opts.free_weights[i]; };
  auto project = [&](FCWeights& w, double& g) {
    for (std::size_t i = 0; i < n; ++i) {
      if (is_free(i)) w.weights[i] = std::clamp(w.weights[i], opts.weight_lo, opts.weight_hi);
    }
    g = std::clamp(g, opts.gamma_min, opts.gamma_max);
  };
  project(state.weights, state.gamma_exp);

  double kl;
  KlObjective::Gradient grad;
  try {
    kl = objective.value(state.weights, state.gamma_exp);
    grad = objective.gradient(state.weights, state.gamma_exp);
  } catch (const Error& e) {
    throw DomainError(std::string("ascend: objective undefined at ") +
                      describe(state.weights, state.gamma_exp) + ": " + e.what());
  }
  if (state.kl_history.empty()) {
    state.kl_history.push_back(kl);
    state.gamma_history.push_back(state.gamma_exp);
    state.weight_norm_history.push_back(norm2(state.weights.weights));
  }

  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    // Projected gradient: free coordinates not pinned at a bound they push against.
    std::vector<double> dir(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!is_free(i)) continue;
      const double gi = grad.weights[i];
      const double wi = state.weights.weights[i];
      if ((wi >= opts.weight_hi && gi > 0.0) || (wi <= opts.weight_lo && gi < 0.0)) continue;
      dir[i] = gi;
    }
    double dg = 0.0;
    if (opts.free_gamma) {
      const double gg = grad.gamma_exp;
      const bool pinned = (state.gamma_exp >= opts.gamma_max && gg > 0.0) ||
                          (state.gamma_exp <= opts.gamma_min && gg < 0.0);
      if (!pinned) dg = gg;
    }
    double pnorm = dg * dg;
    for (double d : dir) pnorm += d * d;
    pnorm = std::sqrt(pnorm);
    if (!(pnorm >= opts.tol)) break;

    bool accepted = false;
    double t = state.step_size;
    for (int bt = 0; bt < 80; ++bt, t *= opts.shrink) {
      FCWeights w = state.weights;
      for (std::size_t i = 0; i < n; ++i) w.weights[i] += t * dir[i];
      double g = state.gamma_exp + t * dg;
      project(w, g);
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += dir[i] * (w.weights[i] - state.weights.weights[i]);
      decrease += dg * (g - state.gamma_exp);
      double kl_new;
      try {
        kl_new = objective.value(w, g);
      } catch (const Error&) {
        continue;
      }
      if (std::isfinite(kl_new) && kl_new > kl && kl_new >= kl + opts.armijo * decrease) {
        state.weights = std::move(w);
        state.gamma_exp = g;
        kl = kl_new;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    state.step_size = t * opts.grow;
    ++state.iteration;
    state.kl_history.push_back(kl);
    state.gamma_history.push_back(state.gamma_exp);
    state.weight_norm_history.push_back(norm2(state.weights.weights));
    try {
      grad = objective.gradient(state.weights, state.gamma_exp);
    } catch (const Error& e) {
      throw DomainError(std::string("ascend: gradient undefined at ") +
                        describe(state.weights, state.gamma_exp) + ": " + e.what());
    }
  }
  return state;
}

OptState ascend_best(const std::vector<OptState>& starts, const KlObjective& objective,
                     const AscendOptions& opts) {
  if (starts.empty()) throw DomainError("ascend_best: no starting points");
  const std::size_t m = starts.size();
  std::vector<OptState> runs(m);
  std::vector<std::exception_ptr> errors(m);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t k = 0; k < m; ++k) {
    try {
      runs[k] = ascend(starts[k], objective, opts);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  std::size_t best = m;
  for (std::size_t k = 0; k < m; ++k) {
    if (errors[k]) continue;
    if (best == m || runs[k].kl_history.back() > runs[best].kl_history.back()) best = k;
  }
  if (best == m) std::rethrow_exception(errors.front());
  return std::move(runs[best]);
}

}  // namespace aggstat
