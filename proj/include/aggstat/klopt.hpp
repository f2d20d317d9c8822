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

// Gradient ascent on the predicted KL divergence over the FC weights and the
// deactivation exponent, using closed-form gradients of the eps = 0 chain.

#ifndef AGGSTAT_KLOPT_HPP_
#define AGGSTAT_KLOPT_HPP_

#include <cstddef>
#include <limits>
#include <vector>

#include "aggstat/distributions.hpp"
#include "aggstat/propagation.hpp"

namespace aggstat {

struct KlPartials {
  double d_sigma_pos = 0.0;
  double d_sigma_neg = 0.0;
  double d_mu_pos = 0.0;
  double d_mu_neg = 0.0;
};

KlPartials kl_partials(const GaussianPair& pair);

/// Deactivated features of one class: per-feature moments and Cov_D.
struct ClassFeatures {
  std::vector<Moments> moments;
  CovMatrix cov_d;
};

/// dK/dw_i for the output node built from `w` over both classes.
std::vector<double> fc_weight_gradient(const FCWeights& w, const ClassFeatures& pos,
                                       const ClassFeatures& neg);

/// GAP features of one class as moment-matched Gammas, with their covariance
/// Cov_G (dim 0 means "treat features as uncorrelated").
struct ClassGapGamma {
  std::vector<GammaShapeScale> features;
  CovMatrix cov_g;
};

/// d/dgamma of s^gamma Gamma(a+gamma)/Gamma(a).
double deact_mean_dgamma(double a, double s, double gamma_exp);

/// d/dgamma of the generalized-Gamma variance.
double deact_var_dgamma(double a, double s, double gamma_exp);

/// dK/dgamma through both classes' deactivation layers (eps = 0).
double gamma_gradient(double gamma_exp, const ClassGapGamma& pos, const ClassGapGamma& neg,
                      const FCWeights& w);

/// Predicted KL as a function of (weights, gamma) for fixed GAP statistics.
class KlObjective {
 public:
  KlObjective(ClassGapGamma pos, ClassGapGamma neg);

  std::size_t n_features() const { return pos_.features.size(); }
  const ClassGapGamma& pos() const { return pos_; }
  const ClassGapGamma& neg() const { return neg_; }

  ClassFeatures deactivated(const ClassGapGamma& cls, double gamma_exp) const;
  GaussianPair outputs(const FCWeights& w, double gamma_exp) const;
  double value(const FCWeights& w, double gamma_exp) const;

  struct Gradient {
    std::vector<double> weights;
    double gamma_exp = 0.0;
  };
  Gradient gradient(const FCWeights& w, double gamma_exp) const;

 private:
  ClassGapGamma pos_;
  ClassGapGamma neg_;
};

struct OptState {
  FCWeights weights;
  double gamma_exp = 1.0;
  double step_size = 1.0;
  std::size_t iteration = 0;
  std::vector<double> kl_history;     // initial value, then one entry per accepted step
  std::vector<double> gamma_history;  // aligned with kl_history
  std::vector<double> weight_norm_history;
};

struct AscendOptions {
  std::size_t max_iters = 500;
  double tol = 1e-8;  // stop when the projected gradient norm falls below this
  double gamma_min = 0.05;
  double gamma_max = 1.0;
  bool free_gamma = true;
  std::vector<bool> free_weights;  // empty: every weight is free
  double weight_lo = -std::numeric_limits<double>::infinity();
  double weight_hi = std::numeric_limits<double>::infinity();
  double armijo = 1e-4;
  double shrink = 0.5;
  double grow = 2.0;
};

/// Projected gradient ascent with backtracking. kl_history strictly increases.
/// Throws DomainError naming the iterate if the objective cannot be evaluated there.
OptState ascend(OptState state, const KlObjective& objective, const AscendOptions& opts = {});

/// Independent ascents from several starts (run in parallel); returns the one
/// with the highest final KL, the earliest start on ties. Starts where the
/// objective is undefined are skipped; if every start fails, the first
/// start's error is rethrown.
OptState ascend_best(const std::vector<OptState>& starts, const KlObjective& objective,
                     const AscendOptions& opts = {});

}  // namespace aggstat

#endif  // AGGSTAT_KLOPT_HPP_
