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


// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "aggstat/kernels.hpp"

namespace {

using namespace aggstat;

std::vector<double> random_matrix(std::size_t rows, std::size_t cols) {
  std::mt19937_64 gen(1);
  std::gamma_distribution<double> g(2.0, 0.5);
  std::vector<double> m(rows * cols);
  for (double& x : m) x = g(gen);
  return m;
}

kernels::CopulaPlan plan(std::size_t units, double rho) {
  kernels::CopulaPlan p;
  p.n_units = units;
  // Equicorrelated latent matrix: L(i, 0..i) by the Cholesky recurrence.
  std::vector<double> c(units * units, rho);
  for (std::size_t i = 0; i < units; ++i) c[i * units + i] = 1.0;
  std::vector<double> l(units * units, 0.0);
  for (std::size_t i = 0; i < units; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = c[i * units + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * units + k] * l[j * units + k];
      l[i * units + j] = i == j ? std::sqrt(s) : s / l[j * units + j];
    }
    for (std::size_t j = 0; j <= i; ++j) p.chol.push_back(l[i * units + j]);
  }
  p.marginal.assign(units, ZeroGammaParams{0.3, 2.0, 0.5});
  return p;
}

kernels::ForwardParams forward_params(std::size_t filters, std::size_t pixels) {
  kernels::ForwardParams fp;
  fp.alpha = 1.0;
  fp.beta = 0.1;
  fp.gamma_exp = 0.5;
  fp.n_filters = filters;
  fp.r_pixels = pixels;
  fp.weights.assign(filters, 0.7);
  return fp;
}

template <bool Omp>
void BM_GramMean(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 32;
  const auto data = random_matrix(rows, dim);
  for (auto _ : state) {
    auto g = Omp ? kernels::gram_mean(data, rows, dim) : kernels::reference::gram_mean(data, rows, dim);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

template <bool Omp>
void BM_CopulaFill(benchmark::State& state) {
  const auto images = static_cast<std::size_t>(state.range(0));
  const auto p = plan(64, 0.2);
  std::vector<double> out(images * p.n_units);
  for (auto _ : state) {
    if (Omp) {
      kernels::copula_fill(p, 7, 0, images, out);
    } else {
      kernels::reference::copula_fill(p, 7, 0, images, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(images));
}

template <bool Omp>
void BM_Forward(benchmark::State& state) {
  const auto images = static_cast<std::size_t>(state.range(0));
  const std::size_t filters = 8, pixels = 16;
  const auto fp = forward_params(filters, pixels);
  const auto conv = random_matrix(images, filters * pixels);
  std::vector<double> act(conv.size()), gap(images * filters), deact(images * filters), out(images);
  for (auto _ : state) {
    const bool ok = Omp ? kernels::forward(fp, conv, images, act, gap, deact, out)
                        : kernels::reference::forward(fp, conv, images, act, gap, deact, out);
    benchmark::DoNotOptimize(ok);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(images));
}

BENCHMARK(BM_GramMean<false>)->Name("gram_mean/reference")->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_GramMean<true>)->Name("gram_mean/omp")->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_CopulaFill<false>)->Name("copula_fill/reference")->Arg(1 << 10)->Arg(1 << 13);
BENCHMARK(BM_CopulaFill<true>)->Name("copula_fill/omp")->Arg(1 << 10)->Arg(1 << 13);
BENCHMARK(BM_Forward<false>)->Name("forward/reference")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_Forward<true>)->Name("forward/omp")->Arg(1 << 12)->Arg(1 << 15);

}  // namespace

BENCHMARK_MAIN();
