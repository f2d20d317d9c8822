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


// The subcommands of the aggstat tool. Each returns normally on success and
// throws ExitError carrying the process exit code otherwise.

#ifndef AGGSTAT_TOOLS_COMMANDS_HPP_
#define AGGSTAT_TOOLS_COMMANDS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "cli_io.hpp"

namespace aggstat::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kBadInput = 2,
  kFitFailed = 3,
  kPropagationFailed = 4,
  kOverflow = 5,
  kMisaligned = 6,
  kOptimizerDomain = 7,
};

class ExitError : public std::runtime_error {
 public:
  ExitError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

struct FitArgs {
  std::string input;
  std::string output;
  double zero_threshold = kDefaultZeroThreshold;
  double tolerance = 1e-12;
};

struct PredictArgs {
  std::string input;
  std::string activation;
  std::string weights;
  std::string output;
};

struct SimulateArgs {
  std::string input;
  std::string activation;
  std::string weights;
  std::string output;
  std::uint64_t seed = 0;
  std::string sweep;
  std::string dump;
  double zero_threshold = kDefaultZeroThreshold;
  double tolerance = 1e-12;
};

struct CompareArgs {
  std::string input;
  std::string observed;
  std::string output;
  std::string scatter;
};

struct OptimizeArgs {
  std::string input;
  std::string activation;
  std::string weights;
  std::string output;
  std::size_t max_iters = 500;
  double tolerance = 1e-8;
  bool fix_gamma = false;
  double gamma_min = 0.05;
};

void cmd_fit(const FitArgs& args);
void cmd_predict(const PredictArgs& args);
void cmd_simulate(const SimulateArgs& args);
void cmd_compare(const CompareArgs& args);
void cmd_optimize(const OptimizeArgs& args);

/// Library pieces shared by several commands.
FitFile fit_dump(const ActivationDump& dump, double zero_threshold, double tolerance);
Json predict_fit(const FitFile& fit, const ActivationConfig& cfg, const FCWeights& w);

}  // namespace aggstat::cli

#endif  // AGGSTAT_TOOLS_COMMANDS_HPP_
