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


// File formats of the command-line tool: JSON emission with 17 significant
// digits, activation dumps (CSV or JSON), run inputs and fit files.

#ifndef AGGSTAT_TOOLS_CLI_IO_HPP_
#define AGGSTAT_TOOLS_CLI_IO_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggstat/errors.hpp"
#include "aggstat/fitting.hpp"
#include "aggstat/propagation.hpp"
#include "aggstat/simulator.hpp"

namespace aggstat::cli {

using Json = nlohmann::ordered_json;

/// Raised for unreadable or malformed input files.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Non-finite numbers become null; doubles use %.17g.
std::string to_text(const Json& j);
void write_text(const std::string& path, const std::string& text);
Json read_json(const std::string& path);

/// Sniffs the format from the extension (.csv or .json).
ActivationDump read_dump(const std::string& path);
void write_dump(const std::string& path, const ActivationDump& dump);

struct ConfigInput {
  ActivationConfig cfg;
  bool has_r_pixels = false;
};
ConfigInput parse_activation_config(const Json& j);
Json to_json(const ActivationConfig& cfg);
FCWeights parse_weights(const Json& j);

struct SimulationClass {
  std::string label;
  std::size_t n_images = 0;
  std::vector<ZeroGammaParams> filters;
};
struct SimulationSpec {
  std::vector<SimulationClass> classes;
  double rho_pix = 0.0;
  double rho_filt = 0.0;
  std::size_t r_pixels = 1;
};
SimulationSpec parse_simulation_spec(const Json& j);
Json to_json(const SimulationSpec& spec);

/// One fitted image group: a class, or the pooled complement of a class.
struct FitGroup {
  std::string name;
  std::vector<std::string> labels;
  std::size_t n_images = 0;
  std::vector<FitReport> filters;
  BlockStats stats;
};

/// One-vs-all pairing: `positive` against every other class.
struct Pairing {
  std::string positive;
  std::size_t positive_group = 0;
  std::size_t negative_group = 0;
};

struct FitFile {
  std::size_t n_filters = 0;
  std::size_t n_pixels = 0;
  double zero_threshold = kDefaultZeroThreshold;
  std::vector<FitGroup> groups;
  std::vector<Pairing> pairings;
};

Json to_json(const FitFile& fit);
FitFile parse_fit_file(const Json& j);

Json to_json(const Moments& m);
Json to_json(const std::vector<Moments>& ms);
Json to_json(const CovMatrix& c);
Json to_json(const Histogram& h);

/// Required member access with a readable ParseError.
const Json& member(const Json& j, const char* key);
double number(const Json& j, const char* key);
std::size_t count(const Json& j, const char* key);

}  // namespace aggstat::cli

#endif  // AGGSTAT_TOOLS_CLI_IO_HPP_
