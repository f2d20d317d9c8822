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


#include <omp.h>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using aggstat::cli::Json;

// Run configuration files: a flat JSON object whose keys are flag names
// ("zero-threshold" or "zero_threshold") and whose values are scalars.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json j = Json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        j[name] = opt->as<std::string>();
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return aggstat::cli::to_text(j);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    Json j;
    try {
      j = Json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file: expected a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (auto it = j.begin(); it != j.end(); ++it) {
      CLI::ConfigItem item;
      item.name = it.key();
      for (char& c : item.name) {
        if (c == '_') c = '-';
      }
      // Keys that are not top-level flags belong to the chosen subcommand.
      const auto subs = app_->get_subcommands();
      if (app_->get_option_no_throw("--" + item.name) == nullptr && !subs.empty()) {
        item.parents.push_back(subs.front()->get_name());
      }
      const Json& v = it.value();
      if (v.is_string()) {
        item.inputs.push_back(v.get<std::string>());
      } else if (v.is_boolean()) {
        item.inputs.push_back(v.get<bool>() ? "true" : "false");
      } else if (v.is_number_integer()) {
        item.inputs.push_back(v.dump());
      } else if (v.is_number()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        item.inputs.push_back(buf);
      } else {
        throw CLI::ConversionError("config file: '" + it.key() + "' must be a string, number or boolean");
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

}  // namespace

int main(int argc, char** argv) {
  namespace cli = aggstat::cli;
  CLI::App app{"Analytic statistics of the exp-activation / GAP / deactivation / FC aggregation block", "aggstat"};
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file of flag values (keys are flag names)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (results do not depend on it)")->check(CLI::PositiveNumber);

  cli::FitArgs fit;
  auto* sub_fit = app.add_subcommand("fit", "Fit zero-Gamma marginals and pixel moment tables to an activation dump");
  sub_fit->add_option("--input", fit.input, "Activation dump (.csv or .json)")->required()->check(CLI::ExistingFile);
  sub_fit->add_option("--output", fit.output, "Fit JSON")->required();
  sub_fit->add_option("--zero-threshold", fit.zero_threshold, "Values at or below this count as zero")
      ->capture_default_str();
  sub_fit->add_option("--tolerance", fit.tolerance, "Shape solver tolerance")->capture_default_str();

  cli::PredictArgs pred;
  auto* sub_pred = app.add_subcommand("predict", "Predict per-layer moments, output Gaussians and KL from a fit");
  sub_pred->add_option("--input", pred.input, "Fit JSON")->required()->check(CLI::ExistingFile);
  sub_pred->add_option("--activation", pred.activation, "Activation config JSON")->required()->check(CLI::ExistingFile);
  sub_pred->add_option("--weights", pred.weights, "FC weights JSON")->required()->check(CLI::ExistingFile);
  sub_pred->add_option("--output", pred.output, "Prediction JSON")->required();

  cli::SimulateArgs sim;
  auto* sub_sim = app.add_subcommand("simulate", "Monte Carlo run of a synthetic block, observed and predicted");
  sub_sim->add_option("--input", sim.input, "Simulation spec JSON")->required()->check(CLI::ExistingFile);
  sub_sim->add_option("--activation", sim.activation, "Activation config JSON")->required()->check(CLI::ExistingFile);
  sub_sim->add_option("--weights", sim.weights, "FC weights JSON")->required()->check(CLI::ExistingFile);
  sub_sim->add_option("--output", sim.output, "Simulation (or sweep) JSON")->required();
  sub_sim->add_option("--seed", sim.seed, "Random seed")->required();
  sub_sim->add_option("--sweep", sim.sweep, "PARAM=v1,v2,... over rho_pix, rho_filt, gamma, beta, alpha, eps");
  sub_sim->add_option("--dump", sim.dump, "Also write the generated activations (.csv or .json)");
  sub_sim->add_option("--zero-threshold", sim.zero_threshold, "Zero threshold of the fit")->capture_default_str();
  sub_sim->add_option("--tolerance", sim.tolerance, "Shape solver tolerance of the fit")->capture_default_str();

  cli::CompareArgs cmp;
  auto* sub_cmp = app.add_subcommand("compare", "Scatter data and relative errors of predicted against observed");
  sub_cmp->add_option("--input", cmp.input, "Prediction or simulation JSON (predicted side)")
      ->required()
      ->check(CLI::ExistingFile);
  sub_cmp->add_option("--observed", cmp.observed, "Simulation or prediction JSON (observed side)")
      ->required()
      ->check(CLI::ExistingFile);
  sub_cmp->add_option("--output", cmp.output, "Summary JSON")->required();
  sub_cmp->add_option("--scatter", cmp.scatter, "Scatter CSV (default: the output path with .csv)");

  cli::OptimizeArgs opt;
  auto* sub_opt = app.add_subcommand("optimize", "Gradient ascent on the predicted KL over FC weights and gamma");
  sub_opt->add_option("--input", opt.input, "Fit JSON")->required()->check(CLI::ExistingFile);
  sub_opt->add_option("--activation", opt.activation, "Activation config JSON")->required()->check(CLI::ExistingFile);
  sub_opt->add_option("--weights", opt.weights, "Initial FC weights JSON")->required()->check(CLI::ExistingFile);
  sub_opt->add_option("--output", opt.output, "Optimization JSON")->required();
  sub_opt->add_option("--max-iters", opt.max_iters, "Iteration limit")->capture_default_str();
  sub_opt->add_option("--tolerance", opt.tolerance, "Projected-gradient stopping tolerance")->capture_default_str();
  sub_opt->add_flag("--fix-gamma", opt.fix_gamma, "Keep gamma at its configured value");
  sub_opt->add_option("--gamma-min", opt.gamma_min, "Lower bound of gamma")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsage;
  }

  if (threads > 0) omp_set_num_threads(threads);
  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    if (chosen == sub_fit) cli::cmd_fit(fit);
    else if (chosen == sub_pred) cli::cmd_predict(pred);
    else if (chosen == sub_sim) cli::cmd_simulate(sim);
    else if (chosen == sub_cmp) cli::cmd_compare(cmp);
    else cli::cmd_optimize(opt);
  } catch (const cli::ExitError& e) {
    std::cerr << "aggstat " << name << ": " << e.what() << '\n';
    return e.code();
  } catch (const aggstat::PropagationError& e) {
    std::cerr << "aggstat " << name << ": " << e.what() << '\n';
    return cli::kPropagationFailed;
  } catch (const aggstat::OverflowError& e) {
    std::cerr << "aggstat " << name << ": " << e.what() << '\n';
    return cli::kOverflow;
  } catch (const std::exception& e) {
    std::cerr << "aggstat " << name << ": " << e.what() << '\n';
    return cli::kBadInput;
  }
  return cli::kOk;
}
