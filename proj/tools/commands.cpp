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


#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <vector>

#include "aggstat/errors.hpp"
#include "aggstat/fitting.hpp"
#include "aggstat/klopt.hpp"
#include "aggstat/numeric.hpp"
#include "aggstat/propagation.hpp"
#include "aggstat/simulator.hpp"

namespace aggstat::cli {
namespace {

struct GroupDef {
  std::string name;
  std::vector<std::string> labels;
  std::string label;  // the class, for selecting images
  bool complement = false;
};

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// One group per class; with two or more classes also the complement of each
// class (deduplicated by label set) and one pairing per class.
std::vector<GroupDef> group_defs(const std::vector<std::string>& classes, std::vector<Pairing>* pairings) {
  std::vector<GroupDef> defs;
  std::map<std::vector<std::string>, std::size_t> by_labels;
  for (const auto& c : classes) {
    by_labels.emplace(std::vector<std::string>{c}, defs.size());
    defs.push_back({c, {c}, c, false});
  }
  if (classes.size() < 2) return defs;
  for (const auto& c : classes) {
    std::vector<std::string> rest;
    for (const auto& o : classes) {
      if (o != c) rest.push_back(o);
    }
    auto key = rest;
    std::sort(key.begin(), key.end());
    auto [it, fresh] = by_labels.emplace(key, defs.size());
    if (fresh) defs.push_back({join(rest, "+"), rest, c, true});
    if (pairings) pairings->push_back({c, by_labels.at({c}), it->second});
  }
  return defs;
}

ActivationDump select_group(const ActivationDump& dump, const GroupDef& g) {
  return dump.select(g.label, g.complement);
}

ActivationConfig resolve_config(const ConfigInput& in, std::size_t r_data) {
  ActivationConfig cfg = in.cfg;
  if (in.has_r_pixels && cfg.r_pixels != r_data) {
    throw ExitError(kPropagationFailed, "config: r_pixels = " + std::to_string(cfg.r_pixels) +
                                            " but the data has R = " + std::to_string(r_data));
  }
  cfg.r_pixels = r_data;
  return cfg;
}

void check_chain_inputs(const ActivationConfig& cfg, const FCWeights& w, std::size_t n_filters) {
  try {
    cfg.validate();
    w.validate();
  } catch (const Error& e) {
    throw ExitError(kPropagationFailed, std::string("config: ") + e.what());
  }
  if (w.weights.size() != n_filters) {
    throw ExitError(kPropagationFailed, "config: " + std::to_string(w.weights.size()) + " FC weights for " +
                                            std::to_string(n_filters) + " filters");
  }
}

Json weights_json(const FCWeights& w) {
  Json a = Json::array();
  for (double x : w.weights) a.push_back(x);
  return a;
}

Json output_json(double mu, double sigma) { return Json{{"mu", mu}, {"sigma", sigma}}; }

Json prediction_group(const FitGroup& g, const BlockPrediction& p) {
  Json j;
  j["name"] = g.name;
  j["labels"] = g.labels;
  j["conv"] = to_json(p.conv);
  j["activated"] = to_json(p.activated);
  j["gap"] = to_json(p.gap);
  Json gg = Json::array();
  for (const auto& x : p.gap_gamma) gg.push_back(Json{{"a", x.a}, {"s", x.s}});
  j["gap_gamma"] = std::move(gg);
  j["deactivated"] = to_json(p.deactivated);
  j["gap_cov"] = to_json(p.gap_cov);
  j["deact_cov"] = to_json(p.deact_cov);
  j["output"] = output_json(p.output.mu, p.output.sigma);
  return j;
}

std::vector<ZeroGammaParams> fitted_params(const FitGroup& g) {
  std::vector<ZeroGammaParams> out;
  for (const auto& r : g.filters) out.push_back(r.params);
  return out;
}

BlockPrediction predict_group(const FitGroup& g, const ActivationConfig& cfg, const FCWeights& w) {
  try {
    return predict_block(fitted_params(g), g.stats, cfg, w);
  } catch (const PropagationError& e) {
    const std::string detail = std::string(e.what()).substr(e.layer().size() + 2);
    throw PropagationError(e.layer(), "group '" + g.name + "': " + detail, e.cause());
  }
}

template <class E>
bool cause_is(const PropagationError& e) {
  if (!e.cause()) return false;
  try {
    std::rethrow_exception(e.cause());
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
}

ActivationDump concat(std::vector<ActivationDump> parts) {
  ActivationDump out = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    out.values.insert(out.values.end(), parts[i].values.begin(), parts[i].values.end());
    out.labels.insert(out.labels.end(), parts[i].labels.begin(), parts[i].labels.end());
    out.n_images += parts[i].n_images;
  }
  return out;
}

ActivationDump generate_spec(const SimulationSpec& spec, std::uint64_t seed) {
  std::vector<ActivationDump> parts;
  std::size_t first_image = 0;
  for (const auto& c : spec.classes) {
    SyntheticSpec s;
    s.filters = c.filters;
    s.rho_pix = spec.rho_pix;
    s.rho_filt = spec.rho_filt;
    s.r_pixels = spec.r_pixels;
    s.n_images = c.n_images;
    s.seed = seed;
    s.label = c.label;
    try {
      parts.push_back(generate(s, first_image));
    } catch (const Error& e) {
      throw ExitError(kBadInput, "spec: class '" + c.label + "': " + e.what());
    }
    first_image += c.n_images;
  }
  return concat(std::move(parts));
}

Json observation_group(const GroupDef& g, std::size_t n_images, const Observation& o) {
  Json j;
  j["name"] = g.name;
  j["labels"] = g.labels;
  j["n_images"] = n_images;
  j["conv"] = to_json(o.conv);
  j["activated"] = to_json(o.activated);
  j["gap"] = to_json(o.gap);
  j["deactivated"] = to_json(o.deactivated);
  j["gap_cov"] = to_json(o.gap_cov);
  j["deact_cov"] = to_json(o.deact_cov);
  j["output"] = output_json(o.output.mean, std::sqrt(o.output.variance));
  Json h;
  h["output"] = to_json(o.output_hist);
  Json gh = Json::array();
  for (const auto& x : o.gap_hist) gh.push_back(to_json(x));
  h["gap"] = std::move(gh);
  j["histograms"] = std::move(h);
  return j;
}

Json simulate_once(const SimulationSpec& spec, const ConfigInput& cfg_in, const FCWeights& w,
                   std::uint64_t seed, const SimulateArgs& args, bool write_generated) {
  const ActivationConfig cfg = resolve_config(cfg_in, spec.r_pixels);
  check_chain_inputs(cfg, w, spec.classes.front().filters.size());

  const ActivationDump dump = generate_spec(spec, seed);
  if (write_generated) write_dump(args.dump, dump);

  std::vector<Pairing> pairings;
  const auto defs = group_defs(dump.classes(), &pairings);
  Json groups = Json::array();
  std::vector<std::vector<double>> outputs;
  for (const auto& g : defs) {
    const ActivationDump sub = select_group(dump, g);
    ForwardTrace trace;
    try {
      trace = forward(sub, cfg, w);
    } catch (const OverflowError& e) {
      throw ExitError(kOverflow, "forward pass, group '" + g.name + "': " + e.what());
    } catch (const Error& e) {
      throw ExitError(kPropagationFailed, "forward pass, group '" + g.name + "': " + e.what());
    }
    groups.push_back(observation_group(g, sub.n_images, observe(trace)));
    outputs.push_back(std::move(trace.output));
  }
  Json obs_pairings = Json::array();
  for (const auto& p : pairings) {
    Json jp;
    jp["positive"] = p.positive;
    jp["negative"] = defs[p.negative_group].name;
    try {
      jp["kl"] = observed_kl(outputs[p.positive_group], outputs[p.negative_group]);
    } catch (const Error&) {
      jp["kl"] = nullptr;
    }
    obs_pairings.push_back(std::move(jp));
  }

  const FitFile fit = fit_dump(dump, args.zero_threshold, args.tolerance);
  Json predicted;
  try {
    predicted = predict_fit(fit, cfg, w);
  } catch (const PropagationError& e) {
    if (cause_is<DivergenceError>(e)) {
      throw ExitError(kOverflow, std::string("forward pass overflow, the activated values have no finite ") +
                                     "second moment: " + e.what());
    }
    throw ExitError(kPropagationFailed, e.what());
  }

  Json j;
  j["kind"] = "simulation";
  j["seed"] = seed;
  j["spec"] = to_json(spec);
  j["config"] = to_json(cfg);
  j["weights"] = weights_json(w);
  j["observed"] = Json{{"groups", std::move(groups)}, {"pairings", std::move(obs_pairings)}};
  j["predicted"] = std::move(predicted);
  return j;
}

struct Sweep {
  std::string parameter;
  std::vector<double> values;
};

Sweep parse_sweep(const std::string& text) {
  static const std::vector<std::string> kParams = {"rho_pix", "rho_filt", "gamma", "beta", "alpha", "eps"};
  const auto eq = text.find('=');
  Sweep s;
  s.parameter = text.substr(0, eq);
  if (eq == std::string::npos || std::find(kParams.begin(), kParams.end(), s.parameter) == kParams.end()) {
    throw ExitError(kUsage, "--sweep expects PARAM=v1,v2,... with PARAM one of " + join(kParams, ", "));
  }
  std::string_view rest(text);
  rest.remove_prefix(eq + 1);
  while (true) {
    const auto c = rest.find(',');
    const std::string_view item = rest.substr(0, c);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ExitError(kUsage, "--sweep: bad value '" + std::string(item) + "'");
    }
    s.values.push_back(v);
    if (c == std::string_view::npos) break;
    rest.remove_prefix(c + 1);
  }
  return s;
}

void apply_sweep(const std::string& param, double v, SimulationSpec& spec, ConfigInput& cfg) {
  if (param == "rho_pix") spec.rho_pix = v;
  else if (param == "rho_filt") spec.rho_filt = v;
  else if (param == "gamma") cfg.cfg.gamma_exp = v;
  else if (param == "beta") cfg.cfg.beta = v;
  else if (param == "alpha") cfg.cfg.alpha = v;
  else if (param == "eps") cfg.cfg.eps = v;
}

// Comparison records.

struct Record {
  std::string quantity;
  std::string subject;
  std::string index;
  double value = 0.0;
};

double value_of(const Json& v) {
  if (v.is_null()) return std::nan("");
  if (!v.is_number()) throw ParseError("expected a number in a result file");
  return v.get<double>();
}

const Json& records_source(const Json& j, bool predicted_side) {
  const std::string kind = member(j, "kind").is_string() ? member(j, "kind").get<std::string>() : "";
  if (kind == "prediction") return j;
  if (kind == "simulation") return member(j, predicted_side ? "predicted" : "observed");
  if (kind == "sweep") throw ExitError(kBadInput, "sweep files hold several runs; compare one run at a time");
  throw ExitError(kBadInput, "expected a prediction or simulation file, got kind '" + kind + "'");
}

void moment_records(const Json& ms, const std::string& q, const std::string& subject, std::vector<Record>& out) {
  if (!ms.is_array()) throw ParseError("'" + q + "' must be an array");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const double var = value_of(member(ms[i], "variance"));
    out.push_back({q + "_mean", subject, std::to_string(i), value_of(member(ms[i], "mean"))});
    out.push_back({q + "_std", subject, std::to_string(i), var >= 0.0 ? std::sqrt(var) : std::nan("")});
  }
}

void cov_records(const Json& m, const std::string& q, const std::string& subject, std::vector<Record>& out) {
  if (!m.is_array()) throw ParseError("'" + q + "' must be a matrix");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i].is_array() || m[i].size() != m.size()) throw ParseError("'" + q + "' must be square");
    for (std::size_t k = i + 1; k < m.size(); ++k) {
      out.push_back({q, subject, std::to_string(i) + ":" + std::to_string(k), value_of(m[i][k])});
    }
  }
}

std::vector<Record> extract_records(const Json& src) {
  std::vector<Record> out;
  const Json& groups = member(src, "groups");
  const Json& pairings = member(src, "pairings");
  if (!groups.is_array() || !pairings.is_array()) throw ParseError("'groups' and 'pairings' must be arrays");
  for (const auto& g : groups) {
    const std::string name = member(g, "name").get<std::string>();
    moment_records(member(g, "gap"), "gap", name, out);
    moment_records(member(g, "deactivated"), "deact", name, out);
    const Json& o = member(g, "output");
    out.push_back({"output_mean", name, "0", value_of(member(o, "mu"))});
    out.push_back({"output_std", name, "0", value_of(member(o, "sigma"))});
    cov_records(member(g, "gap_cov"), "gap_cov", name, out);
    cov_records(member(g, "deact_cov"), "deact_cov", name, out);
  }
  for (const auto& p : pairings) {
    const std::string subject =
        member(p, "positive").get<std::string>() + " vs " + member(p, "negative").get<std::string>();
    out.push_back({"kl", subject, "0", value_of(member(p, "kl"))});
  }
  return out;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// |pred - obs| / |obs|; NaN when undefined.
double rel_error(double obs, double pred) {
  if (!std::isfinite(obs) || !std::isfinite(pred)) return std::nan("");
  if (obs == 0.0) return pred == 0.0 ? 0.0 : std::nan("");
  return std::abs(pred - obs) / std::abs(obs);
}

Json error_summary(std::vector<double> errs, std::size_t undefined) {
  Json j;
  j["count"] = errs.size();
  j["undefined"] = undefined;
  if (errs.empty()) {
    j["mean"] = nullptr;
    j["median"] = nullptr;
    j["max"] = nullptr;
    return j;
  }
  std::sort(errs.begin(), errs.end());
  const std::size_t n = errs.size();
  j["mean"] = pairwise_sum(errs) / static_cast<double>(n);
  j["median"] = n % 2 ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
  j["max"] = errs.back();
  return j;
}

std::string default_scatter_path(const std::string& output) {
  const auto slash = output.find_last_of('/');
  const auto dot = output.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return output.substr(0, dot) + ".csv";
  }
  return output + ".csv";
}

}  // namespace

FitFile fit_dump(const ActivationDump& dump, double zero_threshold, double tolerance) {
  FitFile fit;
  fit.n_filters = dump.n_filters;
  fit.n_pixels = dump.n_pixels;
  fit.zero_threshold = zero_threshold;
  const auto defs = group_defs(dump.classes(), &fit.pairings);
  for (const auto& d : defs) {
    const ActivationDump sub = select_group(dump, d);
    FitGroup g;
    g.name = d.name;
    g.labels = d.labels;
    g.n_images = sub.n_images;
    for (std::size_t f = 0; f < sub.n_filters; ++f) {
      try {
        g.filters.push_back(fit_zero_gamma(sub.filter_values(f), zero_threshold, tolerance));
      } catch (const Error& e) {
        throw ExitError(kFitFailed, "group '" + d.name + "', filter " + std::to_string(f) + ": " + e.what());
      }
    }
    try {
      g.stats = estimate_block_stats(sub);
    } catch (const Error& e) {
      throw ExitError(kFitFailed, "group '" + d.name + "', pixel statistics: " + e.what());
    }
    fit.groups.push_back(std::move(g));
  }
  return fit;
}

Json predict_fit(const FitFile& fit, const ActivationConfig& cfg, const FCWeights& w) {
  std::vector<BlockPrediction> preds;
  Json groups = Json::array();
  for (const auto& g : fit.groups) {
    preds.push_back(predict_group(g, cfg, w));
    groups.push_back(prediction_group(g, preds.back()));
  }
  Json pairings = Json::array();
  for (const auto& p : fit.pairings) {
    const std::string neg = fit.groups[p.negative_group].name;
    Json jp;
    jp["positive"] = p.positive;
    jp["negative"] = neg;
    const GaussianPair pair{preds[p.positive_group].output, preds[p.negative_group].output};
    jp["output_positive"] = output_json(pair.pos.mu, pair.pos.sigma);
    jp["output_negative"] = output_json(pair.neg.mu, pair.neg.sigma);
    try {
      jp["kl"] = kl_gaussian(pair);
    } catch (const Error& e) {
      throw PropagationError("kl", "pairing '" + p.positive + "' vs '" + neg + "': " + e.what(),
                             std::current_exception());
    }
    pairings.push_back(std::move(jp));
  }
  return Json{{"groups", std::move(groups)}, {"pairings", std::move(pairings)}};
}

void cmd_fit(const FitArgs& args) {
  if (!(args.zero_threshold >= 0.0)) throw ExitError(kUsage, "--zero-threshold must be >= 0");
  if (!(args.tolerance > 0.0)) throw ExitError(kUsage, "--tolerance must be > 0");
  const ActivationDump dump = read_dump(args.input);
  write_text(args.output, to_text(to_json(fit_dump(dump, args.zero_threshold, args.tolerance))));
}

void cmd_predict(const PredictArgs& args) {
  const FitFile fit = parse_fit_file(read_json(args.input));
  const ConfigInput cfg_in = parse_activation_config(read_json(args.activation));
  const FCWeights w = parse_weights(read_json(args.weights));
  const ActivationConfig cfg = resolve_config(cfg_in, fit.n_pixels);
  Json body;
  try {
    body = predict_fit(fit, cfg, w);
  } catch (const PropagationError& e) {
    throw ExitError(kPropagationFailed, e.what());
  }
  Json j;
  j["kind"] = "prediction";
  j["config"] = to_json(cfg);
  j["weights"] = weights_json(w);
  j["groups"] = std::move(body["groups"]);
  j["pairings"] = std::move(body["pairings"]);
  write_text(args.output, to_text(j));
}

void cmd_simulate(const SimulateArgs& args) {
  const SimulationSpec spec = parse_simulation_spec(read_json(args.input));
  const ConfigInput cfg_in = parse_activation_config(read_json(args.activation));
  const FCWeights w = parse_weights(read_json(args.weights));
  if (args.sweep.empty()) {
    write_text(args.output, to_text(simulate_once(spec, cfg_in, w, args.seed, args, !args.dump.empty())));
    return;
  }
  if (!args.dump.empty()) throw ExitError(kUsage, "--dump cannot be combined with --sweep");
  const Sweep sweep = parse_sweep(args.sweep);
  Json runs = Json::array();
  for (double v : sweep.values) {
    SimulationSpec s = spec;
    ConfigInput c = cfg_in;
    apply_sweep(sweep.parameter, v, s, c);
    try {
      runs.push_back(Json{{"value", v}, {"simulation", simulate_once(s, c, w, args.seed, args, false)}});
    } catch (const ExitError& e) {
      throw ExitError(e.code(), sweep.parameter + " = " + csv_number(v) + ": " + e.what());
    }
  }
  Json j;
  j["kind"] = "sweep";
  j["parameter"] = sweep.parameter;
  j["seed"] = args.seed;
  j["runs"] = std::move(runs);
  write_text(args.output, to_text(j));
}

void cmd_compare(const CompareArgs& args) {
  const Json pred_file = read_json(args.input);
  const Json obs_file = read_json(args.observed);
  const std::vector<Record> pred = extract_records(records_source(pred_file, true));
  const std::vector<Record> obs = extract_records(records_source(obs_file, false));
  if (pred.size() != obs.size()) {
    throw ExitError(kMisaligned, std::to_string(pred.size()) + " predicted records but " +
                                     std::to_string(obs.size()) + " observed records");
  }
  std::string csv = "quantity,subject,index,observed,predicted,rel_error\n";
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> per_quantity;
  std::vector<double> all;
  std::size_t all_undefined = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Record& p = pred[i];
    const Record& o = obs[i];
    if (p.quantity != o.quantity || p.subject != o.subject || p.index != o.index) {
      throw ExitError(kMisaligned, "record " + std::to_string(i) + ": predicted " + p.quantity + " of '" +
                                       p.subject + "' [" + p.index + "] against observed " + o.quantity +
                                       " of '" + o.subject + "' [" + o.index + "]");
    }
    const double err = rel_error(o.value, p.value);
    csv += csv_field(p.quantity) + ',' + csv_field(p.subject) + ',' + p.index + ',' + csv_number(o.value) + ',' +
           csv_number(p.value) + ',' + csv_number(err) + '\n';
    if (!per_quantity.count(p.quantity)) order.push_back(p.quantity);
    auto& slot = per_quantity[p.quantity];
    if (std::isnan(err)) {
      ++slot.second;
      ++all_undefined;
    } else {
      slot.first.push_back(err);
      all.push_back(err);
    }
  }
  Json quantities = Json::object();
  for (const auto& q : order) quantities[q] = error_summary(per_quantity[q].first, per_quantity[q].second);
  Json j;
  j["kind"] = "comparison";
  j["records"] = pred.size();
  j["quantities"] = std::move(quantities);
  j["overall"] = error_summary(all, all_undefined);
  write_text(args.output, to_text(j));
  write_text(args.scatter.empty() ? default_scatter_path(args.output) : args.scatter, csv);
}

void cmd_optimize(const OptimizeArgs& args) {
  if (!(args.tolerance >= 0.0)) throw ExitError(kUsage, "--tolerance must be >= 0");
  if (!(args.gamma_min > 0.0 && args.gamma_min <= 1.0)) throw ExitError(kUsage, "--gamma-min must lie in (0, 1]");
  const FitFile fit = parse_fit_file(read_json(args.input));
  const ConfigInput cfg_in = parse_activation_config(read_json(args.activation));
  const FCWeights w = parse_weights(read_json(args.weights));
  const ActivationConfig cfg = resolve_config(cfg_in, fit.n_pixels);
  if (fit.pairings.empty()) {
    throw ExitError(kBadInput, "the fit file has no class pairings; optimization needs two or more classes");
  }
  if (cfg.eps != 0.0) std::cerr << "aggstat optimize: note: the optimizer uses eps = 0\n";

  std::vector<BlockPrediction> preds;
  for (const auto& g : fit.groups) {
    try {
      preds.push_back(predict_group(g, cfg, w));
    } catch (const PropagationError& e) {
      throw ExitError(kPropagationFailed, e.what());
    }
  }

  AscendOptions opts;
  opts.max_iters = args.max_iters;
  opts.tol = args.tolerance;
  opts.free_gamma = !args.fix_gamma;
  opts.gamma_min = args.gamma_min;

  auto state_json = [](double kl, double gamma, const FCWeights& ws) {
    return Json{{"kl", kl}, {"gamma", gamma}, {"weights", weights_json(ws)}};
  };
  Json pairings = Json::array();
  for (const auto& p : fit.pairings) {
    const std::string neg = fit.groups[p.negative_group].name;
    const auto& pp = preds[p.positive_group];
    const auto& pn = preds[p.negative_group];
    OptState init;
    init.weights = w;
    init.gamma_exp = cfg.gamma_exp;
    OptState st;
    try {
      const KlObjective objective(ClassGapGamma{pp.gap_gamma, pp.gap_cov},
                                  ClassGapGamma{pn.gap_gamma, pn.gap_cov});
      st = ascend(init, objective, opts);
    } catch (const Error& e) {
      throw ExitError(kOptimizerDomain, "pairing '" + p.positive + "' vs '" + neg + "': " + e.what());
    }
    Json jp;
    jp["positive"] = p.positive;
    jp["negative"] = neg;
    jp["initial"] = state_json(st.kl_history.front(), init.gamma_exp, init.weights);
    jp["final"] = state_json(st.kl_history.back(), st.gamma_exp, st.weights);
    jp["iterations"] = st.iteration;
    Json traj = Json::array();
    for (std::size_t k = 0; k < st.kl_history.size(); ++k) {
      traj.push_back(Json{{"iteration", k},
                          {"kl", st.kl_history[k]},
                          {"gamma", st.gamma_history[k]},
                          {"weight_norm", st.weight_norm_history[k]}});
    }
    jp["trajectory"] = std::move(traj);
    pairings.push_back(std::move(jp));
  }
  Json j;
  j["kind"] = "optimization";
  j["config"] = to_json(cfg);
  j["options"] = Json{{"max_iters", args.max_iters},
                      {"tolerance", args.tolerance},
                      {"fix_gamma", args.fix_gamma},
                      {"gamma_min", args.gamma_min}};
  j["pairings"] = std::move(pairings);
  write_text(args.output, to_text(j));
}

}  // namespace aggstat::cli
