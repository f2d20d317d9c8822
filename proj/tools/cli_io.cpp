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


#include "cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace aggstat::cli {
namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_flat(const Json& j) {
  return std::all_of(j.begin(), j.end(), [](const Json& e) { return !e.is_structured(); });
}

void emit(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (j.is_number_float()) {
    out += format_double(j.get<double>());
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
    } else if (is_flat(j)) {
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ", ";
        first = false;
        emit(e, indent, out);
      }
      out += ']';
    } else {
      out += "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad + "  ";
        emit(e, indent + 1, out);
      }
      out += "\n" + pad + "]";
    }
  } else if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    if (j.size() <= 4 && is_flat(j)) {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ", ";
        first = false;
        out += Json(it.key()).dump() + ": ";
        emit(it.value(), indent, out);
      }
      out += '}';
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad + "  " + Json(it.key()).dump() + ": ";
      emit(it.value(), indent + 1, out);
    }
    out += "\n" + pad + "}";
  } else {
    out += j.dump();
  }
}

Json vec_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json mat_json(const std::vector<double>& flat, std::size_t n) {
  Json a = Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < n; ++j) row.push_back(flat[i * n + j]);
    a.push_back(std::move(row));
  }
  return a;
}

double num_or_nan(const Json& e, const char* what) {
  if (e.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!e.is_number()) throw ParseError(std::string(what) + ": expected a number");
  return e.get<double>();
}

std::vector<double> parse_vec(const Json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw ParseError(std::string(what) + ": expected an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> v;
  v.reserve(n);
  for (const auto& e : j) v.push_back(num_or_nan(e, what));
  return v;
}

std::vector<double> parse_mat(const Json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw ParseError(std::string(what) + ": expected " + std::to_string(n) + " rows");
  }
  std::vector<double> flat;
  flat.reserve(n * n);
  for (const auto& row : j) {
    const auto r = parse_vec(row, n, what);
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return flat;
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ParseError(std::string(what) + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw ParseError(std::string(what) + ": unknown key '" + it.key() + "'");
    }
  }
}

std::string string_member(const Json& j, const char* key) {
  const Json& v = member(j, key);
  if (!v.is_string()) throw ParseError(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

template <class T>
T parse_field(std::string_view s, std::size_t line, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" + std::string(s) + "'");
  }
  return v;
}

ActivationDump read_csv_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  auto chomp = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  chomp(line);
  if (line != "image_id,filter,pixel,value,label") {
    throw ParseError(path + ": header must be image_id,filter,pixel,value,label");
  }
  struct Row {
    std::size_t image, filter, pixel;
    double value;
  };
  std::vector<Row> rows;
  std::map<std::size_t, std::string> labels;
  std::size_t n_filters = 0, n_pixels = 0;
  for (std::size_t ln = 2; std::getline(in, line); ++ln) {
    chomp(line);
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (int k = 0; k < 4; ++k) {
      const auto c = rest.find(',');
      if (c == std::string_view::npos) throw ParseError(path + ": line " + std::to_string(ln) + " has too few fields");
      f.push_back(rest.substr(0, c));
      rest.remove_prefix(c + 1);
    }
    f.push_back(rest);
    Row r{parse_field<std::size_t>(f[0], ln, "image_id"), parse_field<std::size_t>(f[1], ln, "filter"),
          parse_field<std::size_t>(f[2], ln, "pixel"), parse_field<double>(f[3], ln, "value")};
    const std::string label(f[4]);
    const auto [it, fresh] = labels.emplace(r.image, label);
    if (!fresh && it->second != label) {
      throw ParseError(path + ": image " + std::to_string(r.image) + " has two labels");
    }
    n_filters = std::max(n_filters, r.filter + 1);
    n_pixels = std::max(n_pixels, r.pixel + 1);
    rows.push_back(r);
  }
  ActivationDump d;
  d.n_images = labels.size();
  d.n_filters = n_filters;
  d.n_pixels = n_pixels;
  std::map<std::size_t, std::size_t> index;
  for (const auto& [id, label] : labels) {
    index.emplace(id, d.labels.size());
    d.labels.push_back(label);
  }
  const std::size_t total = d.n_images * n_filters * n_pixels;
  if (rows.size() != total) {
    throw ParseError(path + ": " + std::to_string(rows.size()) + " rows, expected " + std::to_string(total) +
                     " for " + std::to_string(d.n_images) + " images x " + std::to_string(n_filters) +
                     " filters x " + std::to_string(n_pixels) + " pixels");
  }
  d.values.assign(total, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(total, false);
  for (const Row& r : rows) {
    const std::size_t k = (index[r.image] * n_filters + r.filter) * n_pixels + r.pixel;
    if (seen[k]) {
      throw ParseError(path + ": duplicate entry for image " + std::to_string(r.image) + ", filter " +
                       std::to_string(r.filter) + ", pixel " + std::to_string(r.pixel));
    }
    seen[k] = true;
    d.values[k] = r.value;
  }
  return d;
}

ActivationDump read_json_dump(const std::string& path) {
  const Json j = read_json(path);
  check_keys(j, {"kind", "n_images", "n_filters", "n_pixels", "labels", "values"}, "activation dump");
  if (string_member(j, "kind") != "activation_dump") throw ParseError(path + ": kind must be activation_dump");
  ActivationDump d;
  d.n_images = count(j, "n_images");
  d.n_filters = count(j, "n_filters");
  d.n_pixels = count(j, "n_pixels");
  const Json& labels = member(j, "labels");
  if (!labels.is_array()) throw ParseError("labels must be an array");
  for (const auto& l : labels) {
    if (!l.is_string()) throw ParseError("labels must be strings");
    d.labels.push_back(l.get<std::string>());
  }
  const Json& values = member(j, "values");
  if (!values.is_array()) throw ParseError("values must be an array");
  d.values.reserve(values.size());
  for (const auto& v : values) {
    if (!v.is_number()) throw ParseError("values must be numbers");
    d.values.push_back(v.get<double>());
  }
  return d;
}

}  // namespace

std::string to_text(const Json& j) {
  std::string out;
  emit(j, 0, out);
  out += '\n';
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
  if (!out) throw ParseError("error writing " + path);
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

const Json& member(const Json& j, const char* key) {
  if (!j.is_object()) throw ParseError(std::string("expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
  return *it;
}

double number(const Json& j, const char* key) {
  const Json& v = member(j, key);
  if (!v.is_number()) throw ParseError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

std::size_t count(const Json& j, const char* key) {
  const Json& v = member(j, key);
  if (!v.is_number_unsigned()) throw ParseError(std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

ActivationDump read_dump(const std::string& path) {
  ActivationDump d;
  if (ends_with(path, ".csv")) {
    d = read_csv_dump(path);
  } else if (ends_with(path, ".json")) {
    d = read_json_dump(path);
  } else {
    throw ParseError(path + ": activation dumps must end in .csv or .json");
  }
  try {
    d.validate();
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return d;
}

void write_dump(const std::string& path, const ActivationDump& dump) {
  if (ends_with(path, ".csv")) {
    std::string out = "image_id,filter,pixel,value,label\n";
    for (std::size_t i = 0; i < dump.n_images; ++i) {
      for (std::size_t f = 0; f < dump.n_filters; ++f) {
        for (std::size_t k = 0; k < dump.n_pixels; ++k) {
          out += std::to_string(i) + ',' + std::to_string(f) + ',' + std::to_string(k) + ',' +
                 format_double(dump.at(i, f, k)) + ',' + dump.labels[i] + '\n';
        }
      }
    }
    write_text(path, out);
  } else if (ends_with(path, ".json")) {
    Json j;
    j["kind"] = "activation_dump";
    j["n_images"] = dump.n_images;
    j["n_filters"] = dump.n_filters;
    j["n_pixels"] = dump.n_pixels;
    j["labels"] = dump.labels;
    j["values"] = vec_json(dump.values);
    write_text(path, to_text(j));
  } else {
    throw ParseError(path + ": activation dumps must end in .csv or .json");
  }
}

ConfigInput parse_activation_config(const Json& j) {
  check_keys(j, {"alpha", "beta", "gamma", "eps", "r_pixels", "activation", "eps_order"}, "activation config");
  ConfigInput in;
  ActivationConfig& c = in.cfg;
  if (j.contains("alpha")) c.alpha = number(j, "alpha");
  if (j.contains("beta")) c.beta = number(j, "beta");
  if (j.contains("gamma")) c.gamma_exp = number(j, "gamma");
  if (j.contains("eps")) c.eps = number(j, "eps");
  if (j.contains("eps_order")) c.eps_order = static_cast<unsigned>(count(j, "eps_order"));
  if (j.contains("r_pixels")) {
    c.r_pixels = count(j, "r_pixels");
    in.has_r_pixels = true;
  }
  if (j.contains("activation")) {
    const std::string a = string_member(j, "activation");
    if (a == "exp") {
      c.activation = Activation::kExp;
    } else if (a == "identity") {
      c.activation = Activation::kIdentity;
    } else {
      throw ParseError("activation must be \"exp\" or \"identity\", got \"" + a + "\"");
    }
  }
  return in;
}

Json to_json(const ActivationConfig& c) {
  Json j;
  j["activation"] = c.activation == Activation::kExp ? "exp" : "identity";
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma_exp;
  j["eps"] = c.eps;
  j["eps_order"] = c.eps_order;
  j["r_pixels"] = c.r_pixels;
  return j;
}

FCWeights parse_weights(const Json& j) {
  check_keys(j, {"weights"}, "weights file");
  const Json& a = member(j, "weights");
  if (!a.is_array()) throw ParseError("'weights' must be an array of numbers");
  FCWeights w;
  for (const auto& e : a) {
    if (!e.is_number()) throw ParseError("'weights' must be an array of numbers");
    w.weights.push_back(e.get<double>());
  }
  return w;
}

SimulationSpec parse_simulation_spec(const Json& j) {
  check_keys(j, {"classes", "rho_pix", "rho_filt", "r_pixels"}, "simulation spec");
  SimulationSpec s;
  s.rho_pix = j.contains("rho_pix") ? number(j, "rho_pix") : 0.0;
  s.rho_filt = j.contains("rho_filt") ? number(j, "rho_filt") : 0.0;
  s.r_pixels = count(j, "r_pixels");
  const Json& classes = member(j, "classes");
  if (!classes.is_array() || classes.empty()) throw ParseError("'classes' must be a non-empty array");
  std::set<std::string> names;
  for (const auto& c : classes) {
    check_keys(c, {"label", "n_images", "filters"}, "simulation class");
    SimulationClass sc;
    sc.label = string_member(c, "label");
    if (!names.insert(sc.label).second) throw ParseError("duplicate class label '" + sc.label + "'");
    sc.n_images = count(c, "n_images");
    const Json& filters = member(c, "filters");
    if (!filters.is_array() || filters.empty()) throw ParseError("'filters' must be a non-empty array");
    for (const auto& f : filters) {
      check_keys(f, {"p", "a", "s"}, "filter");
      sc.filters.push_back({number(f, "p"), number(f, "a"), number(f, "s")});
    }
    if (!s.classes.empty() && sc.filters.size() != s.classes.front().filters.size()) {
      throw ParseError("every class needs the same number of filters");
    }
    s.classes.push_back(std::move(sc));
  }
  return s;
}

Json to_json(const SimulationSpec& s) {
  Json j;
  Json classes = Json::array();
  for (const auto& c : s.classes) {
    Json jc;
    jc["label"] = c.label;
    jc["n_images"] = c.n_images;
    Json fs = Json::array();
    for (const auto& f : c.filters) fs.push_back(Json{{"p", f.p}, {"a", f.a}, {"s", f.s}});
    jc["filters"] = std::move(fs);
    classes.push_back(std::move(jc));
  }
  j["classes"] = std::move(classes);
  j["rho_pix"] = s.rho_pix;
  j["rho_filt"] = s.rho_filt;
  j["r_pixels"] = s.r_pixels;
  return j;
}

Json to_json(const Moments& m) { return Json{{"mean", m.mean}, {"variance", m.variance}}; }

Json to_json(const std::vector<Moments>& ms) {
  Json a = Json::array();
  for (const auto& m : ms) a.push_back(to_json(m));
  return a;
}

Json to_json(const CovMatrix& c) { return mat_json(c.entries(), c.dim()); }

Json to_json(const Histogram& h) {
  Json j;
  j["lo"] = h.lo;
  j["width"] = h.width;
  j["counts"] = h.counts;
  return j;
}

Json to_json(const FitFile& fit) {
  Json j;
  j["kind"] = "fit";
  j["n_filters"] = fit.n_filters;
  j["n_pixels"] = fit.n_pixels;
  j["zero_threshold"] = fit.zero_threshold;
  Json groups = Json::array();
  for (const auto& g : fit.groups) {
    Json jg;
    jg["name"] = g.name;
    jg["labels"] = g.labels;
    jg["n_images"] = g.n_images;
    Json filters = Json::array();
    for (const auto& r : g.filters) {
      Json jf;
      jf["p"] = r.params.p;
      jf["a"] = r.params.a;
      jf["s"] = r.params.s;
      jf["n_zero"] = r.n_zero;
      jf["n_pos"] = r.n_pos;
      jf["log_likelihood"] = r.log_likelihood;
      jf["ks_stat"] = r.ks_stat;
      jf["iterations"] = r.iterations;
      filters.push_back(std::move(jf));
    }
    jg["filters"] = std::move(filters);
    Json pixel = Json::array();
    for (const auto& st : g.stats.filters) {
      Json jp;
      jp["m1"] = vec_json(st.m1);
      jp["e11"] = mat_json(st.e11, st.n_pixels);
      jp["e12"] = mat_json(st.e12, st.n_pixels);
      jp["e22"] = mat_json(st.e22, st.n_pixels);
      pixel.push_back(std::move(jp));
    }
    jg["pixel_stats"] = std::move(pixel);
    const FilterSums& s = g.stats.sums;
    Json js;
    js["t1"] = vec_json(s.t1);
    js["t2"] = vec_json(s.t2);
    js["s11"] = mat_json(s.s11, s.n_filters);
    js["s12"] = mat_json(s.s12, s.n_filters);
    js["s22"] = mat_json(s.s22, s.n_filters);
    jg["filter_sums"] = std::move(js);
    groups.push_back(std::move(jg));
  }
  j["groups"] = std::move(groups);
  Json pairings = Json::array();
  for (const auto& p : fit.pairings) {
    Json jp;
    jp["positive"] = p.positive;
    jp["negative"] = fit.groups[p.negative_group].name;
    jp["positive_group"] = p.positive_group;
    jp["negative_group"] = p.negative_group;
    pairings.push_back(std::move(jp));
  }
  j["pairings"] = std::move(pairings);
  return j;
}

FitFile parse_fit_file(const Json& j) {
  check_keys(j, {"kind", "n_filters", "n_pixels", "zero_threshold", "groups", "pairings"}, "fit file");
  if (string_member(j, "kind") != "fit") throw ParseError("fit file: kind must be \"fit\"");
  FitFile fit;
  fit.n_filters = count(j, "n_filters");
  fit.n_pixels = count(j, "n_pixels");
  fit.zero_threshold = number(j, "zero_threshold");
  const std::size_t nf = fit.n_filters;
  const std::size_t r = fit.n_pixels;
  const Json& groups = member(j, "groups");
  if (!groups.is_array()) throw ParseError("fit file: 'groups' must be an array");
  for (const auto& jg : groups) {
    check_keys(jg, {"name", "labels", "n_images", "filters", "pixel_stats", "filter_sums"}, "fit group");
    FitGroup g;
    g.name = string_member(jg, "name");
    for (const auto& l : member(jg, "labels")) {
      if (!l.is_string()) throw ParseError("fit group labels must be strings");
      g.labels.push_back(l.get<std::string>());
    }
    g.n_images = count(jg, "n_images");
    const Json& filters = member(jg, "filters");
    if (!filters.is_array() || filters.size() != nf) {
      throw ParseError("fit group '" + g.name + "': expected " + std::to_string(nf) + " filter fits");
    }
    for (const auto& jf : filters) {
      check_keys(jf, {"p", "a", "s", "n_zero", "n_pos", "log_likelihood", "ks_stat", "iterations"}, "filter fit");
      FitReport rep;
      rep.params = {number(jf, "p"), number(jf, "a"), number(jf, "s")};
      rep.n_zero = count(jf, "n_zero");
      rep.n_pos = count(jf, "n_pos");
      rep.log_likelihood = num_or_nan(member(jf, "log_likelihood"), "log_likelihood");
      rep.ks_stat = num_or_nan(member(jf, "ks_stat"), "ks_stat");
      rep.iterations = static_cast<int>(count(jf, "iterations"));
      g.filters.push_back(rep);
    }
    const Json& pixel = member(jg, "pixel_stats");
    if (!pixel.is_array() || pixel.size() != nf) {
      throw ParseError("fit group '" + g.name + "': expected " + std::to_string(nf) + " pixel tables");
    }
    g.stats.r_pixels = r;
    for (const auto& jp : pixel) {
      check_keys(jp, {"m1", "e11", "e12", "e22"}, "pixel stats");
      PixelStats st;
      st.n_pixels = r;
      st.m1 = parse_vec(member(jp, "m1"), r, "m1");
      st.e11 = parse_mat(member(jp, "e11"), r, "e11");
      st.e12 = parse_mat(member(jp, "e12"), r, "e12");
      st.e22 = parse_mat(member(jp, "e22"), r, "e22");
      g.stats.filters.push_back(std::move(st));
    }
    const Json& js = member(jg, "filter_sums");
    check_keys(js, {"t1", "t2", "s11", "s12", "s22"}, "filter sums");
    FilterSums& s = g.stats.sums;
    s.n_filters = nf;
    s.t1 = parse_vec(member(js, "t1"), nf, "t1");
    s.t2 = parse_vec(member(js, "t2"), nf, "t2");
    s.s11 = parse_mat(member(js, "s11"), nf, "s11");
    s.s12 = parse_mat(member(js, "s12"), nf, "s12");
    s.s22 = parse_mat(member(js, "s22"), nf, "s22");
    fit.groups.push_back(std::move(g));
  }
  const Json& pairings = member(j, "pairings");
  if (!pairings.is_array()) throw ParseError("fit file: 'pairings' must be an array");
  for (const auto& jp : pairings) {
    check_keys(jp, {"positive", "negative", "positive_group", "negative_group"}, "pairing");
    Pairing p;
    p.positive = string_member(jp, "positive");
    p.positive_group = count(jp, "positive_group");
    p.negative_group = count(jp, "negative_group");
    if (p.positive_group >= fit.groups.size() || p.negative_group >= fit.groups.size()) {
      throw ParseError("pairing '" + p.positive + "' refers to a missing group");
    }
    fit.pairings.push_back(std::move(p));
  }
  return fit;
}

}  // namespace aggstat::cli
