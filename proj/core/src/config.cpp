#include "gfflab/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "gfflab/gff.hpp"

namespace gfflab {

using nlohmann::json;

ConfigError::ConfigError(const std::string& f, int l, const std::string& what)
    : Error(what + (f.empty() ? "" : " [field: " + f + "]") + (l > 0 ? " [line " + std::to_string(l) + "]" : "")),
      field(f),
      line(l) {}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"theorem1", "lejan",         "lupu",       "folding",
                                                 "shift",    "mass_scaling",  "arcs_count", "dynkin_optional"};
  return names;
}

const std::map<std::string, double>& tolerance_defaults() {
  static const std::map<std::string, double> t = {
      {"z", 4.0},
      {"ks_alpha", 0.01},
      {"shift_ks_alpha", 0.005},
      {"ks_allowed_failures", 1.0},
      {"violation_fraction", 0.02},
      {"theorem1_relative", 0.15},
      {"arcs_relative", 0.30},
      {"mass_ratio_lo", 3.4},
      {"mass_ratio_hi", 4.6},
      {"mass_relative", 0.25},
      {"mass_stability", 0.05},
  };
  return t;
}

double ExperimentConfig::tolerance(const std::string& name) const {
  auto it = tolerances.find(name);
  if (it != tolerances.end()) return it->second;
  auto d = tolerance_defaults().find(name);
  if (d == tolerance_defaults().end()) throw Error("unknown tolerance '" + name + "'");
  return d->second;
}

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  using SB = SideBoundary;
  if (experiment == "lejan" || experiment == "lupu") {
    c.domain = {Shape::square, 7, 7, {SB::dirichlet, SB::dirichlet, SB::dirichlet, SB::dirichlet}, 1.0};
    c.replicas = 200000;
  } else if (experiment == "folding") {
    c.domain = {Shape::square, 17, 17, {SB::dirichlet, SB::dirichlet, SB::dirichlet, SB::dirichlet}, 1.0};
    c.replicas = 100000;
  } else if (experiment == "theorem1") {
    c.domain = {Shape::half_disc, 32, 32, {SB::dirichlet, SB::dirichlet, SB::dirichlet, SB::dirichlet}, 1.0};
    c.grid_ladder = {32, 64, 128};
    c.replicas = 20000;
  } else if (experiment == "shift") {
    c.domain = {Shape::half_disc, 128, 128, {SB::dirichlet, SB::dirichlet, SB::dirichlet, SB::dirichlet}, 1.0};
    c.grid_ladder = {128};
    c.offsets = {0.0, 0.6 * kLambda, kLambda};
    c.replicas = 20000;
  } else if (experiment == "mass_scaling") {
    c.domain = {Shape::upper_half_box, 400, 200, {SB::dirichlet, SB::dirichlet, SB::dirichlet, SB::dirichlet}, 1.0};
    c.grid_ladder = {200, 400};
    c.eps_ladder = {0.05, 0.10};
    c.replicas = 2;
  } else if (experiment == "arcs_count") {
    c.domain = {Shape::half_disc, 64, 64, {SB::neumann, SB::dirichlet, SB::dirichlet, SB::dirichlet}, 1.0};
    c.grid_ladder = {64};
    c.replicas = 20000;
    c.depth = 6;
  } else if (experiment == "dynkin_optional") {
    c.domain = {Shape::square, 9, 9, {SB::dirichlet, SB::dirichlet, SB::dirichlet, SB::dirichlet}, 1.0};
    c.replicas = 20000;
  } else {
    throw ConfigError("experiment", 0, "unknown experiment '" + experiment + "'");
  }
  return c;
}

namespace {

int line_of_key(const std::string& text, const std::string& key, int occurrence) {
  std::string pat = "\"" + key + "\"";
  std::size_t pos = 0;
  for (int k = 0; k < occurrence; ++k) {
    pos = text.find(pat, k == 0 ? 0 : pos + 1);
    if (pos == std::string::npos) return 0;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

int line_of_byte(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
}

struct Reader {
  const std::string& text;

  [[noreturn]] void fail(const std::string& path, const std::string& key, const std::string& msg) const {
    throw ConfigError(path, line_of_key(text, key, 1), msg);
  }

  void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) throw ConfigError(path, 0, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok |= it.key() == a;
      if (!ok) fail(path.empty() ? it.key() : path + "." + it.key(), it.key(), "unknown key '" + it.key() + "'");
    }
  }

  double number(const json& j, const std::string& path, const std::string& key) const {
    if (!j.is_number()) fail(path, key, "expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, key, "expected a finite number");
    return v;
  }

  std::int64_t integer(const json& j, const std::string& path, const std::string& key) const {
    if (!j.is_number_integer()) fail(path, key, "expected an integer");
    return j.get<std::int64_t>();
  }

  std::string string(const json& j, const std::string& path, const std::string& key) const {
    if (!j.is_string()) fail(path, key, "expected a string");
    return j.get<std::string>();
  }
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  // Duplicate keys are detected per object while parsing.
  std::vector<std::set<std::string>> scopes;
  std::map<std::string, int> seen_count;
  json doc;
  try {
    doc = json::parse(text, [&](int, json::parse_event_t ev, json& parsed) {
      if (ev == json::parse_event_t::object_start) scopes.emplace_back();
      if (ev == json::parse_event_t::object_end) scopes.pop_back();
      if (ev == json::parse_event_t::key) {
        std::string k = parsed.get<std::string>();
        int occ = ++seen_count[k];
        if (!scopes.back().insert(k).second)
          throw ConfigError(k, line_of_key(text, k, occ), "duplicate key '" + k + "'");
      }
      return true;
    });
  } catch (const json::parse_error& e) {
    throw ConfigError("", line_of_byte(text, e.byte), std::string("malformed document: ") + e.what());
  }
  Reader r{text};
  r.only_keys(doc, "", {"experiment", "domain", "c", "replicas", "grid_ladder", "offsets", "eps_ladder", "seed",
                        "tolerances", "output_dir", "workers", "depth", "soup_method", "identity_coupling"});
  if (!doc.contains("experiment")) throw ConfigError("experiment", 0, "missing required field");
  std::string name = r.string(doc["experiment"], "experiment", "experiment");
  bool known = false;
  for (const auto& n : experiment_names()) known |= n == name;
  if (!known) r.fail("experiment", "experiment", "unknown experiment '" + name + "'");
  ExperimentConfig c = default_config(name);

  if (doc.contains("domain")) {
    const json& d = doc["domain"];
    r.only_keys(d, "domain", {"shape", "width", "height", "sides", "conductance"});
    if (d.contains("shape")) {
      try {
        c.domain.shape = shape_from_string(r.string(d["shape"], "domain.shape", "shape"));
      } catch (const DomainError& e) {
        r.fail("domain.shape", "shape", e.what());
      }
    }
    if (d.contains("width")) {
      auto w = r.integer(d["width"], "domain.width", "width");
      if (w < 2 || w > 100000) r.fail("domain.width", "width", "out of range [2, 100000]");
      c.domain.width = static_cast<int>(w);
      if (!d.contains("height")) c.domain.height = c.domain.width;
    }
    if (d.contains("height")) {
      auto h = r.integer(d["height"], "domain.height", "height");
      if (h < 2 || h > 100000) r.fail("domain.height", "height", "out of range [2, 100000]");
      c.domain.height = static_cast<int>(h);
    }
    if (d.contains("sides")) {
      const json& s = d["sides"];
      if (!s.is_array() || s.size() != 4) r.fail("domain.sides", "sides", "expected an array of 4 boundary types");
      for (int k = 0; k < 4; ++k) {
        try {
          c.domain.sides[k] = side_from_string(r.string(s[k], "domain.sides", "sides"));
        } catch (const DomainError& e) {
          r.fail("domain.sides", "sides", e.what());
        }
      }
    }
    if (d.contains("conductance")) {
      double v = r.number(d["conductance"], "domain.conductance", "conductance");
      if (!(v > 0.0)) r.fail("domain.conductance", "conductance", "must be positive");
      c.domain.conductance = v;
    }
  }
  if (doc.contains("c")) {
    c.c = r.number(doc["c"], "c", "c");
    if (!(c.c > 0.0) || c.c > 8.0) r.fail("c", "c", "out of range (0, 8]");
  }
  if (doc.contains("replicas")) {
    c.replicas = r.integer(doc["replicas"], "replicas", "replicas");
    if (c.replicas < 2 || c.replicas > 100000000) r.fail("replicas", "replicas", "out of range [2, 1e8]");
  }
  if (doc.contains("grid_ladder")) {
    const json& g = doc["grid_ladder"];
    if (!g.is_array()) r.fail("grid_ladder", "grid_ladder", "expected an array");
    c.grid_ladder.clear();
    for (const auto& x : g) {
      auto v = r.integer(x, "grid_ladder", "grid_ladder");
      if (v < 2 || v > 100000) r.fail("grid_ladder", "grid_ladder", "entry out of range [2, 100000]");
      c.grid_ladder.push_back(static_cast<int>(v));
    }
  }
  if (doc.contains("offsets")) {
    const json& g = doc["offsets"];
    if (!g.is_array()) r.fail("offsets", "offsets", "expected an array");
    c.offsets.clear();
    for (const auto& x : g) c.offsets.push_back(r.number(x, "offsets", "offsets"));
  }
  if (doc.contains("eps_ladder")) {
    const json& g = doc["eps_ladder"];
    if (!g.is_array()) r.fail("eps_ladder", "eps_ladder", "expected an array");
    c.eps_ladder.clear();
    for (const auto& x : g) {
      double v = r.number(x, "eps_ladder", "eps_ladder");
      if (!(v > 0.0 && v < 1.0)) r.fail("eps_ladder", "eps_ladder", "entry out of range (0, 1)");
      c.eps_ladder.push_back(v);
    }
  }
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      r.fail("seed", "seed", "expected a nonnegative 64-bit integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    if (!t.is_object()) r.fail("tolerances", "tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      std::string path = "tolerances." + it.key();
      if (!tolerance_defaults().count(it.key())) r.fail(path, it.key(), "unknown key '" + it.key() + "'");
      double v = r.number(it.value(), path, it.key());
      if (!(v >= 0.0)) r.fail(path, it.key(), "must be nonnegative");
      c.tolerances[it.key()] = v;
    }
  }
  if (doc.contains("output_dir")) c.output_dir = r.string(doc["output_dir"], "output_dir", "output_dir");
  if (doc.contains("workers")) {
    auto w = r.integer(doc["workers"], "workers", "workers");
    if (w < 1 || w > 256) r.fail("workers", "workers", "out of range [1, 256]");
    c.workers = static_cast<int>(w);
  }
  if (doc.contains("depth")) {
    auto v = r.integer(doc["depth"], "depth", "depth");
    if (v < 1 || v > 64) r.fail("depth", "depth", "out of range [1, 64]");
    c.depth = static_cast<int>(v);
  }
  if (doc.contains("soup_method")) {
    std::string m = r.string(doc["soup_method"], "soup_method", "soup_method");
    if (m == "excursion")
      c.soup_method = SoupMethod::excursion;
    else if (m == "length_bridge")
      c.soup_method = SoupMethod::length_bridge;
    else
      r.fail("soup_method", "soup_method", "expected 'excursion' or 'length_bridge'");
  }
  if (doc.contains("identity_coupling")) {
    if (!doc["identity_coupling"].is_boolean()) r.fail("identity_coupling", "identity_coupling", "expected a boolean");
    c.identity_coupling = doc["identity_coupling"].get<bool>();
  }
  return c;
}

namespace {
json domain_to_json(const DomainSpec& d) {
  json j;
  j["shape"] = to_string(d.shape);
  j["width"] = d.width;
  j["height"] = d.height;
  j["sides"] = json::array();
  for (auto s : d.sides) j["sides"].push_back(to_string(s));
  j["conductance"] = d.conductance;
  return j;
}
}  // namespace

std::string domain_json(const DomainSpec& d) { return domain_to_json(d).dump(); }

std::string echo_config(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["domain"] = domain_to_json(c.domain);
  j["c"] = c.c;
  j["replicas"] = c.replicas;
  j["grid_ladder"] = c.grid_ladder;
  j["offsets"] = c.offsets;
  j["eps_ladder"] = c.eps_ladder;
  j["seed"] = c.seed;
  json t = json::object();
  for (const auto& [k, v] : tolerance_defaults()) t[k] = c.tolerance(k);
  j["tolerances"] = t;
  j["output_dir"] = c.output_dir;
  j["workers"] = c.workers;
  j["depth"] = c.depth;
  j["soup_method"] = c.soup_method == SoupMethod::excursion ? "excursion" : "length_bridge";
  j["identity_coupling"] = c.identity_coupling;
  return j.dump(2);
}

}  // namespace gfflab
