#pragma once

// Run configuration: flat "section.key = value" text, '#' starts a comment.
// Every key is declared in the schema below; anything else is rejected.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hmflow/error.hpp"
#include "hmflow/grid.hpp"
#include "hmflow/target.hpp"

namespace hmflow {

enum class ValueType { integer, real, boolean, word, text, real_list };

struct SchemaEntry {
  const char* key;
  ValueType type;
  const char* fallback;  // "" means required
  std::vector<std::string> choices = {};
};

inline const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema = {
      {"domain.dim", ValueType::integer, "1"},
      {"domain.n", ValueType::integer, ""},
      {"domain.h", ValueType::real, "0"},  // 0: 2 pi / n

      {"target.kind", ValueType::word, "", {"euclidean", "circle", "sphere", "hyperbolic", "spider", "product"}},
      {"target.dim", ValueType::integer, "1"},
      {"target.radius", ValueType::real, "1"},
      {"target.rays", ValueType::integer, "3"},
      {"target.base", ValueType::word, "spider", {"euclidean", "circle", "sphere", "hyperbolic", "spider"}},
      {"target.extra_dim", ValueType::integer, "1"},
      {"target.scale", ValueType::real, "1"},
      {"target.delta", ValueType::real, "0.05"},  // augmentation scale for the frequency lower bound

      {"init.kind", ValueType::word, "", {"constant", "sine_mode", "degree_map", "random_tree", "file"}},
      {"init.k", ValueType::integer, "1"},
      {"init.amplitude", ValueType::real, "1"},
      {"init.degree", ValueType::integer, "1"},
      {"init.seed", ValueType::integer, "0"},  // 0: run.seed
      {"init.max_radial", ValueType::real, "1"},
      {"init.path", ValueType::text, "-"},

      {"solver.kind", ValueType::word, "", {"wed", "mm", "explicit"}},

      {"wed.eps", ValueType::real, "0.1"},
      {"wed.tau", ValueType::real, "0.01"},
      {"wed.t_max", ValueType::real, "1"},
      {"wed.tol", ValueType::real, "1e-10"},
      {"wed.move_tol", ValueType::real, "1e-9"},
      {"wed.max_sweeps", ValueType::integer, "20000"},
      {"wed.omega", ValueType::real, "0"},  // 0: chosen from the grid
      {"wed.fill", ValueType::word, "minimizing_movement", {"minimizing_movement", "constant"}},

      {"mm.tau", ValueType::real, "0.01"},
      {"mm.steps", ValueType::integer, "100"},
      {"mm.inner_tol", ValueType::real, "1e-10"},
      {"mm.inner_max_sweeps", ValueType::integer, "10000"},
      {"mm.limit_tol", ValueType::real, "1e-6"},
      {"mm.omega", ValueType::real, "0"},

      {"flow.dt", ValueType::real, "0"},  // 0: h^2 / (4 dim)
      {"flow.steps", ValueType::integer, "100"},

      {"diagnostics.energy", ValueType::boolean, "true"},
      {"diagnostics.value_identity", ValueType::boolean, "false"},
      {"diagnostics.subharmonicity", ValueType::boolean, "false"},
      {"diagnostics.bochner", ValueType::boolean, "false"},
      {"diagnostics.sup_bound", ValueType::boolean, "false"},
      {"diagnostics.frequency", ValueType::boolean, "false"},
      {"diagnostics.struwe", ValueType::boolean, "false"},
      {"diagnostics.regularity", ValueType::boolean, "false"},
      {"diagnostics.evi", ValueType::boolean, "false"},
      {"diagnostics.tol", ValueType::real, "0.01"},

      {"frequency.z0", ValueType::text, "auto"},  // "i" or "i,j"; auto: differentiable point nearest the centre
      {"frequency.t0", ValueType::real, "0"},     // 0: 0.6 of the horizon
      {"frequency.r_min", ValueType::real, "0"},  // 0: 1.5 h
      {"frequency.r_max", ValueType::real, "0"},  // 0: min(period / 8, 0.9 sqrt(t0))
      {"frequency.count", ValueType::integer, "16"},

      {"sweep.eps", ValueType::real_list, "0.2,0.1,0.05"},
      {"sweep.window", ValueType::real, "0"},  // 0: half the shortest horizon

      {"output.dir", ValueType::text, "out"},
      {"output.trajectory", ValueType::boolean, "false"},

      {"run.deterministic", ValueType::boolean, "true"},
      {"run.seed", ValueType::integer, "1"},
      {"run.threads", ValueType::integer, "0"},  // 0: HMFLOW_THREADS or 1
  };
  return schema;
}

struct RunConfig {
  std::map<std::string, std::string> values;  // every schema key, resolved
  std::filesystem::path source;

  const std::string& raw(const std::string& key) const {
    auto it = values.find(key);
    require(it != values.end(), ErrorCode::config_invalid, "unknown key " + key);
    return it->second;
  }
  int integer(const std::string& key) const { return std::stoi(raw(key)); }
  double real(const std::string& key) const { return std::stod(raw(key)); }
  bool flag(const std::string& key) const { return raw(key) == "true"; }
  const std::string& word(const std::string& key) const { return raw(key); }
  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
  }

  /// Replaces one value, with the same checks as the file parser.
  void set(const std::string& key, const std::string& value);

  /// Canonical text form: one "key = value" line per schema key, sorted.
  std::string echo() const {
    std::string s;
    for (const auto& [k, v] : values) s += k + " = " + v + "\n";
    return s;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool parse_real(const std::string& s, double& out) {
  std::istringstream is(s);
  is >> out;
  return !is.fail() && is.eof() && std::isfinite(out);
}

inline void check_value(const SchemaEntry& e, const std::string& v) {
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::config_invalid, std::string(e.key) + ": " + why + " (got '" + v + "')");
  };
  switch (e.type) {
    case ValueType::integer: {
      std::size_t pos = 0;
      try {
        (void)std::stol(v, &pos);
      } catch (const std::exception&) {
        bad("expected an integer");
      }
      if (pos != v.size()) bad("expected an integer");
      break;
    }
    case ValueType::real: {
      double x;
      if (!parse_real(v, x)) bad("expected a finite number");
      break;
    }
    case ValueType::boolean:
      if (v != "true" && v != "false") bad("expected true or false");
      break;
    case ValueType::word:
      if (std::find(e.choices.begin(), e.choices.end(), v) == e.choices.end()) {
        std::string list;
        for (const auto& c : e.choices) list += (list.empty() ? "" : ", ") + c;
        bad("expected one of " + list);
      }
      break;
    case ValueType::text:
      if (v.empty()) bad("expected a value");
      break;
    case ValueType::real_list: {
      std::stringstream ss(v);
      std::string item;
      int count = 0;
      while (std::getline(ss, item, ',')) {
        double x;
        if (!parse_real(trim(item), x)) bad("expected a comma separated list of numbers");
        ++count;
      }
      if (count == 0) bad("expected at least one number");
      break;
    }
  }
}

inline void require_positive(const RunConfig& c, const std::string& key) {
  require(c.real(key) > 0.0, ErrorCode::config_invalid, key + ": must be positive");
}

}  // namespace detail

/// Semantic checks that go beyond the per-key types.
inline void validate_config(const RunConfig& c) {
  using detail::require_positive;
  const int dim = c.integer("domain.dim");
  require(dim == 1 || dim == 2, ErrorCode::config_invalid, "domain.dim: must be 1 or 2");
  require(c.integer("domain.n") >= 4, ErrorCode::config_invalid, "domain.n: must be >= 4");
  require(c.real("domain.h") >= 0.0, ErrorCode::config_invalid, "domain.h: must be >= 0");
  require(c.integer("target.dim") >= 1 && c.integer("target.dim") <= kMaxCoords, ErrorCode::config_invalid,
          "target.dim: out of range");
  require(c.integer("target.rays") >= 2, ErrorCode::config_invalid, "target.rays: must be >= 2");
  require_positive(c, "target.radius");
  require_positive(c, "target.scale");
  require_positive(c, "target.delta");
  for (const char* k : {"wed.eps", "wed.tau", "wed.t_max", "wed.tol", "wed.move_tol", "mm.tau", "mm.inner_tol",
                        "mm.limit_tol"})
    require_positive(c, k);
  require(c.real("flow.dt") >= 0.0, ErrorCode::config_invalid, "flow.dt: must be >= 0");
  for (const char* k : {"wed.max_sweeps", "mm.steps", "mm.inner_max_sweeps", "flow.steps"})
    require(c.integer(k) >= 1, ErrorCode::config_invalid, std::string(k) + ": must be >= 1");
  require(c.integer("run.threads") >= 0, ErrorCode::config_invalid, "run.threads: must be >= 0");
  require(c.integer("frequency.count") >= 2, ErrorCode::config_invalid, "frequency.count: must be >= 2");
  for (double e : c.reals("sweep.eps")) require(e > 0.0, ErrorCode::config_invalid, "sweep.eps: entries must be positive");
  if (c.word("init.kind") == "file")
    require(c.raw("init.path") != "-", ErrorCode::config_invalid, "init.path: required when init.kind = file");
}

inline void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& schema = config_schema();
  auto it = std::find_if(schema.begin(), schema.end(), [&](const SchemaEntry& e) { return key == e.key; });
  require(it != schema.end(), ErrorCode::config_invalid, "unknown key " + key);
  detail::check_value(*it, value);
  const std::string old = values[key];
  values[key] = value;
  try {
    validate_config(*this);
  } catch (...) {
    values[key] = old;
    throw;
  }
}

/// Parse config text. `origin` names the source in error messages.
inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  std::map<std::string, std::string> given;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    require(eq != std::string::npos, ErrorCode::config_invalid, where + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto& schema = config_schema();
    auto it = std::find_if(schema.begin(), schema.end(), [&](const SchemaEntry& e) { return key == e.key; });
    require(it != schema.end(), ErrorCode::config_invalid, where + ": unknown key " + key);
    require(!given.count(key), ErrorCode::config_invalid, where + ": duplicate key " + key);
    detail::check_value(*it, value);
    given[key] = value;
  }
  RunConfig c;
  for (const SchemaEntry& e : config_schema()) {
    auto it = given.find(e.key);
    if (it != given.end()) {
      c.values[e.key] = it->second;
    } else {
      require(*e.fallback != '\0', ErrorCode::config_invalid, std::string(e.key) + ": required key missing");
      c.values[e.key] = e.fallback;
    }
  }
  validate_config(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorCode::config_not_found, "cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  RunConfig c = parse_config(ss.str(), path.string());
  c.source = path;
  return c;
}

// ---------------------------------------------------------------------------
// Typed views

inline GridDomain config_domain(const RunConfig& c) {
  const int n = c.integer("domain.n");
  const double h = c.real("domain.h") > 0.0 ? c.real("domain.h") : 2.0 * kPi / n;
  return c.integer("domain.dim") == 1 ? GridDomain::line(n, h) : GridDomain::square(n, n, h);
}

inline TargetKind make_kind(const RunConfig& c, const std::string& name) {
  if (name == "euclidean") return TargetKind::euclidean(c.integer("target.dim"));
  if (name == "circle") return TargetKind::flat_circle(c.real("target.radius"));
  if (name == "sphere") return TargetKind::sphere2();
  if (name == "hyperbolic") return TargetKind::hyperbolic2();
  if (name == "spider") return TargetKind::spider(c.integer("target.rays"));
  fail(ErrorCode::config_invalid, "target.kind: unknown kind " + name);
}

inline TargetKind config_target(const RunConfig& c) {
  const std::string& name = c.word("target.kind");
  if (name != "product") return make_kind(c, name);
  const TargetKind base = make_kind(c, c.word("target.base"));
  return TargetKind::product(base, c.integer("target.extra_dim"), c.real("target.scale"));
}

}  // namespace hmflow
