#include "fbjet/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fbjet {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& errors) {
  std::string s = "invalid configuration:";
  for (const std::string& e : errors) s += "\n  " + e;
  return s;
}

/// Reads one section, recording problems instead of stopping at the first.
class Section {
 public:
  Section(const json& node, std::string path, std::vector<std::string>& errors,
          std::set<std::string> allowed)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (!node_.is_object()) {
      fail(path_.empty() ? "<root>" : path_, "must be an object");
      return;
    }
    for (const auto& [key, value] : node_.items())
      if (!allowed.count(key)) fail(at(key), "unknown key");
  }

  bool has(const std::string& key) const { return node_.is_object() && node_.contains(key); }
  const json& child(const std::string& key) const { return node_.at(key); }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& where, const std::string& what) {
    errors_.push_back(where + ": " + what);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = child(key);
    if (!v.is_number()) return fail(at(key), "must be a number");
    out = v.get<double>();
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = child(key);
    if (!v.is_number_integer()) return fail(at(key), "must be an integer");
    out = v.get<int>();
  }

  void text(const std::string& key, std::string& out, bool required = false) {
    if (!has(key)) {
      if (required) fail(at(key), "missing required key");
      return;
    }
    const json& v = child(key);
    if (!v.is_string()) return fail(at(key), "must be a string");
    out = v.get<std::string>();
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string>& errors_;
};

void check_invariants(const RunConfig& c, std::vector<std::string>& errors) {
  auto fail = [&](const std::string& where, const std::string& what) {
    errors.push_back(where + ": " + what);
  };
  const std::set<std::string> geometries{"straight", "rational", "tanh"};
  const std::set<std::string> profiles{"constant", "quadratic_shear"};
  if (!c.geometry.preset.empty() && !geometries.count(c.geometry.preset))
    fail("geometry.preset", "unknown preset '" + c.geometry.preset + "'");
  if (!c.profile.preset.empty() && !profiles.count(c.profile.preset))
    fail("profile.preset", "unknown preset '" + c.profile.preset + "'");
  if (!(c.geometry.H > 0.0)) fail("geometry.H", "must be positive");
  if (c.geometry.preset != "straight") {
    if (!(c.geometry.a > 0.0)) fail("geometry.a", "must be positive");
    if (!(c.geometry.a <= c.geometry.H)) fail("geometry.a", "must not exceed geometry.H");
  }
  if (c.geometry.preset == "tanh" && !(c.geometry.width > 0.0))
    fail("geometry.width", "must be positive");
  if (c.profile.preset == "constant" && !(c.profile.speed > 0.0))
    fail("profile.speed", "must be positive");
  if (c.profile.preset == "quadratic_shear") {
    if (!(c.profile.base > 0.0)) fail("profile.base", "must be positive");
    if (!(c.profile.curvature >= 0.0)) fail("profile.curvature", "must be non-negative");
  }
  if (!(c.grid_h > 0.0)) fail("grid.h", "must be positive");
  if (c.levels < 1) fail("grid.levels", "must be at least 1");
  if (c.L_schedule.empty()) fail("L_schedule", "must not be empty");
  for (std::size_t n = 0; n < c.L_schedule.size(); ++n) {
    if (!(c.L_schedule[n] > 0.0)) fail("L_schedule[" + std::to_string(n) + "]", "must be positive");
    if (n > 0 && !(c.L_schedule[n] > c.L_schedule[n - 1]))
      fail("L_schedule", "must be strictly increasing");
  }
  if (c.lambda && !(*c.lambda > 0.0)) fail("lambda", "must be positive");
  const SolverConfig& s = c.solver;
  if (s.max_sweeps < 0) fail("solver.max_sweeps", "must be non-negative");
  if (s.tol_field < 0.0) fail("solver.tol_field", "must be positive (0 selects the default)");
  if (!(s.tol_energy > 0.0)) fail("solver.tol_energy", "must be positive");
  if (!(s.newton_tol > 0.0)) fail("solver.newton_tol", "must be positive");
  if (s.mode == UpdateMode::Penalized && !(s.epsilon > 0.0))
    fail("solver.epsilon", "must be positive in penalized mode");
  if (s.omega != 0.0 && !(s.omega >= 1.0 && s.omega < 2.0))
    fail("solver.omega", "must lie in [1, 2) (0 selects the default)");
  const FitConfig& f = c.fit;
  if (f.lambda_hi < 0.0) fail("fit.lambda_hi", "must be non-negative");
  if (!(f.cap_factor > 1.0)) fail("fit.cap_factor", "must exceed 1");
  if (!(f.tol_lambda > 0.0)) fail("fit.tol_lambda", "must be positive");
  if (f.tol_detach < 0.0) fail("fit.tol_detach", "must be non-negative");
  if (f.max_bisections < 1) fail("fit.max_bisections", "must be at least 1");
  if (f.solve.extrapolation_columns < 2) fail("fit.extrapolation_columns", "must be at least 2");
  if (c.field_stride < 1) fail("output.field_stride", "must be at least 1");
  if (c.output_dir.empty()) fail("output.directory", "must not be empty");
  for (const std::string& d : c.diagnostics)
    if (!known_diagnostics().count(d)) fail("diagnostics", "unknown diagnostic '" + d + "'");
}

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<std::string> errors)
    : ConfigError(join(errors)), errors_(std::move(errors)) {}

NozzleGeometry GeometryConfig::build() const {
  if (preset == "straight") return NozzleGeometry::straight(H);
  if (preset == "rational") return NozzleGeometry::rational(a, H);
  if (preset == "tanh") return NozzleGeometry::converging_tanh(a, H, width);
  throw ConfigError("geometry.preset: unknown preset '" + preset + "'");
}

UpstreamProfile ProfileConfig::build(double height) const {
  if (preset == "constant") return UpstreamProfile::constant(height, speed);
  if (preset == "quadratic_shear") return UpstreamProfile::quadratic_shear(height, base, curvature);
  throw ConfigError("profile.preset: unknown preset '" + preset + "'");
}

FitConfig RunConfig::fit_config() const {
  FitConfig f = fit;
  f.grid_h = grid_h;
  f.solve.levels = levels;
  f.L_schedule = L_schedule;
  return f;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigValidationError({std::string("<root>: not valid JSON: ") + e.what()});
  }
  std::vector<std::string> errors;
  RunConfig c;
  Section root(doc, "", errors,
               {"geometry", "profile", "p_atm", "grid", "L_schedule", "lambda", "solver", "fit",
                "output", "diagnostics"});
  if (!doc.is_object()) throw ConfigValidationError(errors);

  if (!root.has("geometry")) {
    root.fail("geometry", "missing required key");
  } else {
    Section s(doc.at("geometry"), "geometry", errors, {"preset", "a", "H", "width"});
    s.text("preset", c.geometry.preset, true);
    s.number("a", c.geometry.a);
    s.number("H", c.geometry.H);
    s.number("width", c.geometry.width);
  }
  if (!root.has("profile")) {
    root.fail("profile", "missing required key");
  } else {
    Section s(doc.at("profile"), "profile", errors, {"preset", "speed", "base", "curvature"});
    s.text("preset", c.profile.preset, true);
    s.number("speed", c.profile.speed);
    s.number("base", c.profile.base);
    s.number("curvature", c.profile.curvature);
  }
  root.number("p_atm", c.p_atm);
  if (root.has("grid")) {
    Section s(doc.at("grid"), "grid", errors, {"h", "levels"});
    s.number("h", c.grid_h);
    s.integer("levels", c.levels);
  }
  if (!root.has("L_schedule")) {
    root.fail("L_schedule", "missing required key");
  } else {
    const json& v = doc.at("L_schedule");
    if (v.is_number()) {
      c.L_schedule = {v.get<double>()};
    } else if (v.is_array()) {
      for (std::size_t n = 0; n < v.size(); ++n) {
        if (!v[n].is_number())
          root.fail("L_schedule[" + std::to_string(n) + "]", "must be a number");
        else
          c.L_schedule.push_back(v[n].get<double>());
      }
    } else {
      root.fail("L_schedule", "must be a number or an array of numbers");
    }
  }
  if (root.has("lambda")) {
    if (doc.at("lambda").is_number()) c.lambda = doc.at("lambda").get<double>();
    else root.fail("lambda", "must be a number");
  }
  if (root.has("solver")) {
    Section s(doc.at("solver"), "solver", errors,
              {"max_sweeps", "tol_field", "tol_energy", "sweep_order", "mode", "epsilon",
               "newton_tol", "omega"});
    s.integer("max_sweeps", c.solver.max_sweeps);
    s.number("tol_field", c.solver.tol_field);
    s.number("tol_energy", c.solver.tol_energy);
    s.number("epsilon", c.solver.epsilon);
    s.number("newton_tol", c.solver.newton_tol);
    s.number("omega", c.solver.omega);
    std::string order, mode;
    s.text("sweep_order", order);
    if (order == "red_black") c.solver.order = SweepOrder::RedBlack;
    else if (!order.empty() && order != "lexicographic")
      s.fail("solver.sweep_order", "must be lexicographic or red_black");
    s.text("mode", mode);
    if (mode == "penalized") c.solver.mode = UpdateMode::Penalized;
    else if (!mode.empty() && mode != "jump_exact")
      s.fail("solver.mode", "must be jump_exact or penalized");
  }
  if (root.has("fit")) {
    Section s(doc.at("fit"), "fit", errors,
              {"lambda_hi", "cap_factor", "tol_lambda", "tol_detach", "max_bisections",
               "extrapolation_columns", "init"});
    s.number("lambda_hi", c.fit.lambda_hi);
    s.number("cap_factor", c.fit.cap_factor);
    s.number("tol_lambda", c.fit.tol_lambda);
    s.number("tol_detach", c.fit.tol_detach);
    s.integer("max_bisections", c.fit.max_bisections);
    s.integer("extrapolation_columns", c.fit.solve.extrapolation_columns);
    std::string init;
    s.text("init", init);
    if (init == "dry") c.fit.solve.init = Initialization::Dry;
    else if (!init.empty() && init != "profile") s.fail("fit.init", "must be profile or dry");
  }
  if (root.has("output")) {
    Section s(doc.at("output"), "output", errors, {"directory", "field_stride"});
    s.text("directory", c.output_dir);
    s.integer("field_stride", c.field_stride);
  }
  if (root.has("diagnostics")) {
    const json& v = doc.at("diagnostics");
    if (!v.is_array()) {
      root.fail("diagnostics", "must be an array of names");
    } else {
      c.diagnostics.clear();
      for (const json& d : v) {
        if (!d.is_string()) root.fail("diagnostics", "entries must be strings");
        else c.diagnostics.insert(d.get<std::string>());
      }
    }
  }
  check_invariants(c, errors);
  if (!errors.empty()) throw ConfigValidationError(errors);
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot read configuration file");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config_text(text.str());
  } catch (const ConfigValidationError& e) {
    std::vector<std::string> errors;
    for (const std::string& msg : e.errors()) errors.push_back(path + ": " + msg);
    throw ConfigValidationError(errors);
  }
}

void validate(const RunConfig& config) {
  std::vector<std::string> errors;
  check_invariants(config, errors);
  if (!errors.empty()) throw ConfigValidationError(errors);
}

}  // namespace fbjet
