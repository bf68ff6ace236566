#pragma once

// Run configuration: one JSON document with nested sections. The schema is
// documented in README.md.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fbjet/domain.hpp"
#include "fbjet/jetfit.hpp"
#include "fbjet/numerics.hpp"
#include "fbjet/solver.hpp"

namespace fbjet {

/// Every problem found in a configuration, each as "path: message".
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct GeometryConfig {
  std::string preset;  // straight | rational | tanh
  double a = 1.0, H = 1.0, width = 1.0;

  NozzleGeometry build() const;
};

struct ProfileConfig {
  std::string preset;  // constant | quadratic_shear
  double speed = 1.0;
  double base = 1.0, curvature = 1.0;

  /// Inlet profile on [0, height].
  UpstreamProfile build(double height) const;
};

inline const std::set<std::string>& known_diagnostics() {
  static const std::set<std::string> names{"invariants", "bounds",     "probes",
                                           "asymptotics", "smooth_fit", "uniqueness",
                                           "flow"};
  return names;
}

struct RunConfig {
  GeometryConfig geometry;
  ProfileConfig profile;
  double p_atm = 0.0;
  double grid_h = 1.0 / 64;
  int levels = 3;
  std::vector<double> L_schedule;
  std::optional<double> lambda;
  SolverConfig solver;
  FitConfig fit;
  std::string output_dir = "fbjet_out";
  int field_stride = 1;
  std::set<std::string> diagnostics{"invariants", "bounds", "asymptotics"};

  /// fit with grid_h, levels and L_schedule copied in.
  FitConfig fit_config() const;
};

RunConfig parse_config_text(const std::string& text);
/// Throws ConfigValidationError listing every problem, ConfigError if the
/// file cannot be read.
RunConfig parse_config(const std::string& path);

/// Re-checks the invariants after command-line overrides.
void validate(const RunConfig& config);

}  // namespace fbjet
