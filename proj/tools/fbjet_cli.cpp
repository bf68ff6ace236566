// fbjet <subcommand> --config run.json [--lambda x] [--grid-h h] [--L L]

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fbjet/config.hpp"
#include "fbjet/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Free-boundary jet solver"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<double> lambda, grid_h, L;
  for (const std::string& name : fbjet::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--lambda", lambda, "free-boundary speed for solve");
    sub->add_option("--grid-h", grid_h, "grid spacing");
    sub->add_option("--L", L, "truncation length; replaces the L schedule");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fbjet::kExitConfigError;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  fbjet::RunConfig config;
  try {
    config = fbjet::parse_config(config_path);
    if (lambda) config.lambda = *lambda;
    if (grid_h) config.grid_h = *grid_h;
    if (L) config.L_schedule = {*L};
    fbjet::validate(config);
  } catch (const fbjet::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return fbjet::kExitConfigError;
  }

  const fbjet::RunOutcome out = fbjet::run(subcommand, config);
  if (out.report.contains("error"))
    std::cerr << "error: " << out.report["error"]["message"].get<std::string>() << "\n";
  for (const auto& [name, check] : out.report["checks"].items())
    if (!check["pass"].get<bool>()) std::cerr << "check failed: " << name << "\n";
  std::cout << (out.directory / "report.json").string() << "\n";
  return out.exit_code;
}
