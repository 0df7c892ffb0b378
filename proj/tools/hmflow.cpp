// hmflow command line: run, validate, frequency, sweep-eps, harmonic-limit.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hmflow/harness.hpp"

int main(int argc, char** argv) {
  namespace hh = hmflow::harness;
  CLI::App app{"Harmonic map heat flow via weighted energy-dissipation minimization"};
  app.set_version_flag("--version", hh::kVersion);
  app.require_subcommand(1);

  std::string config;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "run configuration file")->required();
    return sub;
  };
  CLI::App* run = add("run", "solve and run the enabled diagnostics");

  CLI::App* validate = add("validate", "solve and run every applicable diagnostic");
  bool config_only = false;
  validate->add_flag("--config-only", config_only, "only check the configuration");

  CLI::App* frequency = add("frequency", "solve and tabulate the parabolic frequency");
  std::string z0, t0, rmin, rmax, nr;
  frequency->add_option("--z0", z0, "centre node i or i,j");
  frequency->add_option("--t0", t0, "centre time");
  frequency->add_option("--rmin", rmin, "smallest radius");
  frequency->add_option("--rmax", rmax, "largest radius");
  frequency->add_option("--nr", nr, "number of radii");

  CLI::App* sweep = add("sweep-eps", "value function and cross-solver distance over eps");
  std::vector<double> eps;
  sweep->add_option("--eps", eps, "eps values, overriding sweep.eps")->delimiter(',');

  CLI::App* limit = add("harmonic-limit", "long-time limit by minimizing movements");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hh::exit_usage;
  }

  if (*run) return hh::run(config);
  if (*validate) return hh::validate(config, config_only);
  if (*frequency) {
    hh::Overrides o;
    if (!z0.empty()) o.emplace_back("frequency.z0", z0);
    if (!t0.empty()) o.emplace_back("frequency.t0", t0);
    if (!rmin.empty()) o.emplace_back("frequency.r_min", rmin);
    if (!rmax.empty()) o.emplace_back("frequency.r_max", rmax);
    if (!nr.empty()) o.emplace_back("frequency.count", nr);
    return hh::frequency(config, o);
  }
  if (*sweep) return hh::sweep_eps(config, eps);
  if (*limit) return hh::harmonic_limit_cmd(config);
  return hh::exit_usage;
}
