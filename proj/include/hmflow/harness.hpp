#pragma once

// Experiment orchestration behind the command line: builds the initial map,
// runs the configured solver and diagnostics, and writes CSVs, a gnuplot
// script and manifest.json into output.dir.
//
// Exit codes: 0 success, 1 numeric failure (solver error or failed check),
// 2 usage or configuration error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hmflow/config.hpp"
#include "hmflow/diagnostics.hpp"
#include "hmflow/error.hpp"
#include "hmflow/flows.hpp"
#include "hmflow/frequency.hpp"
#include "hmflow/grid.hpp"
#include "hmflow/init.hpp"
#include "hmflow/io.hpp"
#include "hmflow/target.hpp"
#include "hmflow/wed.hpp"

namespace hmflow::harness {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { exit_ok = 0, exit_numeric = 1, exit_usage = 2 };

using json = nlohmann::ordered_json;

/// CAT(0) in the large. The flat circle is only locally NPC: d^2(., Q) is not
/// convex across the cut locus, so the subharmonicity check does not apply.
inline bool globally_npc(const TargetKind& kind) {
  switch (kind.tag) {
    case TargetTag::flat_circle:
    case TargetTag::sphere2: return false;
    case TargetTag::product: return globally_npc(*kind.base);
    default: return true;
  }
}

inline GridMap initial_map(const RunConfig& c, const GridDomain& d, const TargetKind& kind) {
  const std::string& k = c.word("init.kind");
  if (k == "constant") return init::constant(d, kind);
  if (k == "sine_mode") return init::sine_mode(d, kind, c.integer("init.k"), c.real("init.amplitude"));
  if (k == "degree_map") return init::degree_map(d, kind, c.integer("init.degree"), c.real("init.amplitude"));
  if (k == "random_tree") {
    const int seed = c.integer("init.seed") != 0 ? c.integer("init.seed") : c.integer("run.seed");
    return init::random_tree(d, kind, static_cast<unsigned>(seed), c.real("init.max_radial"));
  }
  std::filesystem::path p = c.raw("init.path");
  if (p.is_relative() && !c.source.empty()) p = c.source.parent_path() / p;
  return io::read_grid_map(p, d, kind);
}

inline WedConfig wed_config(const RunConfig& c) {
  WedConfig w;
  w.eps = c.real("wed.eps");
  w.tau = c.real("wed.tau");
  w.t_max = c.real("wed.t_max");
  w.tol = c.real("wed.tol");
  w.move_tol = c.real("wed.move_tol");
  w.max_sweeps = c.integer("wed.max_sweeps");
  w.omega = c.real("wed.omega");
  w.fill = c.word("wed.fill") == "constant" ? InitFill::constant : InitFill::minimizing_movement;
  w.threads = c.integer("run.threads");
  return w;
}

inline MmConfig mm_config(const RunConfig& c) {
  MmConfig m;
  m.tau = c.real("mm.tau");
  m.steps = c.integer("mm.steps");
  m.inner_tol = c.real("mm.inner_tol");
  m.inner_max_sweeps = c.integer("mm.inner_max_sweeps");
  m.limit_tol = c.real("mm.limit_tol");
  m.omega = c.real("mm.omega");
  m.threads = c.integer("run.threads");
  return m;
}

inline double flow_dt(const RunConfig& c, const GridDomain& d) {
  return c.real("flow.dt") > 0.0 ? c.real("flow.dt") : d.h * d.h / (4.0 * d.dim);
}

/// Output directory, emitted files, checks and manifest of one command.
class RunContext {
 public:
  RunContext(const RunConfig& cfg, std::string command)
      : cfg_(cfg), dir_(cfg.raw("output.dir")), start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    require(!ec, ErrorCode::io_error, "cannot create " + dir_.string());
    manifest_["command"] = std::move(command);
    manifest_["status"] = "running";
    manifest_["summary"] = json::object();
  }

  std::filesystem::path path(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }
  void record(const std::string& name) { files_.push_back(name); }
  const std::filesystem::path& dir() const { return dir_; }
  json& summary() { return manifest_["summary"]; }

  void add_checks(const ValidationReport& rep) {
    for (const CheckResult& c : rep.checks) {
      checks_.push_back(c);
      if (!c.pass && !c.informational) failed_ = true;
    }
  }
  void note(const std::string& s) { manifest_["notes"].push_back(s); }
  void fail_check() { failed_ = true; }
  const std::vector<CheckResult>& checks() const { return checks_; }

  /// validation.csv, manifest.json and a one-line-per-check summary on `log`.
  /// Called exactly once, on success and failure alike.
  int finish(int code, const std::string& error = "", std::ostream* log = nullptr) {
    if (code == exit_ok && failed_) code = exit_numeric;
    if (!checks_.empty()) {
      try {
        write_validation();
      } catch (const Error& e) {
        if (code == exit_ok) code = exit_numeric;
        manifest_["error"] = e.what();
      }
    }
    manifest_["status"] = code == exit_ok ? "ok" : (error.empty() ? "checks_failed" : "failed");
    if (!error.empty()) manifest_["error"] = error;
    manifest_["exit_code"] = code;
    json config = json::object();
    for (const auto& [k, v] : cfg_.values) config[k] = v;
    manifest_["config"] = config;
    manifest_["versions"] = {{"hmflow", kVersion},
                             {"compiler", compiler()},
                             {"cplusplus", static_cast<long>(__cplusplus)},
                             {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    manifest_["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json checks = json::array();
    for (const CheckResult& c : checks_)
      checks.push_back({{"name", c.name},
                        {"residual", c.residual},
                        {"tolerance", c.tolerance},
                        {"pass", c.pass},
                        {"i", c.i},
                        {"k", c.k},
                        {"informational", c.informational}});
    manifest_["checks"] = checks;
    files_.push_back("manifest.json");
    manifest_["files"] = files_;
    std::ofstream out(dir_ / "manifest.json");
    out << manifest_.dump(2) << '\n';
    if (log) {
      for (const CheckResult& c : checks_)
        *log << (c.pass ? "pass " : (c.informational ? "info " : "FAIL ")) << c.name << "  residual "
             << io::fmt(c.residual) << "  tolerance " << io::fmt(c.tolerance) << '\n';
      *log << manifest_["status"].get<std::string>() << " (" << dir_.string() << ")\n";
    }
    return code;
  }

 private:
  void write_validation() {
    io::CsvWriter w(path("validation.csv"), {"check", "residual", "tolerance", "verdict", "i", "k"});
    for (const CheckResult& c : checks_)
      w.text_row({c.name, io::fmt(c.residual), io::fmt(c.tolerance),
                  c.pass ? "pass" : (c.informational ? "info" : "fail"), std::to_string(c.i), std::to_string(c.k)});
    w.close();
  }

  static std::string compiler() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
  }

  const RunConfig& cfg_;
  std::filesystem::path dir_;
  std::chrono::steady_clock::time_point start_;
  json manifest_ = json::object();
  std::vector<std::string> files_;
  std::vector<CheckResult> checks_;
  bool failed_ = false;
};

// ---------------------------------------------------------------------------
// Pieces shared by the commands

inline void write_energy_csv(RunContext& ctx, const Trajectory& traj) {
  io::CsvWriter w(ctx.path("energy.csv"), {"k", "t", "E", "step_dissipation"});
  for (int k = 0; k <= traj.K(); ++k) {
    double diss = 0.0;
    if (k > 0) {
      const double dd = l2_distance(traj.maps[k], traj.maps[k - 1]);
      diss = dd * dd / traj.tau;
    }
    w.row({double(k), traj.time(k), ks_energy(traj.maps[k]), diss});
  }
  w.close();
}

inline void write_wed_objective_csv(RunContext& ctx, const WedSolution& sol) {
  io::CsvWriter w(ctx.path("wed_objective.csv"), {"sweep", "objective"});
  for (std::size_t s = 0; s < sol.objective_history.size(); ++s) w.row({double(s), sol.objective_history[s]});
  w.close();
}

struct ValueRow {
  double eps, V, E0, cross = std::numeric_limits<double>::quiet_NaN();
};

/// Columns eps, V, E0, gap = E0 - V, cross_solver (NaN outside sweep-eps).
inline void write_value_csv(RunContext& ctx, const std::vector<ValueRow>& rows) {
  io::CsvWriter w(ctx.path("value_function.csv"), {"eps", "V", "E0", "gap", "cross_solver"});
  for (const ValueRow& r : rows) w.row({r.eps, r.V, r.E0, r.E0 - r.V, r.cross});
  w.close();
}

struct SolverRun {
  Trajectory trajectory;
  std::optional<WedSolution> wed;
  double eps = 0.0;  // regularization used by the energy density in diagnostics
};

inline SolverRun run_solver(const RunConfig& c, const GridMap& u0, RunContext& ctx) {
  SolverRun out;
  const std::string& kind = c.word("solver.kind");
  json& s = ctx.summary();
  if (kind == "wed") {
    const WedConfig w = wed_config(c);
    WedSolution sol;
    try {
      sol = minimize_wed(u0, w);
    } catch (const MaxSweepsExceeded<WedSolution>& e) {
      write_wed_objective_csv(ctx, e.partial());
      write_energy_csv(ctx, e.partial().trajectory);
      throw;
    }
    s["V_eps"] = sol.value;
    s["wed_sweeps"] = sol.sweeps;
    s["wed_omega"] = sol.omega;
    s["truncation_bound"] = sol.truncation_bound;
    s["convexity_guaranteed"] = sol.convexity_guaranteed;
    if (std::isfinite(sol.el_residual)) s["el_residual"] = sol.el_residual;
    write_wed_objective_csv(ctx, sol);
    write_value_csv(ctx, {{w.eps, sol.value, ks_energy(u0)}});
    out.eps = w.eps;
    out.trajectory = sol.trajectory;
    out.wed = std::move(sol);
  } else if (kind == "mm") {
    FlowResult r = minimizing_movement(u0, mm_config(c));
    s["mm_inner_sweeps"] = r.report.inner_sweeps;
    out.trajectory = std::move(r.trajectory);
  } else {
    const double dt = flow_dt(c, u0.domain);
    out.trajectory = explicit_heat_flow(u0, dt, c.integer("flow.steps"));
    s["flow_dt"] = dt;
  }
  return out;
}

struct FrequencySetup {
  KernelSpec spec;
  std::vector<double> radii;
};

inline FrequencySetup frequency_setup(const RunConfig& c, const Trajectory& traj) {
  const GridDomain& d = traj.domain();
  FrequencySetup f;
  f.spec.domain = d;
  const double T = traj.K() * traj.tau;
  f.spec.t0 = c.real("frequency.t0") > 0.0 ? c.real("frequency.t0") : 0.6 * T;
  require(f.spec.t0 <= T, ErrorCode::config_invalid, "frequency.t0: beyond the trajectory");
  const std::string& z0 = c.raw("frequency.z0");
  if (z0 != "auto") {
    int i = 0, j = 0;
    const auto comma = z0.find(',');
    try {
      i = std::stoi(z0.substr(0, comma));
      if (comma != std::string::npos) j = std::stoi(z0.substr(comma + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::config_invalid, "frequency.z0: expected i or i,j");
    }
    require(i >= 0 && i < d.n1 && j >= 0 && j < d.n2, ErrorCode::config_invalid, "frequency.z0: outside the grid");
    f.spec.x0 = d.index(i, j);
  } else {
    const int centre = d.index(d.n1 / 2, d.dim == 2 ? d.n2 / 2 : 0);
    const std::vector<int> pts = differentiable_points(traj.maps[level_of(traj, f.spec.t0)]);
    require(!pts.empty(), ErrorCode::degenerate_frequency, "u(t0) has no differentiable sample point");
    f.spec.x0 = *std::min_element(pts.begin(), pts.end(),
                                  [&](int a, int b) { return d.dist_sq(centre, a) < d.dist_sq(centre, b); });
  }
  const double rmin = c.real("frequency.r_min") > 0.0 ? c.real("frequency.r_min") : 1.5 * d.h;
  const double rmax = c.real("frequency.r_max") > 0.0 ? c.real("frequency.r_max")
                                                      : std::min(f.spec.max_radius(), 0.9 * std::sqrt(f.spec.t0));
  f.radii = radius_grid(rmin, rmax, c.integer("frequency.count"));
  return f;
}

inline void write_frequency_csv(const std::filesystem::path& path, const FrequencyReport& rep) {
  io::CsvWriter w(path, {"R", "E", "H", "N", "level_index"});
  for (const FrequencyRow& r : rep.rows) w.row({r.R, r.E, r.H, r.N, r.level});
  w.close();
}

inline void frequency_diagnostics(const RunConfig& c, const SolverRun& run, RunContext& ctx, bool freq,
                                  bool struwe) {
  const Trajectory& traj = run.trajectory;
  const FrequencySetup f = frequency_setup(c, traj);
  const bool npc = globally_npc(traj.kind());
  json& s = ctx.summary();
  s["frequency_z0"] = f.spec.x0;
  s["frequency_t0"] = f.spec.t0;
  ValidationReport rep;
  if (freq) {
    const TargetPoint Q = traj.maps[level_of(traj, f.spec.t0)][f.spec.x0];
    const FrequencyReport plain = frequency_profile(traj, run.eps, f.spec, Q, f.radii);
    write_frequency_csv(ctx.path("frequency.csv"), plain);
    double Nmax = 0.0;
    for (const FrequencyRow& r : plain.rows) Nmax = std::max(Nmax, r.N);
    CheckResult mono{"frequency_monotone", plain.monotone_violation_max, 1e-3 * Nmax};
    mono.informational = !npc;
    rep.add(mono);
    std::vector<double> R, H;
    for (const FrequencyRow& r : plain.rows) {
      R.push_back(r.R);
      H.push_back(r.H);
    }
    const double slope = log_log_slope(R, H);
    CheckResult hb{"h_bound_slope", 1.9 - slope, 0.0};
    hb.informational = !npc;
    rep.add(hb);
    s["frequency_monotone_violation"] = plain.monotone_violation_max;
    s["frequency_tail_bound"] = plain.tail_bound;
    s["h_log_slope"] = slope;
    if (traj.kind().tag != TargetTag::product) {
      const FrequencyReport aug = augmented_frequency(traj, run.eps, c.real("target.delta"), f.spec, f.radii);
      write_frequency_csv(ctx.path("augmented_frequency.csv"), aug);
      CheckResult lower{"frequency_lower_bound", 0.98 - aug.n_limit_estimate, 0.0};
      lower.informational = !npc;
      rep.add(lower);
      s["n_limit_estimate"] = aug.n_limit_estimate;
    }
  }
  if (struwe) {
    const std::vector<StruweRow> rows = struwe_profile(traj, run.eps, f.spec, f.radii);
    io::CsvWriter w(ctx.path("struwe.csv"), {"R", "Phi"});
    double pmax = 0.0;
    for (const StruweRow& r : rows) {
      w.row({r.R, r.Phi});
      pmax = std::max(pmax, r.Phi);
    }
    w.close();
    rep.add({"struwe_monotone", struwe_violation_max(rows), 1e-3 * pmax});
  }
  ctx.add_checks(rep);
}

struct Toggles {
  bool energy, value_identity, subharmonicity, bochner, sup_bound, frequency, struwe, regularity, evi;

  static Toggles from(const RunConfig& c) {
    return {c.flag("diagnostics.energy"),         c.flag("diagnostics.value_identity"),
            c.flag("diagnostics.subharmonicity"), c.flag("diagnostics.bochner"),
            c.flag("diagnostics.sup_bound"),      c.flag("diagnostics.frequency"),
            c.flag("diagnostics.struwe"),         c.flag("diagnostics.regularity"),
            c.flag("diagnostics.evi")};
  }
  static Toggles all() { return {true, true, true, true, true, true, true, true, true}; }
};

inline void run_diagnostics(const RunConfig& c, const SolverRun& run, double E0, RunContext& ctx, const Toggles& on) {
  const Trajectory& traj = run.trajectory;
  const TargetKind& kind = traj.kind();
  const GridDomain& d = traj.domain();
  const bool wed = run.wed.has_value();
  const double tol = c.real("diagnostics.tol");
  json& s = ctx.summary();
  auto skip = [&](const char* what, const std::string& why) { ctx.note(std::string(what) + " skipped: " + why); };

  if (on.energy) ctx.add_checks(energy_report(traj, run.eps, E0, tol));
  if (on.value_identity) {
    if (!wed) {
      skip("value_identity", "needs solver.kind = wed");
    } else {
      const WedConfig w = wed_config(c);
      const ValueIdentityResiduals v = value_identity_residuals(*run.wed, w);
      ValidationReport rep;
      rep.add({"value_identity", v.pointwise_identity_max, 5.0 * (w.tau + d.h * d.h) * E0});
      rep.add({"dynamic_programming", v.dpp_residual, 1e-2 * run.wed->value});
      ctx.add_checks(rep);
    }
  }
  if (on.subharmonicity) {
    if (!wed || !globally_npc(kind)) {
      skip("subharmonicity", "needs a wed run on a CAT(0) target");
    } else {
      ctx.add_checks(subharmonicity_residual(traj, run.eps, init::base_point(kind)));
    }
  }
  if (on.bochner) {
    if (!wed || !kind.smooth()) {
      skip("bochner", "needs a wed run on a smooth target");
    } else {
      ctx.add_checks(bochner_residual(traj, run.eps));
    }
  }
  if (on.sup_bound) {
    if (!wed || !kind.smooth() || !kind.npc()) {
      skip("sup_bound", "needs a wed run on a smooth NPC target");
    } else {
      std::vector<Probe> probes;
      for (int q = 0; q < 4; ++q)
        for (double r : {0.2, 0.4})
          probes.push_back({d.index((2 * q + 1) * d.n1 / 8, d.dim == 2 ? d.n2 / 2 : 0), 0.5 * traj.K() * traj.tau, r});
      const SupBoundResult sb = sup_bound_check(traj, run.eps, E0, probes);
      s["sup_bound_c_fit"] = sb.c_fit;
      ctx.add_checks(sb.report);
    }
  }
  if (on.evi) {
    if (c.word("solver.kind") != "mm") {
      skip("evi", "needs solver.kind = mm");
    } else {
      const GridMap& u0 = traj.maps.front();
      const std::vector<GridMap> comparisons{init::constant(d, kind), u0, traj.maps.back(), traj.maps[traj.K() / 2],
                                             init::random_tree(d, kind, 7u, 0.5)};
      std::vector<double> worst(traj.K(), -std::numeric_limits<double>::infinity());
      for (const GridMap& v : comparisons) {
        const std::vector<double> r = evi_residuals(traj, v);
        for (int k = 0; k < traj.K(); ++k) worst[k] = std::max(worst[k], r[k]);
      }
      io::CsvWriter w(ctx.path("evi.csv"), {"k", "residual"});
      for (int k = 0; k < traj.K(); ++k) w.row({double(k), worst[k]});
      w.close();
      ValidationReport rep;
      rep.add({"evi", *std::max_element(worst.begin(), worst.end()), 5.0 * traj.tau * E0});
      ctx.add_checks(rep);
    }
  }
  if (on.regularity) {
    try {
      const RegularityEstimate r = regularity_estimate(traj);
      s["alpha"] = r.alpha;
      s["lip"] = r.lip;
      s["time_exponent"] = r.time_exponent;
    } catch (const Error& e) {
      skip("regularity", e.what());
    }
  }
  if (on.frequency || on.struwe) {
    if (!wed) {
      skip("frequency", "needs solver.kind = wed");
    } else {
      frequency_diagnostics(c, run, ctx, on.frequency, on.struwe);
    }
  }
}

template <class Body>
int guarded(const RunConfig& c, const std::string& command, Body body) {
  RunContext ctx(c, command);
  try {
    body(ctx);
    return ctx.finish(exit_ok, "", &std::cout);
  } catch (const Error& e) {
    std::cerr << "hmflow " << command << ": " << e.what() << '\n';
    return ctx.finish(e.code() == ErrorCode::config_invalid ? exit_usage : exit_numeric, e.what(), &std::cout);
  } catch (const std::exception& e) {
    std::cerr << "hmflow " << command << ": " << e.what() << '\n';
    return ctx.finish(exit_numeric, e.what(), &std::cout);
  }
}

// ---------------------------------------------------------------------------
// Commands

/// Solver, then the diagnostics selected by `on`.
inline int run_loaded(const RunConfig& c, const Toggles& on, const std::string& command = "run") {
  return guarded(c, command, [&](RunContext& ctx) {
    const GridDomain d = config_domain(c);
    const TargetKind kind = config_target(c);
    const GridMap u0 = initial_map(c, d, kind);
    const double E0 = ks_energy(u0);
    ctx.summary()["E0"] = E0;
    io::write_grid_map(ctx.path("initial.csv"), u0);
    const SolverRun run = run_solver(c, u0, ctx);
    const Trajectory& traj = run.trajectory;
    ctx.summary()["final_energy"] = ks_energy(traj.maps.back());
    write_energy_csv(ctx, traj);
    io::write_grid_map(ctx.path("final.csv"), traj.maps.back());
    if (c.flag("output.trajectory"))
      for (const std::string& f : io::write_trajectory(ctx.dir() / "trajectory", traj)) ctx.record("trajectory/" + f);
    run_diagnostics(c, run, E0, ctx, on);
    std::vector<io::PlotPanel> panels{{"energy.csv", "t", "E", "discrete energy"}};
    if (run.wed) panels.push_back({"wed_objective.csv", "sweep", "objective", "WED objective per sweep"});
    if (run.wed && on.frequency) panels.push_back({"frequency.csv", "R", "N", "frequency"});
    if (run.wed && on.struwe) panels.push_back({"struwe.csv", "R", "Phi", "renormalized energy"});
    io::write_plot_script(ctx.path("plot.gp"), panels);
  });
}

/// Checks that need the typed objects: solver parameter relations, the
/// target/solver combination and the initial map.
inline void check_semantics(const RunConfig& c) {
  try {
    const GridDomain d = config_domain(c);
    const TargetKind kind = config_target(c);
    const std::string& solver = c.word("solver.kind");
    if (solver == "wed") hmflow::validate(wed_config(c));
    if (solver == "mm") {
      mm_config(c).validate();
      require(kind.npc(), ErrorCode::unsupported_on_target, "minimizing movements need an NPC target");
    }
    if (solver == "explicit") {
      require(kind.smooth(), ErrorCode::unsupported_on_target, "the explicit flow needs a smooth target");
      require(flow_dt(c, d) <= d.h * d.h / (4.0 * d.dim) * (1.0 + 1e-12), ErrorCode::step_too_large,
              "flow.dt exceeds h^2 / (4 dim)");
    }
    (void)initial_map(c, d, kind);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config_invalid) throw;
    fail(ErrorCode::config_invalid, e.what());
  }
}

/// minimize_wed for every eps of the list, plus a minimizing-movement
/// reference on the finest step for the cross-solver distance.
inline int sweep_eps_loaded(const RunConfig& c, const std::vector<double>& eps_override = {}) {
  return guarded(c, "sweep-eps", [&](RunContext& ctx) {
    const GridDomain d = config_domain(c);
    const TargetKind kind = config_target(c);
    require(kind.npc(), ErrorCode::unsupported_on_target, "sweep-eps needs an NPC target");
    const GridMap u0 = initial_map(c, d, kind);
    const double E0 = ks_energy(u0);
    std::vector<double> eps_list = eps_override.empty() ? c.reals("sweep.eps") : eps_override;
    std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
    const WedConfig base = wed_config(c);

    // per eps: tau <= eps / 10 and a horizon of at least 10 eps
    std::vector<ValueRow> rows;
    std::vector<Trajectory> trajs;
    std::vector<double> taus;
    for (double eps : eps_list) {
      WedConfig w = base;
      w.eps = eps;
      w.tau = std::min(base.tau, eps / 10.0);
      const int K = static_cast<int>(std::ceil(std::max(base.t_max, 10.0 * eps) / w.tau - 1e-9));
      w.t_max = K * w.tau;
      WedSolution sol = minimize_wed(u0, w);
      rows.push_back({eps, sol.value, E0});
      taus.push_back(w.tau);
      trajs.push_back(std::move(sol.trajectory));
    }

    double tau_ref = taus.front(), horizon = trajs.front().K() * taus.front();
    for (std::size_t e = 0; e < rows.size(); ++e) {
      tau_ref = std::min(tau_ref, taus[e]);
      horizon = std::min(horizon, trajs[e].K() * taus[e]);
    }
    const double window = c.real("sweep.window") > 0.0 ? std::min(c.real("sweep.window"), horizon) : 0.5 * horizon;
    MmConfig m = mm_config(c);
    m.tau = tau_ref;
    m.steps = std::max(1, static_cast<int>(std::floor(window / tau_ref + 1e-9)));
    const Trajectory ref = minimizing_movement(u0, m).trajectory;

    io::CsvWriter cross(ctx.path("cross_solver.csv"), {"eps", "t", "distance"});
    for (std::size_t e = 0; e < rows.size(); ++e) {
      const Trajectory& tr = trajs[e];
      const double ratio = taus[e] / tau_ref;
      rows[e].cross = 0.0;
      for (int k = 1; k <= tr.K(); ++k) {
        const double j = k * ratio;
        const long jr = std::lround(j);
        if (std::abs(j - jr) > 1e-9 || jr > ref.K()) continue;
        const double dist = l2_distance(tr.maps[k], ref.maps[jr]);
        rows[e].cross = std::max(rows[e].cross, dist);
        cross.row({rows[e].eps, tr.time(k), dist});
      }
    }
    cross.close();
    write_value_csv(ctx, rows);

    // rows run from the largest eps to the smallest
    double mono = 0.0, bounds = 0.0;
    for (std::size_t e = 0; e < rows.size(); ++e) {
      bounds = std::max({bounds, -rows[e].V, rows[e].V - E0});
      if (e > 0) mono = std::max(mono, rows[e - 1].V - rows[e].V);
    }
    ValidationReport rep;
    rep.add({"value_monotone_in_eps", mono, 1e-8});
    rep.add({"value_bounds", bounds, 1e-8 * std::max(1.0, E0)});
    ctx.add_checks(rep);
    json& s = ctx.summary();
    s["E0"] = E0;
    s["V_eps"] = rows.back().V;
    s["cross_solver_window"] = window;
    io::write_plot_script(ctx.path("plot.gp"),
                          {{"value_function.csv", "eps", "gap", "E0 - V_eps", true},
                           {"value_function.csv", "eps", "cross_solver", "distance to minimizing movements", true}});
  });
}

inline int harmonic_limit_loaded(const RunConfig& c) {
  return guarded(c, "harmonic-limit", [&](RunContext& ctx) {
    const GridDomain d = config_domain(c);
    const TargetKind kind = config_target(c);
    const GridMap u0 = initial_map(c, d, kind);
    const HarmonicLimit hl = harmonic_limit(u0, mm_config(c));
    io::write_grid_map(ctx.path("limit.csv"), hl.limit);
    io::CsvWriter w(ctx.path("convergence.csv"), {"step", "E", "change"});
    for (std::size_t k = 0; k < hl.report.energies.size(); ++k)
      w.row({double(k), hl.report.energies[k], k == 0 ? 0.0 : hl.report.changes[k - 1]});
    w.close();
    json& s = ctx.summary();
    s["E0"] = ks_energy(u0);
    s["final_energy"] = hl.energy;
    s["steps"] = hl.steps;
    s["converged"] = hl.report.converged;
    if (!hl.report.converged) {
      ctx.note("harmonic limit not reached within mm.steps");
      ctx.fail_check();
    }
    io::write_plot_script(ctx.path("plot.gp"), {{"convergence.csv", "step", "E", "energy along minimizing movements"}});
  });
}

using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Loads and checks the config; any failure exits with 2 before artifacts exist.
template <class Fn>
int with_config(const std::filesystem::path& path, const Overrides& overrides, Fn fn) {
  RunConfig c;
  try {
    c = load_config(path);
    for (const auto& [k, v] : overrides) c.set(k, v);
    check_semantics(c);
  } catch (const Error& e) {
    std::cerr << "hmflow: " << e.what() << '\n';
    return exit_usage;
  }
  return fn(c);
}

inline int run(const std::filesystem::path& p, const Overrides& o = {}) {
  return with_config(p, o, [](const RunConfig& c) { return run_loaded(c, Toggles::from(c)); });
}

/// Solver plus every diagnostic that applies to the target and solver;
/// with config_only, just the schema and semantic checks.
inline int validate(const std::filesystem::path& p, bool config_only = false, const Overrides& o = {}) {
  return with_config(p, o, [&](const RunConfig& c) {
    if (config_only) {
      std::cout << p.string() << ": ok\n";
      return static_cast<int>(exit_ok);
    }
    return run_loaded(c, Toggles::all(), "validate");
  });
}

inline int frequency(const std::filesystem::path& p, const Overrides& o = {}) {
  return with_config(p, o, [](const RunConfig& c) {
    Toggles on = Toggles::from(c);
    on.frequency = on.struwe = true;
    return run_loaded(c, on, "frequency");
  });
}

inline int sweep_eps(const std::filesystem::path& p, const std::vector<double>& eps = {}, const Overrides& o = {}) {
  return with_config(p, o, [&](const RunConfig& c) { return sweep_eps_loaded(c, eps); });
}

inline int harmonic_limit_cmd(const std::filesystem::path& p, const Overrides& o = {}) {
  return with_config(p, o, [](const RunConfig& c) { return harmonic_limit_loaded(c); });
}

}  // namespace hmflow::harness
