#include "ufls/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "ufls/config.hpp"
#include "ufls/highs_backend.hpp"
#include "ufls/milp.hpp"
#include "ufls/scenario.hpp"
#include "ufls/simulator.hpp"

namespace ufls {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Failures that map onto a specific exit status.
struct ExitError : std::runtime_error {
  int code;
  ExitError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct Common {
  std::string config_path;
  std::string case_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int jobs = 0;
};

struct Context {
  RunConfig cfg;
  GridCase base;
  GridCase gc;  // with the case study applied
  fs::path out;
  std::ostream* log = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "Run configuration (JSON)");
  sub->add_option("--case", c.case_path, "Grid case file; overrides the config's 'case'");
  sub->add_option("-o,--out", c.out_dir, "Output directory; overrides UFLS_OUTPUT_DIR and the config");
  sub->add_option("--set", c.overrides, "Config override key.path=value (repeatable)");
  sub->add_option("--jobs", c.jobs, "Parallel scenario jobs (default 1)")->check(CLI::PositiveNumber);
}

GridCase read_case(const std::string& path) {
  if (path.empty()) throw ValidationError("no case file given (use --case or the config's 'case')");
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open case file " + path);
  return parse_case(in);
}

std::vector<double> read_thresholds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open thresholds file " + path);
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError(path + " is not valid JSON");
  std::vector<double> thr;
  try {
    if (j.contains("thresholds_hz")) {
      thr = j["thresholds_hz"].get<std::vector<double>>();
    } else if (j.contains("stages")) {
      for (const auto& st : j["stages"]) thr.push_back(st.at("threshold_hz").get<double>());
    }
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (thr.empty()) throw ValidationError(path + ": expected 'thresholds_hz' or a scheme with 'stages'");
  return thr;
}

Context load(const Common& c, std::ostream& log, const std::string& fix_thresholds = {}) {
  Context ctx;
  ctx.cfg = load_config(c.config_path, c.overrides);
  if (!c.case_path.empty()) ctx.cfg.case_path = c.case_path;
  if (c.jobs > 0) ctx.cfg.jobs = c.jobs;
  if (!fix_thresholds.empty()) {
    ctx.cfg.milp.fix_thresholds_hz = read_thresholds(fix_thresholds);
    validate(ctx.cfg.milp);
  }
  if (const char* env = std::getenv("UFLS_OUTPUT_DIR"); env != nullptr && *env != '\0') ctx.cfg.output_dir = env;
  if (!c.out_dir.empty()) ctx.cfg.output_dir = c.out_dir;
  ctx.base = read_case(ctx.cfg.case_path);
  ctx.gc = apply_case_study(ctx.base, ctx.cfg.case_study);
  ctx.out = ctx.cfg.output_dir;
  ctx.log = &log;
  return ctx;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ValidationError("cannot create output directory " + dir.string());
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  ensure_dir(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path.string());
  body(f);
  f.flush();
  if (!f) throw ValidationError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, [&](std::ostream& o) { o << j.dump(2) << "\n"; });
}

std::unique_ptr<SolverBackend> make_backend(const std::string& name) {
  if (name == "highs") return std::make_unique<HighsBackend>();
  if (name == "highs-mps") return std::make_unique<HighsFileBackend>(ModelFileFormat::Mps);
  if (name == "highs-lp") return std::make_unique<HighsFileBackend>(ModelFileFormat::Lp);
  throw ValidationError("unknown solver backend '" + name + "' (highs|highs-mps|highs-lp)");
}

ScenarioSet scenarios(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  ScenarioSet set = generate_scenarios(ctx.gc, c.scenario_target, c.scenario_count, c.scenario_seed,
                                       c.scenario_tolerance);
  if (set.scenarios.empty())
    throw ValidationError("no generator subset meets the imbalance target; widen scenarios.tolerance");
  return set;
}

const Scenario& pick(const ScenarioSet& set, int index) {
  if (index < 0 || index >= set.size())
    throw ValidationError("scenario index " + std::to_string(index) + " out of range [0, " +
                          std::to_string(set.size()) + ")");
  return set.scenarios[index];
}

DiscreteModel model_for(const Context& ctx) {
  return discretize(build_dae(ctx.gc), ctx.cfg.milp.t_s, ctx.cfg.milp.horizon_s);
}

UflsMilp milp_for(const Context& ctx, const DiscreteModel& dm, const Scenario& sc) {
  MilpConfig mc = ctx.cfg.milp;
  if (ctx.cfg.normalize) mc.scales = objective_scales(ctx.gc, dm, sc.disturbance);
  return build_milp(dm, ctx.gc, sc.disturbance, ctx.gc.betas(), mc);
}

int status_exit(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
    case SolveStatus::Feasible: return kExitOk;
    case SolveStatus::Infeasible: return kExitInfeasible;
    case SolveStatus::TimedOut: return kExitTimeout;
    case SolveStatus::Error: return kExitNumerical;
  }
  return kExitNumerical;
}

void export_model(const UflsMilp& m, const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".lp")
    write_file(path, [&](std::ostream& o) { write_lp(o, m.model); });
  else if (ext == ".mps")
    write_file(path, [&](std::ostream& o) { write_mps(o, m.model); });
  else
    throw ValidationError("model export path must end in .lp or .mps: " + path.string());
}

// ------------------------------------------------------------- commands

struct SimulateArgs {
  std::string scheme_path;
  bool conventional = false;
  int scenario = 0;
  bool no_disturbance = false;
};

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const Context ctx = load(c, err);
  if (a.scheme_path.empty() == !a.conventional)
    throw ValidationError("simulate needs exactly one of --scheme FILE or --conventional");
  UflsScheme scheme;
  if (a.conventional) {
    scheme = conventional_scheme(ctx.gc, ctx.cfg.conventional, ctx.cfg.milp.deadband_s, ctx.cfg.milp.delay_s);
  } else {
    std::ifstream in(a.scheme_path);
    if (!in) throw ValidationError("cannot open scheme file " + a.scheme_path);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError(a.scheme_path + " is not valid JSON");
    scheme = scheme_from_json(j, ctx.gc);
  }
  validate_scheme(scheme, ctx.gc, {ctx.cfg.milp.stage_cap_frac, 1e-7});
  Disturbance dist;
  if (a.no_disturbance) {
    dist.step_pu = Vector::Zero(ctx.gc.num_buses());
    dist.label = "none";
  } else {
    dist = pick(scenarios(ctx), a.scenario).disturbance;
  }
  const DiscreteModel dm = model_for(ctx);
  const Trajectory tr = simulate(dm, scheme, dist, ctx.gc.betas(), ctx.gc.f_nominal_hz);
  const Metrics mt = metrics(tr, ctx.gc.total_load());
  write_file(ctx.out / "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, tr, ctx.gc); });
  write_file(ctx.out / "relays.csv", [&](std::ostream& o) { write_relay_log_csv(o, tr, ctx.gc); });
  write_file(ctx.out / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, mt); });
  out << "scenario " << dist.label << ": nadir " << mt.nadir_hz << " Hz, TLS " << mt.tls_pct << " %, dfss "
      << mt.dfss_hz << " Hz\n";
  return kExitOk;
}

struct OptimizeArgs {
  int scenario = 0;
  std::string export_path;
  bool export_only = false;
  std::string fix_thresholds;
};

int cmd_optimize(const Common& c, const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
  const Context ctx = load(c, err, a.fix_thresholds);
  const ScenarioSet set = scenarios(ctx);
  const Scenario& sc = pick(set, a.scenario);
  const DiscreteModel dm = model_for(ctx);
  const UflsMilp m = milp_for(ctx, dm, sc);
  err << "model: " << m.model.num_vars() << " columns, " << m.model.num_constraints() << " rows, "
      << m.model.num_binaries() << " binaries\n";
  if (a.export_only || !a.export_path.empty()) {
    const fs::path p = a.export_path.empty() ? ctx.out / "model.mps" : fs::path(a.export_path);
    export_model(m, p);
    err << "wrote " << p.string() << "\n";
    if (a.export_only) return kExitOk;
  }
  const auto backend = make_backend(ctx.cfg.backend);
  std::optional<std::vector<double>> start;
  if (ctx.cfg.warm_start && backend->capabilities().warm_start) start = heuristic_start(m, dm, ctx.gc, sc.disturbance);
  const MilpSolution sol = solve(m, *backend, ctx.cfg.limits, start ? &*start : nullptr);
  err << "solver: " << to_string(sol.status) << " after " << sol.seconds << " s, gap " << sol.gap << "\n";
  write_json(ctx.out / "solution.json", solution_to_json(sol, m, ctx.gc));
  if (!sol.has_solution()) {
    out << "scenario " << sc.disturbance.label << ": " << to_string(sol.status) << " (" << sol.message << ")\n";
    return status_exit(sol.status);
  }
  const UflsScheme scheme = extract_scheme(sol, m, ctx.gc);
  validate_scheme(scheme, ctx.gc, {ctx.cfg.milp.stage_cap_frac, 1e-7});
  const Trajectory tr = simulate(dm, scheme, sc.disturbance, ctx.gc.betas(), ctx.gc.f_nominal_hz);
  const VerificationReport vr = verify_against_milp(tr, sol, m.step);
  write_json(ctx.out / "scheme.json", scheme_to_json(scheme, ctx.gc));
  const Metrics mt = metrics(tr, ctx.gc.total_load());
  out << "scenario " << sc.disturbance.label << ": " << to_string(sol.status) << ", objective " << sol.objective
      << ", nadir " << mt.nadir_hz << " Hz, TLS " << mt.tls_pct << " %, dfss " << mt.dfss_hz << " Hz\n";
  if (!vr.ok()) {
    err << "replay disagrees with the optimiser: max |domega| " << vr.max_omega_diff << ", "
        << vr.event_mismatches << " relay event mismatches\n";
    for (const auto& d : vr.details) err << "  " << d << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

struct AosArgs {
  std::string fix_thresholds;
};

int cmd_aos(const Common& c, const AosArgs& a, std::ostream& out, std::ostream& err) {
  const Context ctx = load(c, err, a.fix_thresholds);
  const ScenarioSet set = scenarios(ctx);
  write_json(ctx.out / "scenarios.json", scenario_manifest(set, ctx.gc));
  const auto backend = make_backend(ctx.cfg.backend);
  const DiscreteModel dm = model_for(ctx);
  std::vector<ScenarioResult> results(set.scenarios.size());
  const PipelineOptions opt = ctx.cfg.pipeline();
  parallel_for(set.size(), ctx.cfg.jobs, [&](int i) {
    results[i] = optimize_scenario(ctx.gc, dm, set.scenarios[i], i, opt, *backend);
  });

  int failed = 0;
  json summary = json::array();
  std::vector<std::optional<UflsScheme>> ideal(set.size());
  for (const auto& r : results) {
    json row = {{"index", r.index}, {"label", r.label}, {"status", to_string(r.solution.status)},
                {"gap", r.solution.gap}, {"objective", r.solution.objective}, {"warm_start", r.used_start}};
    if (r.ok()) {
      ideal[r.index] = r.scheme;
      write_json(ctx.out / ("scheme_ideal_" + std::to_string(r.index) + ".json"), scheme_to_json(*r.scheme, ctx.gc));
    } else {
      ++failed;
      row["error"] = r.error;
      err << "scenario " << r.index << " (" << r.label << ") failed: " << r.error << "\n";
    }
    err << "scenario " << r.index << " (" << r.label << "): " << to_string(r.solution.status) << " in "
        << r.solution.seconds << " s, gap " << r.solution.gap << "\n";
    summary.push_back(row);
  }
  write_json(ctx.out / "solve_summary.json", summary);
  if (failed == set.size()) throw ExitError(kExitPartial, "every scenario failed; nothing to aggregate");

  const auto agg = aggregate(results, ctx.gc, ctx.cfg.milp.stage_cap_frac);
  const UflsScheme conv =
      conventional_scheme(ctx.gc, ctx.cfg.conventional, ctx.cfg.milp.deadband_s, ctx.cfg.milp.delay_s);
  std::vector<std::string> methods{"Ideal"};
  std::vector<std::vector<std::optional<UflsScheme>>> per_method{ideal};
  for (const auto& g : agg) {
    const std::string name = g.kind == AggregateKind::Mean ? "AOS" : to_string(g.kind);
    write_json(ctx.out / ("scheme_" + to_string(g.kind) + ".json"), scheme_to_json(g.scheme, ctx.gc));
    for (const auto& note : g.repairs) err << to_string(g.kind) << " repair: " << note << "\n";
    methods.push_back(name);
    per_method.emplace_back(set.size(), g.scheme);
  }
  methods.push_back("Conventional");
  per_method.emplace_back(set.size(), conv);
  write_json(ctx.out / "scheme_conventional.json", scheme_to_json(conv, ctx.gc));

  const EvaluationReport rep = evaluate(ctx.gc, dm, set, methods, per_method, ctx.cfg.jobs);
  write_file(ctx.out / "report.csv", [&](std::ostream& o) { write_report_csv(o, rep); });
  write_file(ctx.out / "report_detail.csv", [&](std::ostream& o) { write_report_detail_csv(o, rep); });
  write_report_csv(out, rep);
  if (failed > 0) {
    err << failed << " of " << set.size() << " scenarios failed\n";
    return kExitPartial;
  }
  return kExitOk;
}

struct ParetoArgs {
  int scenario = -1;
};

int cmd_pareto(const Common& c, const ParetoArgs& a, std::ostream& out, std::ostream& err) {
  const Context ctx = load(c, err);
  const auto grid = gamma_grid(ctx.cfg.pareto_g1, ctx.cfg.pareto_g2, ctx.cfg.pareto_g3);
  if (grid.empty()) throw ValidationError("pareto: empty weight grid");
  const ScenarioSet set = scenarios(ctx);
  const Scenario& sc = pick(set, a.scenario >= 0 ? a.scenario : ctx.cfg.pareto_scenario);
  const auto backend = make_backend(ctx.cfg.backend);
  const auto pts = pareto_sweep(ctx.gc, sc, grid, ctx.cfg.pipeline(), *backend);
  write_file(ctx.out / "pareto.csv", [&](std::ostream& o) { write_pareto_csv(o, pts); });
  json marks = json::array();
  int failed = 0;
  for (const auto& p : pts) {
    if (p.selected) marks.push_back(p.gammas);
    if (!p.ok()) {
      ++failed;
      err << "gammas (" << p.gammas[0] << ", " << p.gammas[1] << ", " << p.gammas[2] << ") failed: " << p.error
          << "\n";
    }
  }
  write_json(ctx.out / "pareto_selected.json", marks);
  write_pareto_csv(out, pts);
  return failed > 0 ? kExitPartial : kExitOk;
}

struct EvaluateArgs {
  std::vector<std::string> schemes;  // name=path
};

int cmd_evaluate(const Common& c, const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const Context ctx = load(c, err);
  const ScenarioSet set = scenarios(ctx);
  const DiscreteModel dm = model_for(ctx);
  std::vector<std::string> methods;
  std::vector<std::vector<std::optional<UflsScheme>>> per_method;
  for (const auto& spec : a.schemes) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--scheme expects NAME=FILE, got '" + spec + "'");
    const std::string path = spec.substr(eq + 1);
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scheme file " + path);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError(path + " is not valid JSON");
    const UflsScheme s = scheme_from_json(j, ctx.gc);
    validate_scheme(s, ctx.gc, {ctx.cfg.milp.stage_cap_frac, 1e-7});
    methods.push_back(spec.substr(0, eq));
    per_method.emplace_back(set.size(), s);
  }
  methods.push_back("Conventional");
  per_method.emplace_back(
      set.size(), conventional_scheme(ctx.gc, ctx.cfg.conventional, ctx.cfg.milp.deadband_s, ctx.cfg.milp.delay_s));
  const EvaluationReport rep = evaluate(ctx.gc, dm, set, methods, per_method, ctx.cfg.jobs);
  write_file(ctx.out / "report.csv", [&](std::ostream& o) { write_report_csv(o, rep); });
  write_file(ctx.out / "report_detail.csv", [&](std::ostream& o) { write_report_detail_csv(o, rep); });
  write_report_csv(out, rep);
  return kExitOk;
}

struct ExportArgs {
  int scenario = 0;
  std::string path;
  std::string fix_thresholds;
};

int cmd_export(const Common& c, const ExportArgs& a, std::ostream& out, std::ostream& err) {
  const Context ctx = load(c, err, a.fix_thresholds);
  const ScenarioSet set = scenarios(ctx);
  const DiscreteModel dm = model_for(ctx);
  const UflsMilp m = milp_for(ctx, dm, pick(set, a.scenario));
  const fs::path p = a.path.empty() ? ctx.out / "model.mps" : fs::path(a.path);
  export_model(m, p);
  out << p.string() << ": " << m.model.num_vars() << " columns, " << m.model.num_constraints() << " rows, "
      << m.model.num_binaries() << " binaries\n";
  return kExitOk;
}

int cmd_validate_case(const std::string& path, bool as_json, std::ostream& out) {
  const GridCase gc = read_case(path);
  const LinearSystem sys = build_dae(gc);
  json j = {{"name", gc.name},
            {"buses", gc.num_buses()},
            {"lines", gc.num_lines()},
            {"machines", gc.num_machines()},
            {"participating_buses", gc.participating_buses().size()},
            {"total_load_pu", gc.total_load()},
            {"net_load_pu", gc.net_load()},
            {"total_generation_pu", gc.total_generation()},
            {"total_shed_cap_pu", gc.total_shed_cap()},
            {"states", sys.n_state()}};
  if (as_json)
    out << j.dump(2) << "\n";
  else
    out << path << ": ok (" << gc.num_buses() << " buses, " << gc.num_lines() << " lines, " << gc.num_machines()
        << " machines)\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"UFLS planning: simulate, optimise and evaluate staged under-frequency load shedding", "ufls"};
  bool version = false;
  bool version_json = false;
  app.add_flag("--version", version, "Print the version and exit");
  app.add_flag("--json", version_json, "With --version: print a JSON object");
  app.require_subcommand(0, 1);
  app.footer(
      "Exit codes: 0 ok, 1 partial failure, 2 invalid input, 3 numerical or solver error,\n"
      "4 infeasible, 5 time limit without incumbent.");

  Common common;
  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate one scenario under a given scheme");
  add_common(s_sim, common);
  s_sim->add_option("--scheme", sim.scheme_path, "Scheme file (JSON)");
  s_sim->add_flag("--conventional", sim.conventional, "Use the configured conventional scheme");
  s_sim->add_option("--scenario", sim.scenario, "Scenario index (default 0)");
  s_sim->add_flag("--no-disturbance", sim.no_disturbance, "Simulate without any disturbance");

  OptimizeArgs opt;
  auto* s_opt = app.add_subcommand("optimize", "Solve the scheme-design MILP for one scenario");
  add_common(s_opt, common);
  s_opt->add_option("--scenario", opt.scenario, "Scenario index (default 0)");
  s_opt->add_option("--export", opt.export_path, "Also write the model (.lp or .mps)");
  s_opt->add_flag("--export-only", opt.export_only, "Write the model and stop");
  s_opt->add_option("--fix-thresholds", opt.fix_thresholds, "Fix stage thresholds from a JSON file");

  AosArgs aos;
  auto* s_aos = app.add_subcommand("aos", "Optimise every scenario, aggregate and evaluate");
  add_common(s_aos, common);
  s_aos->add_option("--fix-thresholds", aos.fix_thresholds, "Fix stage thresholds from a JSON file");

  ParetoArgs par;
  auto* s_par = app.add_subcommand("pareto", "Sweep objective weights on one scenario");
  add_common(s_par, common);
  s_par->add_option("--scenario", par.scenario, "Scenario index (default: pareto.scenario)");

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Evaluate schemes against the scenario set");
  add_common(s_ev, common);
  s_ev->add_option("--scheme", ev.schemes, "NAME=FILE (repeatable); the conventional row is always added");

  ExportArgs ex;
  auto* s_ex = app.add_subcommand("export-model", "Write the MILP for one scenario as LP or MPS");
  add_common(s_ex, common);
  s_ex->add_option("--scenario", ex.scenario, "Scenario index (default 0)");
  s_ex->add_option("--output", ex.path, "Output file, .lp or .mps (default OUT/model.mps)");
  s_ex->add_option("--fix-thresholds", ex.fix_thresholds, "Fix stage thresholds from a JSON file");

  std::string vc_path;
  bool vc_json = false;
  auto* s_vc = app.add_subcommand("validate-case", "Check a grid case file");
  s_vc->add_option("case", vc_path, "Case file")->required();
  s_vc->add_flag("--json", vc_json, "Print a JSON summary");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitValidation;
  }
  if (version) {
    if (version_json)
      out << json{{"name", "ufls"}, {"version", UFLS_VERSION}}.dump() << "\n";
    else
      out << "ufls " << UFLS_VERSION << "\n";
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return kExitValidation;
  }

  try {
    if (s_sim->parsed()) return cmd_simulate(common, sim, out, err);
    if (s_opt->parsed()) return cmd_optimize(common, opt, out, err);
    if (s_aos->parsed()) return cmd_aos(common, aos, out, err);
    if (s_par->parsed()) return cmd_pareto(common, par, out, err);
    if (s_ev->parsed()) return cmd_evaluate(common, ev, out, err);
    if (s_ex->parsed()) return cmd_export(common, ex, out, err);
    if (s_vc->parsed()) return cmd_validate_case(vc_path, vc_json, out);
  } catch (const ExitError& e) {
    err << "error: " << e.what() << "\n";
    return e.code;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace ufls
