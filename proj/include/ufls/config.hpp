#ifndef UFLS_CONFIG_HPP
#define UFLS_CONFIG_HPP

// Run configuration: one JSON document with defaults for every field,
// optionally merged from a file and from `key.path=value` overrides.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "ufls/backend.hpp"
#include "ufls/error.hpp"
#include "ufls/milp.hpp"
#include "ufls/scenario.hpp"

namespace ufls {

struct RunConfig {
  std::string case_path;
  std::string output_dir = "out";
  MilpConfig milp;
  SolveLimits limits{600.0, 0.01, 1e-6, "choose", 1, 0, false};
  std::string backend = "highs";
  bool normalize = true;
  bool warm_start = true;
  int jobs = 1;

  double scenario_target = 0.25;
  double scenario_tolerance = 0.02;
  int scenario_count = 6;
  std::uint64_t scenario_seed = 1;

  CaseStudy case_study;
  ConventionalSpec conventional;

  std::vector<double> pareto_g1{1.0};
  std::vector<double> pareto_g2{0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> pareto_g3{0.2, 0.6, 1.0};
  int pareto_scenario = 0;

  PipelineOptions pipeline() const { return {milp, limits, normalize, warm_start, jobs}; }
};

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json m = {{"gammas", c.milp.gammas},
            {"n_stages", c.milp.n_stages},
            {"t_s", c.milp.t_s},
            {"horizon_s", c.milp.horizon_s},
            {"deadband_s", c.milp.deadband_s},
            {"delay_s", c.milp.delay_s},
            {"max_threshold_hz", c.milp.max_threshold_hz},
            {"min_gap_hz", c.milp.min_gap_hz},
            {"floor_hz", c.milp.floor_hz},
            {"band_low_hz", c.milp.band_low_hz},
            {"band_high_hz", c.milp.band_high_hz},
            {"stage_cap_frac", c.milp.stage_cap_frac},
            {"fix_thresholds_hz", c.milp.fix_thresholds_hz ? json(*c.milp.fix_thresholds_hz) : json(nullptr)},
            {"omega_bound_pu", c.milp.omega_bound_pu},
            {"tie_margin_pu", c.milp.tie_margin_pu},
            {"window_steps", c.milp.window_steps}};
  json solver = {{"backend", c.backend},
                 {"time_limit_s", c.limits.time_s},
                 {"rel_gap", c.limits.rel_gap},
                 {"abs_gap", c.limits.abs_gap},
                 {"lp_solver", c.limits.lp_solver},
                 {"threads", c.limits.threads},
                 {"seed", c.limits.seed},
                 {"verbose", c.limits.verbose},
                 {"normalize", c.normalize},
                 {"warm_start", c.warm_start}};
  json scen = {{"target", c.scenario_target},
               {"tolerance", c.scenario_tolerance},
               {"count", c.scenario_count},
               {"seed", c.scenario_seed}};
  const CaseStudy& cs = c.case_study;
  json study = {{"id", to_string(cs.id)},
                {"n_backfeed", cs.n_backfeed},
                {"backfeed_beta", {cs.backfeed_beta_lo, cs.backfeed_beta_hi}},
                {"other_beta", {cs.other_beta_lo, cs.other_beta_hi}},
                {"seed", cs.seed}};
  json conv = {{"thresholds_hz", c.conventional.thresholds_hz}, {"stage_cap_frac", c.conventional.stage_cap_frac}};
  json pareto = {{"g1", c.pareto_g1}, {"g2", c.pareto_g2}, {"g3", c.pareto_g3}, {"scenario", c.pareto_scenario}};
  return {{"case", c.case_path},       {"output_dir", c.output_dir}, {"milp", m},
          {"solver", solver},           {"scenarios", scen},          {"case_study", study},
          {"conventional", conv},       {"pareto", pareto},           {"jobs", c.jobs}};
}

namespace detail {

inline void check_keys(const nlohmann::json& have, const nlohmann::json& known, const std::string& where) {
  if (!have.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (auto it = have.begin(); it != have.end(); ++it) {
    if (!known.contains(it.key())) throw ValidationError("config: unknown key '" + where + it.key() + "'");
    if (known[it.key()].is_object()) check_keys(it.value(), known[it.key()], where + it.key() + ".");
  }
}

template <class T>
T get(const nlohmann::json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config: '") + section + "." + key + "' has the wrong type");
  }
}

inline std::pair<double, double> get_range(const nlohmann::json& j, const char* section, const char* key) {
  auto v = get<std::vector<double>>(j, section, key);
  if (v.size() != 2 || !(v[0] <= v[1]))
    throw ValidationError(std::string("config: '") + section + "." + key + "' must be [lo, hi] with lo <= hi");
  return {v[0], v[1]};
}

}  // namespace detail

/// Reads a full or partial configuration; absent fields keep their defaults.
inline RunConfig config_from_json(const nlohmann::json& patch) {
  const RunConfig defaults;
  nlohmann::json j = to_json(defaults);
  detail::check_keys(patch, j, "");
  j.merge_patch(patch);
  RunConfig c;
  using detail::get;
  c.milp.gammas = get<std::array<double, 3>>(j, "milp", "gammas");
  c.milp.n_stages = get<int>(j, "milp", "n_stages");
  c.milp.t_s = get<double>(j, "milp", "t_s");
  c.milp.horizon_s = get<double>(j, "milp", "horizon_s");
  c.milp.deadband_s = get<double>(j, "milp", "deadband_s");
  c.milp.delay_s = get<double>(j, "milp", "delay_s");
  c.milp.max_threshold_hz = get<double>(j, "milp", "max_threshold_hz");
  c.milp.min_gap_hz = get<double>(j, "milp", "min_gap_hz");
  c.milp.floor_hz = get<double>(j, "milp", "floor_hz");
  c.milp.band_low_hz = get<double>(j, "milp", "band_low_hz");
  c.milp.band_high_hz = get<double>(j, "milp", "band_high_hz");
  c.milp.stage_cap_frac = get<double>(j, "milp", "stage_cap_frac");
  // merge_patch drops null members, so an absent key means "free thresholds"
  if (j["milp"].contains("fix_thresholds_hz") && !j["milp"]["fix_thresholds_hz"].is_null())
    c.milp.fix_thresholds_hz = get<std::vector<double>>(j, "milp", "fix_thresholds_hz");
  c.milp.omega_bound_pu = get<double>(j, "milp", "omega_bound_pu");
  c.milp.tie_margin_pu = get<double>(j, "milp", "tie_margin_pu");
  c.milp.window_steps = get<int>(j, "milp", "window_steps");

  c.backend = get<std::string>(j, "solver", "backend");
  c.limits.time_s = get<double>(j, "solver", "time_limit_s");
  c.limits.rel_gap = get<double>(j, "solver", "rel_gap");
  c.limits.abs_gap = get<double>(j, "solver", "abs_gap");
  c.limits.lp_solver = get<std::string>(j, "solver", "lp_solver");
  c.limits.threads = get<int>(j, "solver", "threads");
  c.limits.seed = get<int>(j, "solver", "seed");
  c.limits.verbose = get<bool>(j, "solver", "verbose");
  c.normalize = get<bool>(j, "solver", "normalize");
  c.warm_start = get<bool>(j, "solver", "warm_start");

  c.scenario_target = get<double>(j, "scenarios", "target");
  c.scenario_tolerance = get<double>(j, "scenarios", "tolerance");
  c.scenario_count = get<int>(j, "scenarios", "count");
  c.scenario_seed = get<std::uint64_t>(j, "scenarios", "seed");

  c.case_study.id = parse_case_study(get<std::string>(j, "case_study", "id"));
  c.case_study.n_backfeed = get<int>(j, "case_study", "n_backfeed");
  std::tie(c.case_study.backfeed_beta_lo, c.case_study.backfeed_beta_hi) =
      detail::get_range(j, "case_study", "backfeed_beta");
  std::tie(c.case_study.other_beta_lo, c.case_study.other_beta_hi) = detail::get_range(j, "case_study", "other_beta");
  c.case_study.seed = get<std::uint64_t>(j, "case_study", "seed");

  c.conventional.thresholds_hz = get<std::vector<double>>(j, "conventional", "thresholds_hz");
  c.conventional.stage_cap_frac = get<double>(j, "conventional", "stage_cap_frac");

  c.pareto_g1 = get<std::vector<double>>(j, "pareto", "g1");
  c.pareto_g2 = get<std::vector<double>>(j, "pareto", "g2");
  c.pareto_g3 = get<std::vector<double>>(j, "pareto", "g3");
  c.pareto_scenario = get<int>(j, "pareto", "scenario");

  try {
    c.case_path = j.at("case").get<std::string>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.jobs = j.at("jobs").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config: 'case', 'output_dir' or 'jobs' has the wrong type");
  }

  if (c.case_study.fixed_thresholds() && !c.milp.fix_thresholds_hz) {
    if (static_cast<int>(c.conventional.thresholds_hz.size()) != c.milp.n_stages)
      throw ValidationError("config: fixed-threshold study needs one conventional threshold per stage");
    c.milp.fix_thresholds_hz = c.conventional.thresholds_hz;
  }
  validate(c.milp);
  if (c.jobs < 1) throw ValidationError("config: jobs must be >= 1");
  if (c.limits.threads < 1) throw ValidationError("config: solver.threads must be >= 1");
  if (!(c.limits.rel_gap >= 0.0)) throw ValidationError("config: solver.rel_gap must be >= 0");
  if (!(c.limits.abs_gap >= 0.0)) throw ValidationError("config: solver.abs_gap must be >= 0");
  if (!(c.limits.time_s > 0.0)) throw ValidationError("config: solver.time_limit_s must be > 0");
  if (c.scenario_count < 1) throw ValidationError("config: scenarios.count must be >= 1");
  return c;
}

/// Applies `a.b.c=value` to a JSON patch. The value is parsed as JSON when
/// possible and taken as a string otherwise.
inline void apply_override(nlohmann::json& patch, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  nlohmann::json* node = &patch;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("--set: malformed key '" + key + "'");
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

/// A relative case path in a config file is taken relative to that file.
inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  nlohmann::json patch = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path);
    patch = nlohmann::json::parse(in, nullptr, false);
    if (patch.is_discarded()) throw ValidationError("config file " + path + " is not valid JSON");
    if (patch.is_object() && patch.contains("case") && patch["case"].is_string()) {
      const std::filesystem::path cp = patch["case"].get<std::string>();
      if (cp.is_relative()) patch["case"] = (std::filesystem::path(path).parent_path() / cp).lexically_normal().string();
    }
  }
  for (const auto& o : overrides) apply_override(patch, o);
  return config_from_json(patch);
}

}  // namespace ufls

#endif  // UFLS_CONFIG_HPP
