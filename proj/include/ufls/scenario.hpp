#ifndef UFLS_SCENARIO_HPP
#define UFLS_SCENARIO_HPP

// Scenario-based planning: disturbance sets, case-study variants, per-scenario
// optimisation, setpoint aggregation, evaluation and the weight sweep.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ufls/backend.hpp"
#include "ufls/dae.hpp"
#include "ufls/error.hpp"
#include "ufls/grid.hpp"
#include "ufls/milp.hpp"
#include "ufls/scheme.hpp"
#include "ufls/simulator.hpp"

namespace ufls {

// ---------------------------------------------------------------- scenarios

struct Scenario {
  Disturbance disturbance;
  std::vector<int> lost_buses;  // case-file labels of the lost machines
  double lost_pu = 0.0;
};

struct ScenarioSet {
  double target_imbalance_frac = 0.25;
  double tolerance_frac = 0.02;
  double reference_load = 0.0;  // net load the target refers to
  std::uint64_t seed = 0;
  std::size_t candidates = 0;   // subsets inside the tolerance before sampling
  std::vector<Scenario> scenarios;

  int size() const { return static_cast<int>(scenarios.size()); }
};

inline Scenario make_loss_scenario(const GridCase& gc, const std::vector<int>& machine_idx) {
  Scenario s;
  s.disturbance.step_pu = Vector::Zero(gc.num_buses());
  std::string label = "loss";
  for (int g : machine_idx) {
    const Machine& m = gc.machines.at(g);
    s.disturbance.step_pu[m.bus] -= m.p_gen;
    s.lost_pu += m.p_gen;
    s.lost_buses.push_back(gc.buses[m.bus].label);
    label += "_" + std::to_string(gc.buses[m.bus].label);
  }
  s.disturbance.label = label;
  return s;
}

/// Generator subsets whose nominal output is within tolerance of
/// target * net load. Up to max_count are kept (seeded sample when more
/// qualify), returned in lexicographic order of machine index lists.
inline ScenarioSet generate_scenarios(const GridCase& gc, double target, int max_count, std::uint64_t seed,
                                      double tolerance = 0.02) {
  if (!(target > 0.0 && target < 1.0)) throw ValidationError("scenario target imbalance must be in (0, 1)");
  if (max_count < 1) throw ValidationError("scenario count must be >= 1");
  if (!(tolerance >= 0.0)) throw ValidationError("scenario tolerance must be >= 0");
  const int G = gc.num_machines();
  if (G < 2) throw ValidationError("scenario generation needs at least two machines");
  if (G > 24) throw ValidationError("too many machines for subset enumeration");
  ScenarioSet set;
  set.target_imbalance_frac = target;
  set.tolerance_frac = tolerance;
  set.reference_load = gc.net_load();
  set.seed = seed;
  const double goal = target * set.reference_load;
  const double tol = tolerance * set.reference_load;
  std::vector<std::vector<int>> picks;
  // never lose every machine: the remaining system must keep a governor
  for (std::uint32_t mask = 1; mask + 1 < (1u << G); ++mask) {
    double sum = 0.0;
    std::vector<int> idx;
    for (int g = 0; g < G; ++g)
      if (mask & (1u << g)) {
        sum += gc.machines[g].p_gen;
        idx.push_back(g);
      }
    if (std::abs(sum - goal) <= tol + 1e-12) picks.push_back(idx);
  }
  set.candidates = picks.size();
  if (picks.empty())
    throw ValidationError("no generator subset within " + std::to_string(100 * tolerance) + "% of a " +
                          std::to_string(100 * target) + "% imbalance");
  std::sort(picks.begin(), picks.end());
  if (static_cast<int>(picks.size()) > max_count) {
    std::mt19937_64 rng(seed);
    // partial Fisher-Yates with an explicit draw so the result does not
    // depend on the standard library's shuffle
    for (int i = 0; i < max_count; ++i) {
      const std::uint64_t span = picks.size() - i;
      const std::size_t j = i + static_cast<std::size_t>(rng() % span);
      std::swap(picks[i], picks[j]);
    }
    picks.resize(max_count);
    std::sort(picks.begin(), picks.end());
  }
  for (const auto& p : picks) set.scenarios.push_back(make_loss_scenario(gc, p));
  return set;
}

inline nlohmann::json scenario_manifest(const ScenarioSet& set, const GridCase& gc) {
  nlohmann::json j;
  j["case"] = gc.name;
  j["target_imbalance_frac"] = set.target_imbalance_frac;
  j["tolerance_frac"] = set.tolerance_frac;
  j["reference_load_pu"] = set.reference_load;
  j["seed"] = set.seed;
  j["candidates"] = set.candidates;
  j["scenarios"] = nlohmann::json::array();
  for (std::size_t i = 0; i < set.scenarios.size(); ++i) {
    const auto& s = set.scenarios[i];
    j["scenarios"].push_back({{"index", i},
                              {"label", s.disturbance.label},
                              {"lost_generator_buses", s.lost_buses},
                              {"lost_pu", s.lost_pu},
                              {"imbalance_frac", s.lost_pu / set.reference_load}});
  }
  return j;
}

// ------------------------------------------------------------- case studies

enum class CaseStudyId { BaseCase, WithDER, WithDERLowInertia, FixedThresholds };

inline std::string to_string(CaseStudyId id) {
  switch (id) {
    case CaseStudyId::BaseCase: return "base";
    case CaseStudyId::WithDER: return "der";
    case CaseStudyId::WithDERLowInertia: return "der_low_inertia";
    case CaseStudyId::FixedThresholds: return "fixed_thresholds";
  }
  return "?";
}

inline CaseStudyId parse_case_study(const std::string& s) {
  if (s == "base") return CaseStudyId::BaseCase;
  if (s == "der") return CaseStudyId::WithDER;
  if (s == "der_low_inertia") return CaseStudyId::WithDERLowInertia;
  if (s == "fixed_thresholds") return CaseStudyId::FixedThresholds;
  throw ValidationError("unknown case study '" + s + "' (base|der|der_low_inertia|fixed_thresholds)");
}

struct CaseStudy {
  CaseStudyId id = CaseStudyId::BaseCase;
  int n_backfeed = 3;
  double backfeed_beta_lo = 1.1, backfeed_beta_hi = 1.3;
  double other_beta_lo = 0.0, other_beta_hi = 0.15;
  std::uint64_t seed = 7;

  bool with_der() const { return id != CaseStudyId::BaseCase; }
  double inertia_scale() const { return id == CaseStudyId::WithDERLowInertia ? 0.5 : 1.0; }
  bool fixed_thresholds() const { return id == CaseStudyId::FixedThresholds; }
};

/// Case with the study's beta draws, dispatch scaled to the net load, and
/// scaled inertia. Buses keep their gross load and shed capacity.
inline GridCase apply_case_study(const GridCase& base, const CaseStudy& cs) {
  GridCase gc = base;
  gc.name = base.name + "/" + to_string(cs.id);
  if (cs.with_der()) {
    std::vector<int> part = gc.participating_buses();
    if (cs.n_backfeed < 0 || cs.n_backfeed > static_cast<int>(part.size()))
      throw ValidationError("case study: back-feed bus count exceeds participating buses");
    std::mt19937_64 rng(cs.seed);
    auto uniform = [&](double lo, double hi) {
      return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    for (int i = 0; i < cs.n_backfeed; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (part.size() - i));
      std::swap(part[i], part[j]);
    }
    std::vector<bool> backfeed(gc.num_buses(), false);
    for (int i = 0; i < cs.n_backfeed; ++i) backfeed[part[i]] = true;
    for (auto& b : gc.buses) {
      if (b.kind == BusKind::Generator) continue;
      b.beta = 0.0;
      if (b.base_load <= 0.0) continue;
      b.beta = backfeed[b.id] ? uniform(cs.backfeed_beta_lo, cs.backfeed_beta_hi)
                              : uniform(cs.other_beta_lo, cs.other_beta_hi);
    }
    const double ratio = gc.net_load() / base.net_load();
    if (!(ratio > 0.0)) throw ValidationError("case study: DER output exceeds system load");
    for (auto& m : gc.machines) m.p_gen *= ratio;
  }
  for (auto& m : gc.machines) m.inertia *= cs.inertia_scale();
  validate(gc);
  return gc;
}

// ------------------------------------------------------ conventional scheme

struct ConventionalSpec {
  std::vector<double> thresholds_hz{59.3, 58.9, 58.5};
  double stage_cap_frac = 0.075;
};

/// Every participating bus sheds the same fraction of its capacity at each
/// stage, the fraction being the largest that respects the per-stage cap.
inline UflsScheme conventional_scheme(const GridCase& gc, const ConventionalSpec& spec, double deadband_s = 0.3,
                                      double delay_s = 0.1) {
  if (spec.thresholds_hz.empty()) throw ValidationError("conventional scheme needs at least one stage");
  UflsScheme s;
  s.deadband_s = deadband_s;
  s.delay_s = delay_s;
  const int I = static_cast<int>(spec.thresholds_hz.size());
  const double cap = gc.total_shed_cap();
  const double frac = cap > 0.0 ? std::min(1.0 / I, spec.stage_cap_frac * gc.total_load() / cap) : 0.0;
  for (double th : spec.thresholds_hz) {
    UflsStage st;
    st.threshold_hz = th;
    st.shed_pu.assign(gc.num_buses(), 0.0);
    for (const auto& b : gc.buses)
      if (b.participates()) st.shed_pu[b.id] = frac * b.shed_cap;
    s.stages.push_back(std::move(st));
  }
  return s;
}

// ------------------------------------------------------------- job pool

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are
/// captured per index and rethrown to nobody: callers record failures.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

// ------------------------------------------------------ per-scenario solve

/// Worst-case magnitudes of the objective terms, used as divisors.
inline std::array<double, 3> objective_scales(const GridCase& gc, const DiscreteModel& dm, const Disturbance& dist) {
  const Trajectory tr = simulate_open_loop(dm, Matrix::Zero(gc.num_buses(), dm.samples()), dist, gc.f_nominal_hz);
  double s1 = 0.0, s3 = 0.0;
  for (int b = 0; b < gc.num_buses(); ++b) {
    s1 += tr.omega.row(b).cwiseAbs().maxCoeff();
    s3 += std::abs(tr.omega(b, dm.horizon_steps));
  }
  double s2 = 0.0;
  for (const auto& b : gc.buses)
    if (b.participates()) s2 += b.shed_cap;
  auto guard = [](double v) { return v > 1e-12 ? v : 1.0; };
  return {guard(s1), guard(s2), guard(s3)};
}

/// Stage i sheds frac[i] of the stage cap. Shedding goes only to buses
/// with beta < 1: spread in proportion to shed capacity, or (greedy) filled
/// in order of increasing beta so the largest net relief goes first.
inline UflsScheme parametric_scheme(const MilpConfig& cfg, const GridCase& gc, const std::vector<double>& thr,
                                    const std::vector<double>& frac, bool greedy) {
  UflsScheme s;
  s.deadband_s = cfg.deadband_s;
  s.delay_s = cfg.delay_s;
  s.max_threshold_hz = cfg.max_threshold_hz;
  s.min_gap_hz = cfg.min_gap_hz;
  std::vector<int> useful;
  for (const auto& b : gc.buses)
    if (b.participates() && b.beta < 1.0) useful.push_back(b.id);
  std::stable_sort(useful.begin(), useful.end(),
                   [&](int x, int y) { return gc.buses[x].beta < gc.buses[y].beta; });
  std::vector<double> left(gc.num_buses(), 0.0);
  double left_total = 0.0;
  for (int b : useful) left_total += left[b] = gc.buses[b].shed_cap;
  const double stage_cap = cfg.stage_cap_frac * gc.total_load();
  for (std::size_t i = 0; i < thr.size(); ++i) {
    UflsStage st{thr[i], std::vector<double>(gc.num_buses(), 0.0)};
    const double want = std::min(frac[i] * stage_cap, left_total);
    if (want > 0.0) {
      if (greedy) {
        double need = want;
        for (int b : useful) {
          const double take = std::min(need, left[b]);
          st.shed_pu[b] = take;
          need -= take;
        }
      } else {
        for (int b : useful) st.shed_pu[b] = want * left[b] / left_total;
      }
      left_total = 0.0;
      for (int b : useful) left_total += left[b] = std::max(0.0, left[b] - st.shed_pu[b]);
    }
    s.stages.push_back(std::move(st));
  }
  return s;
}

struct StartSearch {
  int max_evaluations = 1500;
  double time_budget_s = 60.0;
};

/// Feasible MIP start from parametric schemes: a coarse scan over stage
/// fractions with thresholds at the top of their range, then coordinate
/// descent on thresholds and fractions. Every candidate is replayed through
/// the simulator and kept only if it satisfies the model exactly.
inline std::optional<std::vector<double>> heuristic_start(const UflsMilp& m, const DiscreteModel& dm,
                                                          const GridCase& gc, const Disturbance& dist,
                                                          const StartSearch& search = {}) {
  const MilpConfig& cfg = m.cfg;
  const int I = m.n_stages();
  const bool fixed = cfg.fix_thresholds_hz.has_value();
  // The solver only takes a start as-is when it meets its own feasibility
  // tolerance, so candidates within the tie margin of a threshold are
  // rejected here rather than repaired.
  constexpr double kStartTol = 1e-9;
  const auto t0 = std::chrono::steady_clock::now();
  int evals = 0;
  auto out_of_budget = [&] {
    return evals >= search.max_evaluations ||
           std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > search.time_budget_s;
  };

  struct Point {
    std::vector<double> thr, frac;
    bool greedy = false;
  };
  std::optional<std::vector<double>> best_x;
  Point best;
  double best_obj = 0.0;
  auto admissible = [&](const std::vector<double>& thr) {
    if (fixed) return true;
    if (thr[0] > cfg.max_threshold_hz + 1e-12) return false;
    for (int i = 0; i < I; ++i) {
      if (thr[i] < cfg.floor_hz - 1e-12) return false;
      if (i > 0 && thr[i - 1] - thr[i] < cfg.min_gap_hz - 1e-12) return false;
    }
    return true;
  };
  auto try_point = [&](const Point& p) {
    if (!admissible(p.thr)) return false;
    for (double v : p.frac)
      if (v < 0.0 || v > 1.0) return false;
    std::optional<std::vector<double>> x;
    // a sample within the tie margin of a threshold is moved off it by
    // nudging the thresholds a few margins up or down, or with fixed
    // thresholds by shedding slightly less
    const std::vector<double> nudges = fixed ? std::vector<double>{0.0, 0.002, 0.005, 0.01, 0.02}
                                             : std::vector<double>{0.0, 1e-4, -1e-4, 2.5e-4, -2.5e-4};
    for (double nudge : nudges) {
      std::vector<double> thr = p.thr, frac = p.frac;
      if (fixed) {
        for (double& v : frac) v *= 1.0 - nudge;
      } else {
        for (double& t : thr) t += nudge;
      }
      if (!admissible(thr)) continue;
      ++evals;
      x = start_from_scheme(m, dm, parametric_scheme(cfg, gc, thr, frac, p.greedy), dist, kStartTol);
      if (x) break;
    }
    if (!x) return false;
    const double obj = m.model.objective_value(*x);
    if (best_x && obj >= best_obj - 1e-12) return false;
    best_x = std::move(x);
    best = p;
    best_obj = obj;
    return true;
  };

  std::vector<double> top(I);
  for (int i = 0; i < I; ++i) top[i] = fixed ? (*cfg.fix_thresholds_hz)[i] : cfg.max_threshold_hz - i * cfg.min_gap_hz;
  // coarse scan
  for (double shift : {0.0, 1e-3}) {
    if (fixed && shift != 0.0) continue;
    for (bool greedy : {false, true})
      for (double scale : {1.0, 0.75, 0.5, 0.25})
        for (int active = I; active >= 1; --active) {
          Point p{top, std::vector<double>(I, 0.0), greedy};
          for (int i = 0; i < I; ++i) {
            p.thr[i] -= shift;
            if (i < active) p.frac[i] = scale;
          }
          try_point(p);
        }
  }
  if (!best_x) return std::nullopt;

  // coordinate descent
  const std::vector<double> thr_steps{0.2, 0.1, 0.05, 0.02};
  const std::vector<double> frac_steps{0.25, 0.1, 0.05, 0.02};
  for (std::size_t level = 0; level < thr_steps.size() && !out_of_budget(); ++level) {
    bool improved = true;
    while (improved && !out_of_budget()) {
      improved = false;
      for (int i = 0; i < I && !out_of_budget(); ++i) {
        for (double d : {-frac_steps[level], frac_steps[level]}) {
          Point p = best;
          p.frac[i] = std::clamp(p.frac[i] + d, 0.0, 1.0);
          if (p.frac[i] != best.frac[i] && try_point(p)) improved = true;
        }
        if (fixed) continue;
        for (double d : {-thr_steps[level], thr_steps[level]}) {
          Point p = best;
          p.thr[i] += d;
          if (try_point(p)) improved = true;
        }
        // move the whole lower block with this stage to keep the gaps
        for (double d : {-thr_steps[level], thr_steps[level]}) {
          Point p = best;
          for (int k = i; k < I; ++k) p.thr[k] += d;
          if (try_point(p)) improved = true;
        }
      }
      Point flip = best;
      flip.greedy = !flip.greedy;
      if (try_point(flip)) improved = true;
    }
  }
  return best_x;
}

struct ScenarioResult {
  int index = 0;
  std::string label;
  MilpSolution solution;
  std::optional<UflsScheme> scheme;
  std::string error;
  int n_binaries = 0;
  int n_rows = 0;
  int n_cols = 0;
  bool used_start = false;

  bool ok() const { return scheme.has_value(); }
};

struct PipelineOptions {
  MilpConfig milp;
  SolveLimits limits;
  bool normalize = true;
  bool warm_start = true;
  int jobs = 1;
};

inline ScenarioResult optimize_scenario(const GridCase& gc, const DiscreteModel& dm, const Scenario& sc, int index,
                                        const PipelineOptions& opt, const SolverBackend& backend) {
  ScenarioResult r;
  r.index = index;
  r.label = sc.disturbance.label;
  try {
    MilpConfig cfg = opt.milp;
    if (opt.normalize) cfg.scales = objective_scales(gc, dm, sc.disturbance);
    const UflsMilp m = build_milp(dm, gc, sc.disturbance, gc.betas(), cfg);
    r.n_binaries = m.model.num_binaries();
    r.n_rows = m.model.num_constraints();
    r.n_cols = m.model.num_vars();
    std::optional<std::vector<double>> start;
    if (opt.warm_start && backend.capabilities().warm_start) start = heuristic_start(m, dm, gc, sc.disturbance);
    r.used_start = start.has_value();
    r.solution = solve(m, backend, opt.limits, start ? &*start : nullptr);
    if (r.solution.has_solution()) {
      r.scheme = extract_scheme(r.solution, m, gc);
    } else {
      r.error = "solver status " + to_string(r.solution.status) + ": " + r.solution.message;
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

inline std::vector<ScenarioResult> optimize_all(const GridCase& gc, const ScenarioSet& set,
                                                const PipelineOptions& opt, const SolverBackend& backend) {
  const DiscreteModel dm = discretize(build_dae(gc), opt.milp.t_s, opt.milp.horizon_s);
  std::vector<ScenarioResult> out(set.scenarios.size());
  parallel_for(set.size(), opt.jobs,
               [&](int i) { out[i] = optimize_scenario(gc, dm, set.scenarios[i], i, opt, backend); });
  return out;
}

// -------------------------------------------------------------- aggregation

enum class AggregateKind { Mean, Min, Max };

inline std::string to_string(AggregateKind k) {
  switch (k) {
    case AggregateKind::Mean: return "mean";
    case AggregateKind::Min: return "min";
    case AggregateKind::Max: return "max";
  }
  return "?";
}

struct AggregatedScheme {
  AggregateKind kind = AggregateKind::Mean;
  UflsScheme scheme;
  std::vector<int> sources;           // scenario indices
  std::vector<std::string> repairs;   // invariant repairs applied, if any
};

/// Brings an element-wise aggregate back inside the scheme invariants:
/// thresholds projected below the maximum and apart by the minimum gap,
/// stage totals and bus totals scaled down to their caps.
inline std::vector<std::string> repair_scheme(UflsScheme& s, const GridCase& gc, double stage_cap_frac) {
  std::vector<std::string> notes;
  char buf[160];
  if (!s.stages.empty() && s.stages[0].threshold_hz > s.max_threshold_hz) {
    std::snprintf(buf, sizeof buf, "stage 1 threshold %.4f Hz lowered to maximum %.4f Hz", s.stages[0].threshold_hz,
                  s.max_threshold_hz);
    notes.emplace_back(buf);
    s.stages[0].threshold_hz = s.max_threshold_hz;
  }
  for (int i = 1; i < s.num_stages(); ++i) {
    const double lim = s.stages[i - 1].threshold_hz - s.min_gap_hz;
    if (s.stages[i].threshold_hz > lim + 1e-12) {
      std::snprintf(buf, sizeof buf, "stage %d threshold %.4f Hz projected to %.4f Hz (minimum gap)", i + 1,
                    s.stages[i].threshold_hz, lim);
      notes.emplace_back(buf);
      s.stages[i].threshold_hz = lim;
    }
  }
  const double stage_cap = stage_cap_frac * gc.total_load();
  for (int i = 0; i < s.num_stages(); ++i) {
    const double tot = s.stages[i].total();
    if (tot > stage_cap * (1.0 + 1e-12)) {
      std::snprintf(buf, sizeof buf, "stage %d shed %.6f pu scaled to stage cap %.6f pu", i + 1, tot, stage_cap);
      notes.emplace_back(buf);
      for (double& v : s.stages[i].shed_pu) v *= stage_cap / tot;
    }
  }
  for (int b = 0; b < gc.num_buses(); ++b) {
    double tot = 0.0;
    for (const auto& st : s.stages) tot += st.shed_pu[b];
    const double cap = gc.buses[b].shed_cap;
    if (tot > cap * (1.0 + 1e-12) && tot > 0.0) {
      std::snprintf(buf, sizeof buf, "bus %d shed %.6f pu scaled to shed cap %.6f pu", gc.buses[b].label, tot, cap);
      notes.emplace_back(buf);
      for (auto& st : s.stages) st.shed_pu[b] *= cap / tot;
    }
  }
  return notes;
}

inline std::vector<AggregatedScheme> aggregate(const std::vector<ScenarioResult>& results, const GridCase& gc,
                                               double stage_cap_frac) {
  std::vector<const ScenarioResult*> ok;
  for (const auto& r : results)
    if (r.ok()) ok.push_back(&r);
  if (ok.empty()) throw ValidationError("aggregate: no successful scenario solutions");
  const UflsScheme& first = *ok.front()->scheme;
  const int I = first.num_stages();
  const int N = gc.num_buses();
  for (const auto* r : ok)
    if (r->scheme->num_stages() != I) throw ValidationError("aggregate: schemes differ in stage count");
  std::vector<AggregatedScheme> out;
  for (AggregateKind kind : {AggregateKind::Mean, AggregateKind::Min, AggregateKind::Max}) {
    AggregatedScheme a;
    a.kind = kind;
    a.scheme = first;
    for (const auto* r : ok) a.sources.push_back(r->index);
    for (int i = 0; i < I; ++i) {
      auto reduce = [&](auto get) {
        double acc = get(*ok.front()->scheme);
        for (std::size_t j = 1; j < ok.size(); ++j) {
          const double v = get(*ok[j]->scheme);
          if (kind == AggregateKind::Mean) acc += v;
          else if (kind == AggregateKind::Min) acc = std::min(acc, v);
          else acc = std::max(acc, v);
        }
        return kind == AggregateKind::Mean ? acc / static_cast<double>(ok.size()) : acc;
      };
      a.scheme.stages[i].threshold_hz = reduce([&](const UflsScheme& s) { return s.stages[i].threshold_hz; });
      for (int b = 0; b < N; ++b)
        a.scheme.stages[i].shed_pu[b] = reduce([&](const UflsScheme& s) { return s.stages[i].shed_pu[b]; });
    }
    a.repairs = repair_scheme(a.scheme, gc, stage_cap_frac);
    validate_scheme(a.scheme, gc, {stage_cap_frac, 1e-7});
    out.push_back(std::move(a));
  }
  return out;
}

// --------------------------------------------------------------- evaluation

struct MethodRow {
  std::string method;
  std::vector<std::optional<Metrics>> per_scenario;  // nullopt when no scheme
  Metrics worst;
  int evaluated = 0;
};

struct EvaluationReport {
  std::vector<std::string> scenario_labels;
  std::vector<MethodRow> rows;

  const MethodRow& row(const std::string& method) const {
    for (const auto& r : rows)
      if (r.method == method) return r;
    throw ValidationError("report has no row '" + method + "'");
  }
};

inline Metrics worst_case(const std::vector<std::optional<Metrics>>& ms, double f0) {
  Metrics w{f0, 0.0, 0.0};
  for (const auto& m : ms) {
    if (!m) continue;
    w.nadir_hz = std::min(w.nadir_hz, m->nadir_hz);
    w.tls_pct = std::max(w.tls_pct, m->tls_pct);
    w.dfss_hz = std::max(w.dfss_hz, m->dfss_hz);
  }
  return w;
}

/// `schemes_per_method[j][s]` is the scheme used by method j in scenario s.
inline EvaluationReport evaluate(const GridCase& gc, const DiscreteModel& dm, const ScenarioSet& set,
                                 const std::vector<std::string>& methods,
                                 const std::vector<std::vector<std::optional<UflsScheme>>>& schemes_per_method,
                                 int jobs = 1) {
  if (methods.size() != schemes_per_method.size()) throw ValidationError("evaluate: method/scheme count mismatch");
  EvaluationReport rep;
  for (const auto& s : set.scenarios) rep.scenario_labels.push_back(s.disturbance.label);
  const Vector betas = gc.betas();
  for (std::size_t j = 0; j < methods.size(); ++j) {
    if (static_cast<int>(schemes_per_method[j].size()) != set.size())
      throw ValidationError("evaluate: scheme list for '" + methods[j] + "' has wrong length");
    for (const auto& s : schemes_per_method[j])
      if (s)
        for (const auto& st : s->stages)
          if (static_cast<int>(st.shed_pu.size()) != gc.num_buses())
            throw ValidationError("evaluate: scheme dimension does not match case");
    MethodRow row;
    row.method = methods[j];
    row.per_scenario.assign(set.size(), std::nullopt);
    parallel_for(set.size(), jobs, [&](int s) {
      const auto& sch = schemes_per_method[j][s];
      if (!sch) return;
      const Trajectory tr = simulate(dm, *sch, set.scenarios[s].disturbance, betas, gc.f_nominal_hz);
      row.per_scenario[s] = metrics(tr, gc.total_load());
    });
    for (const auto& m : row.per_scenario) row.evaluated += m.has_value();
    row.worst = worst_case(row.per_scenario, gc.f_nominal_hz);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

/// Worst-case table: one row per method.
inline void write_report_csv(std::ostream& out, const EvaluationReport& rep) {
  out << "method,nadir_hz,tls_pct,dfss_hz\n";
  char buf[160];
  for (const auto& r : rep.rows) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f\n", r.method.c_str(), r.worst.nadir_hz, r.worst.tls_pct,
                  r.worst.dfss_hz);
    out << buf;
  }
}

/// Per-scenario detail behind the worst-case table.
inline void write_report_detail_csv(std::ostream& out, const EvaluationReport& rep) {
  out << "method,scenario,nadir_hz,tls_pct,dfss_hz\n";
  char buf[200];
  for (const auto& r : rep.rows)
    for (std::size_t s = 0; s < r.per_scenario.size(); ++s) {
      if (!r.per_scenario[s]) continue;
      const auto& m = *r.per_scenario[s];
      std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.6f\n", r.method.c_str(), rep.scenario_labels[s].c_str(),
                    m.nadir_hz, m.tls_pct, m.dfss_hz);
      out << buf;
    }
}

// ------------------------------------------------------------ weight sweep

struct ParetoPoint {
  std::array<double, 3> gammas{};
  double tls_pct = 0.0;
  double dfss_hz = 0.0;
  double nadir_hz = 0.0;
  bool selected = false;
  std::string error;

  bool ok() const { return error.empty(); }
};

inline std::vector<std::array<double, 3>> gamma_grid(const std::vector<double>& g1, const std::vector<double>& g2,
                                                     const std::vector<double>& g3) {
  std::vector<std::array<double, 3>> out;
  for (double a : g1)
    for (double b : g2)
      for (double c : g3) out.push_back({a, b, c});
  return out;
}

inline std::vector<ParetoPoint> pareto_sweep(const GridCase& gc, const Scenario& sc,
                                             const std::vector<std::array<double, 3>>& grid,
                                             const PipelineOptions& opt, const SolverBackend& backend,
                                             std::array<double, 3> selected = {1.0, 0.2, 1.0}) {
  if (grid.empty()) throw ValidationError("pareto: empty weight grid");
  const DiscreteModel dm = discretize(build_dae(gc), opt.milp.t_s, opt.milp.horizon_s);
  std::vector<ParetoPoint> pts(grid.size());
  parallel_for(static_cast<int>(grid.size()), opt.jobs, [&](int i) {
    ParetoPoint& p = pts[i];
    p.gammas = grid[i];
    p.selected = grid[i] == selected;
    PipelineOptions o = opt;
    o.milp.gammas = grid[i];
    o.normalize = true;
    const ScenarioResult r = optimize_scenario(gc, dm, sc, i, o, backend);
    if (!r.ok()) {
      p.error = r.error;
      return;
    }
    const Trajectory tr = simulate(dm, *r.scheme, sc.disturbance, gc.betas(), gc.f_nominal_hz);
    const Metrics mt = metrics(tr, gc.total_load());
    p.tls_pct = mt.tls_pct;
    p.dfss_hz = mt.dfss_hz;
    p.nadir_hz = mt.nadir_hz;
  });
  return pts;
}

inline void write_pareto_csv(std::ostream& out, const std::vector<ParetoPoint>& pts) {
  out << "g1,g2,g3,tls_pct,dfss_hz,nadir_hz\n";
  char buf[200];
  for (const auto& p : pts) {
    if (!p.ok()) continue;
    std::snprintf(buf, sizeof buf, "%g,%g,%g,%.6f,%.6f,%.6f\n", p.gammas[0], p.gammas[1], p.gammas[2], p.tls_pct,
                  p.dfss_hz, p.nadir_hz);
    out << buf;
  }
}

}  // namespace ufls

#endif  // UFLS_SCENARIO_HPP
