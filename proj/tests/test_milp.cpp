#include <gtest/gtest.h>

#include <chrono>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"
#include "ufls/highs_backend.hpp"
#include "ufls/milp.hpp"
#include "ufls/scenario.hpp"

using namespace ufls;

namespace {

GridCase single_load(double gov_gain = 20.0) {
  return parse_case(nlohmann::json::parse(R"({
    "name": "one_one", "mva_base": 100, "f_nominal_hz": 60,
    "buses": [{"id": 1, "kind": "generator"},
              {"id": 2, "kind": "load", "load_pu": 1.0, "shed_cap_pu": 0.4}],
    "lines": [{"from": 1, "to": 2, "susceptance": 10}],
    "machines": [{"bus": 1, "inertia": 8, "damping": 4, "gov_gain": )" +
                                          std::to_string(gov_gain) +
                                          R"(, "gov_time_const": 2, "p_gen_pu": 1}]})"));
}

MilpConfig small_config(int stages, double horizon) {
  MilpConfig c;
  c.n_stages = stages;
  c.horizon_s = horizon;
  c.stage_cap_frac = 0.3;
  return c;
}

SolveLimits exact() {
  SolveLimits l;
  l.rel_gap = 0.0;
  l.abs_gap = 1e-9;
  l.time_s = 120.0;
  return l;
}

}  // namespace

TEST(Milp, BinaryCountFollowsRelaySamples) {
  const GridCase gc = test::load_case("wecc9");
  const MilpConfig cfg = small_config(2, 3.0);
  const DiscreteModel dm = discretize(build_dae(gc), cfg.t_s, cfg.horizon_s);
  const UflsMilp m = build_milp(dm, gc, test::loss_at(gc, 2, 0.5), gc.betas(), cfg);
  const int P = static_cast<int>(gc.participating_buses().size());
  EXPECT_EQ(m.model.num_binaries(), P * 2 * (30 - 1));
  EXPECT_EQ(m.model.num_binaries(), m.expected_binaries());
}

TEST(Milp, Ieee39HasExpectedBinaries) {
  const GridCase gc = test::load_case("ieee39");
  const MilpConfig cfg;
  const DiscreteModel dm = discretize(build_dae(gc), cfg.t_s, cfg.horizon_s);
  const UflsMilp m = build_milp(dm, gc, test::loss_at(gc, 30, 2.5), gc.betas(), cfg);
  EXPECT_EQ(m.model.num_binaries(), 11940);
  int integers = 0;
  for (int j = 0; j < m.model.num_vars(); ++j) integers += m.model.variable(j).type != VarType::Continuous;
  EXPECT_EQ(integers, 11940);
}

TEST(Milp, MatchesExhaustiveSearch) {
  const GridCase gc = single_load();
  const HighsBackend highs;
  struct Instance {
    double loss;
    std::array<double, 3> gammas;
  };
  // the optimum sits on the enumeration grid: full cap when shedding is
  // cheap, nothing when it is dear and the band holds without it
  for (const Instance inst : {Instance{0.3, {1.0, 0.01, 1.0}}, Instance{0.2, {1.0, 5.0, 1.0}},
                              Instance{0.35, {0.0, 0.01, 1.0}}}) {
    MilpConfig cfg = small_config(1, 5.0);
    cfg.gammas = inst.gammas;
    const DiscreteModel dm = discretize(build_dae(gc), cfg.t_s, cfg.horizon_s);
    const Disturbance dist = test::loss_at(gc, 1, inst.loss);
    const test::BruteForceResult bf = test::brute_force_single_stage(gc, dm, dist, cfg);
    ASSERT_TRUE(std::isfinite(bf.objective)) << inst.loss;
    const UflsMilp m = build_milp(dm, gc, dist, gc.betas(), cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const MilpSolution sol = solve(m, highs, exact());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(sol.status, SolveStatus::Optimal);
    EXPECT_NEAR(sol.objective, bf.objective, 1e-6) << "loss " << inst.loss << " oracle amount " << bf.amount
                                                   << " trigger " << bf.trigger_step;
    EXPECT_LT(secs, 60.0);
  }
}

TEST(Milp, ReplayMatchesOnRandomToys) {
  const HighsBackend highs;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const GridCase gc = test::random_toy(seed);
    MilpConfig cfg = small_config(2, 8.0);
    const DiscreteModel dm = discretize(build_dae(gc), cfg.t_s, cfg.horizon_s);
    const Disturbance dist = test::loss_at(gc, 1, 0.2 * gc.total_load());
    cfg.scales = objective_scales(gc, dm, dist);
    const UflsMilp m = build_milp(dm, gc, dist, gc.betas(), cfg);
    const MilpSolution sol = solve(m, highs, exact());
    ASSERT_TRUE(sol.has_solution()) << seed << " " << sol.message;
    const UflsScheme s = extract_scheme(sol, m, gc);
    const Trajectory tr = simulate(dm, s, dist, gc.betas());
    const VerificationReport rep = verify_against_milp(tr, sol, dm.step);
    EXPECT_LE(rep.max_omega_diff, 1e-6) << seed;
    EXPECT_EQ(rep.event_mismatches, 0) << seed;
  }
}

TEST(Milp, StartFromSchemeIsFeasibleAndReproducesObjective) {
  const GridCase gc = test::load_case("ring3");
  MilpConfig cfg = small_config(2, 6.0);
  const DiscreteModel dm = discretize(build_dae(gc), cfg.t_s, cfg.horizon_s);
  const Disturbance dist = test::loss_at(gc, gc.buses[gc.machines[0].bus].label, 0.25 * gc.total_load());
  const UflsMilp m = build_milp(dm, gc, dist, gc.betas(), cfg);
  const auto x = heuristic_start(m, dm, gc, dist);
  ASSERT_TRUE(x.has_value());
  EXPECT_LE(m.model.max_violation(*x), 1e-9);
  const HighsBackend highs;
  const MilpSolution sol = solve(m, highs, exact(), &*x);
  ASSERT_TRUE(sol.has_solution());
  EXPECT_LE(sol.objective, m.model.objective_value(*x) + 1e-9);
}

TEST(Milp, BackfeedBusesAreNotShed) {
  GridCase gc = test::load_case("wecc9");
  const auto part = gc.participating_buses();
  ASSERT_GE(part.size(), 2u);
  gc.buses[part[0]].beta = 1.2;
  MilpConfig cfg = small_config(1, 5.0);
  const DiscreteModel dm = discretize(build_dae(gc), cfg.t_s, cfg.horizon_s);
  const Disturbance dist = test::loss_at(gc, gc.buses[gc.machines[0].bus].label, 0.25 * gc.total_load());
  cfg.scales = objective_scales(gc, dm, dist);
  const UflsMilp m = build_milp(dm, gc, dist, gc.betas(), cfg);
  const HighsBackend highs;
  const MilpSolution sol = solve(m, highs, exact());
  ASSERT_TRUE(sol.has_solution());
  for (int i = 0; i < cfg.n_stages; ++i) EXPECT_EQ(sol.shed_pu[i][part[0]], 0.0);
  double other = 0.0;
  for (int i = 0; i < cfg.n_stages; ++i) other += sol.shed_pu[i][part[1]];
  EXPECT_GT(other, 0.0);
}

TEST(Milp, FixedThresholdsAreRespected) {
  const GridCase gc = test::load_case("ring3");
  MilpConfig cfg = small_config(2, 6.0);
  cfg.fix_thresholds_hz = std::vector<double>{59.4, 59.1};
  const DiscreteModel dm = discretize(build_dae(gc), cfg.t_s, cfg.horizon_s);
  const Disturbance dist = test::loss_at(gc, gc.buses[gc.machines[0].bus].label, 0.25 * gc.total_load());
  const UflsMilp m = build_milp(dm, gc, dist, gc.betas(), cfg);
  const HighsBackend highs;
  const MilpSolution sol = solve(m, highs, exact());
  ASSERT_TRUE(sol.has_solution());
  EXPECT_NEAR(sol.thresholds_hz[0], 59.4, 1e-9);
  EXPECT_NEAR(sol.thresholds_hz[1], 59.1, 1e-9);
  const UflsScheme s = extract_scheme(sol, m, gc);
  const VerificationReport rep = verify_against_milp(simulate(dm, s, dist, gc.betas()), sol, dm.step);
  EXPECT_TRUE(rep.ok()) << rep.max_omega_diff;
}

TEST(Milp, ReportsInfeasibility) {
  const GridCase gc = single_load();
  MilpConfig cfg = small_config(1, 5.0);
  // too little may be shed to keep the loss above the floor
  cfg.stage_cap_frac = 1e-3;
  const DiscreteModel dm = discretize(build_dae(gc), cfg.t_s, cfg.horizon_s);
  const UflsMilp m = build_milp(dm, gc, test::loss_at(gc, 1, 0.9), gc.betas(), cfg);
  const HighsBackend highs;
  EXPECT_EQ(solve(m, highs, exact()).status, SolveStatus::Infeasible);
}

TEST(Milp, ExportRoundTripsAndResolves) {
  const GridCase gc = test::load_case("toy2");
  const MilpConfig cfg = small_config(1, 4.0);
  const DiscreteModel dm = discretize(build_dae(gc), cfg.t_s, cfg.horizon_s);
  const Disturbance dist = test::loss_at(gc, 1, 0.3);
  const UflsMilp m = build_milp(dm, gc, dist, gc.betas(), cfg);

  std::istringstream in(to_mps_string(m.model));
  const MilpModel back = read_mps(in);
  ASSERT_EQ(back.num_vars(), m.model.num_vars());
  ASSERT_EQ(back.num_constraints(), m.model.num_constraints());
  EXPECT_EQ(back.num_binaries(), m.model.num_binaries());

  const HighsBackend direct;
  const MilpSolution a = solve(m, direct, exact());
  ASSERT_EQ(a.status, SolveStatus::Optimal);
  for (auto fmt : {ModelFileFormat::Mps, ModelFileFormat::Lp}) {
    const HighsFileBackend file(fmt);
    const MilpSolution b = solve(m, file, exact());
    ASSERT_EQ(b.status, SolveStatus::Optimal) << file.name();
    EXPECT_NEAR(a.objective, b.objective, 1e-6) << file.name();
  }
  const MilpSolution c = solve(m, direct, exact());
  EXPECT_NEAR(a.objective, c.objective, 1e-12);
  std::istringstream again(to_mps_string(back));
  EXPECT_EQ(to_mps_string(read_mps(again)), to_mps_string(back));
}

TEST(Milp, RejectsBadConfig) {
  const GridCase gc = test::load_case("toy2");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 2.0);
  MilpConfig cfg = small_config(1, 2.0);
  cfg.fix_thresholds_hz = std::vector<double>{59.4, 59.0};
  EXPECT_THROW(build_milp(dm, gc, test::loss_at(gc, 1, 0.3), gc.betas(), cfg), ValidationError);
  cfg = small_config(1, 2.0);
  cfg.deadband_s = 0.25;
  EXPECT_THROW(build_milp(dm, gc, test::loss_at(gc, 1, 0.3), gc.betas(), cfg), ValidationError);
  cfg = small_config(1, 3.0);
  EXPECT_THROW(build_milp(dm, gc, test::loss_at(gc, 1, 0.3), gc.betas(), cfg), ValidationError);
}
