#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "support.hpp"
#include "ufls/highs_backend.hpp"
#include "ufls/scenario.hpp"

using namespace ufls;

namespace {

// every generator subset (as sorted index lists) within tolerance of the target
std::set<std::vector<int>> qualifying_subsets(const GridCase& gc, double target, double tol) {
  std::set<std::vector<int>> out;
  const int G = gc.num_machines();
  std::vector<int> pick;
  std::function<void(int, double)> rec = [&](int g, double sum) {
    if (g == G) {
      if (!pick.empty() && static_cast<int>(pick.size()) < G &&
          std::abs(sum - target * gc.net_load()) <= tol * gc.net_load() + 1e-12)
        out.insert(pick);
      return;
    }
    rec(g + 1, sum);
    pick.push_back(g);
    rec(g + 1, sum + gc.machines[g].p_gen);
    pick.pop_back();
  };
  rec(0, 0.0);
  return out;
}

std::vector<int> indices_of(const GridCase& gc, const Scenario& s) {
  std::vector<int> idx;
  for (int label : s.lost_buses)
    for (int g = 0; g < gc.num_machines(); ++g)
      if (gc.buses[gc.machines[g].bus].label == label) idx.push_back(g);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TEST(Scenario, GenerationKeepsOnlyQualifyingSubsets) {
  const GridCase gc = test::load_case("ieee39");
  const auto expect = qualifying_subsets(gc, 0.25, 0.02);
  ASSERT_GT(expect.size(), 6u);
  const ScenarioSet all = generate_scenarios(gc, 0.25, 100000, 1);
  EXPECT_EQ(all.candidates, expect.size());
  std::set<std::vector<int>> got;
  for (const auto& s : all.scenarios) {
    got.insert(indices_of(gc, s));
    double lost = 0.0;
    for (int g : indices_of(gc, s)) lost += gc.machines[g].p_gen;
    EXPECT_NEAR(s.lost_pu, lost, 1e-12);
    EXPECT_NEAR(-s.disturbance.step_pu.sum(), lost, 1e-12);
  }
  EXPECT_EQ(got, expect);

  const ScenarioSet six = generate_scenarios(gc, 0.25, 6, 1);
  ASSERT_EQ(six.size(), 6);
  for (const auto& s : six.scenarios) EXPECT_TRUE(expect.count(indices_of(gc, s)));
  const ScenarioSet again = generate_scenarios(gc, 0.25, 6, 1);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(six.scenarios[i].disturbance.label, again.scenarios[i].disturbance.label);
  std::set<std::string> other;
  for (const auto& s : generate_scenarios(gc, 0.25, 6, 2).scenarios) other.insert(s.disturbance.label);
  std::set<std::string> first;
  for (const auto& s : six.scenarios) first.insert(s.disturbance.label);
  EXPECT_NE(first, other);
}

TEST(Scenario, GenerationRejectsBadRequests) {
  const GridCase gc = test::load_case("ieee39");
  EXPECT_THROW(generate_scenarios(gc, 0.0, 6, 1), ValidationError);
  EXPECT_THROW(generate_scenarios(gc, 0.25, 0, 1), ValidationError);
  EXPECT_THROW(generate_scenarios(gc, 0.25, 6, 1, -0.1), ValidationError);
  EXPECT_THROW(generate_scenarios(test::load_case("toy2"), 0.25, 6, 1), ValidationError);
}

TEST(Scenario, CaseStudies) {
  const GridCase base = test::load_case("ieee39");
  CaseStudy cs;
  cs.id = CaseStudyId::WithDER;
  const GridCase der = apply_case_study(base, cs);
  int backfeed = 0;
  for (const auto& b : der.buses) {
    if (!b.participates()) {
      EXPECT_EQ(b.beta, 0.0);
      continue;
    }
    if (b.beta > 1.0) {
      ++backfeed;
      EXPECT_GE(b.beta, 1.1);
      EXPECT_LE(b.beta, 1.3);
    } else {
      EXPECT_GE(b.beta, 0.0);
      EXPECT_LE(b.beta, 0.15);
    }
  }
  EXPECT_EQ(backfeed, 3);
  EXPECT_NEAR(der.total_generation() / der.net_load(), base.total_generation() / base.net_load(), 1e-12);
  EXPECT_DOUBLE_EQ(der.total_load(), base.total_load());
  const GridCase again = apply_case_study(base, cs);
  for (int b = 0; b < base.num_buses(); ++b) EXPECT_EQ(again.buses[b].beta, der.buses[b].beta);

  cs.id = CaseStudyId::WithDERLowInertia;
  const GridCase low = apply_case_study(base, cs);
  for (int g = 0; g < base.num_machines(); ++g) {
    EXPECT_DOUBLE_EQ(low.machines[g].inertia, 0.5 * base.machines[g].inertia);
    EXPECT_DOUBLE_EQ(low.machines[g].p_gen, der.machines[g].p_gen);
  }
  for (int b = 0; b < base.num_buses(); ++b) EXPECT_EQ(low.buses[b].beta, der.buses[b].beta);

  cs.id = CaseStudyId::FixedThresholds;
  EXPECT_EQ(apply_case_study(base, cs).buses[5].beta, der.buses[5].beta);
  EXPECT_EQ(parse_case_study("der_low_inertia"), CaseStudyId::WithDERLowInertia);
  EXPECT_THROW(parse_case_study("other"), ValidationError);
}

TEST(Scenario, ConventionalSchemeSpreadsUniformly) {
  const GridCase gc = test::load_case("ieee39");
  const UflsScheme s = conventional_scheme(gc, {});
  ASSERT_EQ(s.num_stages(), 3);
  EXPECT_EQ(s.stages[0].threshold_hz, 59.3);
  EXPECT_EQ(s.stages[2].threshold_hz, 58.5);
  for (const auto& st : s.stages) EXPECT_LE(st.total(), 0.075 * gc.total_load() * (1 + 1e-12));
  const double frac = s.stages[0].shed_pu[gc.participating_buses()[0]] / gc.buses[gc.participating_buses()[0]].shed_cap;
  for (int b : gc.participating_buses())
    for (const auto& st : s.stages) EXPECT_NEAR(st.shed_pu[b], frac * gc.buses[b].shed_cap, 1e-12);
  EXPECT_NO_THROW(validate_scheme(s, gc, {0.075, 1e-9}));
}

TEST(Scenario, AggregationAndRepair) {
  const GridCase gc = test::load_case("wecc9");
  auto make = [&](double t1, double t2, double a5, double a7) {
    UflsScheme s;
    s.stages.push_back({t1, std::vector<double>(gc.num_buses(), 0.0)});
    s.stages.push_back({t2, std::vector<double>(gc.num_buses(), 0.0)});
    s.stages[0].shed_pu[*gc.find_label(5)] = a5;
    s.stages[0].shed_pu[*gc.find_label(7)] = a7;
    s.stages[1].shed_pu[*gc.find_label(9)] = 0.1;
    return s;
  };
  const double stage_cap = 0.3 * gc.total_load();
  std::vector<ScenarioResult> rs(3);
  rs[0].scheme = make(59.5, 59.0, 0.9, 0.0);
  rs[1].scheme = make(59.3, 59.1, 0.0, 0.9);
  rs[1].index = 1;
  rs[2].error = "failed";
  rs[2].index = 2;
  const auto agg = aggregate(rs, gc, 0.3);
  ASSERT_EQ(agg.size(), 3u);
  EXPECT_EQ(agg[0].kind, AggregateKind::Mean);
  EXPECT_EQ(agg[0].sources, (std::vector<int>{0, 1}));
  const auto& mean = agg[0].scheme;
  EXPECT_NEAR(mean.stages[0].threshold_hz, 59.4, 1e-12);
  EXPECT_NEAR(mean.stages[1].threshold_hz, 59.05, 1e-12);
  EXPECT_NEAR(mean.stages[0].shed_pu[*gc.find_label(5)], 0.45, 1e-12);
  EXPECT_TRUE(agg[0].repairs.empty());
  EXPECT_NEAR(agg[1].scheme.stages[0].threshold_hz, 59.3, 1e-12);
  EXPECT_NEAR(agg[1].scheme.stages[0].total(), 0.0, 1e-12);
  // the element-wise maximum sheds 1.8 pu in stage 1, over the stage cap
  const auto& mx = agg[2].scheme;
  EXPECT_NEAR(mx.stages[1].threshold_hz, 59.1, 1e-12);
  EXPECT_NEAR(mx.stages[0].total(), stage_cap, 1e-12);
  EXPECT_NEAR(mx.stages[0].shed_pu[*gc.find_label(5)], mx.stages[0].shed_pu[*gc.find_label(7)], 1e-12);
  EXPECT_EQ(agg[2].repairs.size(), 1u);

  UflsScheme over = make(59.6, 59.55, 0.2, 0.0);
  over.stages[1].shed_pu[*gc.find_label(5)] = 0.9;
  const auto notes = repair_scheme(over, gc, 0.3);
  EXPECT_EQ(over.stages[0].threshold_hz, 59.5);
  EXPECT_NEAR(over.stages[1].threshold_hz, 59.4, 1e-12);
  EXPECT_LE(over.stages[1].total(), stage_cap * (1 + 1e-12));
  const int b5 = *gc.find_label(5);
  EXPECT_LE(over.stages[0].shed_pu[b5] + over.stages[1].shed_pu[b5], 0.9 * (1 + 1e-12));
  EXPECT_EQ(notes.size(), 4u);
  std::vector<ScenarioResult> none(2);
  EXPECT_THROW(aggregate(none, gc, 0.3), ValidationError);
}

TEST(Scenario, EvaluateReportsWorstCase) {
  const GridCase gc = test::load_case("ieee39");
  const ScenarioSet set = generate_scenarios(gc, 0.25, 3, 1);
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 20.0);
  const UflsScheme conv = conventional_scheme(gc, {});
  const EvaluationReport rep =
      evaluate(gc, dm, set, {"Conventional", "None"}, {{conv, conv, conv}, {UflsScheme{}, std::nullopt, UflsScheme{}}});
  const auto& row = rep.row("Conventional");
  ASSERT_EQ(row.evaluated, 3);
  double nadir = 60.0, tls = 0.0;
  for (int s = 0; s < 3; ++s) {
    const Metrics m = metrics(simulate(dm, conv, set.scenarios[s].disturbance, gc.betas()), gc.total_load());
    nadir = std::min(nadir, m.nadir_hz);
    tls = std::max(tls, m.tls_pct);
  }
  EXPECT_DOUBLE_EQ(row.worst.nadir_hz, nadir);
  EXPECT_DOUBLE_EQ(row.worst.tls_pct, tls);
  EXPECT_EQ(rep.row("None").evaluated, 2);
  EXPECT_EQ(rep.row("None").worst.tls_pct, 0.0);
  std::ostringstream out;
  write_report_csv(out, rep);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "method,nadir_hz,tls_pct,dfss_hz");
  EXPECT_THROW(rep.row("missing"), ValidationError);
}

TEST(Scenario, ObjectiveScalesComeFromTheUnshedResponse) {
  const GridCase gc = test::load_case("wecc9");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 10.0);
  const Disturbance d = test::loss_at(gc, 2, 0.5);
  const auto sc = objective_scales(gc, dm, d);
  const Trajectory tr = simulate_open_loop(dm, Matrix::Zero(gc.num_buses(), dm.samples()), d);
  EXPECT_NEAR(sc[0], tr.omega.cwiseAbs().rowwise().maxCoeff().sum(), 1e-15);
  EXPECT_NEAR(sc[1], gc.total_shed_cap(), 1e-15);
  EXPECT_NEAR(sc[2], tr.omega.col(dm.horizon_steps).cwiseAbs().sum(), 1e-15);
}

TEST(Scenario, ParetoSweepOnSmallCase) {
  const GridCase gc = test::load_case("ring3");
  Scenario sc;
  sc.disturbance = test::loss_at(gc, 1, 0.25);
  PipelineOptions opt;
  opt.milp.n_stages = 1;
  opt.milp.horizon_s = 6.0;
  opt.milp.stage_cap_frac = 0.5;
  opt.limits.rel_gap = 0.0;
  const HighsBackend highs;
  const auto grid = gamma_grid({1.0}, {0.0, 0.2, 1.0}, {1.0});
  ASSERT_EQ(grid.size(), 3u);
  const auto pts = pareto_sweep(gc, sc, grid, opt, highs);
  ASSERT_EQ(pts.size(), 3u);
  for (const auto& p : pts) EXPECT_TRUE(p.ok()) << p.error;
  EXPECT_TRUE(pts[1].selected);
  // pricing shed load never increases the amount shed
  EXPECT_GE(pts[0].tls_pct + 1e-9, pts[1].tls_pct);
  EXPECT_GE(pts[1].tls_pct + 1e-9, pts[2].tls_pct);
  std::ostringstream out;
  write_pareto_csv(out, pts);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "g1,g2,g3,tls_pct,dfss_hz,nadir_hz");
  EXPECT_THROW(pareto_sweep(gc, sc, {}, opt, highs), ValidationError);
}
