#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "support.hpp"
#include "ufls/simulator.hpp"

using namespace ufls;

namespace {

UflsScheme uniform_scheme(const GridCase& gc, const std::vector<double>& thresholds, double per_bus) {
  UflsScheme s;
  for (double th : thresholds) {
    UflsStage st{th, std::vector<double>(gc.num_buses(), 0.0)};
    for (int b : gc.participating_buses()) st.shed_pu[b] = std::min(per_bus, gc.buses[b].shed_cap / thresholds.size());
    s.stages.push_back(st);
  }
  return s;
}

// Relay decisions read straight off a recorded trajectory: the first
// sample j in 1..K-1 that closes a run of kdb consecutive samples strictly
// below the threshold trips the relay at j+1.
std::map<std::pair<int, int>, int> scan_triggers(const Trajectory& tr, const UflsScheme& s, int kdb) {
  std::map<std::pair<int, int>, int> out;
  const int K = tr.horizon_steps;
  for (int b = 0; b < tr.omega.rows(); ++b)
    for (int i = 0; i < s.num_stages(); ++i) {
      if (s.stages[i].shed_pu[b] <= 0.0) continue;
      const double thr = hz_to_pu(s.stages[i].threshold_hz, tr.f_nominal_hz);
      int run = 0;
      for (int j = 1; j <= K - 1; ++j) {
        run = tr.omega(b, j) < thr ? run + 1 : 0;
        if (run == kdb) {
          out[{b, i}] = j + 1;
          break;
        }
      }
    }
  return out;
}

}  // namespace

TEST(Simulator, RelayTimingIsExact) {
  const GridCase gc = test::load_case("toy2");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 10.0);
  const Disturbance dist = test::loss_at(gc, 1, 0.3);
  UflsScheme s = uniform_scheme(gc, {59.7}, 0.1);
  const Trajectory tr = simulate(dm, s, dist, gc.betas());
  const double thr = hz_to_pu(59.7, 60.0);
  int first = -1;
  for (int k = 1; k < dm.horizon_steps; ++k)
    if (tr.omega(1, k) < thr) {
      first = k;
      break;
    }
  ASSERT_GT(first, 0);
  for (int k = first; k < first + 3; ++k) ASSERT_LT(tr.omega(1, k), thr);
  ASSERT_EQ(tr.relay_log.size(), 2u);
  // 300 ms deadband: trip three samples after the first crossing
  EXPECT_EQ(tr.relay_log[0].kind, RelayEventKind::Trigger);
  EXPECT_EQ(tr.relay_log[0].step, first + 3);
  // 100 ms breaker delay
  EXPECT_EQ(tr.relay_log[1].kind, RelayEventKind::Actuate);
  EXPECT_EQ(tr.relay_log[1].step, first + 4);
  for (int k = 0; k < dm.samples(); ++k) EXPECT_EQ(tr.p_shed(1, k), k >= first + 4 ? 0.1 : 0.0) << k;
}

TEST(Simulator, TimingFollowsConfiguredDurations) {
  const GridCase gc = test::load_case("toy2");
  const DiscreteModel dm = discretize(build_dae(gc), 0.05, 10.0);
  UflsScheme s = uniform_scheme(gc, {59.7}, 0.1);
  s.deadband_s = 0.5;
  s.delay_s = 0.2;
  const Trajectory tr = simulate(dm, s, test::loss_at(gc, 1, 0.3), gc.betas());
  const auto trig = scan_triggers(tr, s, 10);
  ASSERT_EQ(tr.relay_log.size(), 2u);
  EXPECT_EQ(tr.relay_log[0].step, trig.at({1, 0}));
  EXPECT_EQ(tr.relay_log[1].step, trig.at({1, 0}) + 4);
}

TEST(Simulator, TriggersMatchTrajectoryScanWithCounterReset) {
  const GridCase gc = test::load_case("ieee39");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 20.0);
  Disturbance dist = test::loss_at(gc, 30, 2.5);
  dist.step_pu[*gc.find_label(31)] = -5.73;
  dist.step_pu[*gc.find_label(32)] = -6.5;
  int resets = 0;
  for (double top = 59.95; top > 59.0; top -= 0.037) {
    const UflsScheme s = uniform_scheme(gc, {top, top - 0.2, top - 0.4}, 0.05);
    const Trajectory tr = simulate(dm, s, dist, gc.betas());
    const auto expect = scan_triggers(tr, s, 3);
    std::map<std::pair<int, int>, int> got;
    for (const auto& e : tr.relay_log) {
      if (e.kind == RelayEventKind::Trigger) got[{e.bus, e.stage}] = e.step;
      else EXPECT_EQ(e.step, got.at({e.bus, e.stage}) + 1);
    }
    EXPECT_EQ(got, expect) << "top threshold " << top;
    // count relays whose first sub-threshold sample is not the start of the tripping run
    for (const auto& [key, trig] : expect) {
      const double thr = hz_to_pu(s.stages[key.second].threshold_hz, 60.0);
      int first = 1;
      while (!(tr.omega(key.first, first) < thr)) ++first;
      resets += first < trig - 3;
    }
  }
  EXPECT_GT(resets, 0) << "no instance exercised the counter reset";
}

TEST(Simulator, BetaNetting) {
  const GridCase base = test::load_case("toy2");
  const DiscreteModel dm = discretize(build_dae(base), 0.1, 10.0);
  const Disturbance dist = test::loss_at(base, 1, 0.3);
  const UflsScheme s = uniform_scheme(base, {59.7}, 0.2);
  const Trajectory none = simulate(dm, UflsScheme{}, dist, base.betas());
  for (double beta : {0.0, 0.5, 1.0, 1.2}) {
    Vector betas = base.betas();
    betas[1] = beta;
    const Trajectory tr = simulate(dm, s, dist, betas);
    for (int k = 0; k < dm.samples(); ++k) EXPECT_NEAR(tr.p_ufls(1, k), (1.0 - beta) * tr.p_shed(1, k), 1e-15);
    if (beta == 1.0) {
      EXPECT_GT(tr.p_shed.maxCoeff(), 0.0);
      EXPECT_LT((tr.omega - none.omega).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((tr.theta - none.theta).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Simulator, BackFeedSheddingLowersFrequency) {
  const GridCase gc = test::load_case("toy2");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 10.0);
  const Disturbance dist = test::loss_at(gc, 1, 0.3);
  const UflsScheme s = uniform_scheme(gc, {59.7}, 0.2);
  Vector betas = gc.betas();
  const Trajectory none = simulate(dm, UflsScheme{}, dist, betas);
  betas[1] = 1.2;
  const Trajectory tr = simulate(dm, s, dist, betas);
  EXPECT_LT(tr.omega(1, dm.horizon_steps), none.omega(1, dm.horizon_steps));
}

TEST(Simulator, ZeroSettingsAreNotInstalled) {
  const GridCase gc = test::load_case("toy2");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 10.0);
  const UflsScheme s = uniform_scheme(gc, {59.9, 59.8}, 0.0);
  const Trajectory tr = simulate(dm, s, test::loss_at(gc, 1, 0.3), gc.betas());
  EXPECT_TRUE(tr.relay_log.empty());
  EXPECT_EQ(tr.p_shed.maxCoeff(), 0.0);
}

TEST(Simulator, NoDisturbanceMetrics) {
  const GridCase gc = test::load_case("wecc9");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 5.0);
  Disturbance d;
  d.step_pu = Vector::Zero(gc.num_buses());
  const Trajectory tr = simulate(dm, uniform_scheme(gc, {59.5}, 0.1), d, gc.betas());
  const Metrics m = metrics(tr, gc.total_load());
  EXPECT_EQ(m.nadir_hz, 60.0);
  EXPECT_EQ(m.tls_pct, 0.0);
  EXPECT_EQ(m.dfss_hz, 0.0);
}

TEST(Simulator, MetricsAndCsv) {
  const GridCase gc = test::load_case("toy2");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 10.0);
  const Trajectory tr = simulate(dm, uniform_scheme(gc, {59.7}, 0.1), test::loss_at(gc, 1, 0.3), gc.betas());
  const Metrics m = metrics(tr, gc.total_load());
  EXPECT_NEAR(m.tls_pct, 10.0, 1e-12);
  EXPECT_NEAR(m.nadir_hz, 60.0 * (1.0 + tr.omega.minCoeff()), 1e-12);
  EXPECT_NEAR(m.dfss_hz, 60.0 * std::abs(tr.omega(1, dm.horizon_steps)), 1e-9);

  std::ostringstream traj, relays, met;
  write_trajectory_csv(traj, tr, gc);
  write_relay_log_csv(relays, tr, gc);
  write_metrics_csv(met, m);
  EXPECT_EQ(traj.str().substr(0, traj.str().find('\n')), "t,bus,omega_hz,theta_rad,p_shed_pu,p_ufls_pu");
  EXPECT_EQ(relays.str().substr(0, relays.str().find('\n')), "t,bus,stage,event");
  EXPECT_EQ(met.str().substr(0, met.str().find('\n')), "nadir_hz,tls_pct,dfss_hz");
  const std::string text = traj.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * dm.samples());
}

TEST(Simulator, RejectsMismatchedInputs) {
  const GridCase gc = test::load_case("toy2");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 2.0);
  UflsScheme s = uniform_scheme(gc, {59.7}, 0.1);
  EXPECT_THROW(simulate(dm, s, test::loss_at(gc, 1, 0.3), Vector::Zero(3)), ValidationError);
  s.deadband_s = 0.25;
  EXPECT_THROW(simulate(dm, s, test::loss_at(gc, 1, 0.3), gc.betas()), ValidationError);
  s.deadband_s = 0.0;
  EXPECT_THROW(simulate(dm, s, test::loss_at(gc, 1, 0.3), gc.betas()), ValidationError);
}
