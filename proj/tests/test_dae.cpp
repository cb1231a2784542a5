#include <gtest/gtest.h>

#include "support.hpp"
#include "ufls/dae.hpp"
#include "ufls/simulator.hpp"

using namespace ufls;

TEST(Dae, BlockStructure) {
  const GridCase gc = test::load_case("wecc9");
  const LinearSystem s = build_dae(gc);
  const Matrix L = laplacian(gc);
  ASSERT_EQ(s.n_state(), 2 * 9 + 3);
  for (int g = 0; g < s.n_gen; ++g) {
    const int b = s.gen_buses[g];
    const double M = gc.machines[g].inertia;
    EXPECT_DOUBLE_EQ(s.A(s.theta(b), s.omega(b)), gc.omega_base());
    for (int j = 0; j < s.n_bus; ++j) EXPECT_NEAR(s.A(s.omega(b), s.theta(j)), -L(b, j) / M, 1e-15);
    EXPECT_NEAR(s.A(s.omega(b), s.omega(b)), -gc.machines[g].damping / M, 1e-15);
    EXPECT_NEAR(s.A(s.omega(b), s.xgov(g)), -gc.machines[g].gov_gain / M, 1e-15);
    EXPECT_NEAR(s.A(s.xgov(g), s.omega(b)), 1.0 / gc.machines[g].gov_time_const, 1e-15);
    EXPECT_NEAR(s.B(s.omega(b), b), 1.0 / M, 1e-15);
  }
  EXPECT_EQ((s.B - s.G).cwiseAbs().maxCoeff(), 0.0);
  for (int r : s.alg_rows) EXPECT_EQ(s.A.row(r).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.alg_rows.size() + s.diff_rows.size(), static_cast<std::size_t>(s.n_state()));
}

TEST(Dae, InitialStateIsConsistent) {
  const GridCase gc = test::load_case("ieee39");
  const DiscreteModel dm = discretize(build_dae(gc), 0.1, 1.0);
  const Vector d = test::loss_at(gc, 30, 2.5).step_pu;
  const Vector x = dm.initial_state(d);
  const LinearSystem& s = dm.sys;
  EXPECT_LT((s.alg_lhs * x - s.alg_input * d).cwiseAbs().maxCoeff(), 1e-10);
  for (int r : s.diff_rows) EXPECT_EQ(x[r], 0.0);
}

TEST(Dae, TrapezoidMatchesIndependentReference) {
  for (const std::string name : {"toy2", "ring3", "wecc9", "ieee39"}) {
    const GridCase gc = test::load_case(name);
    const int gen_label = gc.buses[gc.machines.back().bus].label;
    const Disturbance dist = test::loss_at(gc, gen_label, 0.1 * gc.total_load());
    const double ts = 0.002;
    const DiscreteModel dm = discretize(build_dae(gc), ts, 2.0);
    const Trajectory tr = simulate_open_loop(dm, Matrix::Zero(gc.num_buses(), dm.samples()), dist);
    // reference sampled every 0.1 s with 0.0005 s RK4 steps
    const int stride = 50;
    const int n_ref = dm.horizon_steps / stride + 1;
    const Matrix ref = test::reference_frequencies(gc, dist.step_pu, 0.0005, 200, n_ref);
    double err = 0.0, scale = 0.0;
    for (int k = 0; k < n_ref; ++k) {
      err = std::max(err, (tr.omega.col(k * stride) - ref.col(k)).cwiseAbs().maxCoeff());
      scale = std::max(scale, ref.col(k).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(err, 1e-3 * scale) << name << " err " << err << " scale " << scale;
  }
}

TEST(Dae, SteadyStateLaw) {
  for (const std::string name : {"toy2", "ring3", "wecc9"}) {
    const GridCase gc = test::load_case(name);
    const LinearSystem sys = build_dae(gc);
    const DiscreteModel dm = discretize(sys, 0.1, 300.0);
    const Disturbance dist = test::loss_at(gc, gc.buses[gc.machines[0].bus].label, 0.2);
    Matrix u = Matrix::Zero(gc.num_buses(), dm.samples());
    const int load = gc.participating_buses().front();
    u.row(load).tail(dm.samples() - 20).setConstant(0.05);
    const Trajectory tr = simulate_open_loop(dm, u, dist);
    double stiff = 0.0;
    for (const auto& m : gc.machines) stiff += m.damping + m.gov_gain;
    const double expect = (dist.step_pu.sum() + 0.05) / stiff;
    for (int b = 0; b < gc.num_buses(); ++b) EXPECT_NEAR(tr.omega(b, dm.horizon_steps), expect, 1e-6) << name;
    const SteadyState ss = steady_state(sys, u.col(dm.horizon_steps), dist.step_pu);
    EXPECT_NEAR(ss.omega_common, expect, 1e-14);
  }
}

TEST(Dae, SecondOrderConvergence) {
  for (const std::string name : {"wecc9", "ieee39"}) {
    const GridCase gc = test::load_case(name);
    const int gen_label = gc.buses[gc.machines.front().bus].label;
    const Disturbance dist = test::loss_at(gc, gen_label, gc.machines.front().p_gen);
    // asymptotic regime: the fastest mode is resolved, |lambda| * t_s <= 0.5
    double ts = 0.1;
    while (test::fastest_mode(gc) * ts > 0.5) ts /= 2;
    const double ratio = test::halving_ratio(gc, dist, ts, 4.0);
    EXPECT_GE(ratio, 3.5) << name << " t_s " << ts;
    EXPECT_LE(ratio, 4.5) << name << " t_s " << ts;
  }
}

TEST(Dae, RejectsBadTiming) {
  const LinearSystem sys = build_dae(test::load_case("toy2"));
  EXPECT_THROW(discretize(sys, 0.0, 1.0), ValidationError);
  EXPECT_THROW(discretize(sys, 0.1, 1.05), ValidationError);
  EXPECT_THROW(discretize(sys, 0.1, -1.0), ValidationError);
  EXPECT_EQ(steps_for(0.3, 0.1, "deadband"), 3);
  EXPECT_THROW(steps_for(0.25, 0.1, "deadband"), ValidationError);
}
