#ifndef UFLS_MILP_HPP
#define UFLS_MILP_HPP

// UFLS setpoint selection as a mixed-integer linear program.
//
// Decision data per participating bus p, stage i and sample k:
//   P^i_p[k]   cumulative shed commanded by stage i (continuous)
//   P_sh,p[k]  shed actually disconnected, K_delay samples later
//   alpha^i_p[k] in {0,1}, k = 1..K-1: bus frequency below the stage
//              threshold (the only integer family)
//   f^i_p[k]   relay latched: some K_db consecutive alphas ending at or
//              before k are all one (continuous, integral with alpha)
// plus the trapezoidal state trajectory, stage thresholds and the epigraph
// variables of the objective
//
//   g1/s1 * sum_n max_k |w_n[k]| + g2/s2 * sum_p P_sh,p[K] + g3/s3 * sum_n |w_n[K]|.
//
// alpha = 1 certifies w <= thr - eps and alpha = 0 certifies w >= thr + eps,
// so a replay through the simulator (strict "<" test, counter reset on any
// sample not below) reaches exactly the same relay decisions.
//
// Angles are carried relative to the largest machine's rotor angle.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ufls/backend.hpp"
#include "ufls/dae.hpp"
#include "ufls/error.hpp"
#include "ufls/grid.hpp"
#include "ufls/milp_model.hpp"
#include "ufls/scheme.hpp"
#include "ufls/simulator.hpp"

namespace ufls {

struct MilpConfig {
  std::array<double, 3> gammas{1.0, 0.2, 1.0};
  std::array<double, 3> scales{1.0, 1.0, 1.0};  // divide each objective term
  int n_stages = 3;
  double t_s = 0.1;
  double horizon_s = 20.0;
  double deadband_s = 0.3;
  double delay_s = 0.1;
  double max_threshold_hz = 59.5;
  double min_gap_hz = 0.1;
  double floor_hz = 58.5;
  double band_low_hz = 59.3;
  double band_high_hz = 60.7;
  double stage_cap_frac = 0.075;
  std::optional<std::vector<double>> fix_thresholds_hz;
  double omega_bound_pu = 0.05;
  double tie_margin_pu = 1e-8;
  // Binaries free only for samples in [1, window_steps]; later samples must
  // stay above every threshold. <= 0 means the full horizon.
  int window_steps = 0;
};

inline void validate(const MilpConfig& c, double f_nominal_hz = 60.0) {
  for (double g : c.gammas)
    if (!(g >= 0.0)) throw ValidationError("milp.gammas must be >= 0");
  for (double s : c.scales)
    if (!(s > 0.0)) throw ValidationError("milp.scales must be > 0");
  if (c.n_stages < 1 || c.n_stages > 5) throw ValidationError("milp.n_stages must be in 1..5");
  if (!(c.floor_hz < c.band_low_hz && c.band_low_hz < f_nominal_hz && f_nominal_hz < c.band_high_hz))
    throw ValidationError("milp: need floor_hz < band_low_hz < nominal < band_high_hz");
  if (!(c.max_threshold_hz < f_nominal_hz)) throw ValidationError("milp.max_threshold_hz must be below nominal");
  if (!(c.min_gap_hz >= 0.0)) throw ValidationError("milp.min_gap_hz must be >= 0");
  if (!(c.stage_cap_frac > 0.0)) throw ValidationError("milp.stage_cap_frac must be > 0");
  if (!(c.omega_bound_pu > 0.0)) throw ValidationError("milp.omega_bound_pu must be > 0");
  if (!(c.tie_margin_pu >= 0.0)) throw ValidationError("milp.tie_margin_pu must be >= 0");
  if (c.fix_thresholds_hz) {
    const auto& f = *c.fix_thresholds_hz;
    if (static_cast<int>(f.size()) != c.n_stages)
      throw ValidationError("milp.fix_thresholds_hz must list one threshold per stage");
    if (f[0] > c.max_threshold_hz + 1e-9) throw ValidationError("milp.fix_thresholds_hz: stage 1 above maximum");
    for (std::size_t i = 1; i < f.size(); ++i)
      if (f[i - 1] - f[i] < c.min_gap_hz - 1e-9)
        throw ValidationError("milp.fix_thresholds_hz: gap below minimum");
  }
}

/// The built program together with its column maps.
struct UflsMilp {
  MilpModel model;
  MilpConfig cfg;
  int n_bus = 0;
  int n_gen = 0;
  int horizon_steps = 0;
  int deadband_steps = 0;
  int delay_steps = 0;
  double step = 0.0;
  double f_nominal_hz = 60.0;
  double total_load = 0.0;
  std::vector<int> participating;  // dense bus ids, one per p
  int angle_ref = 0;               // machine bus whose angle is the reference
  Vector betas;
  Vector initial_state;

  // first column of each family
  int col_theta = 0, col_omega = 0, col_xgov = 0, col_stage = 0, col_shed = 0, col_alpha = 0, col_u = 0,
      col_v = 0, col_thr = 0, col_latch = 0;

  int samples() const { return horizon_steps + 1; }
  int n_part() const { return static_cast<int>(participating.size()); }
  int n_stages() const { return cfg.n_stages; }

  int theta(int b, int k) const { return col_theta + b * samples() + k; }
  int omega(int b, int k) const { return col_omega + b * samples() + k; }
  int xgov(int g, int k) const { return col_xgov + g * samples() + k; }
  int stage_shed(int p, int i, int k) const { return col_stage + (p * n_stages() + i) * samples() + k; }
  int shed(int p, int k) const { return col_shed + p * samples() + k; }
  /// k in 1..K-1
  int alpha(int p, int i, int k) const { return col_alpha + relay_sample(p, i, k); }
  /// k in 1..K-1: K_db consecutive below-samples have ended at or before k
  int latch(int p, int i, int k) const { return col_latch + relay_sample(p, i, k); }
  int epi_max(int b) const { return col_u + b; }
  int epi_terminal(int b) const { return col_v + b; }
  int threshold(int i) const { return col_thr + i; }

  int relay_sample(int p, int i, int k) const { return (p * n_stages() + i) * (horizon_steps - 1) + (k - 1); }
  int expected_binaries() const { return n_part() * n_stages() * std::max(0, horizon_steps - 1); }

  std::array<double, 3> objective_parts(const std::vector<double>& x) const {
    std::array<double, 3> parts{0.0, 0.0, 0.0};
    for (int b = 0; b < n_bus; ++b) {
      double mx = 0.0;
      for (int k = 0; k < samples(); ++k) mx = std::max(mx, std::abs(x[omega(b, k)]));
      parts[0] += mx;
      parts[2] += std::abs(x[omega(b, horizon_steps)]);
    }
    for (int p = 0; p < n_part(); ++p) parts[1] += x[shed(p, horizon_steps)];
    return parts;
  }
};

inline UflsMilp build_milp(const DiscreteModel& dm, const GridCase& gc, const Disturbance& dist,
                           const Vector& betas, const MilpConfig& cfg) {
  validate(cfg, gc.f_nominal_hz);
  const LinearSystem& sys = dm.sys;
  const int N = sys.n_bus;
  const int G = sys.n_gen;
  const int K = dm.horizon_steps;
  const int S = dm.samples();
  const int ns = sys.n_state();
  if (gc.num_buses() != N) throw ValidationError("case and model have different bus counts");
  if (betas.size() != N) throw ValidationError("beta vector length != number of buses");
  if (std::abs(cfg.t_s - dm.step) > 1e-12) throw ValidationError("milp.t_s differs from the model step");
  if (K != steps_for(cfg.horizon_s, dm.step, "horizon"))
    throw ValidationError("milp.horizon_s differs from the model horizon");
  if (K < 2) throw ValidationError("horizon must span at least two steps");

  UflsMilp m;
  m.cfg = cfg;
  m.n_bus = N;
  m.n_gen = G;
  m.horizon_steps = K;
  m.step = dm.step;
  m.f_nominal_hz = gc.f_nominal_hz;
  m.total_load = gc.total_load();
  m.betas = betas;
  m.deadband_steps = steps_for(cfg.deadband_s, dm.step, "deadband");
  m.delay_steps = steps_for(cfg.delay_s, dm.step, "breaker delay");
  if (m.deadband_steps < 1) throw ValidationError("deadband must span at least one time step");
  if (m.delay_steps > K) throw ValidationError("breaker delay exceeds horizon");
  for (int b = 0; b < N; ++b)
    if (gc.buses[b].participates()) m.participating.push_back(b);

  const int Kdb = m.deadband_steps;
  const int Kd = m.delay_steps;
  const int I = cfg.n_stages;
  const int P = m.n_part();
  const double f0 = gc.f_nominal_hz;
  const double eps = cfg.tie_margin_pu;
  const Matrix d = disturbance_profile(dm, dist);
  m.initial_state = dm.initial_state(d.col(0));

  // Angles are carried relative to the largest machine. Absolute angles drift
  // with the frequency error and the network rows would then difference large
  // numbers; the reference angle's own row decouples and is dropped.
  int g_ref = 0;
  for (int g = 1; g < G; ++g)
    if (sys.inertia[g] > sys.inertia[g_ref]) g_ref = g;
  m.angle_ref = sys.gen_buses[g_ref];
  const int ref_row = sys.theta(m.angle_ref);
  Matrix lhs = dm.lhs, rhs_state = dm.rhs_state, in_prev = dm.input_prev, in_next = dm.input_next;
  for (int r = 0; r < ns; ++r) {
    if (r == ref_row) continue;
    double a = 0.0, c = 0.0;
    for (int b = 0; b < N; ++b) {
      a += dm.lhs(r, sys.theta(b));
      c += dm.rhs_state(r, sys.theta(b));
    }
    if (std::abs(a - c) > 1e-12 * std::max(1.0, std::abs(a)))
      throw NumericalError("angle reference cannot be eliminated from the step map");
    if (std::abs(a) < 1e-12) continue;
    lhs.row(r) -= a * dm.lhs.row(ref_row);
    rhs_state.row(r) -= a * dm.rhs_state.row(ref_row);
    in_prev.row(r) -= a * dm.input_prev.row(ref_row);
    in_next.row(r) -= a * dm.input_next.row(ref_row);
  }
  for (int r = 0; r < ns; ++r) {
    lhs(r, ref_row) = 0.0;
    rhs_state(r, ref_row) = 0.0;
  }
  const double theta_ref0 = m.initial_state[ref_row];

  MilpModel& mm = m.model;
  auto lbl = [&](int b) { return std::to_string(gc.buses[b].label); };
  const double wb = cfg.omega_bound_pu;
  const double w_floor = std::max(-wb, hz_to_pu(cfg.floor_hz, f0));
  const double band_lo = std::max(w_floor, hz_to_pu(cfg.band_low_hz, f0));
  const double band_hi = std::min(wb, hz_to_pu(cfg.band_high_hz, f0));

  // states
  m.col_theta = mm.num_vars();
  for (int b = 0; b < N; ++b)
    for (int k = 0; k < S; ++k) {
      const double fix = m.initial_state[sys.theta(b)] - theta_ref0;
      const bool fixed = k == 0 || b == m.angle_ref;
      mm.add_variable("th_" + lbl(b) + "_" + std::to_string(k), VarType::Continuous, fixed ? fix : -kInf,
                      fixed ? fix : kInf);
    }
  m.col_omega = mm.num_vars();
  for (int b = 0; b < N; ++b)
    for (int k = 0; k < S; ++k) {
      double lo = w_floor, hi = wb;
      if (k == K) {
        lo = band_lo;
        hi = band_hi;
      }
      if (k == 0) lo = hi = m.initial_state[sys.omega(b)];
      mm.add_variable("w_" + lbl(b) + "_" + std::to_string(k), VarType::Continuous, lo, hi);
    }
  m.col_xgov = mm.num_vars();
  for (int g = 0; g < G; ++g)
    for (int k = 0; k < S; ++k) {
      const double fix = m.initial_state[sys.xgov(g)];
      mm.add_variable("xg_" + lbl(sys.gen_buses[g]) + "_" + std::to_string(k), VarType::Continuous,
                      k == 0 ? fix : -kInf, k == 0 ? fix : kInf);
    }
  // stage commands and disconnected load
  m.col_stage = mm.num_vars();
  for (int p = 0; p < P; ++p)
    for (int i = 0; i < I; ++i)
      for (int k = 0; k < S; ++k)
        mm.add_variable("ps_" + lbl(m.participating[p]) + "_" + std::to_string(i + 1) + "_" + std::to_string(k),
                        VarType::Continuous, 0.0, k == 0 ? 0.0 : gc.buses[m.participating[p]].shed_cap);
  m.col_shed = mm.num_vars();
  for (int p = 0; p < P; ++p)
    for (int k = 0; k < S; ++k)
      mm.add_variable("sh_" + lbl(m.participating[p]) + "_" + std::to_string(k), VarType::Continuous, 0.0,
                      k < Kd ? 0.0 : gc.buses[m.participating[p]].shed_cap);
  // binaries
  m.col_alpha = mm.num_vars();
  const int window = cfg.window_steps > 0 ? cfg.window_steps : K;
  for (int p = 0; p < P; ++p)
    for (int i = 0; i < I; ++i)
      for (int k = 1; k <= K - 1; ++k)
        mm.add_variable("a_" + lbl(m.participating[p]) + "_" + std::to_string(i + 1) + "_" + std::to_string(k),
                        VarType::Binary, 0.0, k <= window ? 1.0 : 0.0);
  // epigraph
  m.col_u = mm.num_vars();
  for (int b = 0; b < N; ++b) mm.add_variable("umax_" + lbl(b), VarType::Continuous, 0.0, kInf);
  m.col_v = mm.num_vars();
  for (int b = 0; b < N; ++b) mm.add_variable("uterm_" + lbl(b), VarType::Continuous, 0.0, kInf);
  // thresholds (pu deviation)
  m.col_thr = mm.num_vars();
  const double thr_max = hz_to_pu(cfg.max_threshold_hz, f0);
  const double thr_min = hz_to_pu(cfg.floor_hz, f0);
  for (int i = 0; i < I; ++i) {
    double lo = thr_min, hi = thr_max;
    if (cfg.fix_thresholds_hz) lo = hi = hz_to_pu((*cfg.fix_thresholds_hz)[i], f0);
    mm.add_variable("thr_" + std::to_string(i + 1), VarType::Continuous, lo, hi);
  }
  // latch indicators: continuous, integral whenever alpha is
  m.col_latch = mm.num_vars();
  for (int p = 0; p < P; ++p)
    for (int i = 0; i < I; ++i)
      for (int k = 1; k <= K - 1; ++k)
        mm.add_variable("f_" + lbl(m.participating[p]) + "_" + std::to_string(i + 1) + "_" + std::to_string(k),
                        VarType::Continuous, 0.0, k >= Kdb ? 1.0 : 0.0);

  // net shed injection u_b[k] = (1 - beta_b) P_sh,b[k]
  std::vector<int> part_of(N, -1);
  for (int p = 0; p < P; ++p) part_of[m.participating[p]] = p;
  auto state_col = [&](int r, int k) {
    if (r < N) return m.theta(r, k);
    if (r < 2 * N) return m.omega(r - N, k);
    return m.xgov(r - 2 * N, k);
  };

  // trapezoidal dynamics with algebraic rows at k+1
  for (int k = 0; k < K; ++k) {
    const Vector rhs = in_prev * d.col(k) + in_next * d.col(k + 1);
    for (int r = 0; r < ns; ++r) {
      if (r == ref_row) continue;
      std::vector<Term> t;
      for (int j = 0; j < ns; ++j) {
        if (lhs(r, j) != 0.0) t.push_back({state_col(j, k + 1), lhs(r, j)});
        if (rhs_state(r, j) != 0.0) t.push_back({state_col(j, k), -rhs_state(r, j)});
      }
      for (int b = 0; b < N; ++b) {
        const int p = part_of[b];
        if (p < 0) continue;
        const double net = 1.0 - betas[b];
        if (net == 0.0) continue;
        if (in_prev(r, b) != 0.0) t.push_back({m.shed(p, k), -net * in_prev(r, b)});
        if (in_next(r, b) != 0.0) t.push_back({m.shed(p, k + 1), -net * in_next(r, b)});
      }
      mm.add_constraint("dyn_" + std::to_string(r) + "_" + std::to_string(k + 1), std::move(t), Sense::Equal,
                        rhs[r]);
    }
  }

  // alpha[k] = 1 exactly when w[k] is below the threshold; samples within
  // the tie margin of the threshold are excluded
  const double m_up = wb - thr_min + eps;
  const double m_lo = thr_max + wb + eps;
  for (int p = 0; p < P; ++p) {
    const int b = m.participating[p];
    for (int i = 0; i < I; ++i) {
      const std::string tag = lbl(b) + "_" + std::to_string(i + 1) + "_";
      for (int k = 1; k <= K - 1; ++k) {
        const int a = m.alpha(p, i, k);
        if (k > window) {  // alpha is fixed at zero: a relay not yet latched must stay above
          std::vector<Term> t{{m.omega(b, k), 1.0}, {m.threshold(i), -1.0}};
          if (window >= Kdb) t.push_back({m.latch(p, i, window), m_lo});
          mm.add_constraint("above_" + tag + std::to_string(k), std::move(t), Sense::GreaterEqual, eps);
          continue;
        }
        mm.add_constraint("below_" + tag + std::to_string(k),
                          {{m.omega(b, k), 1.0}, {m.threshold(i), -1.0}, {a, m_up}}, Sense::LessEqual, m_up - eps);
        mm.add_constraint("above_" + tag + std::to_string(k),
                          {{m.omega(b, k), 1.0}, {m.threshold(i), -1.0}, {a, m_lo}}, Sense::GreaterEqual, eps);
      }
    }
  }

  // deadband latch: f[k] = f[k-1] OR (alpha[k-Kdb+1] AND ... AND alpha[k])
  for (int p = 0; p < P; ++p) {
    const int b = m.participating[p];
    for (int i = 0; i < I; ++i) {
      const std::string tag = lbl(b) + "_" + std::to_string(i + 1) + "_";
      for (int k = Kdb; k <= K - 1; ++k) {
        const int f = m.latch(p, i, k);
        const bool first = k == Kdb;
        if (k > window) {  // no new runs
          std::vector<Term> t{{f, 1.0}};
          if (!first) t.push_back({m.latch(p, i, k - 1), -1.0});
          mm.add_constraint("fhold_" + tag + std::to_string(k), std::move(t), Sense::Equal, 0.0);
          continue;
        }
        std::vector<Term> all{{f, 1.0}};
        for (int z = 0; z < Kdb; ++z) {
          const int a = m.alpha(p, i, k - z);
          all.push_back({a, -1.0});
          std::vector<Term> t{{f, 1.0}, {a, -1.0}};
          if (!first) t.push_back({m.latch(p, i, k - 1), -1.0});
          mm.add_constraint("fset_" + tag + std::to_string(k) + "_" + std::to_string(z), std::move(t),
                            Sense::LessEqual, 0.0);
        }
        mm.add_constraint("fon_" + tag + std::to_string(k), std::move(all), Sense::GreaterEqual, 1.0 - Kdb);
        if (!first)
          mm.add_constraint("fkeep_" + tag + std::to_string(k), {{f, 1.0}, {m.latch(p, i, k - 1), -1.0}},
                            Sense::GreaterEqual, 0.0);
      }
    }
  }

  // stage command: zero before the trip step, the full amount from it on; an
  // amount is only allowed when its breaker opens inside the horizon
  for (int p = 0; p < P; ++p) {
    const int b = m.participating[p];
    const double cap = gc.buses[b].shed_cap;
    for (int i = 0; i < I; ++i) {
      const std::string tag = lbl(b) + "_" + std::to_string(i + 1) + "_";
      const int amount = m.stage_shed(p, i, K);
      for (int t = 1; t <= K; ++t) {
        const int y = m.stage_shed(p, i, t);
        if (t - 1 < Kdb) {
          mm.add_constraint("pre_" + tag + std::to_string(t), {{y, 1.0}}, Sense::LessEqual, 0.0);
          continue;
        }
        const int f = m.latch(p, i, t - 1);
        if (t < K) {
          mm.add_constraint("off_" + tag + std::to_string(t), {{y, 1.0}, {f, -cap}}, Sense::LessEqual, 0.0);
          mm.add_constraint("upto_" + tag + std::to_string(t), {{y, 1.0}, {amount, -1.0}}, Sense::LessEqual, 0.0);
          mm.add_constraint("on_" + tag + std::to_string(t), {{y, 1.0}, {amount, -1.0}, {f, -cap}},
                            Sense::GreaterEqual, -cap);
        }
      }
      const int last = K - Kd - 1;
      if (last >= Kdb)
        mm.add_constraint("inside_" + tag.substr(0, tag.size() - 1), {{amount, 1.0}, {m.latch(p, i, last), -cap}},
                          Sense::LessEqual, 0.0);
      else
        mm.add_constraint("inside_" + tag.substr(0, tag.size() - 1), {{amount, 1.0}}, Sense::LessEqual, 0.0);
    }
  }

  // breaker delay and shed monotonicity
  for (int p = 0; p < P; ++p) {
    const std::string tag = lbl(m.participating[p]) + "_";
    for (int k = 0; k + Kd <= K; ++k) {
      std::vector<Term> t{{m.shed(p, k + Kd), 1.0}};
      for (int i = 0; i < I; ++i) t.push_back({m.stage_shed(p, i, k), -1.0});
      mm.add_constraint("delay_" + tag + std::to_string(k + Kd), std::move(t), Sense::Equal, 0.0);
    }
    for (int k = 0; k < K; ++k)
      mm.add_constraint("shmono_" + tag + std::to_string(k), {{m.shed(p, k + 1), 1.0}, {m.shed(p, k), -1.0}},
                        Sense::GreaterEqual, 0.0);
  }

  // per-stage system cap
  for (int i = 0; i < I; ++i) {
    std::vector<Term> t;
    for (int p = 0; p < P; ++p) t.push_back({m.stage_shed(p, i, K), 1.0});
    mm.add_constraint("stagecap_" + std::to_string(i + 1), std::move(t), Sense::LessEqual,
                      cfg.stage_cap_frac * m.total_load);
  }

  // threshold ordering
  for (int i = 0; i + 1 < I; ++i)
    mm.add_constraint("gap_" + std::to_string(i + 1), {{m.threshold(i), 1.0}, {m.threshold(i + 1), -1.0}},
                      Sense::GreaterEqual, cfg.min_gap_hz / f0);

  // epigraph of |w|
  for (int b = 0; b < N; ++b) {
    for (int k = 1; k < S; ++k) {
      mm.add_constraint("epip_" + lbl(b) + "_" + std::to_string(k), {{m.epi_max(b), 1.0}, {m.omega(b, k), -1.0}},
                        Sense::GreaterEqual, 0.0);
      mm.add_constraint("epin_" + lbl(b) + "_" + std::to_string(k), {{m.epi_max(b), 1.0}, {m.omega(b, k), 1.0}},
                        Sense::GreaterEqual, 0.0);
    }
    mm.add_constraint("termp_" + lbl(b), {{m.epi_terminal(b), 1.0}, {m.omega(b, K), -1.0}}, Sense::GreaterEqual,
                      0.0);
    mm.add_constraint("termn_" + lbl(b), {{m.epi_terminal(b), 1.0}, {m.omega(b, K), 1.0}}, Sense::GreaterEqual,
                      0.0);
  }

  const auto& g = cfg.gammas;
  const auto& s = cfg.scales;
  for (int b = 0; b < N; ++b) {
    if (g[0] != 0.0) mm.set_objective(m.epi_max(b), g[0] / s[0]);
    if (g[2] != 0.0) mm.set_objective(m.epi_terminal(b), g[2] / s[2]);
  }
  if (g[1] != 0.0)
    for (int p = 0; p < P; ++p) mm.set_objective(m.shed(p, K), g[1] / s[1]);
  return m;
}

struct RelayDecision {
  int bus = 0;    // dense id
  int stage = 0;  // 0-based
  double amount = 0.0;
  int trigger_step = -1;
  int actuation_step = -1;
};

struct MilpSolution {
  SolveStatus status = SolveStatus::Error;
  std::string message;
  double objective = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  double seconds = 0.0;
  double max_violation = 0.0;
  int n_binaries = 0;
  std::array<double, 3> objective_parts{0.0, 0.0, 0.0};
  std::vector<double> thresholds_hz;
  std::vector<std::vector<double>> shed_pu;  // [stage][bus]
  std::vector<std::vector<std::vector<int>>> alpha;  // [p][stage][k], k = 0..K
  Matrix omega;                              // N x (K+1)
  Matrix p_shed;                             // N x (K+1)
  std::vector<RelayDecision> relays;         // nonzero-amount relays
  std::vector<double> x;

  bool has_solution() const { return ufls::has_solution(status); }
};

/// Amounts below this are solver noise and treated as "relay not installed".
inline constexpr double kShedSnap = 1e-7;

inline MilpSolution decode(const UflsMilp& m, const BackendResult& r) {
  MilpSolution sol;
  sol.status = r.status;
  sol.message = r.message;
  sol.objective = r.objective;
  sol.bound = r.bound;
  sol.gap = r.gap;
  sol.seconds = r.seconds;
  sol.n_binaries = m.model.num_binaries();
  if (!has_solution(r.status)) return sol;
  const auto& x = r.x;
  sol.x = x;
  sol.max_violation = m.model.max_violation(x);
  sol.objective_parts = m.objective_parts(x);
  const int N = m.n_bus, S = m.samples(), K = m.horizon_steps, I = m.n_stages();
  for (int i = 0; i < I; ++i) sol.thresholds_hz.push_back(pu_to_hz(x[m.threshold(i)], m.f_nominal_hz));
  sol.shed_pu.assign(I, std::vector<double>(N, 0.0));
  sol.omega = Matrix::Zero(N, S);
  sol.p_shed = Matrix::Zero(N, S);
  for (int b = 0; b < N; ++b)
    for (int k = 0; k < S; ++k) sol.omega(b, k) = x[m.omega(b, k)];
  sol.alpha.assign(m.n_part(), std::vector<std::vector<int>>(I, std::vector<int>(S, 0)));
  for (int p = 0; p < m.n_part(); ++p) {
    const int b = m.participating[p];
    for (int k = 0; k < S; ++k) sol.p_shed(b, k) = std::max(0.0, x[m.shed(p, k)]);
    for (int i = 0; i < I; ++i) {
      for (int k = 1; k <= K - 1; ++k) sol.alpha[p][i][k] = x[m.alpha(p, i, k)] > 0.5 ? 1 : 0;
      const double amount = x[m.stage_shed(p, i, K)];
      if (amount <= kShedSnap) continue;
      sol.shed_pu[i][b] = amount;
      RelayDecision rd{b, i, amount, -1, -1};
      for (int k = 0; k < K; ++k) {
        if (x[m.stage_shed(p, i, k + 1)] - x[m.stage_shed(p, i, k)] > kShedSnap) {
          if (rd.trigger_step >= 0) throw NumericalError("relay increments at more than one step");
          rd.trigger_step = k + 1;
          rd.actuation_step = k + 1 + m.delay_steps;
        }
      }
      sol.relays.push_back(rd);
    }
  }
  return sol;
}

inline MilpSolution solve(const UflsMilp& m, const SolverBackend& backend, const SolveLimits& limits,
                          const std::vector<double>* start = nullptr) {
  const BackendResult r = backend.solve(m.model, limits, start);
  return decode(m, r);
}

/// Scheme realised by a solution: stage thresholds and terminal stage sheds.
inline UflsScheme extract_scheme(const MilpSolution& sol, const UflsMilp& m, const GridCase& gc) {
  if (!sol.has_solution()) throw SolverError("no solution to extract a scheme from");
  UflsScheme s;
  s.deadband_s = m.cfg.deadband_s;
  s.delay_s = m.cfg.delay_s;
  s.max_threshold_hz = m.cfg.max_threshold_hz;
  s.min_gap_hz = m.cfg.min_gap_hz;
  std::vector<double> thr = sol.thresholds_hz;
  if (m.cfg.fix_thresholds_hz) thr = *m.cfg.fix_thresholds_hz;
  constexpr double tol_hz = 1e-6;
  if (thr[0] > s.max_threshold_hz) {
    if (thr[0] > s.max_threshold_hz + tol_hz) throw SolverError("solution threshold above maximum");
    thr[0] = s.max_threshold_hz;
  }
  for (std::size_t i = 1; i < thr.size(); ++i) {
    const double lim = thr[i - 1] - s.min_gap_hz;
    if (thr[i] > lim) {
      if (thr[i] > lim + tol_hz) throw SolverError("solution violates the threshold gap");
      thr[i] = lim;
    }
  }
  for (int i = 0; i < m.n_stages(); ++i) s.stages.push_back({thr[i], sol.shed_pu[i]});
  // remove round-off excess over caps
  for (int b = 0; b < gc.num_buses(); ++b) {
    double tot = 0.0;
    for (const auto& st : s.stages) tot += st.shed_pu[b];
    const double cap = gc.buses[b].shed_cap;
    if (tot > cap && tot > 0.0)
      for (auto& st : s.stages) st.shed_pu[b] *= cap / tot;
  }
  const double stage_cap = m.cfg.stage_cap_frac * gc.total_load();
  for (auto& st : s.stages) {
    const double tot = st.total();
    if (tot > stage_cap)
      for (double& v : st.shed_pu) v *= stage_cap / tot;
  }
  validate_scheme(s, gc, {m.cfg.stage_cap_frac, 1e-7});
  return s;
}

/// The MILP variable vector realising `scheme`, without a feasibility check.
inline std::optional<std::vector<double>> scheme_point(const UflsMilp& m, const DiscreteModel& dm,
                                                       const UflsScheme& scheme, const Disturbance& dist) {
  Trajectory tr;
  try {
    tr = simulate(dm, scheme, dist, m.betas, m.f_nominal_hz);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  const int N = m.n_bus, S = m.samples(), K = m.horizon_steps, I = m.n_stages();
  if (scheme.num_stages() != I) return std::nullopt;
  std::vector<double> x(m.model.num_vars(), 0.0);
  for (int b = 0; b < N; ++b)
    for (int k = 0; k < S; ++k) {
      x[m.theta(b, k)] = tr.theta(b, k) - tr.theta(m.angle_ref, k);
      x[m.omega(b, k)] = tr.omega(b, k);
    }
  for (int g = 0; g < m.n_gen; ++g)
    for (int k = 0; k < S; ++k) x[m.xgov(g, k)] = tr.x_gov(g, k);
  for (int i = 0; i < I; ++i) x[m.threshold(i)] = hz_to_pu(scheme.stages[i].threshold_hz, m.f_nominal_hz);
  const int Kdb = m.deadband_steps;
  const int window = m.cfg.window_steps > 0 ? std::min(m.cfg.window_steps, K - 1) : K - 1;
  for (int p = 0; p < m.n_part(); ++p) {
    const int b = m.participating[p];
    for (int k = 0; k < S; ++k) x[m.shed(p, k)] = tr.p_shed(b, k);
    for (int i = 0; i < I; ++i) {
      const double thr = x[m.threshold(i)];
      int trig = -1;
      for (int k = 1; k <= K - 1; ++k) {
        const bool below = k <= window && tr.omega(b, k) < thr;
        x[m.alpha(p, i, k)] = below ? 1.0 : 0.0;
        bool run = k >= Kdb;
        for (int z = 0; z < Kdb && run; ++z) run = x[m.alpha(p, i, k - z)] > 0.5;
        const bool latched = run || (k > 1 && x[m.latch(p, i, k - 1)] > 0.5);
        x[m.latch(p, i, k)] = latched ? 1.0 : 0.0;
        if (latched && trig < 0) trig = k + 1;
      }
      // breakers that would open after the horizon carry no amount
      const double amount = trig >= 0 && trig + m.delay_steps <= K ? scheme.stages[i].shed_pu[b] : 0.0;
      if (amount > 0.0)
        for (int k = trig; k < S; ++k) x[m.stage_shed(p, i, k)] = amount;
    }
  }
  for (int b = 0; b < N; ++b) {
    x[m.epi_max(b)] = tr.omega.row(b).cwiseAbs().maxCoeff();
    x[m.epi_terminal(b)] = std::abs(tr.omega(b, K));
  }
  return x;
}

/// Full-length start point realising `scheme` in the MILP's variable space.
/// Returns nullopt when the scheme breaks a constraint, e.g. a sample within
/// the tie margin of a threshold or a frequency outside the floor or band.
inline std::optional<std::vector<double>> start_from_scheme(const UflsMilp& m, const DiscreteModel& dm,
                                                            const UflsScheme& scheme, const Disturbance& dist,
                                                            double tol = 1e-6) {
  auto x = scheme_point(m, dm, scheme, dist);
  if (!x || m.model.max_violation(*x) > tol) return std::nullopt;
  return x;
}

struct VerificationReport {
  double max_omega_diff = 0.0;
  double max_shed_diff = 0.0;
  int event_mismatches = 0;
  std::vector<std::string> details;

  bool ok(double tol = 1e-6) const { return max_omega_diff <= tol && event_mismatches == 0; }
};

/// Compares a simulator replay of the extracted scheme with the MILP's own
/// trajectory and relay decisions.
inline VerificationReport verify_against_milp(const Trajectory& tr, const MilpSolution& sol, double milp_step) {
  if (!sol.has_solution()) throw ValidationError("verify: MILP solution has no primal point");
  if (std::abs(tr.step - milp_step) > 1e-12) throw ValidationError("verify: time step differs");
  if (tr.omega.rows() != sol.omega.rows() || tr.omega.cols() != sol.omega.cols())
    throw ValidationError("verify: trajectory dimensions differ");
  VerificationReport rep;
  rep.max_omega_diff = (tr.omega - sol.omega).cwiseAbs().maxCoeff();
  rep.max_shed_diff = (tr.p_shed - sol.p_shed).cwiseAbs().maxCoeff();
  std::vector<RelayEvent> expect;
  for (const auto& r : sol.relays) {
    expect.push_back({r.trigger_step, r.bus, r.stage, RelayEventKind::Trigger});
    expect.push_back({r.actuation_step, r.bus, r.stage, RelayEventKind::Actuate});
  }
  std::vector<RelayEvent> got = tr.relay_log;
  auto key = [](const RelayEvent& e) { return std::make_tuple(e.bus, e.stage, static_cast<int>(e.kind), e.step); };
  auto less = [&](const RelayEvent& a, const RelayEvent& b) { return key(a) < key(b); };
  std::sort(expect.begin(), expect.end(), less);
  std::sort(got.begin(), got.end(), less);
  std::vector<RelayEvent> miss, extra;
  std::set_difference(expect.begin(), expect.end(), got.begin(), got.end(), std::back_inserter(miss), less);
  std::set_difference(got.begin(), got.end(), expect.begin(), expect.end(), std::back_inserter(extra), less);
  auto describe = [](const char* what, const RelayEvent& e) {
    std::ostringstream s;
    s << what << " bus " << e.bus << " stage " << e.stage + 1 << ' '
      << (e.kind == RelayEventKind::Trigger ? "trigger" : "actuate") << " @" << e.step;
    return s.str();
  };
  for (const auto& e : miss) rep.details.push_back(describe("missing in replay:", e));
  for (const auto& e : extra) rep.details.push_back(describe("extra in replay:", e));
  rep.event_mismatches = static_cast<int>(miss.size() + extra.size());
  return rep;
}

inline nlohmann::json solution_to_json(const MilpSolution& sol, const UflsMilp& m, const GridCase& gc) {
  nlohmann::json j;
  j["status"] = to_string(sol.status);
  j["message"] = sol.message;
  j["gap"] = sol.gap;
  j["objective"] = sol.objective;
  j["bound"] = sol.bound;
  j["n_binaries"] = sol.n_binaries;
  if (!sol.has_solution()) return j;
  j["max_violation"] = sol.max_violation;
  j["objective_parts"] = {{"sum_max_dev_pu", sol.objective_parts[0]},
                          {"tls_pu", sol.objective_parts[1]},
                          {"sum_terminal_dev_pu", sol.objective_parts[2]}};
  j["thresholds_hz"] = sol.thresholds_hz;
  nlohmann::json stages = nlohmann::json::array();
  for (int i = 0; i < m.n_stages(); ++i) {
    nlohmann::json sh = nlohmann::json::object();
    for (int b = 0; b < gc.num_buses(); ++b)
      if (sol.shed_pu[i][b] != 0.0) sh[std::to_string(gc.buses[b].label)] = sol.shed_pu[i][b];
    stages.push_back({{"threshold_hz", sol.thresholds_hz[i]}, {"shed_pu", sh}});
  }
  j["stages"] = stages;
  nlohmann::json relays = nlohmann::json::array();
  for (const auto& r : sol.relays)
    relays.push_back({{"bus", gc.buses[r.bus].label},
                      {"stage", r.stage + 1},
                      {"amount_pu", r.amount},
                      {"trigger_t", r.trigger_step * m.step},
                      {"actuate_t", r.actuation_step * m.step}});
  j["relays"] = relays;
  return j;
}

}  // namespace ufls

#endif  // UFLS_MILP_HPP
