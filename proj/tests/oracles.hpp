#ifndef UFLS_TESTS_ORACLES_HPP
#define UFLS_TESTS_ORACLES_HPP

// Exhaustive reference for the single-stage, single-load design problem.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ufls/milp.hpp"
#include "ufls/simulator.hpp"

namespace ufls::test {

struct BruteForceResult {
  double objective = std::numeric_limits<double>::infinity();
  double amount = 0.0;
  int trigger_step = -1;  // -1: nothing shed
  int evaluated = 0;
  int feasible = 0;
};

/// One participating bus, one stage. Enumerates every trigger sample and
/// every amount of a `grid_points`-point grid on [0, cap]. A pair is
/// feasible when the resulting trajectory meets the frequency limits and
/// some threshold in [floor, max] both reproduces that trigger under the
/// relay rule and keeps every inspected sample at least `eps` away.
inline BruteForceResult brute_force_single_stage(const GridCase& gc, const DiscreteModel& dm,
                                                 const Disturbance& dist, const MilpConfig& cfg,
                                                 int grid_points = 21) {
  const auto part = gc.participating_buses();
  if (part.size() != 1 || cfg.n_stages != 1) throw std::invalid_argument("oracle needs one bus and one stage");
  const int bus = part[0];
  const int N = gc.num_buses(), K = dm.horizon_steps, S = dm.samples();
  const double f0 = gc.f_nominal_hz;
  const int kdb = steps_for(cfg.deadband_s, dm.step, "deadband");
  const int kd = steps_for(cfg.delay_s, dm.step, "delay");
  const double eps = cfg.tie_margin_pu;
  const double cap = std::min(gc.buses[bus].shed_cap, cfg.stage_cap_frac * gc.total_load());
  const double beta = gc.buses[bus].beta;
  const double wb = cfg.omega_bound_pu;
  const double w_lo = std::max(-wb, hz_to_pu(cfg.floor_hz, f0));
  const double band_lo = std::max(w_lo, hz_to_pu(cfg.band_low_hz, f0));
  const double band_hi = std::min(wb, hz_to_pu(cfg.band_high_hz, f0));
  const double thr_lo = hz_to_pu(cfg.floor_hz, f0), thr_hi = hz_to_pu(cfg.max_threshold_hz, f0);

  // trigger sample produced by threshold `thr` on trajectory `w` (-1: none)
  auto trigger_for = [&](const Vector& w, double thr) {
    int run = 0;
    for (int j = 1; j <= K - 1; ++j) {
      run = w[j] < thr ? run + 1 : 0;
      if (run == kdb) return j + 1;
    }
    return -1;
  };
  // does some admissible threshold reproduce `want` on `w`?
  auto realisable = [&](const Vector& w, int want) {
    std::vector<double> v;
    for (int j = 1; j <= K - 1; ++j) v.push_back(w[j]);
    std::sort(v.begin(), v.end());
    std::vector<double> edges{thr_lo - 1.0};
    edges.insert(edges.end(), v.begin(), v.end());
    edges.push_back(thr_hi + 1.0);
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      const double lo = std::max(edges[e] + eps, thr_lo), hi = std::min(edges[e + 1] - eps, thr_hi);
      if (!(lo <= hi)) continue;
      const int trig = trigger_for(w, 0.5 * (lo + hi));
      // an unused relay only needs some threshold; otherwise the trigger must match
      if (want < 0 || trig == want) return true;
    }
    return false;
  };

  BruteForceResult best;
  const Matrix zero = Matrix::Zero(N, S);
  for (int t = -1; t <= K; ++t) {
    for (int q = 0; q < grid_points; ++q) {
      const double a = cap * q / (grid_points - 1);
      if ((t < 0) != (q == 0)) continue;
      if (t >= 0 && (t < kdb + 1 || t + kd > K)) continue;
      Matrix u = zero;
      if (t >= 0) u.row(bus).segment(t + kd, S - t - kd).setConstant((1.0 - beta) * a);
      const Trajectory tr = simulate_open_loop(dm, u, dist, f0);
      ++best.evaluated;
      bool ok = true;
      for (int b = 0; b < N && ok; ++b)
        for (int k = 1; k <= K && ok; ++k) {
          const double w = tr.omega(b, k);
          ok = k < K ? (w >= w_lo - 1e-12 && w <= wb + 1e-12) : (w >= band_lo - 1e-12 && w <= band_hi + 1e-12);
        }
      if (!ok || !realisable(tr.omega.row(bus).transpose(), t)) continue;
      ++best.feasible;
      double obj = cfg.gammas[1] / cfg.scales[1] * a;
      for (int b = 0; b < N; ++b) {
        obj += cfg.gammas[0] / cfg.scales[0] * tr.omega.row(b).tail(K).cwiseAbs().maxCoeff();
        obj += cfg.gammas[2] / cfg.scales[2] * std::abs(tr.omega(b, K));
      }
      if (obj < best.objective) best = {obj, a, t, best.evaluated, best.feasible};
    }
  }
  return best;
}

}  // namespace ufls::test

#endif  // UFLS_TESTS_ORACLES_HPP
