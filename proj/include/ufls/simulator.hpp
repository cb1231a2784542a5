#ifndef UFLS_SIMULATOR_HPP
#define UFLS_SIMULATOR_HPP

// Closed-loop simulation of the discretised model under a staged UFLS relay
// scheme. Relay semantics, per (load bus, stage) with a nonzero setting:
//
//  * a sample counts as "below" when omega_n < threshold (strict); any other
//    sample resets the counter;
//  * once the counter reaches K_db the relay trips at the next sample
//    (K_db samples after the first crossing) and the breaker opens K_delay
//    samples after that;
//  * each relay trips at most once, and shed load is never reconnected.
//
// Relays with a zero setting are treated as not installed and log nothing.
// Samples 1..K-1 are inspected; sample 0 is the pre-disturbance state.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "ufls/dae.hpp"
#include "ufls/error.hpp"
#include "ufls/grid.hpp"
#include "ufls/scheme.hpp"

namespace ufls {

enum class RelayEventKind { Trigger, Actuate };

struct RelayEvent {
  int step = 0;
  int bus = 0;    // dense id
  int stage = 0;  // 0-based
  RelayEventKind kind = RelayEventKind::Trigger;

  friend bool operator==(const RelayEvent&, const RelayEvent&) = default;
};

struct RelayState {
  int below_counter = 0;
  bool triggered = false;
  int actuation_step = -1;
};

struct Trajectory {
  double step = 0.0;
  int horizon_steps = 0;
  double f_nominal_hz = 60.0;
  std::vector<double> times;
  Matrix theta;   // N x (K+1), rad
  Matrix omega;   // N x (K+1), pu deviation
  Matrix x_gov;   // G x (K+1)
  Matrix p_shed;  // N x (K+1), load disconnected
  Matrix p_ufls;  // N x (K+1), net injection change
  std::vector<RelayEvent> relay_log;

  int samples() const { return horizon_steps + 1; }
};

struct Metrics {
  double nadir_hz = 60.0;
  double tls_pct = 0.0;
  double dfss_hz = 0.0;
};

struct RelayTiming {
  int deadband_steps = 0;
  int delay_steps = 0;
};

inline RelayTiming relay_timing(const UflsScheme& scheme, double step) {
  RelayTiming t{steps_for(scheme.deadband_s, step, "deadband"),
                steps_for(scheme.delay_s, step, "breaker delay")};
  if (t.deadband_steps < 1) throw ValidationError("deadband must span at least one time step");
  return t;
}

/// Disturbance input at every sample (zero before onset).
inline Matrix disturbance_profile(const DiscreteModel& model, const Disturbance& dist) {
  const int N = model.sys.n_bus;
  if (dist.step_pu.size() != N) throw ValidationError("disturbance vector length != number of buses");
  const int onset = steps_for(dist.onset_s, model.step, "disturbance onset");
  if (onset > model.horizon_steps) throw ValidationError("disturbance onset beyond horizon");
  Matrix d = Matrix::Zero(N, model.samples());
  for (int k = onset; k < model.samples(); ++k) d.col(k) = dist.step_pu;
  return d;
}

/// Open-loop run for a given net shed injection profile u (N x (K+1)).
inline Trajectory simulate_open_loop(const DiscreteModel& model, const Matrix& u, const Disturbance& dist,
                                     double f_nominal_hz = 60.0) {
  const int N = model.sys.n_bus;
  const int S = model.samples();
  if (u.rows() != N || u.cols() != S) throw ValidationError("input profile has wrong shape");
  const Matrix d = disturbance_profile(model, dist);
  Trajectory tr;
  tr.step = model.step;
  tr.horizon_steps = model.horizon_steps;
  tr.f_nominal_hz = f_nominal_hz;
  tr.theta = Matrix::Zero(N, S);
  tr.omega = Matrix::Zero(N, S);
  tr.x_gov = Matrix::Zero(model.sys.n_gen, S);
  tr.p_shed = Matrix::Zero(N, S);
  tr.p_ufls = u;
  Vector x = model.initial_state(u.col(0) + d.col(0));
  auto store = [&](int k) {
    tr.times.push_back(model.time(k));
    tr.theta.col(k) = x.head(N);
    tr.omega.col(k) = x.segment(N, N);
    tr.x_gov.col(k) = x.tail(model.sys.n_gen);
  };
  store(0);
  for (int k = 0; k + 1 < S; ++k) {
    x = model.advance(x, u.col(k) + d.col(k), u.col(k + 1) + d.col(k + 1));
    if (!x.allFinite()) throw NumericalError("non-finite state in linear solve");
    store(k + 1);
  }
  return tr;
}

inline Trajectory simulate(const DiscreteModel& model, const UflsScheme& scheme, const Disturbance& dist,
                           const Vector& betas, double f_nominal_hz = 60.0) {
  const int N = model.sys.n_bus;
  const int S = model.samples();
  const int K = model.horizon_steps;
  if (betas.size() != N) throw ValidationError("beta vector length != number of buses");
  for (const auto& st : scheme.stages)
    if (static_cast<int>(st.shed_pu.size()) != N)
      throw ValidationError("scheme shed vector length != number of buses");
  const RelayTiming timing = relay_timing(scheme, model.step);
  const Matrix d = disturbance_profile(model, dist);

  const int n_stage = scheme.num_stages();
  std::vector<double> thr_pu(n_stage);
  for (int i = 0; i < n_stage; ++i) thr_pu[i] = hz_to_pu(scheme.stages[i].threshold_hz, f_nominal_hz);

  struct Relay {
    int bus;
    int stage;
    double amount;
    RelayState state;
  };
  std::vector<Relay> relays;
  for (int b = 0; b < N; ++b)
    for (int i = 0; i < n_stage; ++i)
      if (scheme.stages[i].shed_pu[b] > 0.0) relays.push_back({b, i, scheme.stages[i].shed_pu[b], {}});

  Trajectory tr;
  tr.step = model.step;
  tr.horizon_steps = K;
  tr.f_nominal_hz = f_nominal_hz;
  tr.theta = Matrix::Zero(N, S);
  tr.omega = Matrix::Zero(N, S);
  tr.x_gov = Matrix::Zero(model.sys.n_gen, S);
  tr.p_shed = Matrix::Zero(N, S);
  tr.p_ufls = Matrix::Zero(N, S);

  Vector shed = Vector::Zero(N);
  Vector u_prev = Vector::Zero(N);
  Vector x = model.initial_state(u_prev + d.col(0));
  auto store = [&](int k) {
    tr.times.push_back(model.time(k));
    tr.theta.col(k) = x.head(N);
    tr.omega.col(k) = x.segment(N, N);
    tr.x_gov.col(k) = x.tail(model.sys.n_gen);
    tr.p_shed.col(k) = shed;
    tr.p_ufls.col(k) = (Vector::Ones(N) - betas).cwiseProduct(shed);
  };
  store(0);

  for (int k = 0; k < K; ++k) {
    const int next = k + 1;
    for (auto& r : relays) {
      if (r.state.triggered && r.state.actuation_step == next) {
        shed[r.bus] += r.amount;
        tr.relay_log.push_back({next, r.bus, r.stage, RelayEventKind::Actuate});
      }
    }
    const Vector u_next = (Vector::Ones(N) - betas).cwiseProduct(shed);
    x = model.advance(x, u_prev + d.col(k), u_next + d.col(next));
    if (!x.allFinite()) throw NumericalError("non-finite state in linear solve");
    u_prev = u_next;
    store(next);

    if (next > K - 1) continue;
    for (auto& r : relays) {
      if (r.state.triggered) continue;
      if (x[N + r.bus] < thr_pu[r.stage]) {
        if (++r.state.below_counter >= timing.deadband_steps) {
          r.state.triggered = true;
          const int trip = next + 1;
          r.state.actuation_step = trip + timing.delay_steps;
          tr.relay_log.push_back({trip, r.bus, r.stage, RelayEventKind::Trigger});
          // zero-delay breakers open at the trip sample itself
        }
      } else {
        r.state.below_counter = 0;
      }
    }
  }
  std::stable_sort(tr.relay_log.begin(), tr.relay_log.end(), [](const RelayEvent& a, const RelayEvent& b) {
    if (a.step != b.step) return a.step < b.step;
    if (a.kind != b.kind) return a.kind == RelayEventKind::Trigger;
    if (a.bus != b.bus) return a.bus < b.bus;
    return a.stage < b.stage;
  });
  return tr;
}

inline Metrics metrics(const Trajectory& tr, double total_load) {
  Metrics m;
  const int K = tr.horizon_steps;
  const double f0 = tr.f_nominal_hz;
  m.nadir_hz = std::min(f0, f0 * (1.0 + tr.omega.minCoeff()));
  m.tls_pct = total_load > 0.0 ? 100.0 * tr.p_shed.col(K).sum() / total_load : 0.0;
  m.dfss_hz = f0 * tr.omega.col(K).cwiseAbs().maxCoeff();
  return m;
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr, const GridCase& gc) {
  out << "t,bus,omega_hz,theta_rad,p_shed_pu,p_ufls_pu\n";
  char buf[256];
  for (int k = 0; k < tr.samples(); ++k) {
    for (int b = 0; b < tr.omega.rows(); ++b) {
      std::snprintf(buf, sizeof buf, "%.4f,%d,%.9f,%.9e,%.9f,%.9f\n", tr.times[k], gc.buses[b].label,
                    tr.f_nominal_hz * (1.0 + tr.omega(b, k)), tr.theta(b, k), tr.p_shed(b, k),
                    tr.p_ufls(b, k));
      out << buf;
    }
  }
}

inline void write_relay_log_csv(std::ostream& out, const Trajectory& tr, const GridCase& gc) {
  out << "t,bus,stage,event\n";
  char buf[128];
  for (const auto& e : tr.relay_log) {
    std::snprintf(buf, sizeof buf, "%.4f,%d,%d,%s\n", tr.step * e.step, gc.buses[e.bus].label, e.stage + 1,
                  e.kind == RelayEventKind::Trigger ? "trigger" : "actuate");
    out << buf;
  }
}

inline void write_metrics_csv(std::ostream& out, const Metrics& m) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "nadir_hz,tls_pct,dfss_hz\n%.6f,%.6f,%.6f\n", m.nadir_hz, m.tls_pct, m.dfss_hz);
  out << buf;
}

}  // namespace ufls

#endif  // UFLS_SIMULATOR_HPP
