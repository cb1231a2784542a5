#ifndef UFLS_DAE_HPP
#define UFLS_DAE_HPP

// Linearised frequency DAE and its trapezoidal discretisation.
//
// State x = [theta (N), omega (N), x_gov (G)]. Generator-bus rows of theta
// and omega, plus all governor rows, are differential:
//
//   theta_g'  = w_base * omega_g
//   M omega_g' = -[L theta]_g - D omega_g - K_gov x_gov + u_g + d_g
//   x_gov'    = (omega_g - x_gov) / T_gov
//
// Non-generator rows are algebraic:
//
//   [L theta]_l = u_l + d_l,     [L omega]_l = 0
//
// u is the net shed injection (positive raises frequency) and d the
// disturbance (negative = generation lost). Both enter through the same
// input matrix, B == G.

#include <Eigen/Dense>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "ufls/error.hpp"
#include "ufls/grid.hpp"

namespace ufls {

struct LinearSystem {
  int n_bus = 0;
  int n_gen = 0;
  double omega_base = 0.0;

  Matrix A;      // n_state x n_state, algebraic rows are zero
  Matrix B;      // n_state x N, input map for net shed injection
  Matrix G;      // n_state x N, disturbance map (equal to B)
  Matrix L;      // Laplacian
  Matrix pi_gen;
  Matrix pi_load;

  // Algebraic block: alg_lhs * x = alg_input * (u + d), one row per entry
  // of alg_rows.
  Matrix alg_lhs;
  Matrix alg_input;
  std::vector<int> alg_rows;  // state rows that are algebraic
  std::vector<int> diff_rows;

  std::vector<int> gen_buses;
  std::vector<int> load_buses;
  Vector inertia, damping, gov_gain, gov_time_const;  // per generator

  int n_state() const { return 2 * n_bus + n_gen; }
  int theta(int bus) const { return bus; }
  int omega(int bus) const { return n_bus + bus; }
  int xgov(int gen) const { return 2 * n_bus + gen; }

  /// Sum over machines of D + K_gov; the steady-state frequency stiffness.
  double stiffness() const { return damping.sum() + gov_gain.sum(); }
};

inline LinearSystem build_dae(const GridCase& gc) {
  if (gc.num_machines() == 0)
    throw ValidationError("case has no machines: no differential states");
  LinearSystem s;
  s.n_bus = gc.num_buses();
  s.n_gen = gc.num_machines();
  s.omega_base = gc.omega_base();
  s.L = laplacian(gc);
  auto sel = selection_matrices(gc);
  s.pi_gen = sel.gen;
  s.pi_load = sel.load;
  s.gen_buses = gc.generator_buses();
  s.load_buses = gc.load_buses();

  const int n = s.n_state();
  const int N = s.n_bus;
  s.A = Matrix::Zero(n, n);
  s.B = Matrix::Zero(n, N);
  s.inertia.resize(s.n_gen);
  s.damping.resize(s.n_gen);
  s.gov_gain.resize(s.n_gen);
  s.gov_time_const.resize(s.n_gen);

  // machines are sorted by bus, as are gen_buses, so machine g sits on gen_buses[g]
  for (int g = 0; g < s.n_gen; ++g) {
    const Machine& m = gc.machines[g];
    const int bus = m.bus;
    s.inertia[g] = m.inertia;
    s.damping[g] = m.damping;
    s.gov_gain[g] = m.gov_gain;
    s.gov_time_const[g] = m.gov_time_const;

    s.A(s.theta(bus), s.omega(bus)) = s.omega_base;
    // line term acts on the full theta vector through row `bus` of L
    for (int j = 0; j < N; ++j)
      if (s.L(bus, j) != 0.0) s.A(s.omega(bus), s.theta(j)) = -s.L(bus, j) / m.inertia;
    s.A(s.omega(bus), s.omega(bus)) = -m.damping / m.inertia;
    s.A(s.omega(bus), s.xgov(g)) = -m.gov_gain / m.inertia;
    s.A(s.xgov(g), s.omega(bus)) = 1.0 / m.gov_time_const;
    s.A(s.xgov(g), s.xgov(g)) = -1.0 / m.gov_time_const;
    s.B(s.omega(bus), bus) = 1.0 / m.inertia;

    s.diff_rows.push_back(s.theta(bus));
    s.diff_rows.push_back(s.omega(bus));
    s.diff_rows.push_back(s.xgov(g));
  }
  s.G = s.B;

  const int nl = static_cast<int>(s.load_buses.size());
  s.alg_lhs = Matrix::Zero(2 * nl, n);
  s.alg_input = Matrix::Zero(2 * nl, N);
  for (int r = 0; r < nl; ++r) {
    const int bus = s.load_buses[r];
    for (int j = 0; j < N; ++j) {
      s.alg_lhs(r, s.theta(j)) = s.L(bus, j);
      s.alg_lhs(nl + r, s.omega(j)) = s.L(bus, j);
    }
    s.alg_input(r, bus) = 1.0;
  }
  for (int r = 0; r < nl; ++r) s.alg_rows.push_back(s.theta(s.load_buses[r]));
  for (int r = 0; r < nl; ++r) s.alg_rows.push_back(s.omega(s.load_buses[r]));
  std::sort(s.diff_rows.begin(), s.diff_rows.end());
  return s;
}

/// Converts a duration to an integral number of steps, or throws.
inline int steps_for(double seconds, double step, const std::string& what) {
  if (!(step > 0.0)) throw ValidationError("time step must be positive");
  if (seconds < 0.0) throw ValidationError(what + ": negative duration");
  const double ratio = seconds / step;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
    throw ValidationError(what + " (" + std::to_string(seconds) +
                          " s) is not an integer multiple of the time step");
  return static_cast<int>(rounded);
}

/// Trapezoidal one-step map with algebraic rows imposed at the new sample:
///
///   lhs x[k+1] = rhs_state x[k] + input_prev w[k] + input_next w[k+1]
///
/// where w = u + d. Differential rows carry (I -/+ h/2 A) and h/2 B; the
/// algebraic rows carry alg_lhs on the left and alg_input on w[k+1].
struct DiscreteModel {
  LinearSystem sys;
  double step = 0.1;
  int horizon_steps = 0;

  Matrix lhs;
  Matrix rhs_state;
  Matrix input_prev;
  Matrix input_next;
  Matrix init_lhs;  // identity on differential rows, algebraic block elsewhere
  Eigen::PartialPivLU<Matrix> lhs_lu;
  Eigen::PartialPivLU<Matrix> init_lu;

  int samples() const { return horizon_steps + 1; }
  double horizon() const { return step * horizon_steps; }
  double time(int k) const { return step * k; }
  int steps(double seconds, const std::string& what) const { return steps_for(seconds, step, what); }

  /// Consistent state at a sample where differential components are given.
  Vector consistent_state(const Vector& differential, const Vector& w) const {
    Vector rhs = Vector::Zero(sys.n_state());
    for (int r : sys.diff_rows) rhs[r] = differential[r];
    Vector alg = sys.alg_input * w;
    for (std::size_t a = 0; a < sys.alg_rows.size(); ++a) rhs[sys.alg_rows[a]] = alg[a];
    return init_lu.solve(rhs);
  }

  /// Deviation state at t = 0: differential states zero, algebraic states
  /// consistent with the inputs at sample 0.
  Vector initial_state(const Vector& w0) const {
    return consistent_state(Vector::Zero(sys.n_state()), w0);
  }

  Vector advance(const Vector& x, const Vector& w_prev, const Vector& w_next) const {
    Vector rhs = rhs_state * x + input_prev * w_prev + input_next * w_next;
    return lhs_lu.solve(rhs);
  }
};

inline DiscreteModel discretize(const LinearSystem& sys, double t_s, double horizon_s) {
  if (!(t_s > 0.0)) throw ValidationError("t_s must be positive");
  if (!(horizon_s > 0.0)) throw ValidationError("horizon must be positive");
  DiscreteModel dm;
  dm.sys = sys;
  dm.step = t_s;
  dm.horizon_steps = steps_for(horizon_s, t_s, "horizon");

  const int n = sys.n_state();
  const int N = sys.n_bus;
  const double h2 = 0.5 * t_s;
  dm.lhs = Matrix::Zero(n, n);
  dm.rhs_state = Matrix::Zero(n, n);
  dm.input_prev = Matrix::Zero(n, N);
  dm.input_next = Matrix::Zero(n, N);
  dm.init_lhs = Matrix::Zero(n, n);
  for (int r : sys.diff_rows) {
    dm.lhs.row(r) = -h2 * sys.A.row(r);
    dm.lhs(r, r) += 1.0;
    dm.rhs_state.row(r) = h2 * sys.A.row(r);
    dm.rhs_state(r, r) += 1.0;
    dm.input_prev.row(r) = h2 * sys.B.row(r);
    dm.input_next.row(r) = h2 * sys.B.row(r);
    dm.init_lhs(r, r) = 1.0;
  }
  for (std::size_t a = 0; a < sys.alg_rows.size(); ++a) {
    const int r = sys.alg_rows[a];
    dm.lhs.row(r) = sys.alg_lhs.row(static_cast<Eigen::Index>(a));
    dm.input_next.row(r) = sys.alg_input.row(static_cast<Eigen::Index>(a));
    dm.init_lhs.row(r) = sys.alg_lhs.row(static_cast<Eigen::Index>(a));
  }
  dm.lhs_lu.compute(dm.lhs);
  dm.init_lu.compute(dm.init_lhs);
  auto check = [](const Eigen::PartialPivLU<Matrix>& lu, const char* what) {
    const Vector d = lu.matrixLU().diagonal().cwiseAbs();
    if (d.size() > 0 && !(d.minCoeff() > 1e-13 * std::max(1.0, d.maxCoeff())))
      throw NumericalError(std::string(what) + " matrix is singular (invalid case?)");
  };
  check(dm.lhs_lu, "trapezoidal step");
  check(dm.init_lu, "initialisation");
  return dm;
}

struct SteadyState {
  Vector theta;          // angle profile, zero mean
  Vector omega;          // uniform
  double omega_common = 0.0;
};

/// Frequency and angle profile once all derivatives of omega and x_gov vanish.
/// Angles keep drifting at w_base * omega_ss; theta is returned with zero mean.
inline SteadyState steady_state(const LinearSystem& sys, const Vector& u, const Vector& d) {
  const double stiffness = sys.stiffness();
  if (!(stiffness > 0.0))
    throw ValidationError("steady state undefined: sum of damping and governor gain is zero");
  SteadyState ss;
  ss.omega_common = (u.sum() + d.sum()) / stiffness;
  ss.omega = Vector::Constant(sys.n_bus, ss.omega_common);
  Vector p = u + d;
  for (int g = 0; g < sys.n_gen; ++g)
    p[sys.gen_buses[g]] -= (sys.damping[g] + sys.gov_gain[g]) * ss.omega_common;
  // L is singular along 1; solve with the mean pinned to zero.
  const int N = sys.n_bus;
  Matrix aug = Matrix::Zero(N + 1, N + 1);
  aug.topLeftCorner(N, N) = sys.L;
  aug.block(0, N, N, 1).setOnes();
  aug.block(N, 0, 1, N).setOnes();
  Vector rhs = Vector::Zero(N + 1);
  rhs.head(N) = p;
  Vector sol = aug.fullPivLu().solve(rhs);
  ss.theta = sol.head(N);
  return ss;
}

/// Dense text dump, row-major, scientific notation. One header line per
/// matrix: "# name rows cols".
inline void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "# " << name << " " << m.rows() << " " << m.cols() << "\n";
  out << std::scientific << std::setprecision(12);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << m(i, j);
    }
    out << "\n";
  }
  out << std::defaultfloat;
}

inline void dump_system(std::ostream& out, const LinearSystem& s) {
  write_matrix(out, "A", s.A);
  write_matrix(out, "B", s.B);
  write_matrix(out, "G", s.G);
  write_matrix(out, "L", s.L);
}

}  // namespace ufls

#endif  // UFLS_DAE_HPP
