#ifndef UFLS_TESTS_SUPPORT_HPP
#define UFLS_TESTS_SUPPORT_HPP

// Shared fixtures and independent reference computations for the tests.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "ufls/dae.hpp"
#include "ufls/grid.hpp"
#include "ufls/scheme.hpp"
#include "ufls/simulator.hpp"

namespace ufls::test {

inline std::string data_path(const std::string& rel) { return std::string(UFLS_TEST_DATA) + "/" + rel; }

inline GridCase load_case(const std::string& name) {
  std::ifstream in(data_path("cases/" + name + ".json"));
  if (!in) throw std::runtime_error("missing bundled case " + name);
  return parse_case(in);
}

inline std::vector<std::string> bundled_cases() { return {"toy2", "ring3", "wecc9", "ieee39"}; }

/// Random connected case with 2..5 buses: one or two machines, the rest
/// load buses. Line susceptances and machine data are drawn from ranges
/// that keep the response well damped.
inline GridCase random_toy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const int n = 2 + static_cast<int>(rng() % 4);
  const int n_gen = n == 2 ? 1 : 1 + static_cast<int>(rng() % 2);
  nlohmann::json j;
  j["name"] = "toy" + std::to_string(seed);
  j["mva_base"] = 100.0;
  j["f_nominal_hz"] = 60.0;
  double load = 0.0;
  for (int b = 1; b <= n; ++b) {
    if (b <= n_gen) {
      j["buses"].push_back({{"id", b}, {"kind", "generator"}});
    } else {
      const double p = uni(0.3, 1.2);
      load += p;
      j["buses"].push_back({{"id", b}, {"kind", "load"}, {"load_pu", p}, {"shed_cap_pu", uni(0.3, 0.8) * p},
                            {"beta", 0.0}});
    }
  }
  int last_parent = 0;
  for (int b = 2; b <= n; ++b) {
    const int a = 1 + static_cast<int>(rng() % (b - 1));
    j["lines"].push_back({{"from", a}, {"to", b}, {"susceptance", uni(5.0, 20.0)}});
    last_parent = a;
  }
  // one extra line closes a loop when the tree leaves room for it
  if (n >= 4 && last_parent != 1) j["lines"].push_back({{"from", 1}, {"to", n}, {"susceptance", uni(5.0, 20.0)}});
  for (int g = 1; g <= n_gen; ++g) {
    const double m = uni(6.0, 14.0);
    j["machines"].push_back({{"bus", g},
                             {"inertia", m},
                             {"damping", uni(0.5, 1.0) * m},
                             {"gov_gain", uni(8.0, 16.0) * load / n_gen},
                             {"gov_time_const", uni(1.0, 4.0)},
                             {"p_gen_pu", load / n_gen}});
  }
  return parse_case(j);
}

/// Reference ODE for the same physics, built from the case data alone: the
/// load-bus angles are eliminated (Kron reduction) and the machine states
/// are integrated with classical RK4. Returns bus frequencies N x (K+1)
/// sampled every `dt * substeps`.
inline Matrix reference_frequencies(const GridCase& gc, const Vector& injection, double dt, int substeps,
                                    int samples) {
  const int N = gc.num_buses();
  Matrix L = Matrix::Zero(N, N);
  for (const auto& ln : gc.lines) {
    L(ln.from, ln.from) += ln.susceptance;
    L(ln.to, ln.to) += ln.susceptance;
    L(ln.from, ln.to) -= ln.susceptance;
    L(ln.to, ln.from) -= ln.susceptance;
  }
  std::vector<int> gen, load;
  for (const auto& b : gc.buses) (b.kind == BusKind::Generator ? gen : load).push_back(b.id);
  const int G = static_cast<int>(gen.size());
  const int nl = static_cast<int>(load.size());
  auto sub = [&](const std::vector<int>& r, const std::vector<int>& c) {
    Matrix m(r.size(), c.size());
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t k = 0; k < c.size(); ++k) m(i, k) = L(r[i], c[k]);
    return m;
  };
  const Matrix Lgg = sub(gen, gen), Lgl = sub(gen, load), Llg = sub(load, gen), Lll = sub(load, load);
  Matrix Lll_inv = nl > 0 ? Matrix(Lll.inverse()) : Matrix::Zero(0, 0);
  const Matrix Lred = nl > 0 ? Matrix(Lgg - Lgl * Lll_inv * Llg) : Lgg;
  Vector pg(G), pl(nl);
  for (int g = 0; g < G; ++g) pg[g] = injection[gen[g]];
  for (int l = 0; l < nl; ++l) pl[l] = injection[load[l]];
  // machine power balance with load injections carried through the network
  const Vector pin = nl > 0 ? Vector(pg + Lgl * Lll_inv * pl) : pg;
  // load-bus frequency follows the machine frequencies through the network
  const Matrix wmap = nl > 0 ? Matrix(-Lll_inv * Llg) : Matrix::Zero(0, G);

  Vector M(G), D(G), Kg(G), T(G);
  for (int g = 0; g < G; ++g) {
    const auto& m = gc.machines[g];
    M[g] = m.inertia;
    D[g] = m.damping;
    Kg[g] = m.gov_gain;
    T[g] = m.gov_time_const;
  }
  const double wb = gc.omega_base();
  // state: delta (G), w (G), xg (G)
  auto f = [&](const Vector& s) {
    Vector ds(3 * G);
    const Vector d = s.head(G), w = s.segment(G, G), xg = s.tail(G);
    ds.head(G) = wb * w;
    const Vector pe = Lred * d;
    for (int g = 0; g < G; ++g) {
      ds[G + g] = (-pe[g] - D[g] * w[g] - Kg[g] * xg[g] + pin[g]) / M[g];
      ds[2 * G + g] = (w[g] - xg[g]) / T[g];
    }
    return ds;
  };
  Vector s = Vector::Zero(3 * G);
  // the pre-disturbance operating point is at rest; the step acts from t = 0+
  Matrix out = Matrix::Zero(N, samples);
  auto record = [&](int k) {
    const Vector w = s.segment(G, G);
    for (int g = 0; g < G; ++g) out(gen[g], k) = w[g];
    if (nl > 0) {
      const Vector wl = wmap * w;
      for (int l = 0; l < nl; ++l) out(load[l], k) = wl[l];
    }
  };
  record(0);
  for (int k = 1; k < samples; ++k) {
    for (int q = 0; q < substeps; ++q) {
      const Vector k1 = f(s);
      const Vector k2 = f(s + 0.5 * dt * k1);
      const Vector k3 = f(s + 0.5 * dt * k2);
      const Vector k4 = f(s + dt * k3);
      s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    record(k);
  }
  return out;
}

/// Largest eigenvalue magnitude of the Kron-reduced machine dynamics (rad/s).
inline double fastest_mode(const GridCase& gc) {
  const int N = gc.num_buses();
  Matrix L = Matrix::Zero(N, N);
  for (const auto& ln : gc.lines) {
    L(ln.from, ln.from) += ln.susceptance;
    L(ln.to, ln.to) += ln.susceptance;
    L(ln.from, ln.to) -= ln.susceptance;
    L(ln.to, ln.from) -= ln.susceptance;
  }
  std::vector<int> gen, load;
  for (const auto& b : gc.buses) (b.kind == BusKind::Generator ? gen : load).push_back(b.id);
  const int G = static_cast<int>(gen.size());
  Matrix Lred(G, G);
  {
    Matrix Lgg(G, G), Lgl(G, load.size()), Lll(load.size(), load.size());
    for (int i = 0; i < G; ++i) {
      for (int k = 0; k < G; ++k) Lgg(i, k) = L(gen[i], gen[k]);
      for (std::size_t k = 0; k < load.size(); ++k) Lgl(i, k) = L(gen[i], load[k]);
    }
    for (std::size_t i = 0; i < load.size(); ++i)
      for (std::size_t k = 0; k < load.size(); ++k) Lll(i, k) = L(load[i], load[k]);
    Lred = load.empty() ? Lgg : Matrix(Lgg - Lgl * Lll.inverse() * Lgl.transpose());
  }
  Matrix A = Matrix::Zero(3 * G, 3 * G);
  for (int g = 0; g < G; ++g) {
    const auto& m = gc.machines[g];
    A(g, G + g) = gc.omega_base();
    for (int k = 0; k < G; ++k) A(G + g, k) = -Lred(g, k) / m.inertia;
    A(G + g, G + g) = -m.damping / m.inertia;
    A(G + g, 2 * G + g) = -m.gov_gain / m.inertia;
    A(2 * G + g, G + g) = 1.0 / m.gov_time_const;
    A(2 * G + g, 2 * G + g) = -1.0 / m.gov_time_const;
  }
  return Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

/// Error of the trapezoidal solution at step `ts` and at `ts / 2` against a
/// `ts / 16` reference, both as max-norm over all bus frequencies.
inline double halving_ratio(const GridCase& gc, const Disturbance& dist, double ts, double horizon) {
  auto run = [&](double step) {
    const DiscreteModel dm = discretize(build_dae(gc), step, horizon);
    return simulate_open_loop(dm, Matrix::Zero(gc.num_buses(), dm.samples()), dist).omega;
  };
  const Matrix ref = run(ts / 16);
  auto err = [&](const Matrix& w, int stride) {
    double e = 0.0;
    for (int k = 0; k < w.cols(); ++k) e = std::max(e, (w.col(k) - ref.col(k * stride)).cwiseAbs().maxCoeff());
    return e;
  };
  return err(run(ts), 16) / err(run(ts / 2), 8);
}

inline Disturbance loss_at(const GridCase& gc, int bus_label, double pu) {
  Disturbance d;
  d.step_pu = Vector::Zero(gc.num_buses());
  d.step_pu[*gc.find_label(bus_label)] = -pu;
  d.label = "loss_" + std::to_string(bus_label);
  return d;
}

}  // namespace ufls::test

#endif  // UFLS_TESTS_SUPPORT_HPP
