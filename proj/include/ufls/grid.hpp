#ifndef UFLS_GRID_HPP
#define UFLS_GRID_HPP

// Static network description: buses, lines, machines, and the graph
// matrices (incidence, weighted Laplacian, bus selection) built from them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ufls/error.hpp"

namespace ufls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class BusKind { Generator, Load, Passive };

inline std::string to_string(BusKind kind) {
  switch (kind) {
    case BusKind::Generator: return "generator";
    case BusKind::Load: return "load";
    case BusKind::Passive: return "passive";
  }
  return "?";
}

struct Bus {
  int id = 0;     // dense index 0..N-1
  int label = 0;  // id as written in the case file
  BusKind kind = BusKind::Passive;
  double base_load = 0.0;  // pu
  double shed_cap = 0.0;   // pu, <= base_load
  double beta = 0.0;       // DER-to-load ratio

  bool participates() const { return kind != BusKind::Generator && shed_cap > 0.0; }

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Line {
  int from = 0;
  int to = 0;
  double susceptance = 0.0;  // pu, > 0

  friend bool operator==(const Line&, const Line&) = default;
};

struct Machine {
  int bus = 0;
  double inertia = 0.0;         // M = 2H, pu*s
  double damping = 0.0;         // D, pu
  double gov_gain = 0.0;        // K_gov, pu
  double gov_time_const = 0.0;  // T_gov, s
  double p_gen = 0.0;           // nominal dispatch, pu (used to size disturbances)

  friend bool operator==(const Machine&, const Machine&) = default;
};

/// Immutable after construction through parse_case()/make_case().
struct GridCase {
  std::string name;
  double mva_base = 100.0;
  double f_nominal_hz = 60.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;        // from < to, merged parallels
  std::vector<Machine> machines;  // sorted by bus

  double omega_base() const { return 2.0 * std::numbers::pi * f_nominal_hz; }
  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_lines() const { return static_cast<int>(lines.size()); }
  int num_machines() const { return static_cast<int>(machines.size()); }

  double total_load() const {
    double s = 0.0;
    for (const auto& b : buses) s += b.base_load;
    return s;
  }
  /// Load net of behind-the-meter DER output.
  double net_load() const {
    double s = 0.0;
    for (const auto& b : buses) s += b.base_load * (b.kind == BusKind::Generator ? 1.0 : 1.0 - b.beta);
    return s;
  }
  double total_shed_cap() const {
    double s = 0.0;
    for (const auto& b : buses) s += b.shed_cap;
    return s;
  }
  double total_generation() const {
    double s = 0.0;
    for (const auto& m : machines) s += m.p_gen;
    return s;
  }

  std::vector<int> generator_buses() const {
    std::vector<int> out;
    for (const auto& b : buses)
      if (b.kind == BusKind::Generator) out.push_back(b.id);
    return out;
  }
  /// Non-generator buses (load and passive), ascending.
  std::vector<int> load_buses() const {
    std::vector<int> out;
    for (const auto& b : buses)
      if (b.kind != BusKind::Generator) out.push_back(b.id);
    return out;
  }
  /// Load buses with nonzero shed capacity, ascending.
  std::vector<int> participating_buses() const {
    std::vector<int> out;
    for (const auto& b : buses)
      if (b.participates()) out.push_back(b.id);
    return out;
  }
  Vector betas() const {
    Vector out = Vector::Zero(num_buses());
    for (const auto& b : buses)
      if (b.kind != BusKind::Generator) out[b.id] = b.beta;
    return out;
  }
  std::optional<int> find_label(int label) const {
    for (const auto& b : buses)
      if (b.label == label) return b.id;
    return std::nullopt;
  }

  friend bool operator==(const GridCase&, const GridCase&) = default;
};

namespace detail {

inline bool graph_connected(int n, const std::vector<Line>& lines) {
  if (n == 0) return false;
  std::vector<std::vector<int>> adj(n);
  for (const auto& l : lines) {
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        q.push(w);
      }
    }
  }
  return count == n;
}

inline BusKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "generator") return BusKind::Generator;
  if (s == "load") return BusKind::Load;
  if (s == "passive") return BusKind::Passive;
  throw ValidationError(where + ".kind: expected generator|load|passive, got '" + s + "'");
}

template <typename T>
T require(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

template <typename T>
T optional_field(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

}  // namespace detail

/// Checks every GridCase invariant; throws ValidationError naming the first
/// violation. Expects dense ids and canonical (from < to, merged) lines.
inline void validate(const GridCase& gc) {
  const int n = gc.num_buses();
  if (n == 0) throw ValidationError("buses: case has no buses");
  if (!(gc.f_nominal_hz > 0.0)) throw ValidationError("f_nominal_hz: must be positive");
  if (!(gc.mva_base > 0.0)) throw ValidationError("mva_base: must be positive");
  for (int i = 0; i < n; ++i) {
    const Bus& b = gc.buses[i];
    const std::string where = "buses[" + std::to_string(b.label) + "]";
    if (b.id != i) throw ValidationError(where + ": ids are not dense");
    if (!(b.base_load >= 0.0)) throw ValidationError(where + ".load_pu: must be >= 0");
    if (!(b.shed_cap >= 0.0)) throw ValidationError(where + ".shed_cap_pu: must be >= 0");
    if (b.shed_cap > b.base_load + 1e-12)
      throw ValidationError(where + ".shed_cap_pu: exceeds load_pu");
    if (!(b.beta >= 0.0)) throw ValidationError(where + ".beta: must be >= 0");
    if (b.kind == BusKind::Generator && b.shed_cap > 0.0)
      throw ValidationError(where + ".shed_cap_pu: generator buses do not take part in UFLS");
    if (b.kind == BusKind::Passive && (b.base_load > 0.0 || b.shed_cap > 0.0))
      throw ValidationError(where + ": passive bus carries load");
  }
  for (const auto& l : gc.lines) {
    if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n)
      throw ValidationError("lines: bus index out of range");
    if (l.from == l.to)
      throw ValidationError("lines: self loop at bus " + std::to_string(gc.buses[l.from].label));
    if (!(l.susceptance > 0.0))
      throw ValidationError("lines: susceptance must be positive");
  }
  std::vector<int> machines_at(n, 0);
  for (const auto& m : gc.machines) {
    if (m.bus < 0 || m.bus >= n) throw ValidationError("machines: bus index out of range");
    const std::string where = "machines[bus " + std::to_string(gc.buses[m.bus].label) + "]";
    if (gc.buses[m.bus].kind != BusKind::Generator)
      throw ValidationError(where + ": machine on non-generator bus");
    if (!(m.inertia > 0.0)) throw ValidationError(where + ".inertia: must be positive");
    if (!(m.gov_time_const > 0.0))
      throw ValidationError(where + ".gov_time_const: must be positive");
    if (!(m.damping >= 0.0)) throw ValidationError(where + ".damping: must be >= 0");
    if (!(m.gov_gain >= 0.0)) throw ValidationError(where + ".gov_gain: must be >= 0");
    if (!(m.p_gen >= 0.0)) throw ValidationError(where + ".p_gen_pu: must be >= 0");
    ++machines_at[m.bus];
  }
  for (const auto& b : gc.buses) {
    if (b.kind == BusKind::Generator && machines_at[b.id] != 1)
      throw ValidationError("buses[" + std::to_string(b.label) +
                            "]: generator bus needs exactly one machine");
  }
  if (!detail::graph_connected(n, gc.lines)) throw ValidationError("lines: graph is disconnected");
}

/// Builds a case from loosely ordered parts: re-indexes buses densely by
/// ascending label, canonicalises and merges parallel circuits, sorts
/// machines by bus, then validates.
///
/// Lines are keyed by (unordered pair, circuit). Two entries with the same
/// key are a duplicate; entries with distinct circuits are summed.
struct RawLine {
  int from_label = 0;
  int to_label = 0;
  double susceptance = 0.0;
  int circuit = 1;
};

struct RawMachine {
  int bus_label = 0;
  Machine params;
};

inline GridCase make_case(std::string name, double mva_base, double f_nominal_hz,
                          std::vector<Bus> buses, const std::vector<RawLine>& raw_lines,
                          const std::vector<RawMachine>& raw_machines) {
  GridCase gc;
  gc.name = std::move(name);
  gc.mva_base = mva_base;
  gc.f_nominal_hz = f_nominal_hz;
  std::sort(buses.begin(), buses.end(),
            [](const Bus& a, const Bus& b) { return a.label < b.label; });
  for (std::size_t i = 1; i < buses.size(); ++i)
    if (buses[i].label == buses[i - 1].label)
      throw ValidationError("buses: duplicate id " + std::to_string(buses[i].label));
  std::map<int, int> index;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    buses[i].id = static_cast<int>(i);
    index[buses[i].label] = static_cast<int>(i);
  }
  gc.buses = std::move(buses);

  auto lookup = [&](int label, const std::string& where) {
    auto it = index.find(label);
    if (it == index.end())
      throw ValidationError(where + ": unknown bus id " + std::to_string(label));
    return it->second;
  };

  std::map<std::pair<int, int>, double> merged;
  std::map<std::tuple<int, int, int>, bool> seen;
  for (std::size_t e = 0; e < raw_lines.size(); ++e) {
    const auto& rl = raw_lines[e];
    const std::string where = "lines[" + std::to_string(e) + "]";
    int a = lookup(rl.from_label, where + ".from");
    int b = lookup(rl.to_label, where + ".to");
    if (a == b) throw ValidationError(where + ": from == to");
    if (!(rl.susceptance > 0.0)) throw ValidationError(where + ".susceptance: must be positive");
    auto key = std::minmax(a, b);
    auto ckey = std::make_tuple(key.first, key.second, rl.circuit);
    if (seen.count(ckey))
      throw ValidationError(where + ": duplicate line " + std::to_string(rl.from_label) + "-" +
                            std::to_string(rl.to_label));
    seen[ckey] = true;
    merged[{key.first, key.second}] += rl.susceptance;
  }
  for (const auto& [k, bsum] : merged) gc.lines.push_back({k.first, k.second, bsum});

  for (std::size_t g = 0; g < raw_machines.size(); ++g) {
    Machine m = raw_machines[g].params;
    m.bus = lookup(raw_machines[g].bus_label, "machines[" + std::to_string(g) + "].bus");
    gc.machines.push_back(m);
  }
  std::sort(gc.machines.begin(), gc.machines.end(),
            [](const Machine& a, const Machine& b) { return a.bus < b.bus; });
  validate(gc);
  return gc;
}

inline GridCase parse_case(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("case: top level must be an object");
  const double mva = detail::require<double>(j, "mva_base", "case");
  const double fnom = detail::require<double>(j, "f_nominal_hz", "case");
  const std::string name = detail::optional_field<std::string>(j, "name", "", "case");
  if (!j.contains("buses") || !j["buses"].is_array())
    throw ValidationError("case: missing field 'buses' (array)");
  if (!j.contains("lines") || !j["lines"].is_array())
    throw ValidationError("case: missing field 'lines' (array)");
  if (!j.contains("machines") || !j["machines"].is_array())
    throw ValidationError("case: missing field 'machines' (array)");

  std::vector<Bus> buses;
  for (std::size_t i = 0; i < j["buses"].size(); ++i) {
    const auto& jb = j["buses"][i];
    const std::string where = "buses[" + std::to_string(i) + "]";
    Bus b;
    b.label = detail::require<int>(jb, "id", where);
    b.kind = detail::parse_kind(detail::require<std::string>(jb, "kind", where), where);
    b.base_load = detail::optional_field<double>(jb, "load_pu", 0.0, where);
    b.shed_cap = detail::optional_field<double>(jb, "shed_cap_pu", 0.0, where);
    b.beta = detail::optional_field<double>(jb, "beta", 0.0, where);
    buses.push_back(b);
  }
  std::vector<RawLine> lines;
  for (std::size_t e = 0; e < j["lines"].size(); ++e) {
    const auto& jl = j["lines"][e];
    const std::string where = "lines[" + std::to_string(e) + "]";
    lines.push_back({detail::require<int>(jl, "from", where), detail::require<int>(jl, "to", where),
                     detail::require<double>(jl, "susceptance", where),
                     detail::optional_field<int>(jl, "circuit", 1, where)});
  }
  std::vector<RawMachine> machines;
  for (std::size_t g = 0; g < j["machines"].size(); ++g) {
    const auto& jm = j["machines"][g];
    const std::string where = "machines[" + std::to_string(g) + "]";
    RawMachine rm;
    rm.bus_label = detail::require<int>(jm, "bus", where);
    rm.params.inertia = detail::require<double>(jm, "inertia", where);
    rm.params.damping = detail::require<double>(jm, "damping", where);
    rm.params.gov_gain = detail::require<double>(jm, "gov_gain", where);
    rm.params.gov_time_const = detail::require<double>(jm, "gov_time_const", where);
    rm.params.p_gen = detail::optional_field<double>(jm, "p_gen_pu", 0.0, where);
    machines.push_back(rm);
  }
  return make_case(name, mva, fnom, std::move(buses), lines, machines);
}

inline GridCase parse_case(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("case: malformed JSON: ") + e.what());
  }
  return parse_case(j);
}

inline GridCase parse_case_string(const std::string& text) {
  std::istringstream in(text);
  return parse_case(in);
}

/// Canonical JSON form; keys sorted, lines with from < to, one entry per
/// bus pair. parse_case(to_json(c)) == c.
inline nlohmann::json to_json(const GridCase& gc) {
  nlohmann::json j;
  j["name"] = gc.name;
  j["mva_base"] = gc.mva_base;
  j["f_nominal_hz"] = gc.f_nominal_hz;
  j["buses"] = nlohmann::json::array();
  for (const auto& b : gc.buses) {
    j["buses"].push_back({{"id", b.label},
                          {"kind", to_string(b.kind)},
                          {"load_pu", b.base_load},
                          {"shed_cap_pu", b.shed_cap},
                          {"beta", b.beta}});
  }
  j["lines"] = nlohmann::json::array();
  for (const auto& l : gc.lines) {
    j["lines"].push_back({{"from", gc.buses[l.from].label},
                          {"to", gc.buses[l.to].label},
                          {"susceptance", l.susceptance}});
  }
  j["machines"] = nlohmann::json::array();
  for (const auto& m : gc.machines) {
    j["machines"].push_back({{"bus", gc.buses[m.bus].label},
                             {"inertia", m.inertia},
                             {"damping", m.damping},
                             {"gov_gain", m.gov_gain},
                             {"gov_time_const", m.gov_time_const},
                             {"p_gen_pu", m.p_gen}});
  }
  return j;
}

inline std::string serialize_case(const GridCase& gc) { return to_json(gc).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Graph matrices

/// C(j, e) = +1 if bus j is the source of line e, -1 if the sink.
inline Matrix incidence_matrix(const GridCase& gc) {
  Matrix c = Matrix::Zero(gc.num_buses(), gc.num_lines());
  for (int e = 0; e < gc.num_lines(); ++e) {
    c(gc.lines[e].from, e) = 1.0;
    c(gc.lines[e].to, e) = -1.0;
  }
  return c;
}

/// L = C diag(B) C^T, assembled by per-line stamps.
inline Matrix laplacian(const GridCase& gc) {
  const int n = gc.num_buses();
  Matrix l = Matrix::Zero(n, n);
  for (const auto& line : gc.lines) {
    l(line.from, line.from) += line.susceptance;
    l(line.to, line.to) += line.susceptance;
    l(line.from, line.to) -= line.susceptance;
    l(line.to, line.from) -= line.susceptance;
  }
  return l;
}

struct SelectionMatrices {
  Matrix gen;   // |B_G| x N
  Matrix load;  // |B_L| x N
};

inline SelectionMatrices selection_matrices(const GridCase& gc) {
  const auto g = gc.generator_buses();
  const auto l = gc.load_buses();
  SelectionMatrices s{Matrix::Zero(static_cast<Eigen::Index>(g.size()), gc.num_buses()),
                      Matrix::Zero(static_cast<Eigen::Index>(l.size()), gc.num_buses())};
  for (std::size_t r = 0; r < g.size(); ++r) s.gen(static_cast<Eigen::Index>(r), g[r]) = 1.0;
  for (std::size_t r = 0; r < l.size(); ++r) s.load(static_cast<Eigen::Index>(r), l[r]) = 1.0;
  return s;
}

/// DC line flows P_ij = B_ij (theta_i - theta_j), one entry per line.
inline Vector line_flows(const GridCase& gc, const Vector& theta) {
  Vector p(gc.num_lines());
  for (int e = 0; e < gc.num_lines(); ++e) {
    const auto& l = gc.lines[e];
    p[e] = l.susceptance * (theta[l.from] - theta[l.to]);
  }
  return p;
}

}  // namespace ufls

#endif  // UFLS_GRID_HPP
