#ifndef UFLS_MILP_MODEL_HPP
#define UFLS_MILP_MODEL_HPP

// Solver-agnostic MILP container (minimisation) with LP-text and free-MPS
// writers and a minimal free-MPS reader.

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ufls/error.hpp"

namespace ufls {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarType { Continuous, Binary };
enum class Sense { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string name;
  VarType type = VarType::Continuous;
  double lb = 0.0;
  double ub = kInf;
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

class MilpModel {
 public:
  int add_variable(std::string name, VarType type, double lb, double ub) {
    if (type == VarType::Binary) {
      lb = std::max(lb, 0.0);
      ub = std::min(ub, 1.0);
    }
    vars_.push_back({std::move(name), type, lb, ub});
    objective_.push_back(0.0);
    return static_cast<int>(vars_.size()) - 1;
  }

  int add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs) {
    for (const auto& t : terms)
      if (t.var < 0 || t.var >= num_vars()) throw ValidationError("constraint " + name + ": bad variable index");
    rows_.push_back({std::move(name), std::move(terms), sense, rhs});
    return static_cast<int>(rows_.size()) - 1;
  }

  void set_objective(int var, double coef) { objective_.at(var) = coef; }
  void add_objective(int var, double coef) { objective_.at(var) += coef; }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }
  int num_binaries() const {
    int c = 0;
    for (const auto& v : vars_) c += v.type == VarType::Binary;
    return c;
  }
  std::size_t num_nonzeros() const {
    std::size_t c = 0;
    for (const auto& r : rows_) c += r.terms.size();
    return c;
  }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const std::vector<double>& objective() const { return objective_; }
  Variable& variable(int i) { return vars_.at(i); }
  const Variable& variable(int i) const { return vars_.at(i); }

  double objective_value(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < objective_.size(); ++j) s += objective_[j] * x.at(j);
    return s;
  }

  /// Largest bound, row or integrality violation of a candidate point.
  double max_violation(const std::vector<double>& x) const { return worst_violation(x).second; }

  /// Name of the most violated bound or row, and the violation.
  std::pair<std::string, double> worst_violation(const std::vector<double>& x) const {
    std::pair<std::string, double> worst{"", 0.0};
    auto note = [&](const std::string& name, double v) {
      if (v > worst.second) worst = {name, v};
    };
    for (int j = 0; j < num_vars(); ++j) {
      const auto& v = vars_[j];
      note(v.name, std::max(v.lb - x[j], x[j] - v.ub));
      if (v.type == VarType::Binary) note(v.name, std::abs(x[j] - std::round(x[j])));
    }
    for (const auto& r : rows_) {
      double a = 0.0;
      for (const auto& t : r.terms) a += t.coef * x[t.var];
      switch (r.sense) {
        case Sense::LessEqual: note(r.name, a - r.rhs); break;
        case Sense::GreaterEqual: note(r.name, r.rhs - a); break;
        case Sense::Equal: note(r.name, std::abs(a - r.rhs)); break;
      }
    }
    return worst;
  }

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::vector<double> objective_;
};

namespace detail {

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// CPLEX LP text. Columns appear in model order; rows in model order.
inline void write_lp(std::ostream& out, const MilpModel& m) {
  using detail::fmt_num;
  const auto& vars = m.variables();
  out << "\\ ufls model: " << m.num_vars() << " columns, " << m.num_constraints() << " rows\n";
  out << "Minimize\n obj:";
  int on_line = 0;
  bool any = false;
  for (int j = 0; j < m.num_vars(); ++j) {
    const double c = m.objective()[j];
    if (c == 0.0) continue;
    out << (c < 0 ? " - " : " + ") << fmt_num(std::abs(c)) << " " << vars[j].name;
    any = true;
    if (++on_line == 6) {
      out << "\n ";
      on_line = 0;
    }
  }
  if (!any) out << " 0 " << (m.num_vars() ? vars[0].name : std::string("__none"));
  out << "\nSubject To\n";
  for (const auto& r : m.constraints()) {
    out << " " << r.name << ":";
    on_line = 0;
    if (r.terms.empty()) out << " 0 " << (m.num_vars() ? vars[0].name : std::string("__none"));
    for (const auto& t : r.terms) {
      out << (t.coef < 0 ? " - " : " + ") << fmt_num(std::abs(t.coef)) << " " << vars[t.var].name;
      if (++on_line == 6) {
        out << "\n  ";
        on_line = 0;
      }
    }
    const char* op = r.sense == Sense::LessEqual ? "<=" : r.sense == Sense::Equal ? "=" : ">=";
    out << " " << op << " " << fmt_num(r.rhs) << "\n";
  }
  out << "Bounds\n";
  for (const auto& v : vars) {
    if (v.type == VarType::Binary) continue;
    const bool lo_inf = std::isinf(v.lb), up_inf = std::isinf(v.ub);
    if (lo_inf && up_inf) {
      out << " " << v.name << " free\n";
    } else if (v.lb == v.ub) {
      out << " " << v.name << " = " << fmt_num(v.lb) << "\n";
    } else {
      out << " " << (lo_inf ? std::string("-inf") : fmt_num(v.lb)) << " <= " << v.name << " <= "
          << (up_inf ? std::string("+inf") : fmt_num(v.ub)) << "\n";
    }
  }
  if (m.num_binaries() > 0) {
    out << "Binaries\n";
    on_line = 0;
    for (const auto& v : vars) {
      if (v.type != VarType::Binary) continue;
      out << " " << v.name;
      if (++on_line == 10) {
        out << "\n";
        on_line = 0;
      }
    }
    if (on_line) out << "\n";
  }
  out << "End\n";
}

/// Free-format MPS. Binaries sit between INTORG/INTEND markers and carry
/// explicit 0/1 bounds. The objective row is named "obj".
inline void write_mps(std::ostream& out, const MilpModel& m, const std::string& name = "UFLS") {
  using detail::fmt_num;
  const auto& vars = m.variables();
  const auto& rows = m.constraints();
  out << "NAME " << name << "\n";
  out << "ROWS\n N obj\n";
  for (const auto& r : rows) {
    const char* t = r.sense == Sense::LessEqual ? "L" : r.sense == Sense::Equal ? "E" : "G";
    out << " " << t << " " << r.name << "\n";
  }
  // column-wise transpose of the row store
  std::vector<std::vector<std::pair<int, double>>> cols(vars.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& t : rows[i].terms) cols[t.var].push_back({static_cast<int>(i), t.coef});
  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const bool is_int = vars[j].type == VarType::Binary;
    if (is_int != in_int) {
      out << " MARKER" << marker++ << " 'MARKER' " << (is_int ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = is_int;
    }
    bool wrote = false;
    if (m.objective()[j] != 0.0) {
      out << " " << vars[j].name << " obj " << fmt_num(m.objective()[j]) << "\n";
      wrote = true;
    }
    for (const auto& [row, coef] : cols[j]) {
      out << " " << vars[j].name << " " << rows[row].name << " " << fmt_num(coef) << "\n";
      wrote = true;
    }
    if (!wrote) out << " " << vars[j].name << " obj 0\n";
  }
  if (in_int) out << " MARKER" << marker++ << " 'MARKER' 'INTEND'\n";
  out << "RHS\n";
  for (const auto& r : rows)
    if (r.rhs != 0.0) out << " RHS " << r.name << " " << fmt_num(r.rhs) << "\n";
  out << "BOUNDS\n";
  for (const auto& v : vars) {
    const bool lo_inf = std::isinf(v.lb), up_inf = std::isinf(v.ub);
    if (v.type == VarType::Binary) {
      if (v.lb == 0.0 && v.ub == 1.0) {
        out << " BV BND " << v.name << "\n";
      } else {
        out << " LO BND " << v.name << " " << fmt_num(v.lb) << "\n";
        out << " UP BND " << v.name << " " << fmt_num(v.ub) << "\n";
      }
      continue;
    }
    if (lo_inf && up_inf) {
      out << " FR BND " << v.name << "\n";
    } else if (v.lb == v.ub) {
      out << " FX BND " << v.name << " " << fmt_num(v.lb) << "\n";
    } else {
      if (lo_inf) out << " MI BND " << v.name << "\n";
      else if (v.lb != 0.0) out << " LO BND " << v.name << " " << fmt_num(v.lb) << "\n";
      if (!up_inf) out << " UP BND " << v.name << " " << fmt_num(v.ub) << "\n";
    }
  }
  out << "ENDATA\n";
}

/// Reads the free-MPS subset produced by write_mps (plus RANGES-free files
/// from other writers that stick to N/L/E/G rows and LO/UP/FX/FR/MI/BV/PL
/// bounds).
inline MilpModel read_mps(std::istream& in) {
  MilpModel m;
  std::string line, section, obj_row;
  std::map<std::string, int> row_index, col_index;
  std::vector<Constraint> rows;
  struct Col {
    std::string name;
    bool integer;
    double obj = 0.0;
    std::vector<std::pair<int, double>> entries;
    double lb = 0.0, ub = kInf;
    bool ub_set = false;
  };
  std::vector<Col> cols;
  bool in_int = false;
  auto fail = [](const std::string& msg) { throw ValidationError("MPS: " + msg); };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (line[0] != ' ' && line[0] != '\t') {
      section = tok[0];
      if (section == "ENDATA") break;
      if (section == "RANGES") fail("RANGES section not supported");
      continue;
    }
    if (section == "ROWS") {
      if (tok.size() < 2) fail("bad ROWS line");
      if (tok[0] == "N") {
        if (obj_row.empty()) obj_row = tok[1];
        continue;
      }
      Constraint c;
      c.name = tok[1];
      c.sense = tok[0] == "L" ? Sense::LessEqual : tok[0] == "E" ? Sense::Equal : Sense::GreaterEqual;
      if (tok[0] != "L" && tok[0] != "E" && tok[0] != "G") fail("bad row type " + tok[0]);
      row_index[c.name] = static_cast<int>(rows.size());
      rows.push_back(c);
    } else if (section == "COLUMNS") {
      if (tok.size() >= 3 && tok[1] == "'MARKER'") {
        in_int = tok[2] == "'INTORG'";
        continue;
      }
      if (tok.size() < 3 || tok.size() % 2 == 0) fail("bad COLUMNS line");
      auto it = col_index.find(tok[0]);
      int j;
      if (it == col_index.end()) {
        j = static_cast<int>(cols.size());
        col_index[tok[0]] = j;
        cols.push_back({tok[0], in_int});
        if (in_int) cols.back().ub = 1.0;  // integer columns default to binary in this reader
      } else {
        j = it->second;
      }
      for (std::size_t p = 1; p + 1 < tok.size(); p += 2) {
        const double v = std::stod(tok[p + 1]);
        if (tok[p] == obj_row) {
          cols[j].obj = v;
        } else {
          auto r = row_index.find(tok[p]);
          if (r == row_index.end()) fail("unknown row " + tok[p]);
          cols[j].entries.push_back({r->second, v});
        }
      }
    } else if (section == "RHS") {
      for (std::size_t p = 1; p + 1 < tok.size(); p += 2) {
        if (tok[p] == obj_row) continue;
        auto r = row_index.find(tok[p]);
        if (r == row_index.end()) fail("unknown row " + tok[p]);
        rows[r->second].rhs = std::stod(tok[p + 1]);
      }
    } else if (section == "BOUNDS") {
      if (tok.size() < 3) fail("bad BOUNDS line");
      auto c = col_index.find(tok[2]);
      if (c == col_index.end()) fail("unknown column " + tok[2]);
      Col& col = cols[c->second];
      const std::string& t = tok[0];
      const double v = tok.size() > 3 ? std::stod(tok[3]) : 0.0;
      if (t == "LO") col.lb = v;
      else if (t == "UP") col.ub = v;
      else if (t == "FX") col.lb = col.ub = v;
      else if (t == "FR") { col.lb = -kInf; col.ub = kInf; }
      else if (t == "MI") col.lb = -kInf;
      else if (t == "PL") col.ub = kInf;
      else if (t == "BV") { col.lb = 0.0; col.ub = 1.0; col.integer = true; }
      else fail("unsupported bound type " + t);
    }
  }
  for (const auto& c : cols) {
    const int j = m.add_variable(c.name, c.integer ? VarType::Binary : VarType::Continuous, c.lb, c.ub);
    m.set_objective(j, c.obj);
    if (c.integer && !(c.lb >= 0.0 && c.ub <= 1.0)) fail("general integer column " + c.name);
  }
  std::vector<std::vector<Term>> row_terms(rows.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (const auto& [r, v] : cols[j].entries) row_terms[r].push_back({static_cast<int>(j), v});
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.add_constraint(rows[i].name, std::move(row_terms[i]), rows[i].sense, rows[i].rhs);
  return m;
}

inline std::string to_lp_string(const MilpModel& m) {
  std::ostringstream s;
  write_lp(s, m);
  return s.str();
}

inline std::string to_mps_string(const MilpModel& m) {
  std::ostringstream s;
  write_mps(s, m);
  return s.str();
}

}  // namespace ufls

#endif  // UFLS_MILP_MODEL_HPP
