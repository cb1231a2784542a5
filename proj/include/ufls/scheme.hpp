#ifndef UFLS_SCHEME_HPP
#define UFLS_SCHEME_HPP

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "ufls/error.hpp"
#include "ufls/grid.hpp"

namespace ufls {

/// Hz <-> per-unit deviation from nominal.
inline double hz_to_pu(double hz, double f_nominal) { return (hz - f_nominal) / f_nominal; }
inline double pu_to_hz(double pu, double f_nominal) { return f_nominal * (1.0 + pu); }

struct UflsStage {
  double threshold_hz = 0.0;
  std::vector<double> shed_pu;  // indexed by bus id; zero off the participating set

  double total() const {
    double s = 0.0;
    for (double v : shed_pu) s += v;
    return s;
  }
};

struct UflsScheme {
  std::vector<UflsStage> stages;
  double deadband_s = 0.3;
  double delay_s = 0.1;
  double max_threshold_hz = 59.5;
  double min_gap_hz = 0.1;

  int num_stages() const { return static_cast<int>(stages.size()); }
  double total_shed() const {
    double s = 0.0;
    for (const auto& st : stages) s += st.total();
    return s;
  }
  std::vector<double> thresholds_hz() const {
    std::vector<double> out;
    for (const auto& st : stages) out.push_back(st.threshold_hz);
    return out;
  }
};

/// A step change in injection at each bus, applied from onset_s on.
/// Negative entries are generation lost.
struct Disturbance {
  Vector step_pu;
  double onset_s = 0.0;
  std::string label;

  double total() const { return step_pu.sum(); }
};

struct SchemeLimits {
  double stage_cap_frac = 0.075;  // per-stage system shed / total load
  double tolerance = 1e-7;        // pu and Hz slack for floating-point results
};

/// Returns human-readable violations of the scheme invariants; empty when
/// the scheme is valid for this case.
inline std::vector<std::string> scheme_violations(const UflsScheme& s, const GridCase& gc,
                                                  const SchemeLimits& lim = {}) {
  std::vector<std::string> out;
  const double tol = lim.tolerance;
  const int n = gc.num_buses();
  if (s.stages.empty()) out.push_back("scheme has no stages");
  if (!(s.deadband_s >= 0.0)) out.push_back("deadband must be >= 0");
  if (!(s.delay_s >= 0.0)) out.push_back("delay must be >= 0");
  std::vector<double> cumulative(n, 0.0);
  const double cap = lim.stage_cap_frac * gc.total_load();
  for (int i = 0; i < s.num_stages(); ++i) {
    const auto& st = s.stages[i];
    const std::string tag = "stage " + std::to_string(i + 1);
    if (static_cast<int>(st.shed_pu.size()) != n) {
      out.push_back(tag + ": shed vector has wrong length");
      continue;
    }
    if (i == 0 && st.threshold_hz > s.max_threshold_hz + tol)
      out.push_back(tag + ": threshold above maximum");
    if (i > 0 && s.stages[i - 1].threshold_hz - st.threshold_hz < s.min_gap_hz - tol)
      out.push_back(tag + ": threshold gap below minimum");
    double total = 0.0;
    for (int b = 0; b < n; ++b) {
      const double v = st.shed_pu[b];
      if (v < -tol) out.push_back(tag + ": negative shed at bus " + std::to_string(gc.buses[b].label));
      if (v > tol && !gc.buses[b].participates())
        out.push_back(tag + ": shed at non-participating bus " + std::to_string(gc.buses[b].label));
      cumulative[b] += v;
      total += v;
    }
    if (total > cap + tol) out.push_back(tag + ": stage shed exceeds per-stage cap");
  }
  for (int b = 0; b < n; ++b)
    if (cumulative[b] > gc.buses[b].shed_cap + tol)
      out.push_back("bus " + std::to_string(gc.buses[b].label) + ": total shed exceeds shed cap");
  return out;
}

inline void validate_scheme(const UflsScheme& s, const GridCase& gc, const SchemeLimits& lim = {}) {
  auto v = scheme_violations(s, gc, lim);
  if (!v.empty()) {
    std::string msg = "invalid UFLS scheme:";
    for (const auto& m : v) msg += "\n  " + m;
    throw ValidationError(msg);
  }
}

/// Scheme file: stages carry a map from bus id (case-file label) to shed pu.
inline nlohmann::json scheme_to_json(const UflsScheme& s, const GridCase& gc) {
  nlohmann::json j;
  j["deadband_s"] = s.deadband_s;
  j["delay_s"] = s.delay_s;
  j["max_threshold_hz"] = s.max_threshold_hz;
  j["min_gap_hz"] = s.min_gap_hz;
  j["stages"] = nlohmann::json::array();
  for (const auto& st : s.stages) {
    nlohmann::json js;
    js["threshold_hz"] = st.threshold_hz;
    nlohmann::json shed = nlohmann::json::object();
    for (int b = 0; b < gc.num_buses(); ++b)
      if (b < static_cast<int>(st.shed_pu.size()) && st.shed_pu[b] != 0.0)
        shed[std::to_string(gc.buses[b].label)] = st.shed_pu[b];
    js["shed_pu"] = shed;
    j["stages"].push_back(js);
  }
  return j;
}

inline UflsScheme scheme_from_json(const nlohmann::json& j, const GridCase& gc) {
  UflsScheme s;
  try {
    s.deadband_s = j.value("deadband_s", 0.3);
    s.delay_s = j.value("delay_s", 0.1);
    s.max_threshold_hz = j.value("max_threshold_hz", 59.5);
    s.min_gap_hz = j.value("min_gap_hz", 0.1);
    if (!j.contains("stages") || !j["stages"].is_array())
      throw ValidationError("scheme: missing field 'stages' (array)");
    for (const auto& js : j["stages"]) {
      UflsStage st;
      if (!js.contains("threshold_hz")) throw ValidationError("scheme.stages: missing 'threshold_hz'");
      st.threshold_hz = js["threshold_hz"].get<double>();
      st.shed_pu.assign(gc.num_buses(), 0.0);
      if (js.contains("shed_pu")) {
        for (const auto& [key, val] : js["shed_pu"].items()) {
          int label = 0;
          try {
            label = std::stoi(key);
          } catch (const std::exception&) {
            throw ValidationError("scheme.stages.shed_pu: bad bus id '" + key + "'");
          }
          auto id = gc.find_label(label);
          if (!id) throw ValidationError("scheme.stages.shed_pu: unknown bus id " + key);
          st.shed_pu[*id] = val.get<double>();
        }
      }
      s.stages.push_back(std::move(st));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scheme: ") + e.what());
  }
  return s;
}

}  // namespace ufls

#endif  // UFLS_SCHEME_HPP
