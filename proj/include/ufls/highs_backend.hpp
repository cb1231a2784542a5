#ifndef UFLS_HIGHS_BACKEND_HPP
#define UFLS_HIGHS_BACKEND_HPP

// HiGHS-backed solver routes:
//  * HighsBackend     - passes the model in memory;
//  * HighsFileBackend - writes the model as MPS or LP text and lets HiGHS's
//                       own file reader load it, exercising the export path.

#include <Highs.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "ufls/backend.hpp"
#include "ufls/error.hpp"
#include "ufls/milp_model.hpp"

namespace ufls {

namespace detail {

inline HighsLp to_highs_lp(const MilpModel& m) {
  HighsLp lp;
  const int nc = m.num_vars();
  const int nr = m.num_constraints();
  lp.num_col_ = nc;
  lp.num_row_ = nr;
  lp.sense_ = ObjSense::kMinimize;
  lp.offset_ = 0.0;
  lp.col_cost_ = m.objective();
  lp.col_lower_.resize(nc);
  lp.col_upper_.resize(nc);
  lp.integrality_.assign(nc, HighsVarType::kContinuous);
  lp.col_names_.resize(nc);
  for (int j = 0; j < nc; ++j) {
    const auto& v = m.variable(j);
    lp.col_lower_[j] = std::isinf(v.lb) ? -kHighsInf : v.lb;
    lp.col_upper_[j] = std::isinf(v.ub) ? kHighsInf : v.ub;
    if (v.type == VarType::Binary) lp.integrality_[j] = HighsVarType::kInteger;
    lp.col_names_[j] = v.name;
  }
  if (m.num_binaries() == 0) lp.integrality_.clear();
  lp.row_lower_.resize(nr);
  lp.row_upper_.resize(nr);
  lp.row_names_.resize(nr);
  auto& a = lp.a_matrix_;
  a.format_ = MatrixFormat::kRowwise;
  a.num_col_ = nc;
  a.num_row_ = nr;
  a.start_.assign(1, 0);
  for (int i = 0; i < nr; ++i) {
    const auto& r = m.constraints()[i];
    lp.row_lower_[i] = r.sense == Sense::LessEqual ? -kHighsInf : r.rhs;
    lp.row_upper_[i] = r.sense == Sense::GreaterEqual ? kHighsInf : r.rhs;
    lp.row_names_[i] = r.name;
    for (const auto& t : r.terms) {
      a.index_.push_back(t.var);
      a.value_.push_back(t.coef);
    }
    a.start_.push_back(static_cast<HighsInt>(a.index_.size()));
  }
  return lp;
}

inline void apply_limits(Highs& h, const SolveLimits& lim) {
  h.setOptionValue("output_flag", lim.verbose);
  h.setOptionValue("threads", lim.threads);
  h.setOptionValue("random_seed", lim.seed);
  h.setOptionValue("mip_rel_gap", lim.rel_gap);
  h.setOptionValue("mip_abs_gap", lim.abs_gap);
  if (h.setOptionValue("mip_lp_solver", lim.lp_solver) == HighsStatus::kError)
    throw ValidationError("unknown LP solver '" + lim.lp_solver + "' (choose|simplex|ipm)");
  h.setOptionValue("primal_feasibility_tolerance", 1e-9);
  h.setOptionValue("mip_feasibility_tolerance", 1e-9);
  if (std::isfinite(lim.time_s)) h.setOptionValue("time_limit", lim.time_s);
}

inline BackendResult collect(Highs& h, int num_vars, double seconds) {
  BackendResult r;
  r.seconds = seconds;
  const HighsModelStatus ms = h.getModelStatus();
  const HighsInfo& info = h.getInfo();
  const bool have_point = info.primal_solution_status == kSolutionStatusFeasible;
  switch (ms) {
    case HighsModelStatus::kOptimal:
      r.status = SolveStatus::Optimal;
      break;
    case HighsModelStatus::kModelEmpty:
      r.status = SolveStatus::Optimal;
      break;
    case HighsModelStatus::kInfeasible:
    case HighsModelStatus::kUnboundedOrInfeasible:
      r.status = SolveStatus::Infeasible;
      break;
    case HighsModelStatus::kTimeLimit:
    case HighsModelStatus::kIterationLimit:
    case HighsModelStatus::kSolutionLimit:
    case HighsModelStatus::kInterrupt:
    case HighsModelStatus::kHighsInterrupt:
      r.status = have_point ? SolveStatus::Feasible : SolveStatus::TimedOut;
      break;
    default:
      r.status = SolveStatus::Error;
      break;
  }
  r.message = h.modelStatusToString(ms);
  if (has_solution(r.status)) {
    if (!have_point && ms != HighsModelStatus::kModelEmpty) {
      r.status = SolveStatus::Error;
      r.message += " (no primal solution reported)";
      return r;
    }
    r.x = h.getSolution().col_value;
    r.x.resize(num_vars, 0.0);
    r.objective = info.objective_function_value;
    r.bound = info.mip_dual_bound;
    r.gap = std::isfinite(info.mip_gap) ? std::max(0.0, info.mip_gap) : 0.0;
  }
  return r;
}

}  // namespace detail

class HighsBackend : public SolverBackend {
 public:
  std::string name() const override { return "highs"; }
  BackendCapabilities capabilities() const override { return {true, true, true}; }

  BackendResult solve(const MilpModel& model, const SolveLimits& limits,
                      const std::vector<double>* start = nullptr) const override {
    Highs h;
    detail::apply_limits(h, limits);
    const HighsLp lp = detail::to_highs_lp(model);
    if (h.passModel(lp) == HighsStatus::kError) throw SolverError("HiGHS rejected the model");
    if (start != nullptr) {
      if (static_cast<int>(start->size()) != model.num_vars()) throw SolverError("MIP start has wrong length");
      HighsSolution sol;
      sol.col_value = *start;
      sol.value_valid = true;
      h.setSolution(sol);
    }
    const auto t0 = std::chrono::steady_clock::now();
    const HighsStatus st = h.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (st == HighsStatus::kError && h.getModelStatus() != HighsModelStatus::kInfeasible) {
      BackendResult r;
      r.status = SolveStatus::Error;
      r.seconds = secs;
      r.message = "HiGHS run failed: " + h.modelStatusToString(h.getModelStatus());
      return r;
    }
    return detail::collect(h, model.num_vars(), secs);
  }
};

enum class ModelFileFormat { Mps, Lp };

class HighsFileBackend : public SolverBackend {
 public:
  explicit HighsFileBackend(ModelFileFormat format = ModelFileFormat::Mps) : format_(format) {}

  std::string name() const override { return format_ == ModelFileFormat::Mps ? "highs-mps" : "highs-lp"; }
  BackendCapabilities capabilities() const override { return {false, true, true}; }

  BackendResult solve(const MilpModel& model, const SolveLimits& limits,
                      const std::vector<double>* = nullptr) const override {
    static std::atomic<int> counter{0};
    const auto path = std::filesystem::temp_directory_path() /
                      ("ufls_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) +
                       (format_ == ModelFileFormat::Mps ? ".mps" : ".lp"));
    {
      std::ofstream out(path);
      if (!out) throw SolverError("cannot write " + path.string());
      if (format_ == ModelFileFormat::Mps) write_mps(out, model);
      else write_lp(out, model);
    }
    Highs h;
    detail::apply_limits(h, limits);
    const HighsStatus rs = h.readModel(path.string());
    std::error_code ec;
    std::filesystem::remove(path, ec);
    if (rs == HighsStatus::kError) throw SolverError("HiGHS could not read exported model");
    if (h.getNumCol() != model.num_vars() || h.getNumRow() != model.num_constraints())
      throw SolverError("exported model changed shape on re-import");
    const auto t0 = std::chrono::steady_clock::now();
    h.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    BackendResult r = detail::collect(h, model.num_vars(), secs);
    if (has_solution(r.status)) {
      // the reader may permute columns; map values back by name
      std::vector<double> x(model.num_vars(), 0.0);
      std::unordered_map<std::string, int> pos;
      for (int j = 0; j < model.num_vars(); ++j) pos[model.variable(j).name] = j;
      const auto& names = h.getLp().col_names_;
      for (std::size_t j = 0; j < names.size() && j < r.x.size(); ++j) {
        auto it = pos.find(names[j]);
        if (it != pos.end()) x[it->second] = r.x[j];
      }
      r.x = std::move(x);
    }
    return r;
  }

 private:
  ModelFileFormat format_;
};

/// Counts and objective as seen by HiGHS's reader for an exported model.
struct ImportedShape {
  int num_col = 0;
  int num_row = 0;
  int num_integer = 0;
  std::vector<double> cost;
  std::vector<std::string> col_names;
};

inline ImportedShape import_with_highs(const std::string& path) {
  Highs h;
  h.setOptionValue("output_flag", false);
  if (h.readModel(path) == HighsStatus::kError) throw SolverError("HiGHS could not read " + path);
  ImportedShape s;
  const HighsLp& lp = h.getLp();
  s.num_col = lp.num_col_;
  s.num_row = lp.num_row_;
  for (auto t : lp.integrality_) s.num_integer += t == HighsVarType::kInteger;
  s.cost = lp.col_cost_;
  s.col_names = lp.col_names_;
  return s;
}

}  // namespace ufls

#endif  // UFLS_HIGHS_BACKEND_HPP
