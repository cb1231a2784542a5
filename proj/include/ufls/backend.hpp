#ifndef UFLS_BACKEND_HPP
#define UFLS_BACKEND_HPP

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ufls/milp_model.hpp"

namespace ufls {

enum class SolveStatus { Optimal, Feasible, Infeasible, TimedOut, Error };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimedOut: return "timed_out";
    case SolveStatus::Error: return "error";
  }
  return "?";
}

inline bool has_solution(SolveStatus s) { return s == SolveStatus::Optimal || s == SolveStatus::Feasible; }

struct SolveLimits {
  double time_s = std::numeric_limits<double>::infinity();
  double rel_gap = 1e-4;
  double abs_gap = 1e-6;
  std::string lp_solver = "choose";  // LP method for the MIP relaxations
  int threads = 1;
  int seed = 0;
  bool verbose = false;
};

struct BackendResult {
  SolveStatus status = SolveStatus::Error;
  std::vector<double> x;
  double objective = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  double seconds = 0.0;
  std::string message;
};

struct BackendCapabilities {
  bool warm_start = false;
  bool gap_limit = false;
  bool time_limit = false;
};

/// One solve owns a backend call exclusively; implementations keep no state
/// between calls, so a single instance may be shared across threads.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string name() const = 0;
  virtual BackendCapabilities capabilities() const = 0;
  /// `start` is an optional full-length primal point used as a MIP start.
  virtual BackendResult solve(const MilpModel& model, const SolveLimits& limits,
                              const std::vector<double>* start = nullptr) const = 0;
};

}  // namespace ufls

#endif  // UFLS_BACKEND_HPP
