#pragma once

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peakstore/program.hpp"

namespace peakstore {

struct SolverOptions {
  double feasibility_tol = 1e-8;
  double stationarity_tol = 1e-7;
  double complementarity_tol = 1e-7;
  // 0 selects 10 x (number of rows).
  int max_iterations = 0;
  // Must be feasible when given; the origin is used otherwise.
  std::optional<Eigen::VectorXd> initial_point;
  // Active-set changes are written here when set.
  std::ostream* trace = nullptr;
};

struct PrimalDualSolution {
  Eigen::VectorXd x;
  // One multiplier per row, sign convention of L = f - sum_r dual_r (a_r x - b_r):
  // inequality duals are >= 0, equality duals are free.
  Eigen::VectorXd duals;
  double objective = 0.0;
  std::vector<int> active_set;  // working set at termination, sorted
  int iterations = 0;
  std::vector<double> objective_history;  // objective after each iteration
};

class SolverError : public std::runtime_error {
 public:
  enum class Kind { kIterationLimit, kUnbounded, kInfeasibleStart, kDependentEqualities };

  SolverError(Kind kind, const std::string& message, std::vector<int> last_active_set)
      : std::runtime_error(message), kind_(kind), last_active_set_(std::move(last_active_set)) {}

  Kind kind() const { return kind_; }
  const std::vector<int>& last_active_set() const { return last_active_set_; }

 private:
  Kind kind_;
  std::vector<int> last_active_set_;
};

// Primal active-set method for concave QPs (negative semidefinite Q).
PrimalDualSolution Solve(const QuadraticProgram& qp, const SolverOptions& options = {});

// Stationarity of one variable as written symbol-by-symbol.
struct NamedResidual {
  std::string label;
  double value = 0.0;
};

struct KktReport {
  Eigen::VectorXd stationarity;  // grad f - A' duals, per variable
  double max_stationarity = 0.0;
  double max_primal_infeasibility = 0.0;
  double max_dual_infeasibility = 0.0;  // most negative inequality dual, as a magnitude
  double max_complementarity = 0.0;     // max |dual_r * slack_r|
  double primal_objective = 0.0;
  double lagrangian_value = 0.0;
  // KKT-1 (per period), KKT-2 (per period), KKT-3, KKT-4 of the storage model.
  // Empty for programs without storage rows.
  std::vector<NamedResidual> storage_conditions;

  bool Passes(const SolverOptions& tol) const {
    return max_stationarity <= tol.stationarity_tol &&
           max_primal_infeasibility <= tol.feasibility_tol &&
           max_dual_infeasibility <= tol.stationarity_tol &&
           max_complementarity <= tol.complementarity_tol;
  }
};

KktReport ComputeKktResiduals(const QuadraticProgram& qp, const PrimalDualSolution& sol);

}  // namespace peakstore
