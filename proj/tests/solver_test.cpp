#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "peakstore/program.hpp"
#include "peakstore/solver.hpp"

using namespace peakstore;

namespace {

QuadraticProgram OneVariable(double c, double upper) {
  Eigen::MatrixXd q(1, 1);
  q << -2.0;
  Eigen::VectorXd lin(1);
  lin << c;
  QuadraticProgram qp = MakeProgram(q, lin);
  Eigen::VectorXd a(1);
  a << 1.0;
  qp.AddRow(a, upper, Sense::kLessEqual, "upper");
  return qp;
}

bool Feasible(const QuadraticProgram& qp, const Eigen::VectorXd& x) {
  const Eigen::VectorXd r = qp.constraints * x - qp.rhs;
  for (int i = 0; i < qp.NumRows(); ++i) {
    if (i < qp.NumEqualities() ? std::abs(r(i)) > 1e-12 : r(i) > 1e-12) return false;
  }
  return true;
}

// Exhaustive grid over the box [0, hi]^n, then repeated zooms around the incumbent.
double GridMaximum(const QuadraticProgram& qp, double hi) {
  const int n = qp.NumVariables();
  const int points = n == 2 ? 201 : 41;
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(n), up = Eigen::VectorXd::Constant(n, hi);
  Eigen::VectorXd best_x = Eigen::VectorXd::Zero(n);
  double best = ObjectiveValue(qp, best_x);
  for (int pass = 0; pass < 8; ++pass) {
    const Eigen::VectorXd step = (up - lo) / (points - 1);
    std::vector<int> idx(n, 0);
    while (true) {
      Eigen::VectorXd x(n);
      for (int j = 0; j < n; ++j) x(j) = lo(j) + idx[j] * step(j);
      if (Feasible(qp, x)) {
        const double f = ObjectiveValue(qp, x);
        if (f > best) {
          best = f;
          best_x = x;
        }
      }
      int j = 0;
      while (j < n && ++idx[j] == points) idx[j++] = 0;
      if (j == n) break;
    }
    for (int j = 0; j < n; ++j) {
      lo(j) = std::max(0.0, best_x(j) - step(j));
      up(j) = std::min(hi, best_x(j) + step(j));
    }
  }
  return best;
}

QuadraticProgram RandomBoxProgram(std::mt19937_64& rng, int n, bool singular) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = z(rng);
  if (singular) m.col(n - 1).setZero();
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c(i) = 3.0 * z(rng);
  QuadraticProgram qp = MakeProgram(-(m * m.transpose()), c);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(j) = 1.0;
    qp.AddRow(e, 2.0, Sense::kLessEqual, "ub" + std::to_string(j));
    qp.AddRow(-e, 0.0, Sense::kLessEqual, "lb" + std::to_string(j));
  }
  Eigen::VectorXd a(n);
  for (int i = 0; i < n; ++i) a(i) = z(rng);
  qp.AddRow(a, 1.0, Sense::kLessEqual, "cut");
  return qp;
}

}  // namespace

TEST(Solve, InteriorOptimum) {
  const PrimalDualSolution sol = Solve(OneVariable(2.0, 3.0));
  EXPECT_NEAR(sol.x(0), 1.0, 1e-12);
  EXPECT_NEAR(sol.duals(0), 0.0, 1e-12);
  EXPECT_NEAR(sol.objective, 1.0, 1e-12);
}

TEST(Solve, BindingUpperBound) {
  const PrimalDualSolution sol = Solve(OneVariable(10.0, 3.0));
  EXPECT_NEAR(sol.x(0), 3.0, 1e-12);
  EXPECT_NEAR(sol.duals(0), 4.0, 1e-12);
  EXPECT_EQ(sol.active_set, std::vector<int>{0});
}

TEST(Solve, RandomProgramsMatchGridSearch) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 2 + trial % 2;
    const QuadraticProgram qp = RandomBoxProgram(rng, n, trial % 3 == 0);
    const PrimalDualSolution sol = Solve(qp);
    const double grid = GridMaximum(qp, 2.0);
    EXPECT_TRUE(Feasible(qp, sol.x) || ComputeKktResiduals(qp, sol).max_primal_infeasibility < 1e-9);
    EXPECT_GE(sol.objective, grid - 1e-9) << "trial " << trial;
    // The grid cannot land exactly on the oblique cut, so it only gets close from below.
    EXPECT_NEAR(sol.objective, grid, 1e-4 * std::max(1.0, std::abs(grid))) << "trial " << trial;
    const KktReport kkt = ComputeKktResiduals(qp, sol);
    EXPECT_TRUE(kkt.Passes(SolverOptions{})) << "trial " << trial;
  }
}

TEST(Solve, TablePricesWithStorage) {
  const Scenario s = fixture::TableScenario();
  const QuadraticProgram qp = BuildProgram(s);
  const PrimalDualSolution sol = Solve(qp);
  EXPECT_NEAR(sol.duals(qp.Row("balance[on_peak]")), 142.0, 1.0);
  EXPECT_NEAR(sol.duals(qp.Row("balance[off_peak]")), 28.0, 1.0);
  const KktReport kkt = ComputeKktResiduals(qp, sol);
  EXPECT_LE(kkt.max_stationarity, 1e-7);
  EXPECT_LE(kkt.max_primal_infeasibility, 1e-8);
  EXPECT_LE(kkt.max_dual_infeasibility, 1e-7);
  EXPECT_LE(kkt.max_complementarity, 1e-7);
  ASSERT_EQ(kkt.storage_conditions.size(), 6u);
  for (const NamedResidual& r : kkt.storage_conditions) EXPECT_LE(std::abs(r.value), 1e-7) << r.label;
}

TEST(Solve, TablePricesWithoutStorage) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario().WithoutStorage());
  const PrimalDualSolution sol = Solve(qp);
  EXPECT_NEAR(sol.duals(qp.Row("balance[on_peak]")), 182.0, 1.0);
  EXPECT_NEAR(sol.duals(qp.Row("balance[off_peak]")), 20.0, 1.0);
  const KktReport kkt = ComputeKktResiduals(qp, sol);
  EXPECT_TRUE(kkt.Passes(SolverOptions{}));
  EXPECT_TRUE(kkt.storage_conditions.empty());
}

TEST(Solve, Deterministic) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario());
  const PrimalDualSolution a = Solve(qp);
  const PrimalDualSolution b = Solve(qp);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.duals, b.duals);
  EXPECT_EQ(a.active_set, b.active_set);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Solve, ObjectiveNeverDecreases) {
  const PrimalDualSolution sol = Solve(BuildProgram(fixture::TableScenario()));
  ASSERT_FALSE(sol.objective_history.empty());
  for (std::size_t k = 1; k < sol.objective_history.size(); ++k) {
    EXPECT_GE(sol.objective_history[k], sol.objective_history[k - 1] - 1e-9);
  }
  EXPECT_DOUBLE_EQ(sol.objective_history.back(), sol.objective);
}

TEST(Solve, StrongDuality) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario());
  const KktReport kkt = ComputeKktResiduals(qp, Solve(qp));
  EXPECT_NEAR(kkt.lagrangian_value, kkt.primal_objective, 1e-6 * std::abs(kkt.primal_objective));
}

TEST(Solve, FeasibleStartReachesSameOptimum) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario().WithoutStorage());
  SolverOptions opt;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(qp.NumVariables());
  for (const char* name : {"K[baseload]", "q[baseload,on_peak]", "q[baseload,off_peak]",
                           "ell[on_peak]", "ell[off_peak]"}) {
    x0(qp.Column(name)) = 5000.0;
  }
  x0(qp.Column("K[peaker]")) = 100.0;
  opt.initial_point = x0;
  const PrimalDualSolution a = Solve(qp, opt);
  const PrimalDualSolution b = Solve(qp);
  EXPECT_NEAR(a.objective, b.objective, 1e-9 * std::abs(b.objective));
}

TEST(Solve, TraceIsWritten) {
  std::ostringstream trace;
  SolverOptions opt;
  opt.trace = &trace;
  Solve(OneVariable(10.0, 3.0), opt);
  EXPECT_FALSE(trace.str().empty());
}

TEST(KktResiduals, PerturbedPriceShowsInOnPeakDischarge) {
  const Scenario s = fixture::TableScenario();
  const QuadraticProgram qp = BuildProgram(s);
  PrimalDualSolution sol = Solve(qp);
  sol.duals(qp.Row("balance[on_peak]")) += 1.0;
  const KktReport kkt = ComputeKktResiduals(qp, sol);
  for (const NamedResidual& r : kkt.storage_conditions) {
    if (r.label == "KKT-2 dL/dq_minus[on_peak]") {
      EXPECT_NEAR(r.value, s.OnPeak().duration_hours, 1e-6);
      return;
    }
  }
  FAIL() << "no on-peak discharge condition";
}

TEST(KktResiduals, EnergyCapacityCondition) {
  const Scenario s = fixture::TableScenario();
  const QuadraticProgram qp = BuildProgram(s);
  const PrimalDualSolution sol = Solve(qp);
  const double gamma = sol.duals(qp.Row("energy_charge")) + sol.duals(qp.Row("energy_discharge"));
  EXPECT_NEAR(gamma, s.storage->inv_cost_energy / s.cycles_n, 1e-7);
}

TEST(KktResiduals, MismatchedSolutionThrows) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario());
  PrimalDualSolution sol;
  sol.x = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(ComputeKktResiduals(qp, sol), std::invalid_argument);
}

TEST(SolverErrors, Unbounded) {
  Eigen::VectorXd c(1);
  c << 1.0;
  const QuadraticProgram qp = MakeProgram(Eigen::MatrixXd::Zero(1, 1), c);
  try {
    Solve(qp);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::kUnbounded);
  }
}

TEST(SolverErrors, InfeasibleStart) {
  SolverOptions opt;
  opt.initial_point = Eigen::VectorXd::Constant(1, 5.0);
  try {
    Solve(OneVariable(1.0, 3.0), opt);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::kInfeasibleStart);
  }
}

TEST(SolverErrors, IterationLimit) {
  SolverOptions opt;
  opt.max_iterations = 2;
  try {
    Solve(BuildProgram(fixture::TableScenario()), opt);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::kIterationLimit);
    EXPECT_FALSE(e.last_active_set().empty());
  }
}

TEST(SolverErrors, DependentEqualities) {
  QuadraticProgram qp = MakeProgram(-Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, 1.0));
  qp.AddRow(Eigen::Vector2d(1.0, 1.0), 0.0, Sense::kEquality, "a");
  qp.AddRow(Eigen::Vector2d(2.0, 2.0), 0.0, Sense::kEquality, "b");
  try {
    Solve(qp);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverError::Kind::kDependentEqualities);
  }
}
