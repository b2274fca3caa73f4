#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "peakstore/program.hpp"

using namespace peakstore;

namespace {

int CountNonzeroDiagonal(const Eigen::MatrixXd& q) {
  int n = 0;
  for (int i = 0; i < q.rows(); ++i) n += q(i, i) != 0.0;
  return n;
}

}  // namespace

// Columns: 2 K_g, K_s, E, 4 q_gi, 2 q+, 2 q-, 2 ell.
// Rows: 2 balance; 4 genmax, 4 genmin, 2+2 charge/discharge max, 2+2 min,
// rte, 2 energy, 4 capacity signs, 2 ell signs.
TEST(BuildProgram, CountsWithStorage) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario());
  EXPECT_EQ(qp.NumVariables(), 14);
  EXPECT_EQ(qp.NumEqualities(), 2);
  EXPECT_EQ(qp.NumRows() - qp.NumEqualities(), 25);
}

TEST(BuildProgram, CountsWithoutStorage) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario().WithoutStorage());
  EXPECT_EQ(qp.NumVariables(), 8);
  EXPECT_EQ(qp.NumEqualities(), 2);
  EXPECT_EQ(qp.NumRows() - qp.NumEqualities(), 12);
  EXPECT_EQ(qp.Column("K_s"), -1);
  EXPECT_EQ(qp.Column("E"), -1);
  for (const ConstraintIndex& r : qp.rows) {
    EXPECT_TRUE(r.kind == RowKind::kBalance || r.kind == RowKind::kGenMax ||
                r.kind == RowKind::kGenMin || r.kind == RowKind::kCapacityNonneg ||
                r.kind == RowKind::kConsumptionNonneg)
        << r.name;
  }
}

TEST(BuildProgram, QuadraticOnlyOnConsumption) {
  const Scenario s = fixture::TableScenario();
  for (const Scenario& sc : {s, s.WithoutStorage()}) {
    const QuadraticProgram qp = BuildProgram(sc);
    EXPECT_EQ(CountNonzeroDiagonal(qp.quadratic), 2);
    EXPECT_EQ((qp.quadratic - Eigen::MatrixXd(qp.quadratic.diagonal().asDiagonal())).norm(), 0.0);
    const int on = qp.Column("ell[on_peak]");
    const int off = qp.Column("ell[off_peak]");
    ASSERT_GE(on, 0);
    ASSERT_GE(off, 0);
    EXPECT_DOUBLE_EQ(qp.quadratic(on, on), -4.0 * s.OnPeak().demand.slope_b);
    EXPECT_DOUBLE_EQ(qp.quadratic(off, off), -20.0 * s.OffPeak().demand.slope_b);
  }
}

TEST(BuildProgram, EqualitiesFirstAndNamesUnique) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario());
  std::set<std::string> names;
  for (int r = 0; r < qp.NumRows(); ++r) {
    EXPECT_EQ(qp.rows[r].row, r);
    EXPECT_EQ(qp.rows[r].sense == Sense::kEquality, r < qp.NumEqualities());
    EXPECT_TRUE(names.insert(qp.rows[r].name).second) << qp.rows[r].name;
    EXPECT_EQ(qp.Row(qp.rows[r].name), r);
    EXPECT_FALSE(qp.rows[r].dual_symbol.empty());
  }
  for (int c = 0; c < qp.NumVariables(); ++c) {
    EXPECT_EQ(qp.Column(qp.variables[c].name), c);
  }
  EXPECT_EQ(qp.Column("nonsense"), -1);
  EXPECT_EQ(qp.Row("nonsense"), -1);
}

TEST(BuildProgram, OriginIsFeasible) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario());
  const Eigen::VectorXd slack = qp.constraints * Eigen::VectorXd::Zero(qp.NumVariables()) - qp.rhs;
  for (int r = 0; r < qp.NumRows(); ++r) {
    if (r < qp.NumEqualities()) {
      EXPECT_EQ(slack(r), 0.0);
    } else {
      EXPECT_LE(slack(r), 0.0);
    }
  }
}

TEST(BuildProgram, RejectsInvalidScenario) {
  Scenario s = fixture::TableScenario();
  s.storage->efficiency = 0.0;
  EXPECT_THROW(BuildProgram(s), ValidationError);
}

TEST(ObjectiveValue, ZeroPoint) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario());
  EXPECT_EQ(ObjectiveValue(qp, Eigen::VectorXd::Zero(qp.NumVariables())), 0.0);
}

TEST(ObjectiveValue, HandEvaluatedPoint) {
  const Scenario s = fixture::TableScenario().WithoutStorage();
  const QuadraticProgram qp = BuildProgram(s);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(qp.NumVariables());
  x(qp.Column("K[baseload]")) = 10000.0;
  x(qp.Column("q[baseload,on_peak]")) = 10000.0;
  x(qp.Column("q[baseload,off_peak]")) = 10000.0;
  x(qp.Column("ell[on_peak]")) = 10000.0;
  x(qp.Column("ell[off_peak]")) = 10000.0;
  const double gross = 4.0 * GrossSurplus(s.OnPeak().demand, 10000.0) +
                       20.0 * GrossSurplus(s.OffPeak().demand, 10000.0);
  const double expected = gross - 24.0 * 20.0 * 10000.0 - 240000.0 * 10000.0 / 365.0;
  EXPECT_NEAR(ObjectiveValue(qp, x), expected, 1e-9 * std::abs(expected));
}

// Scaling every demand intercept, cost and slope by k scales the objective by k.
TEST(ObjectiveValue, ScalesWithCommonFactor) {
  Scenario s = fixture::TableScenario();
  const QuadraticProgram base = BuildProgram(s);
  const double k = 3.5;
  for (Period& p : s.periods) {
    p.demand.intercept_a *= k;
    p.demand.slope_b *= k;
  }
  for (GeneratorTech& g : s.generators) {
    g.variable_cost *= k;
    g.inv_cost_power *= k;
  }
  s.storage->inv_cost_power *= k;
  s.storage->inv_cost_energy *= k;
  const QuadraticProgram scaled = BuildProgram(s);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(base.NumVariables(), 1.0, 500.0);
  EXPECT_NEAR(ObjectiveValue(scaled, x), k * ObjectiveValue(base, x),
              1e-9 * std::abs(k * ObjectiveValue(base, x)));
  EXPECT_EQ(scaled.constraints, base.constraints);
}

TEST(ObjectiveValue, DimensionMismatchThrows) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario());
  EXPECT_THROW(ObjectiveValue(qp, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST(MakeProgram, AddRowKeepsEqualitiesFirst) {
  QuadraticProgram qp = MakeProgram(-Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, 1.0));
  qp.AddRow(Eigen::Vector2d(1.0, 0.0), 1.0, Sense::kLessEqual, "a");
  qp.AddRow(Eigen::Vector2d(1.0, 1.0), 1.0, Sense::kEquality, "b");
  EXPECT_EQ(qp.NumEqualities(), 1);
  EXPECT_EQ(qp.Row("b"), 0);
  EXPECT_EQ(qp.Row("a"), 1);
  EXPECT_EQ(qp.constraints(1, 1), 0.0);
  EXPECT_EQ(qp.Column("x1"), 1);
}

TEST(DumpProgram, ListsEveryRow) {
  const QuadraticProgram qp = BuildProgram(fixture::TableScenario());
  const std::string dump = DumpProgram(qp);
  for (const ConstraintIndex& r : qp.rows) {
    EXPECT_NE(dump.find(r.name), std::string::npos) << r.name;
  }
}
