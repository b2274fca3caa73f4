#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "peakstore/model.hpp"

namespace peakstore {

enum class VarKind {
  kGenCapacity,      // K_g
  kStorageCapacity,  // K_s
  kEnergyCapacity,   // E
  kGeneration,       // q_{g,i}
  kCharge,           // q_i^+
  kDischarge,        // q_i^-
  kConsumption,      // l_i
};

struct VariableIndex {
  std::string name;
  VarKind kind;
  int column = 0;
  int period = -1;     // index into Scenario::periods, or -1
  int generator = -1;  // index into Scenario::generators, or -1
};

enum class RowKind {
  kBalance,
  kGenMax,
  kGenMin,
  kChargeMax,
  kDischargeMax,
  kChargeMin,
  kDischargeMin,
  kRoundTrip,
  kEnergyCharge,
  kEnergyDischarge,
  kCapacityNonneg,
  kConsumptionNonneg,
};

enum class Sense { kEquality, kLessEqual };

struct ConstraintIndex {
  std::string name;         // e.g. "genmax[peaker,on_peak]"
  std::string dual_symbol;  // e.g. "pi[peaker,on_peak]"
  RowKind kind;
  Sense sense;
  int row = 0;
  int period = -1;
  int generator = -1;
  int variable = -1;  // column bounded by a non-negativity row
};

// maximize 0.5 x'Qx + c'x  subject to  A_r x = b_r (equality rows)
//                                      A_r x <= b_r (inequality rows)
// Equality rows come first. All data is dense; problems are tiny.
struct QuadraticProgram {
  Eigen::MatrixXd quadratic;
  Eigen::VectorXd linear;
  Eigen::MatrixXd constraints;
  Eigen::VectorXd rhs;
  std::vector<VariableIndex> variables;
  std::vector<ConstraintIndex> rows;

  int NumVariables() const { return static_cast<int>(linear.size()); }
  int NumRows() const { return static_cast<int>(rhs.size()); }
  int NumEqualities() const;

  // -1 when the name is unknown.
  int Column(std::string_view name) const;
  int Row(std::string_view name) const;

  // Appends a row; used to build small test programs and fixed-capacity variants.
  void AddRow(const Eigen::VectorXd& coefficients, double bound, Sense sense, std::string name,
              RowKind kind = RowKind::kCapacityNonneg);
};

// Builds the welfare-maximization program for a validated scenario. Rows keep
// the T_i multipliers so the balance duals read directly in $/MWh and the
// investment terms are divided by cycles_n (objective is $ per cycle).
QuadraticProgram BuildProgram(const Scenario& scenario);

// Generic QP with no named structure: variables "x0", "x1", ...
QuadraticProgram MakeProgram(const Eigen::MatrixXd& quadratic, const Eigen::VectorXd& linear);

double ObjectiveValue(const QuadraticProgram& qp, const Eigen::VectorXd& x);

// Plain-text listing, one line per row, for diffing.
std::string DumpProgram(const QuadraticProgram& qp);

}  // namespace peakstore
