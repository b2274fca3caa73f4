#include "peakstore/program.hpp"

#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace peakstore {

int QuadraticProgram::NumEqualities() const {
  int count = 0;
  for (const ConstraintIndex& r : rows) {
    if (r.sense == Sense::kEquality) ++count;
  }
  return count;
}

int QuadraticProgram::Column(std::string_view name) const {
  for (const VariableIndex& v : variables) {
    if (v.name == name) return v.column;
  }
  return -1;
}

int QuadraticProgram::Row(std::string_view name) const {
  for (const ConstraintIndex& r : rows) {
    if (r.name == name) return r.row;
  }
  return -1;
}

void QuadraticProgram::AddRow(const Eigen::VectorXd& coefficients, double bound, Sense sense,
                              std::string name, RowKind kind) {
  if (coefficients.size() != NumVariables()) {
    throw std::invalid_argument("AddRow: coefficient length does not match variable count");
  }
  // Equalities stay in front of inequalities.
  const int at = sense == Sense::kEquality ? NumEqualities() : NumRows();
  const int old_rows = NumRows();

  Eigen::MatrixXd a(old_rows + 1, NumVariables());
  Eigen::VectorXd b(old_rows + 1);
  a.topRows(at) = constraints.topRows(at);
  b.head(at) = rhs.head(at);
  a.row(at) = coefficients.transpose();
  b(at) = bound;
  a.bottomRows(old_rows - at) = constraints.bottomRows(old_rows - at);
  b.tail(old_rows - at) = rhs.tail(old_rows - at);
  constraints = std::move(a);
  rhs = std::move(b);

  ConstraintIndex index{std::move(name), "", kind, sense, at, -1, -1, -1};
  index.dual_symbol = "dual[" + index.name + "]";
  rows.insert(rows.begin() + at, std::move(index));
  for (int r = at + 1; r < NumRows(); ++r) rows[r].row = r;
}

namespace {

class ProgramBuilder {
 public:
  explicit ProgramBuilder(const Scenario& s) : s_(s) {}

  QuadraticProgram Build() {
    AddVariables();
    const int n = static_cast<int>(qp_.variables.size());
    qp_.quadratic = Eigen::MatrixXd::Zero(n, n);
    qp_.linear = Eigen::VectorXd::Zero(n);
    FillObjective();
    AddRows();
    return std::move(qp_);
  }

 private:
  std::string PeriodName(int i) const { return std::string(ToString(s_.periods[i].label)); }
  std::string GenName(int g) const { return s_.generators[g].name; }
  double T(int i) const { return s_.periods[i].duration_hours; }
  int NumPeriods() const { return static_cast<int>(s_.periods.size()); }
  int NumGens() const { return static_cast<int>(s_.generators.size()); }

  int AddVariable(std::string name, VarKind kind, int period = -1, int generator = -1) {
    const int column = static_cast<int>(qp_.variables.size());
    qp_.variables.push_back({std::move(name), kind, column, period, generator});
    return column;
  }

  void AddVariables() {
    for (int g = 0; g < NumGens(); ++g) {
      gen_cap_.push_back(AddVariable("K[" + GenName(g) + "]", VarKind::kGenCapacity, -1, g));
    }
    if (s_.storage) {
      storage_cap_ = AddVariable("K_s", VarKind::kStorageCapacity);
      energy_cap_ = AddVariable("E", VarKind::kEnergyCapacity);
    }
    gen_.assign(NumGens(), std::vector<int>(NumPeriods(), -1));
    for (int i = 0; i < NumPeriods(); ++i) {
      for (int g = 0; g < NumGens(); ++g) {
        gen_[g][i] = AddVariable(fmt::format("q[{},{}]", GenName(g), PeriodName(i)),
                                 VarKind::kGeneration, i, g);
      }
    }
    if (s_.storage) {
      for (int i = 0; i < NumPeriods(); ++i) {
        charge_.push_back(AddVariable("q_plus[" + PeriodName(i) + "]", VarKind::kCharge, i));
      }
      for (int i = 0; i < NumPeriods(); ++i) {
        discharge_.push_back(
            AddVariable("q_minus[" + PeriodName(i) + "]", VarKind::kDischarge, i));
      }
    }
    for (int i = 0; i < NumPeriods(); ++i) {
      load_.push_back(AddVariable("ell[" + PeriodName(i) + "]", VarKind::kConsumption, i));
    }
  }

  void FillObjective() {
    const double n = s_.cycles_n;
    for (int i = 0; i < NumPeriods(); ++i) {
      const LinearDemand& d = s_.periods[i].demand;
      qp_.quadratic(load_[i], load_[i]) = -T(i) * d.slope_b;
      qp_.linear(load_[i]) = T(i) * d.intercept_a;
      for (int g = 0; g < NumGens(); ++g) {
        qp_.linear(gen_[g][i]) = -T(i) * s_.generators[g].variable_cost;
      }
    }
    for (int g = 0; g < NumGens(); ++g) {
      qp_.linear(gen_cap_[g]) = -s_.generators[g].inv_cost_power / n;
    }
    if (s_.storage) {
      qp_.linear(storage_cap_) = -s_.storage->inv_cost_power / n;
      qp_.linear(energy_cap_) = -s_.storage->inv_cost_energy / n;
    }
  }

  Eigen::VectorXd Zero() const { return Eigen::VectorXd::Zero(qp_.NumVariables()); }

  void Row(const Eigen::VectorXd& a, Sense sense, std::string name, std::string dual, RowKind kind,
           int period = -1, int generator = -1, int variable = -1) {
    pending_a_.push_back(a);
    ConstraintIndex index{std::move(name), std::move(dual), kind, sense,
                          static_cast<int>(qp_.rows.size()), period, generator, variable};
    qp_.rows.push_back(std::move(index));
  }

  void AddRows() {
    const int P = NumPeriods();
    // T_i (l_i - sum_g q_gi + q_i^+ - q_i^-) = 0
    for (int i = 0; i < P; ++i) {
      Eigen::VectorXd a = Zero();
      a(load_[i]) = T(i);
      for (int g = 0; g < NumGens(); ++g) a(gen_[g][i]) = -T(i);
      if (s_.storage) {
        a(charge_[i]) = T(i);
        a(discharge_[i]) = -T(i);
      }
      Row(a, Sense::kEquality, "balance[" + PeriodName(i) + "]", "lambda[" + PeriodName(i) + "]",
          RowKind::kBalance, i);
    }
    // q_gi T_i <= K_g T_i
    for (int g = 0; g < NumGens(); ++g) {
      for (int i = 0; i < P; ++i) {
        Eigen::VectorXd a = Zero();
        a(gen_[g][i]) = T(i);
        a(gen_cap_[g]) = -T(i);
        const std::string tag = GenName(g) + "," + PeriodName(i);
        Row(a, Sense::kLessEqual, "genmax[" + tag + "]", "pi[" + tag + "]", RowKind::kGenMax, i, g);
      }
    }
    // -q_gi T_i <= 0
    for (int g = 0; g < NumGens(); ++g) {
      for (int i = 0; i < P; ++i) {
        Eigen::VectorXd a = Zero();
        a(gen_[g][i]) = -T(i);
        const std::string tag = GenName(g) + "," + PeriodName(i);
        Row(a, Sense::kLessEqual, "genmin[" + tag + "]", "psi[" + tag + "]", RowKind::kGenMin, i,
            g);
      }
    }
    if (s_.storage) AddStorageRows();

    std::vector<int> capacity_columns = gen_cap_;
    if (s_.storage) {
      capacity_columns.push_back(storage_cap_);
      capacity_columns.push_back(energy_cap_);
    }
    for (int column : capacity_columns) {
      Eigen::VectorXd a = Zero();
      a(column) = -1.0;
      const std::string& var = qp_.variables[column].name;
      Row(a, Sense::kLessEqual, "capacity_nonneg[" + var + "]", "nu[" + var + "]",
          RowKind::kCapacityNonneg, -1, qp_.variables[column].generator, column);
    }
    for (int i = 0; i < P; ++i) {
      Eigen::VectorXd a = Zero();
      a(load_[i]) = -1.0;
      Row(a, Sense::kLessEqual, "ell_nonneg[" + PeriodName(i) + "]",
          "nu[ell," + PeriodName(i) + "]", RowKind::kConsumptionNonneg, i, -1, load_[i]);
    }

    qp_.constraints = Eigen::MatrixXd(pending_a_.size(), qp_.NumVariables());
    for (std::size_t r = 0; r < pending_a_.size(); ++r) {
      qp_.constraints.row(r) = pending_a_[r].transpose();
    }
    qp_.rhs = Eigen::VectorXd::Zero(pending_a_.size());
  }

  void AddStorageRows() {
    const int P = NumPeriods();
    const double eta = s_.storage->efficiency;
    auto per_period = [&](const std::vector<int>& cols, double sign, bool with_cap,
                          const char* name, const char* dual, RowKind kind) {
      for (int i = 0; i < P; ++i) {
        Eigen::VectorXd a = Zero();
        a(cols[i]) = sign * T(i);
        if (with_cap) a(storage_cap_) = -T(i);
        Row(a, Sense::kLessEqual, std::string(name) + "[" + PeriodName(i) + "]",
            std::string(dual) + "[" + PeriodName(i) + "]", kind, i);
      }
    };
    per_period(charge_, 1.0, true, "chargemax", "sigma_plus", RowKind::kChargeMax);
    per_period(discharge_, 1.0, true, "dischargemax", "sigma_minus", RowKind::kDischargeMax);
    per_period(charge_, -1.0, false, "chargemin", "zeta_plus", RowKind::kChargeMin);
    per_period(discharge_, -1.0, false, "dischargemin", "zeta_minus", RowKind::kDischargeMin);

    // sum_i (q_i^- T_i - q_i^+ eta T_i) <= 0
    Eigen::VectorXd rte = Zero();
    // sum_i q_i^+ eta T_i <= E
    Eigen::VectorXd e_charge = Zero();
    // sum_i q_i^- T_i <= E
    Eigen::VectorXd e_discharge = Zero();
    for (int i = 0; i < P; ++i) {
      rte(discharge_[i]) = T(i);
      rte(charge_[i]) = -eta * T(i);
      e_charge(charge_[i]) = eta * T(i);
      e_discharge(discharge_[i]) = T(i);
    }
    e_charge(energy_cap_) = -1.0;
    e_discharge(energy_cap_) = -1.0;
    Row(rte, Sense::kLessEqual, "rte", "mu", RowKind::kRoundTrip);
    Row(e_charge, Sense::kLessEqual, "energy_charge", "gamma_plus", RowKind::kEnergyCharge);
    Row(e_discharge, Sense::kLessEqual, "energy_discharge", "gamma_minus",
        RowKind::kEnergyDischarge);
  }

  const Scenario& s_;
  QuadraticProgram qp_;
  std::vector<Eigen::VectorXd> pending_a_;
  std::vector<int> gen_cap_;
  int storage_cap_ = -1;
  int energy_cap_ = -1;
  std::vector<std::vector<int>> gen_;
  std::vector<int> charge_;
  std::vector<int> discharge_;
  std::vector<int> load_;
};

}  // namespace

QuadraticProgram BuildProgram(const Scenario& scenario) {
  const auto violations = ValidateScenario(scenario);
  if (!violations.empty()) {
    throw ValidationError(violations.front().field, violations.front().message);
  }
  return ProgramBuilder(scenario).Build();
}

QuadraticProgram MakeProgram(const Eigen::MatrixXd& quadratic, const Eigen::VectorXd& linear) {
  if (quadratic.rows() != linear.size() || quadratic.cols() != linear.size()) {
    throw std::invalid_argument("MakeProgram: Q must be square and match c");
  }
  QuadraticProgram qp;
  qp.quadratic = quadratic;
  qp.linear = linear;
  qp.constraints = Eigen::MatrixXd(0, linear.size());
  qp.rhs = Eigen::VectorXd(0);
  for (int j = 0; j < linear.size(); ++j) {
    qp.variables.push_back({fmt::format("x{}", j), VarKind::kConsumption, j, -1, -1});
  }
  return qp;
}

double ObjectiveValue(const QuadraticProgram& qp, const Eigen::VectorXd& x) {
  if (x.size() != qp.NumVariables()) {
    throw std::invalid_argument(fmt::format("ObjectiveValue: point has {} entries, program has {}",
                                            x.size(), qp.NumVariables()));
  }
  return 0.5 * x.dot(qp.quadratic * x) + qp.linear.dot(x);
}

std::string DumpProgram(const QuadraticProgram& qp) {
  std::ostringstream out;
  out << "maximize\n";
  for (int j = 0; j < qp.NumVariables(); ++j) {
    out << fmt::format("  {:<28} c={:.10g}", qp.variables[j].name, qp.linear(j));
    if (qp.quadratic(j, j) != 0.0) out << fmt::format(" Q={:.10g}", qp.quadratic(j, j));
    out << '\n';
  }
  out << "subject to\n";
  for (const ConstraintIndex& r : qp.rows) {
    out << fmt::format("  {:<3} {:<34}", r.row, r.name);
    for (int j = 0; j < qp.NumVariables(); ++j) {
      const double a = qp.constraints(r.row, j);
      if (a != 0.0) out << fmt::format(" {:+.10g}*{}", a, qp.variables[j].name);
    }
    out << fmt::format(" {} {:.10g}  [{}]\n", r.sense == Sense::kEquality ? "=" : "<=",
                       qp.rhs(r.row), r.dual_symbol);
  }
  return out.str();
}

}  // namespace peakstore
