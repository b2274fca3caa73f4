#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakstore/analytics.hpp"
#include "peakstore/model.hpp"
#include "peakstore/solver.hpp"

namespace peakstore {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool warning_only = false;  // reported, but never fails a run
  std::string detail;
};

struct ReportOptions {
  SolverOptions solver;
  IdentityTolerances identity;
};

// Solved scenario with every identity evaluated.
struct EquilibriumReport {
  std::string label;  // "with_storage" / "without_storage"
  Scenario scenario;
  Equilibrium eq;
  WelfareReport welfare;
  KktReport kkt;
  AssumptionReport assumptions;
  std::optional<PriceDecomposition> decomposition;
  std::optional<CostRecoveryLedger> cost_recovery;
  SigmaPattern sigma;
  PeakerParity parity;
  int iterations = 0;
  std::vector<CheckResult> checks;

  double Price(PeriodLabel label) const { return eq.price[scenario.PeriodIndex(label)]; }
  bool Passed() const;
};

// Builds, solves and verifies. Throws SolverError / ValidationError.
EquilibriumReport SolveScenario(const Scenario& scenario, std::string label,
                                const ReportOptions& options = {});

nlohmann::json ToJson(const EquilibriumReport& report);

// Rounded numbers shared by every rendering of a table.
struct Table {
  std::string title;
  std::vector<std::string> columns;  // first column holds row labels
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> cells;  // nullopt renders as "--"
  std::vector<int> decimals;                              // per numeric column

  std::string ToText() const;
  std::string ToCsv() const;
  nlohmann::json ToJson() const;
};

// Prices and dispatch per period: one row per scenario and period, columns
// lambda, ell, q_<gen>..., q_plus, q_minus. Quantities in GW.
Table OperatingTable(const std::vector<EquilibriumReport>& reports);
// Capacities per scenario in GW / GWh.
Table CapacityTable(const std::vector<EquilibriumReport>& reports);
// Identity and KKT checks of every scenario.
Table ChecksTable(const std::vector<EquilibriumReport>& reports);

// Short column tag for a generator: B / P for a two-unit fleet, the name otherwise.
std::string GeneratorTag(const Scenario& scenario, std::size_t g);

// Stepwise 24-hour price schedule. The on-peak period occupies one
// contiguous block starting at `peak_start_hour` (wrapping past midnight).
struct PriceSegment {
  double hour_start = 0.0;
  double hour_end = 0.0;
  PeriodLabel period = PeriodLabel::kOffPeak;
  std::vector<double> prices;         // one per series
  std::optional<double> difference;   // series[0] - series[1]
  std::string region;                 // storage_increases / storage_decreases / none
};

struct PriceSeries {
  std::vector<std::string> series;  // scenario labels
  std::vector<PriceSegment> segments;

  std::string ToCsv() const;
  std::string ToText() const;
  nlohmann::json ToJson() const;
};

PriceSeries EmitPriceSeries(const EquilibriumReport& primary,
                            const EquilibriumReport* counterfactual = nullptr,
                            double peak_start_hour = 17.0);

}  // namespace peakstore
