#include "peakstore/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace peakstore {

namespace {

constexpr double kMwPerGw = 1000.0;

double Round(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double r = std::round(value * scale) / scale;
  return r == 0.0 ? 0.0 : r;  // no "-0.000"
}

CheckResult Check(std::string name, double value, double tolerance, bool passed,
                  bool warning_only = false, std::string detail = {}) {
  return {std::move(name), value, tolerance, passed, warning_only, std::move(detail)};
}

void AddChecks(EquilibriumReport& r, const ReportOptions& opt) {
  const SolverOptions& tol = opt.solver;
  const IdentityTolerances& id = opt.identity;
  auto& c = r.checks;

  c.push_back(Check("kkt.stationarity", r.kkt.max_stationarity, tol.stationarity_tol,
                    r.kkt.max_stationarity <= tol.stationarity_tol));
  c.push_back(Check("kkt.primal_feasibility", r.kkt.max_primal_infeasibility, tol.feasibility_tol,
                    r.kkt.max_primal_infeasibility <= tol.feasibility_tol));
  c.push_back(Check("kkt.dual_feasibility", r.kkt.max_dual_infeasibility, tol.stationarity_tol,
                    r.kkt.max_dual_infeasibility <= tol.stationarity_tol));
  c.push_back(Check("kkt.complementarity", r.kkt.max_complementarity, tol.complementarity_tol,
                    r.kkt.max_complementarity <= tol.complementarity_tol));
  const double gap = std::abs(r.kkt.primal_objective - r.kkt.lagrangian_value) /
                     std::max(1.0, std::abs(r.kkt.primal_objective));
  c.push_back(Check("strong_duality", gap, 1e-6, gap <= 1e-6));

  c.push_back(Check("peaker_parity", r.parity.Gap(),
                    id.relative * std::max(1.0, std::abs(r.parity.parity_price)), r.parity.holds,
                    false,
                    r.parity.peaker_built ? "equality (peaker built)"
                                          : "inequality (entry unprofitable)"));

  if (r.decomposition) {
    const bool warn = !r.assumptions.AllHold();
    const std::string why = warn ? "assumptions do not all hold" : "";
    c.push_back(Check("price_decomposition", r.decomposition->RelativeResidual(), id.relative,
                      r.decomposition->RelativeResidual() <= id.relative, warn, why));
    c.push_back(Check("cost_recovery", r.cost_recovery->RelativeGap(), id.relative,
                      r.cost_recovery->Holds(id), warn, why));
    c.push_back(Check("sigma_pattern", r.sigma.sigma_minus_onp, id.dual, r.sigma.pattern_holds,
                      warn, why));
    const double worst = std::max(std::abs(r.sigma.kkt3_residual), std::abs(r.sigma.kkt4_residual));
    const bool built = r.eq.storage_power > id.binding;
    c.push_back(Check("kkt3_kkt4_aggregates", worst, id.dual, r.sigma.aggregates_hold, !built,
                      built ? "" : "no storage built"));
    c.push_back(Check("energy_sizing", r.cost_recovery->energy_sizing_residual, id.binding,
                      std::abs(r.cost_recovery->energy_sizing_residual) <= id.binding, warn, why));
  }
  for (const Violation& w : r.welfare.warnings) {
    c.push_back(Check("choke_price." + w.field, 0.0, 0.0, false, true, w.message));
  }
}

}  // namespace

bool EquilibriumReport::Passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed || c.warning_only; });
}

EquilibriumReport SolveScenario(const Scenario& scenario, std::string label,
                                const ReportOptions& options) {
  EquilibriumReport r;
  r.label = std::move(label);
  r.scenario = scenario;
  const QuadraticProgram qp = BuildProgram(scenario);
  spdlog::debug("{}: {} variables, {} rows", r.label, qp.NumVariables(), qp.NumRows());
  const PrimalDualSolution sol = Solve(qp, options.solver);
  spdlog::debug("{}: solved in {} iterations, objective {:.6f}", r.label, sol.iterations,
                sol.objective);
  r.iterations = sol.iterations;
  r.eq = ExtractEquilibrium(scenario, qp, sol);
  r.kkt = ComputeKktResiduals(qp, sol);
  r.welfare = ComputeWelfare(scenario, r.eq);
  r.assumptions = CheckAssumptions(scenario, r.eq, options.identity);
  r.parity = CheckPeakerParity(scenario, r.eq, options.identity);
  if (scenario.HasStorage()) {
    r.decomposition = DecomposeOnPeakPrice(scenario, r.eq, options.identity);
    r.cost_recovery = CheckCostRecovery(scenario, r.eq, options.identity);
    r.sigma = CheckSigmaPattern(scenario, r.eq, options.identity);
  }
  AddChecks(r, options);
  return r;
}

nlohmann::json ToJson(const EquilibriumReport& r) {
  using nlohmann::json;
  const Scenario& s = r.scenario;
  json periods = json::array();
  for (std::size_t i = 0; i < s.periods.size(); ++i) {
    json p = {{"label", ToString(s.periods[i].label)},
              {"lambda", r.eq.price[i]},
              {"ell", r.eq.load[i]}};
    for (std::size_t g = 0; g < s.generators.size(); ++g) {
      p["q"][s.generators[g].name] = r.eq.generation[g][i];
    }
    if (r.eq.has_storage) {
      p["q_plus"] = r.eq.charge[i];
      p["q_minus"] = r.eq.discharge[i];
    }
    periods.push_back(p);
  }
  json capacities;
  for (std::size_t g = 0; g < s.generators.size(); ++g) {
    capacities[s.generators[g].name] = r.eq.gen_capacity[g];
  }
  if (r.eq.has_storage) {
    capacities["K_s"] = r.eq.storage_power;
    capacities["E"] = r.eq.storage_energy;
  }

  const WelfareReport& w = r.welfare;
  json out = {
      {"label", r.label},
      {"units", {{"price", "$/MWh"}, {"power", "MW"}, {"energy", "MWh"}, {"welfare", "$"}}},
      {"periods", periods},
      {"capacities", capacities},
      {"iterations", r.iterations},
      {"welfare",
       {{"per_cycle",
         {{"gross_surplus", w.gross_surplus},
          {"operating_cost", w.operating_cost},
          {"investment_cost", w.investment_cost},
          {"net_welfare", w.net_welfare},
          {"consumer_surplus", w.consumer_surplus},
          {"generator_surplus", w.generator_surplus},
          {"storage_surplus", w.storage_surplus}}},
        {"annual",
         {{"gross_surplus", w.Annual(w.gross_surplus)},
          {"operating_cost", w.Annual(w.operating_cost)},
          {"investment_cost", w.Annual(w.investment_cost)},
          {"net_welfare", w.Annual(w.net_welfare)}}}}},
      {"kkt",
       {{"max_stationarity", r.kkt.max_stationarity},
        {"max_primal_infeasibility", r.kkt.max_primal_infeasibility},
        {"max_dual_infeasibility", r.kkt.max_dual_infeasibility},
        {"max_complementarity", r.kkt.max_complementarity},
        {"primal_objective", r.kkt.primal_objective},
        {"lagrangian_value", r.kkt.lagrangian_value}}},
      {"assumptions",
       {{"cycling", r.assumptions.cycling},
        {"offpeak_duration", r.assumptions.offpeak_duration},
        {"no_carryover", r.assumptions.no_carryover},
        {"on_peak_hours", r.assumptions.on_peak_hours},
        {"eta_off_peak_hours", r.assumptions.eta_off_peak_hours},
        {"discharged_energy", r.assumptions.discharged_energy},
        {"recoverable_energy", r.assumptions.recoverable_energy}}},
      {"peaker_parity",
       {{"peaker", r.parity.peaker},
        {"parity_price", r.parity.parity_price},
        {"lambda_onp", r.parity.lambda_onp},
        {"peaker_capacity", r.parity.peaker_capacity},
        {"peaker_built", r.parity.peaker_built},
        {"holds", r.parity.holds}}},
  };
  for (const NamedResidual& c : r.kkt.storage_conditions) out["kkt"]["storage"][c.label] = c.value;
  if (r.decomposition) {
    const PriceDecomposition& d = *r.decomposition;
    out["price_decomposition"] = {{"lambda_onp", d.lambda_onp},
                                  {"lambda_offp", d.lambda_offp},
                                  {"variable_component", d.variable_component},
                                  {"fixed_energy_component", d.fixed_energy_component},
                                  {"fixed_power_component", d.fixed_power_component},
                                  {"residual", d.residual},
                                  {"assumptions_hold", d.assumptions_hold}};
  }
  if (r.cost_recovery) {
    const CostRecoveryLedger& c = *r.cost_recovery;
    out["cost_recovery"] = {{"investment_total", c.investment_total},
                            {"onpeak_revenue", c.onpeak_revenue},
                            {"offpeak_cost", c.offpeak_cost},
                            {"operating_profit", c.operating_profit},
                            {"gap", c.gap},
                            {"energy_matching_residual", c.energy_matching_residual},
                            {"full_discharge_residual", c.full_discharge_residual},
                            {"energy_sizing_residual", c.energy_sizing_residual}};
  }
  if (r.sigma.applicable) {
    out["sigma_pattern"] = {{"sigma_minus_onp", r.sigma.sigma_minus_onp},
                            {"sigma_plus_onp", r.sigma.sigma_plus_onp},
                            {"sigma_plus_offp", r.sigma.sigma_plus_offp},
                            {"sigma_minus_offp", r.sigma.sigma_minus_offp},
                            {"pattern_holds", r.sigma.pattern_holds},
                            {"kkt3_residual", r.sigma.kkt3_residual},
                            {"kkt4_residual", r.sigma.kkt4_residual}};
  }
  json checks = json::array();
  for (const CheckResult& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"tolerance", c.tolerance},
                      {"passed", c.passed},
                      {"warning_only", c.warning_only},
                      {"detail", c.detail}});
  }
  out["checks"] = checks;
  out["passed"] = r.Passed();
  return out;
}

std::string GeneratorTag(const Scenario& s, std::size_t g) {
  if (s.generators.size() == 2 && s.BaseloadIndex() != s.PeakerIndex()) {
    return g == s.BaseloadIndex() ? "B" : "P";
  }
  return s.generators[g].name;
}

namespace {

std::string FormatCell(const std::optional<double>& v, int decimals) {
  return v ? fmt::format("{:.{}f}", *v, decimals) : std::string("--");
}

}  // namespace

std::string Table::ToText() const {
  std::vector<std::size_t> width(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
  for (std::size_t r = 0; r < labels.size(); ++r) {
    width[0] = std::max(width[0], labels[r].size());
    for (std::size_t c = 1; c < columns.size(); ++c) {
      width[c] = std::max(width[c], FormatCell(cells[r][c - 1], decimals[c - 1]).size());
    }
  }
  std::ostringstream out;
  out << title << '\n';
  std::size_t total = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << (c == 0 ? fmt::format("{:<{}}", columns[c], width[c])
                   : fmt::format("  {:>{}}", columns[c], width[c]));
    total += width[c] + (c == 0 ? 0 : 2);
  }
  out << '\n' << std::string(total, '-') << '\n';
  for (std::size_t r = 0; r < labels.size(); ++r) {
    out << fmt::format("{:<{}}", labels[r], width[0]);
    for (std::size_t c = 1; c < columns.size(); ++c) {
      out << fmt::format("  {:>{}}", FormatCell(cells[r][c - 1], decimals[c - 1]), width[c]);
    }
    out << '\n';
  }
  return out.str();
}

std::string Table::ToCsv() const {
  std::ostringstream out;
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (std::size_t r = 0; r < labels.size(); ++r) {
    out << labels[r];
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      out << ',' << (cells[r][c] ? fmt::format("{:.{}f}", *cells[r][c], decimals[c]) : "");
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json Table::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < labels.size(); ++r) {
    nlohmann::json row = {{columns[0], labels[r]}};
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      row[columns[c + 1]] = cells[r][c] ? nlohmann::json(*cells[r][c]) : nlohmann::json(nullptr);
    }
    rows.push_back(row);
  }
  return {{"title", title}, {"rows", rows}};
}

Table OperatingTable(const std::vector<EquilibriumReport>& reports) {
  Table t;
  t.title = "Prices and dispatch ($/MWh, GW)";
  if (reports.empty()) return t;
  const Scenario& ref = reports.front().scenario;
  t.columns = {"scenario/period", "lambda", "ell"};
  // Order generators by variable cost descending so a two-unit fleet reads q_P, q_B.
  std::vector<std::size_t> order(ref.generators.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ref.generators[a].variable_cost > ref.generators[b].variable_cost;
  });
  for (std::size_t g : order) t.columns.push_back("q_" + GeneratorTag(ref, g));
  t.columns.push_back("q_plus");
  t.columns.push_back("q_minus");
  t.decimals = std::vector<int>(t.columns.size() - 1, 3);
  t.decimals[0] = 2;

  for (const EquilibriumReport& r : reports) {
    for (PeriodLabel label : {PeriodLabel::kOnPeak, PeriodLabel::kOffPeak}) {
      const std::size_t i = r.scenario.PeriodIndex(label);
      std::vector<std::optional<double>> row;
      row.push_back(Round(r.eq.price[i], 2));
      row.push_back(Round(r.eq.load[i] / kMwPerGw, 3));
      for (std::size_t g : order) row.push_back(Round(r.eq.generation[g][i] / kMwPerGw, 3));
      if (r.eq.has_storage) {
        row.push_back(Round(r.eq.charge[i] / kMwPerGw, 3));
        row.push_back(Round(r.eq.discharge[i] / kMwPerGw, 3));
      } else {
        row.push_back(std::nullopt);
        row.push_back(std::nullopt);
      }
      t.labels.push_back(r.label + "/" + std::string(ToString(label)));
      t.cells.push_back(std::move(row));
    }
  }
  return t;
}

Table CapacityTable(const std::vector<EquilibriumReport>& reports) {
  Table t;
  t.title = "Capacity investments (GW, GWh)";
  if (reports.empty()) return t;
  const Scenario& ref = reports.front().scenario;
  t.columns = {"scenario"};
  std::vector<std::size_t> order(ref.generators.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ref.generators[a].variable_cost < ref.generators[b].variable_cost;
  });
  for (std::size_t g : order) t.columns.push_back("K_" + GeneratorTag(ref, g));
  t.columns.push_back("K_s");
  t.columns.push_back("E");
  t.decimals = std::vector<int>(t.columns.size() - 1, 3);
  for (const EquilibriumReport& r : reports) {
    std::vector<std::optional<double>> row;
    for (std::size_t g : order) row.push_back(Round(r.eq.gen_capacity[g] / kMwPerGw, 3));
    if (r.eq.has_storage) {
      row.push_back(Round(r.eq.storage_power / kMwPerGw, 3));
      row.push_back(Round(r.eq.storage_energy / kMwPerGw, 3));
    } else {
      row.push_back(std::nullopt);
      row.push_back(std::nullopt);
    }
    t.labels.push_back(r.label);
    t.cells.push_back(std::move(row));
  }
  return t;
}

Table ChecksTable(const std::vector<EquilibriumReport>& reports) {
  Table t;
  t.title = "Verification checks (value, tolerance, pass=1)";
  t.columns = {"scenario/check", "value", "tolerance", "pass"};
  t.decimals = {10, 10, 0};
  for (const EquilibriumReport& r : reports) {
    for (const CheckResult& c : r.checks) {
      t.labels.push_back(r.label + "/" + c.name + (c.warning_only ? " (warning)" : ""));
      t.cells.push_back({c.value, c.tolerance, c.passed ? 1.0 : 0.0});
    }
  }
  return t;
}

PriceSeries EmitPriceSeries(const EquilibriumReport& primary,
                            const EquilibriumReport* counterfactual, double peak_start_hour) {
  PriceSeries out;
  out.series.push_back(primary.label);
  if (counterfactual) out.series.push_back(counterfactual->label);

  const double on_hours = std::min(primary.scenario.OnPeak().duration_hours, 24.0);
  const double start = std::fmod(std::fmod(peak_start_hour, 24.0) + 24.0, 24.0);
  const double end = start + on_hours;
  // Breakpoints of the 24-hour axis.
  std::vector<std::pair<double, double>> on_blocks;
  if (end <= 24.0) {
    on_blocks.emplace_back(start, end);
  } else {
    on_blocks.emplace_back(0.0, end - 24.0);
    on_blocks.emplace_back(start, 24.0);
  }
  std::vector<double> cuts{0.0, 24.0};
  for (const auto& [a, b] : on_blocks) {
    cuts.push_back(a);
    cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    PriceSegment seg;
    seg.hour_start = cuts[k];
    seg.hour_end = cuts[k + 1];
    const double mid = 0.5 * (seg.hour_start + seg.hour_end);
    seg.period = std::any_of(on_blocks.begin(), on_blocks.end(),
                             [mid](const auto& b) { return mid > b.first && mid < b.second; })
                     ? PeriodLabel::kOnPeak
                     : PeriodLabel::kOffPeak;
    seg.prices.push_back(primary.Price(seg.period));
    if (counterfactual) {
      seg.prices.push_back(counterfactual->Price(seg.period));
      seg.difference = seg.prices[0] - seg.prices[1];
      seg.region = *seg.difference > 0.0   ? "storage_increases"
                   : *seg.difference < 0.0 ? "storage_decreases"
                                           : "none";
    }
    out.segments.push_back(std::move(seg));
  }
  return out;
}

std::string PriceSeries::ToCsv() const {
  std::ostringstream out;
  out << "hour_start,hour_end,period";
  for (const std::string& s : series) out << ",price_" << s;
  out << ",difference,region\n";
  for (const PriceSegment& seg : segments) {
    out << fmt::format("{},{},{}", seg.hour_start, seg.hour_end, ToString(seg.period));
    for (double p : seg.prices) out << fmt::format(",{:.6f}", p);
    out << ',' << (seg.difference ? fmt::format("{:.6f}", *seg.difference) : "") << ','
        << seg.region << '\n';
  }
  return out.str();
}

std::string PriceSeries::ToText() const {
  std::ostringstream out;
  out << "24-hour price schedule ($/MWh)\n";
  for (const PriceSegment& seg : segments) {
    out << fmt::format("{:>5.1f}-{:<5.1f} {:<9}", seg.hour_start, seg.hour_end,
                       ToString(seg.period));
    for (std::size_t k = 0; k < seg.prices.size(); ++k) {
      out << fmt::format("  {}={:.2f}", series[k], seg.prices[k]);
    }
    if (seg.difference) out << fmt::format("  diff={:+.2f} ({})", *seg.difference, seg.region);
    out << '\n';
  }
  return out.str();
}

nlohmann::json PriceSeries::ToJson() const {
  nlohmann::json segs = nlohmann::json::array();
  for (const PriceSegment& seg : segments) {
    nlohmann::json j = {{"hour_start", seg.hour_start},
                        {"hour_end", seg.hour_end},
                        {"period", ToString(seg.period)},
                        {"prices", seg.prices}};
    j["difference"] = seg.difference ? nlohmann::json(*seg.difference) : nlohmann::json(nullptr);
    j["region"] = seg.region;
    segs.push_back(j);
  }
  return {{"series", series}, {"segments", segs}};
}

}  // namespace peakstore
