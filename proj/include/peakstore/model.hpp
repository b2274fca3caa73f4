#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace peakstore {

// Units used throughout: MW, MWh, hours, $/MWh, $/MW-year, $/MWh-year.

// Thrown for malformed inputs. `field` names the offending input.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Inverse demand p(l) = intercept_a - slope_b * l.
struct LinearDemand {
  double intercept_a = 0.0;  // $/MWh
  double slope_b = 0.0;      // $/MWh per MW

  double Price(double load) const { return intercept_a - slope_b * load; }
  // Consumption at which the price reaches zero.
  double ChokeLoad() const { return intercept_a / slope_b; }
};

enum class PeriodLabel { kOnPeak, kOffPeak };

std::string_view ToString(PeriodLabel label);
PeriodLabel ParsePeriodLabel(std::string_view text);

struct Period {
  PeriodLabel label = PeriodLabel::kOnPeak;
  double duration_hours = 0.0;
  LinearDemand demand;
};

struct GeneratorTech {
  std::string name;
  double variable_cost = 0.0;   // $/MWh
  double inv_cost_power = 0.0;  // $/MW-year
};

struct StorageTech {
  double inv_cost_power = 0.0;   // $/MW-year
  double inv_cost_energy = 0.0;  // $/MWh-year
  double efficiency = 1.0;       // round-trip, in (0, 1]
};

struct Scenario {
  std::string name;
  std::vector<Period> periods;
  std::vector<GeneratorTech> generators;
  std::optional<StorageTech> storage;
  int cycles_n = 1;

  bool HasStorage() const { return storage.has_value(); }

  // Index into `periods`; throws ValidationError if the label is missing.
  std::size_t PeriodIndex(PeriodLabel label) const;
  const Period& OnPeak() const { return periods[PeriodIndex(PeriodLabel::kOnPeak)]; }
  const Period& OffPeak() const { return periods[PeriodIndex(PeriodLabel::kOffPeak)]; }

  // Generators with the lowest and highest variable cost (first one wins ties).
  std::size_t BaseloadIndex() const;
  std::size_t PeakerIndex() const;

  // Same system with the storage technology removed.
  Scenario WithoutStorage() const;
};

// Linear demand through (baseline_load, baseline_price) with point elasticity
// magnitude `elasticity` at that point.
LinearDemand CalibrateDemand(double baseline_load, double baseline_price, double elasticity);

// Integral of the inverse demand from 0 to `consumption`, in $/h.
double GrossSurplus(const LinearDemand& demand, double consumption);

struct Violation {
  std::string field;
  std::string message;
};

// Empty iff every invariant of the scenario types holds.
std::vector<Violation> ValidateScenario(const Scenario& scenario);

// Warnings for consumption levels past the choke price of a period's demand.
std::vector<Violation> ChokeWarnings(const Scenario& scenario, const std::vector<double>& loads);

// Scenario file (JSON). Calibration-form demands are resolved to {a, b}.
// Throws nlohmann::json::parse_error on malformed text and ValidationError
// on schema or invariant violations.
Scenario ParseScenario(const nlohmann::json& doc);
Scenario ParseScenarioText(std::string_view text);
Scenario LoadScenario(const std::string& path);
nlohmann::json ScenarioToJson(const Scenario& scenario);

}  // namespace peakstore
