#pragma once

#include <string>

#include "peakstore/model.hpp"

namespace peakstore::fixture {

// Two-period system with the bundled cost table (baseload, peaker, storage).
inline Scenario TableScenario() {
  Scenario s;
  s.name = "table";
  s.cycles_n = 365;
  s.periods = {{PeriodLabel::kOnPeak, 4.0, CalibrateDemand(15000.0, 100.0, 0.1)},
               {PeriodLabel::kOffPeak, 20.0, CalibrateDemand(10000.0, 20.0, 0.1)}};
  s.generators = {{"baseload", 20.0, 240000.0}, {"peaker", 100.0, 120000.0}};
  s.storage = StorageTech{36000.0, 31000.0, 0.85};
  return s;
}

inline std::string ScenarioFile() { return std::string(PEAKSTORE_SCENARIO_DIR) + "/paper_table1.json"; }

}  // namespace peakstore::fixture
