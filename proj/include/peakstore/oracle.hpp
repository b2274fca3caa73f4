#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakstore/model.hpp"

// Brute-force reference for the QP solver. Shares no code with program/solver:
// dispatch for fixed capacities is solved by merit-order case analysis and the
// capacities are found by exhaustive grid search.
namespace peakstore::oracle {

struct Capacities {
  std::vector<double> generator;  // MW, indexed like Scenario::generators
  double storage_power = 0.0;     // MW
  double storage_energy = 0.0;    // MWh
};

struct Dispatch {
  std::vector<double> load;                     // MW per period
  std::vector<std::vector<double>> generation;  // [generator][period], MW
  std::vector<double> charge;                   // MW per period
  std::vector<double> discharge;                // MW per period
  std::vector<double> price;                    // marginal value of energy, $/MWh
  double operating_welfare = 0.0;               // $ per cycle, before investment
  double welfare = 0.0;                         // $ per cycle, net of investment
};

// Welfare-maximal operation of the given fleet. Ties prefer less storage throughput.
Dispatch InnerDispatch(const Scenario& scenario, const Capacities& capacities);

// Axes: one per generator capacity, then (with storage) storage power and
// storage duration h = E / K_s. Every axis starts at zero.
struct GridSpec {
  std::vector<std::string> axes;
  std::vector<double> upper;
  int points_per_axis = 51;  // coarse step = upper / (points - 1)
  int passes = 2;            // later passes span +-1 previous step around the incumbent
};

// Upper bounds from the largest choke load and the longest useful storage duration.
GridSpec DefaultGrid(const Scenario& scenario);

struct PassSummary {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> step;
  double best_welfare = 0.0;
};

struct OracleResult {
  double best_welfare = 0.0;  // $ per cycle
  Capacities best_capacities;
  Dispatch best_dispatch;
  GridSpec grid;
  std::vector<PassSummary> passes;
  long long evaluations = 0;
};

// Throws std::invalid_argument for an empty grid.
OracleResult GridSearch(const Scenario& scenario, const GridSpec& grid);
OracleResult GridSearch(const Scenario& scenario);

nlohmann::json ToJson(const OracleResult& result);

}  // namespace peakstore::oracle
