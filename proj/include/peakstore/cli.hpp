#pragma once

#include <ostream>
#include <string>

namespace peakstore::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kInputError = 2,  // usage, parse or validation
  kSolverFailed = 3,
};

struct RunConfig {
  std::string scenario_path;
  bool counterfactual = false;    // also solve the scenario without storage
  bool no_storage_only = false;   // solve only the scenario without storage
  std::string format = "text";    // text | json | csv
  std::string output_dir;         // empty: nothing written to disk
  bool oracle = false;            // cross-check each optimum by grid search
  double tolerance_prices = 1.0;      // $/MWh, against the reference block
  double tolerance_quantities = 0.1;  // GW
  double tolerance_energy = 0.2;      // GWh
  double peak_start_hour = 17.0;
};

int Run(const RunConfig& config, std::ostream& out, std::ostream& err);

// argv front end: `run <scenario.json> [options]`.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace peakstore::cli
