#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "peakstore/model.hpp"
#include "peakstore/program.hpp"
#include "peakstore/solver.hpp"

namespace peakstore {

// Raised when a storage identity is requested for a scenario without storage.
class NotApplicableError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Named view of a solved program. Quantities are in MW / MWh, prices in $/MWh.
// Vectors are indexed like Scenario::periods (and Scenario::generators).
struct Equilibrium {
  std::vector<double> price;  // balance-row duals
  std::vector<double> load;
  std::vector<std::vector<double>> generation;  // [generator][period]
  std::vector<double> gen_capacity;
  bool has_storage = false;
  double storage_power = 0.0;
  double storage_energy = 0.0;
  std::vector<double> charge;
  std::vector<double> discharge;
  std::vector<double> sigma_plus;
  std::vector<double> sigma_minus;
  std::vector<double> zeta_plus;
  std::vector<double> zeta_minus;
  double mu = 0.0;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;
  double objective = 0.0;  // $ per cycle
};

Equilibrium ExtractEquilibrium(const Scenario& scenario, const QuadraticProgram& qp,
                               const PrimalDualSolution& sol);

struct IdentityTolerances {
  double binding = 1e-6;   // MW / MWh slack treated as binding
  double relative = 1e-4;  // identity residuals relative to their scale
  double dual = 1e-7;      // aggregate dual identities
};

struct AssumptionReport {
  // 1: storage is built, charges off-peak and discharges on-peak.
  bool cycling = false;
  double storage_power = 0.0;
  double charge_off_peak = 0.0;
  double discharge_on_peak = 0.0;
  // 2: T_on < eta T_off.
  bool offpeak_duration = false;
  double on_peak_hours = 0.0;
  double eta_off_peak_hours = 0.0;
  // 3: all recoverable stored energy is discharged within the cycle.
  bool no_carryover = false;
  double discharged_energy = 0.0;
  double recoverable_energy = 0.0;

  bool AllHold() const { return cycling && offpeak_duration && no_carryover; }
};

AssumptionReport CheckAssumptions(const Scenario& scenario, const Equilibrium& eq,
                                  const IdentityTolerances& tol = {});

struct PriceDecomposition {
  double lambda_onp = 0.0;
  double lambda_offp = 0.0;
  double variable_component = 0.0;      // lambda_offp / eta
  double fixed_energy_component = 0.0;  // I_sE / n
  double fixed_power_component = 0.0;   // I_sq / (n T_on)
  double residual = 0.0;                // lambda_onp - sum of components
  bool assumptions_hold = true;

  double FixedComponent() const { return fixed_energy_component + fixed_power_component; }
  double Predicted() const { return variable_component + FixedComponent(); }
  double RelativeResidual() const;
};

// Components from scenario parameters and an off-peak price.
PriceDecomposition DecomposeOnPeakPrice(const Scenario& scenario, double lambda_onp,
                                        double lambda_offp);
PriceDecomposition DecomposeOnPeakPrice(const Scenario& scenario, const Equilibrium& eq,
                                        const IdentityTolerances& tol = {});

struct PeakerParity {
  std::string peaker;
  double parity_price = 0.0;  // c_P + I_P / (n T_on)
  double lambda_onp = 0.0;
  double peaker_capacity = 0.0;
  bool peaker_built = false;
  bool runs_off_peak = false;
  // Equality when the peaker is built, otherwise lambda_onp <= parity (entry unprofitable).
  bool holds = false;
  double Gap() const { return lambda_onp - parity_price; }
};

PeakerParity CheckPeakerParity(const Scenario& scenario, const Equilibrium& eq,
                               const IdentityTolerances& tol = {});

struct CostRecoveryLedger {
  double investment_total = 0.0;  // $/year
  double onpeak_revenue = 0.0;    // $/year
  double offpeak_cost = 0.0;      // $/year
  double operating_profit = 0.0;  // $/year
  double gap = 0.0;               // operating_profit - investment_total
  double energy_matching_residual = 0.0;  // T_off q+_off - T_on q-_on / eta  (MWh)
  double full_discharge_residual = 0.0;   // q-_on - K_s  (MW)
  double energy_sizing_residual = 0.0;    // E - K_s T_on  (MWh)
  bool assumptions_hold = true;

  double RelativeGap() const;
  bool Holds(const IdentityTolerances& tol = {}) const;
};

CostRecoveryLedger CheckCostRecovery(const Scenario& scenario, const Equilibrium& eq,
                                     const IdentityTolerances& tol = {});

struct SigmaPattern {
  bool applicable = false;
  double sigma_minus_onp = 0.0;
  double sigma_plus_onp = 0.0;
  double sigma_plus_offp = 0.0;
  double sigma_minus_offp = 0.0;
  bool pattern_holds = false;
  double kkt3_residual = 0.0;  // sum_i T_i (sigma_i^+ + sigma_i^-) - I_sq / n
  double kkt4_residual = 0.0;  // gamma^+ + gamma^- - I_sE / n
  bool aggregates_hold = false;
};

SigmaPattern CheckSigmaPattern(const Scenario& scenario, const Equilibrium& eq,
                               const IdentityTolerances& tol = {});

struct WelfareReport {
  // $ per cycle.
  double gross_surplus = 0.0;
  double operating_cost = 0.0;
  double investment_cost = 0.0;
  double net_welfare = 0.0;
  // Split at the dual prices.
  double consumer_surplus = 0.0;
  std::vector<double> generator_surplus;
  double storage_surplus = 0.0;
  int cycles_n = 1;
  std::vector<Violation> warnings;

  double Annual(double per_cycle) const { return per_cycle * cycles_n; }
};

WelfareReport ComputeWelfare(const Scenario& scenario, const Equilibrium& eq);

}  // namespace peakstore
