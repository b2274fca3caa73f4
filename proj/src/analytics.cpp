#include "peakstore/analytics.hpp"

#include <algorithm>
#include <cmath>

namespace peakstore {

Equilibrium ExtractEquilibrium(const Scenario& scenario, const QuadraticProgram& qp,
                               const PrimalDualSolution& sol) {
  const std::size_t periods = scenario.periods.size();
  const std::size_t gens = scenario.generators.size();
  Equilibrium eq;
  eq.price.assign(periods, 0.0);
  eq.load.assign(periods, 0.0);
  eq.generation.assign(gens, std::vector<double>(periods, 0.0));
  eq.gen_capacity.assign(gens, 0.0);
  eq.has_storage = scenario.HasStorage();
  if (eq.has_storage) {
    for (auto* v : {&eq.charge, &eq.discharge, &eq.sigma_plus, &eq.sigma_minus, &eq.zeta_plus,
                    &eq.zeta_minus}) {
      v->assign(periods, 0.0);
    }
  }
  eq.objective = sol.objective;

  for (const VariableIndex& v : qp.variables) {
    const double value = sol.x(v.column);
    switch (v.kind) {
      case VarKind::kGenCapacity: eq.gen_capacity[v.generator] = value; break;
      case VarKind::kStorageCapacity: eq.storage_power = value; break;
      case VarKind::kEnergyCapacity: eq.storage_energy = value; break;
      case VarKind::kGeneration: eq.generation[v.generator][v.period] = value; break;
      case VarKind::kCharge: eq.charge[v.period] = value; break;
      case VarKind::kDischarge: eq.discharge[v.period] = value; break;
      case VarKind::kConsumption: eq.load[v.period] = value; break;
    }
  }
  for (const ConstraintIndex& r : qp.rows) {
    const double dual = sol.duals(r.row);
    switch (r.kind) {
      // The balance rows carry the same T_i factor as the objective, so the
      // raw dual is already in $/MWh.
      case RowKind::kBalance: eq.price[r.period] = dual; break;
      case RowKind::kChargeMax: eq.sigma_plus[r.period] = dual; break;
      case RowKind::kDischargeMax: eq.sigma_minus[r.period] = dual; break;
      case RowKind::kChargeMin: eq.zeta_plus[r.period] = dual; break;
      case RowKind::kDischargeMin: eq.zeta_minus[r.period] = dual; break;
      case RowKind::kRoundTrip: eq.mu = dual; break;
      case RowKind::kEnergyCharge: eq.gamma_plus = dual; break;
      case RowKind::kEnergyDischarge: eq.gamma_minus = dual; break;
      default: break;
    }
  }
  return eq;
}

namespace {

const StorageTech& RequireStorage(const Scenario& s, const char* what) {
  if (!s.storage) throw NotApplicableError(std::string(what) + ": scenario has no storage");
  return *s.storage;
}

double StorageValue(const std::vector<double>& v, std::size_t i) {
  return v.empty() ? 0.0 : v[i];
}

}  // namespace

AssumptionReport CheckAssumptions(const Scenario& s, const Equilibrium& eq,
                                  const IdentityTolerances& tol) {
  const std::size_t on = s.PeriodIndex(PeriodLabel::kOnPeak);
  const std::size_t off = s.PeriodIndex(PeriodLabel::kOffPeak);
  const double eta = s.storage ? s.storage->efficiency : 1.0;

  AssumptionReport rep;
  rep.storage_power = eq.storage_power;
  rep.charge_off_peak = StorageValue(eq.charge, off);
  rep.discharge_on_peak = StorageValue(eq.discharge, on);
  rep.cycling = s.HasStorage() && rep.storage_power > tol.binding &&
                rep.charge_off_peak > tol.binding && rep.discharge_on_peak > tol.binding;

  rep.on_peak_hours = s.periods[on].duration_hours;
  rep.eta_off_peak_hours = eta * s.periods[off].duration_hours;
  rep.offpeak_duration = s.HasStorage() && rep.on_peak_hours < rep.eta_off_peak_hours;

  for (std::size_t i = 0; i < s.periods.size(); ++i) {
    const double t = s.periods[i].duration_hours;
    rep.discharged_energy += StorageValue(eq.discharge, i) * t;
    rep.recoverable_energy += eta * StorageValue(eq.charge, i) * t;
  }
  rep.no_carryover =
      s.HasStorage() && std::abs(rep.discharged_energy - rep.recoverable_energy) <= tol.binding;
  return rep;
}

double PriceDecomposition::RelativeResidual() const {
  return std::abs(residual) / std::max(std::abs(lambda_onp), 1e-12);
}

PriceDecomposition DecomposeOnPeakPrice(const Scenario& s, double lambda_onp,
                                        double lambda_offp) {
  const StorageTech& st = RequireStorage(s, "price decomposition");
  const double n = s.cycles_n;
  PriceDecomposition d;
  d.lambda_onp = lambda_onp;
  d.lambda_offp = lambda_offp;
  d.variable_component = lambda_offp / st.efficiency;
  d.fixed_energy_component = st.inv_cost_energy / n;
  d.fixed_power_component = st.inv_cost_power / (n * s.OnPeak().duration_hours);
  d.residual = lambda_onp - d.Predicted();
  return d;
}

PriceDecomposition DecomposeOnPeakPrice(const Scenario& s, const Equilibrium& eq,
                                        const IdentityTolerances& tol) {
  RequireStorage(s, "price decomposition");
  PriceDecomposition d = DecomposeOnPeakPrice(s, eq.price[s.PeriodIndex(PeriodLabel::kOnPeak)],
                                              eq.price[s.PeriodIndex(PeriodLabel::kOffPeak)]);
  d.assumptions_hold = CheckAssumptions(s, eq, tol).AllHold();
  return d;
}

PeakerParity CheckPeakerParity(const Scenario& s, const Equilibrium& eq,
                               const IdentityTolerances& tol) {
  const std::size_t p = s.PeakerIndex();
  const std::size_t on = s.PeriodIndex(PeriodLabel::kOnPeak);
  const std::size_t off = s.PeriodIndex(PeriodLabel::kOffPeak);
  const GeneratorTech& peaker = s.generators[p];

  PeakerParity r;
  r.peaker = peaker.name;
  r.parity_price =
      peaker.variable_cost + peaker.inv_cost_power / (s.cycles_n * s.periods[on].duration_hours);
  r.lambda_onp = eq.price[on];
  r.peaker_capacity = eq.gen_capacity[p];
  r.peaker_built = r.peaker_capacity > tol.binding;
  r.runs_off_peak = eq.generation[p][off] > tol.binding;
  const double band = tol.relative * std::max(std::abs(r.parity_price), 1.0);
  // A peaker that also earns off-peak margins recovers its cost over both
  // periods, so only the upper bound applies then.
  r.holds = (r.peaker_built && !r.runs_off_peak) ? std::abs(r.Gap()) <= band : r.Gap() <= band;
  return r;
}

double CostRecoveryLedger::RelativeGap() const {
  const double scale = std::max(std::abs(investment_total), std::abs(operating_profit));
  return scale > 0.0 ? std::abs(gap) / scale : 0.0;
}

bool CostRecoveryLedger::Holds(const IdentityTolerances& tol) const {
  return RelativeGap() <= tol.relative;
}

CostRecoveryLedger CheckCostRecovery(const Scenario& s, const Equilibrium& eq,
                                     const IdentityTolerances& tol) {
  const StorageTech& st = RequireStorage(s, "cost recovery");
  const std::size_t on = s.PeriodIndex(PeriodLabel::kOnPeak);
  const std::size_t off = s.PeriodIndex(PeriodLabel::kOffPeak);
  const double n = s.cycles_n;
  const double t_on = s.periods[on].duration_hours;
  const double t_off = s.periods[off].duration_hours;
  const double q_minus_on = eq.discharge[on];
  const double q_plus_off = eq.charge[off];

  CostRecoveryLedger led;
  led.investment_total = st.inv_cost_power * eq.storage_power + st.inv_cost_energy * eq.storage_energy;
  led.onpeak_revenue = n * eq.price[on] * t_on * q_minus_on;
  led.offpeak_cost = n * eq.price[off] * t_off * q_plus_off;
  led.operating_profit = led.onpeak_revenue - led.offpeak_cost;
  led.gap = led.operating_profit - led.investment_total;
  led.energy_matching_residual = t_off * q_plus_off - t_on * q_minus_on / st.efficiency;
  led.full_discharge_residual = q_minus_on - eq.storage_power;
  led.energy_sizing_residual = eq.storage_energy - eq.storage_power * t_on;
  led.assumptions_hold = CheckAssumptions(s, eq, tol).AllHold();
  return led;
}

SigmaPattern CheckSigmaPattern(const Scenario& s, const Equilibrium& eq,
                               const IdentityTolerances& tol) {
  SigmaPattern sp;
  if (!s.storage || !eq.has_storage) return sp;
  sp.applicable = true;
  const std::size_t on = s.PeriodIndex(PeriodLabel::kOnPeak);
  const std::size_t off = s.PeriodIndex(PeriodLabel::kOffPeak);
  sp.sigma_minus_onp = eq.sigma_minus[on];
  sp.sigma_plus_onp = eq.sigma_plus[on];
  sp.sigma_plus_offp = eq.sigma_plus[off];
  sp.sigma_minus_offp = eq.sigma_minus[off];
  sp.pattern_holds = sp.sigma_minus_onp > tol.dual && std::abs(sp.sigma_plus_onp) <= tol.dual &&
                     std::abs(sp.sigma_plus_offp) <= tol.dual &&
                     std::abs(sp.sigma_minus_offp) <= tol.dual;

  const double n = s.cycles_n;
  double weighted = 0.0;
  for (std::size_t i = 0; i < s.periods.size(); ++i) {
    weighted += s.periods[i].duration_hours * (eq.sigma_plus[i] + eq.sigma_minus[i]);
  }
  sp.kkt3_residual = weighted - s.storage->inv_cost_power / n;
  sp.kkt4_residual = eq.gamma_plus + eq.gamma_minus - s.storage->inv_cost_energy / n;
  sp.aggregates_hold =
      std::abs(sp.kkt3_residual) <= tol.dual && std::abs(sp.kkt4_residual) <= tol.dual;
  return sp;
}

WelfareReport ComputeWelfare(const Scenario& s, const Equilibrium& eq) {
  WelfareReport w;
  w.cycles_n = s.cycles_n;
  w.generator_surplus.assign(s.generators.size(), 0.0);
  const double n = s.cycles_n;
  for (std::size_t i = 0; i < s.periods.size(); ++i) {
    const Period& p = s.periods[i];
    const double t = p.duration_hours;
    const double load = std::max(eq.load[i], 0.0);
    const double gross = t * GrossSurplus(p.demand, load);
    w.gross_surplus += gross;
    w.consumer_surplus += gross - t * eq.price[i] * eq.load[i];
    for (std::size_t g = 0; g < s.generators.size(); ++g) {
      const double q = eq.generation[g][i];
      w.operating_cost += t * s.generators[g].variable_cost * q;
      w.generator_surplus[g] += t * (eq.price[i] - s.generators[g].variable_cost) * q;
    }
    if (eq.has_storage) {
      w.storage_surplus += t * eq.price[i] * (eq.discharge[i] - eq.charge[i]);
    }
  }
  for (std::size_t g = 0; g < s.generators.size(); ++g) {
    const double invest = s.generators[g].inv_cost_power * eq.gen_capacity[g] / n;
    w.investment_cost += invest;
    w.generator_surplus[g] -= invest;
  }
  if (s.storage && eq.has_storage) {
    const double invest = (s.storage->inv_cost_power * eq.storage_power +
                           s.storage->inv_cost_energy * eq.storage_energy) /
                          n;
    w.investment_cost += invest;
    w.storage_surplus -= invest;
  }
  w.net_welfare = w.gross_surplus - w.operating_cost - w.investment_cost;
  w.warnings = ChokeWarnings(s, eq.load);
  return w;
}

}  // namespace peakstore
