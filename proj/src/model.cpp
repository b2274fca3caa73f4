#include "peakstore/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace peakstore {

std::string_view ToString(PeriodLabel label) {
  return label == PeriodLabel::kOnPeak ? "on_peak" : "off_peak";
}

PeriodLabel ParsePeriodLabel(std::string_view text) {
  if (text == "on_peak") return PeriodLabel::kOnPeak;
  if (text == "off_peak") return PeriodLabel::kOffPeak;
  throw ValidationError("label", fmt::format("unknown period label '{}'", text));
}

std::size_t Scenario::PeriodIndex(PeriodLabel label) const {
  for (std::size_t i = 0; i < periods.size(); ++i) {
    if (periods[i].label == label) return i;
  }
  throw ValidationError("periods", fmt::format("no {} period", ToString(label)));
}

std::size_t Scenario::BaseloadIndex() const {
  if (generators.empty()) throw ValidationError("generators", "no generators");
  std::size_t best = 0;
  for (std::size_t g = 1; g < generators.size(); ++g) {
    if (generators[g].variable_cost < generators[best].variable_cost) best = g;
  }
  return best;
}

std::size_t Scenario::PeakerIndex() const {
  if (generators.empty()) throw ValidationError("generators", "no generators");
  std::size_t best = 0;
  for (std::size_t g = 1; g < generators.size(); ++g) {
    if (generators[g].variable_cost > generators[best].variable_cost) best = g;
  }
  return best;
}

Scenario Scenario::WithoutStorage() const {
  Scenario copy = *this;
  copy.storage.reset();
  return copy;
}

LinearDemand CalibrateDemand(double baseline_load, double baseline_price, double elasticity) {
  if (!(baseline_load > 0.0)) throw ValidationError("baseline_load", "must be positive");
  if (!(baseline_price > 0.0)) throw ValidationError("baseline_price", "must be positive");
  if (!(elasticity > 0.0)) throw ValidationError("elasticity", "must be positive");
  // |dl/dp| * p/l = (1/b) * p0/l0 = elasticity
  LinearDemand demand;
  demand.slope_b = baseline_price / (elasticity * baseline_load);
  demand.intercept_a = baseline_price * (1.0 + 1.0 / elasticity);
  return demand;
}

double GrossSurplus(const LinearDemand& demand, double consumption) {
  if (consumption < 0.0) {
    throw std::domain_error(fmt::format("negative consumption {}", consumption));
  }
  return demand.intercept_a * consumption - 0.5 * demand.slope_b * consumption * consumption;
}

std::vector<Violation> ValidateScenario(const Scenario& s) {
  std::vector<Violation> out;
  auto add = [&out](std::string field, std::string message) {
    out.push_back({std::move(field), std::move(message)});
  };

  if (s.cycles_n < 1) add("cycles_n", fmt::format("must be >= 1, got {}", s.cycles_n));

  if (s.periods.size() != 2) {
    add("periods", fmt::format("expected exactly 2 periods, got {}", s.periods.size()));
  }
  const auto on = std::count_if(s.periods.begin(), s.periods.end(),
                                [](const Period& p) { return p.label == PeriodLabel::kOnPeak; });
  if (s.periods.size() == 2 && on != 1) {
    add("periods.label", "need exactly one on_peak and one off_peak period");
  }
  for (std::size_t i = 0; i < s.periods.size(); ++i) {
    const Period& p = s.periods[i];
    const std::string prefix = fmt::format("periods[{}]", i);
    if (!(p.duration_hours > 0.0)) add(prefix + ".duration_hours", "must be positive");
    if (!(p.demand.intercept_a > 0.0)) add(prefix + ".demand.a", "must be positive");
    if (!(p.demand.slope_b > 0.0)) add(prefix + ".demand.b", "must be positive");
  }

  if (s.generators.empty()) add("generators", "at least one generator is required");
  std::set<std::string> names;
  for (std::size_t g = 0; g < s.generators.size(); ++g) {
    const GeneratorTech& gen = s.generators[g];
    const std::string prefix = fmt::format("generators[{}]", g);
    if (gen.name.empty()) add(prefix + ".name", "must not be empty");
    if (!names.insert(gen.name).second) {
      add(prefix + ".name", fmt::format("duplicate generator name '{}'", gen.name));
    }
    if (!(gen.variable_cost >= 0.0)) add(prefix + ".variable_cost", "must be >= 0");
    if (!(gen.inv_cost_power >= 0.0)) add(prefix + ".inv_cost_power", "must be >= 0");
  }

  if (s.storage) {
    const StorageTech& st = *s.storage;
    if (!(st.efficiency > 0.0 && st.efficiency <= 1.0)) {
      add("storage.efficiency", fmt::format("must lie in (0, 1], got {}", st.efficiency));
    }
    if (!(st.inv_cost_power >= 0.0)) add("storage.inv_cost_power", "must be >= 0");
    if (!(st.inv_cost_energy >= 0.0)) add("storage.inv_cost_energy", "must be >= 0");
  }
  return out;
}

std::vector<Violation> ChokeWarnings(const Scenario& s, const std::vector<double>& loads) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < s.periods.size() && i < loads.size(); ++i) {
    const LinearDemand& d = s.periods[i].demand;
    if (d.Price(loads[i]) < 0.0) {
      out.push_back({fmt::format("periods[{}]", i),
                     fmt::format("consumption {:.3f} MW is beyond the choke load {:.3f} MW",
                                 loads[i], d.ChokeLoad())});
    }
  }
  return out;
}

namespace {

double RequireNumber(const nlohmann::json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(path + "." + key, "missing");
  if (!it->is_number()) throw ValidationError(path + "." + key, "must be a number");
  return it->get<double>();
}

const nlohmann::json& RequireObject(const nlohmann::json& obj, const char* key,
                                    const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(path + "." + key, "missing");
  if (!it->is_object()) throw ValidationError(path + "." + key, "must be an object");
  return *it;
}

LinearDemand ParseDemand(const nlohmann::json& d, const std::string& path) {
  if (d.contains("a") || d.contains("b")) {
    return {RequireNumber(d, "a", path), RequireNumber(d, "b", path)};
  }
  double load = 0.0;
  if (d.contains("baseline_load_gw")) {
    load = 1000.0 * RequireNumber(d, "baseline_load_gw", path);
  } else {
    load = RequireNumber(d, "baseline_load_mw", path);
  }
  const double price = RequireNumber(d, "baseline_price", path);
  const double elasticity = RequireNumber(d, "elasticity", path);
  try {
    return CalibrateDemand(load, price, elasticity);
  } catch (const ValidationError& e) {
    throw ValidationError(path + "." + e.field(), "must be positive");
  }
}

}  // namespace

Scenario ParseScenario(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("$", "scenario must be a JSON object");
  Scenario s;
  s.name = doc.value("name", std::string("scenario"));

  const auto n_it = doc.find("cycles_n");
  if (n_it == doc.end()) throw ValidationError("cycles_n", "missing");
  if (!n_it->is_number_integer()) throw ValidationError("cycles_n", "must be an integer");
  s.cycles_n = n_it->get<int>();

  const auto p_it = doc.find("periods");
  if (p_it == doc.end() || !p_it->is_array()) throw ValidationError("periods", "must be an array");
  for (std::size_t i = 0; i < p_it->size(); ++i) {
    const nlohmann::json& pj = (*p_it)[i];
    const std::string path = fmt::format("periods[{}]", i);
    if (!pj.is_object()) throw ValidationError(path, "must be an object");
    Period p;
    if (!pj.contains("label") || !pj["label"].is_string()) {
      throw ValidationError(path + ".label", "must be a string");
    }
    try {
      p.label = ParsePeriodLabel(pj["label"].get<std::string>());
    } catch (const ValidationError& e) {
      throw ValidationError(path + ".label", e.what());
    }
    p.duration_hours = RequireNumber(pj, "duration_hours", path);
    p.demand = ParseDemand(RequireObject(pj, "demand", path), path + ".demand");
    s.periods.push_back(p);
  }

  const auto g_it = doc.find("generators");
  if (g_it == doc.end() || !g_it->is_array()) {
    throw ValidationError("generators", "must be an array");
  }
  for (std::size_t g = 0; g < g_it->size(); ++g) {
    const nlohmann::json& gj = (*g_it)[g];
    const std::string path = fmt::format("generators[{}]", g);
    if (!gj.is_object()) throw ValidationError(path, "must be an object");
    if (!gj.contains("name") || !gj["name"].is_string()) {
      throw ValidationError(path + ".name", "must be a string");
    }
    s.generators.push_back({gj["name"].get<std::string>(), RequireNumber(gj, "variable_cost", path),
                            RequireNumber(gj, "inv_cost_power", path)});
  }

  if (const auto st = doc.find("storage"); st != doc.end() && !st->is_null()) {
    if (!st->is_object()) throw ValidationError("storage", "must be an object");
    s.storage = StorageTech{RequireNumber(*st, "inv_cost_power", "storage"),
                            RequireNumber(*st, "inv_cost_energy", "storage"),
                            RequireNumber(*st, "efficiency", "storage")};
  }

  const auto violations = ValidateScenario(s);
  if (!violations.empty()) {
    throw ValidationError(violations.front().field, violations.front().message);
  }
  return s;
}

Scenario ParseScenarioText(std::string_view text) {
  return ParseScenario(nlohmann::json::parse(text.begin(), text.end()));
}

Scenario LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario_path", fmt::format("cannot open '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseScenarioText(buffer.str());
}

nlohmann::json ScenarioToJson(const Scenario& s) {
  nlohmann::json doc;
  doc["name"] = s.name;
  doc["cycles_n"] = s.cycles_n;
  doc["periods"] = nlohmann::json::array();
  for (const Period& p : s.periods) {
    doc["periods"].push_back({{"label", ToString(p.label)},
                              {"duration_hours", p.duration_hours},
                              {"demand", {{"a", p.demand.intercept_a}, {"b", p.demand.slope_b}}}});
  }
  doc["generators"] = nlohmann::json::array();
  for (const GeneratorTech& g : s.generators) {
    doc["generators"].push_back({{"name", g.name},
                                 {"variable_cost", g.variable_cost},
                                 {"inv_cost_power", g.inv_cost_power}});
  }
  if (s.storage) {
    doc["storage"] = {{"inv_cost_power", s.storage->inv_cost_power},
                      {"inv_cost_energy", s.storage->inv_cost_energy},
                      {"efficiency", s.storage->efficiency}};
  }
  return doc;
}

}  // namespace peakstore
