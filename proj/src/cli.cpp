#include "peakstore/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "peakstore/oracle.hpp"
#include "peakstore/report.hpp"

namespace peakstore::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kMwPerGw = 1000.0;
constexpr double kOracleTolerance = 1e-3;

struct Metric {
  double value = 0.0;
  double tolerance = 0.0;
};

bool StartsWith(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

bool StripSuffix(std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size() || s.compare(s.size() - suffix.size(), suffix.size(), suffix) != 0) {
    return false;
  }
  s.resize(s.size() - suffix.size());
  return true;
}

std::optional<std::size_t> FindPeriod(const Scenario& s, const std::string& text) {
  for (std::size_t i = 0; i < s.periods.size(); ++i) {
    if (ToString(s.periods[i].label) == text) return i;
  }
  return std::nullopt;
}

// Reference keys: lambda_<period>, ell_<period>_gw, q_plus_<period>_gw,
// q_minus_<period>_gw, q_<generator>_<period>_gw, K_<generator>_gw, K_s_gw, E_gwh.
std::optional<Metric> LookupMetric(const EquilibriumReport& r, const std::string& key,
                                   const RunConfig& cfg) {
  const Scenario& s = r.scenario;
  const Equilibrium& eq = r.eq;
  if (key == "E_gwh") {
    if (!eq.has_storage) return std::nullopt;
    return Metric{eq.storage_energy / kMwPerGw, cfg.tolerance_energy};
  }
  if (key == "K_s_gw") {
    if (!eq.has_storage) return std::nullopt;
    return Metric{eq.storage_power / kMwPerGw, cfg.tolerance_quantities};
  }
  if (StartsWith(key, "lambda_")) {
    if (auto i = FindPeriod(s, key.substr(7))) return Metric{eq.price[*i], cfg.tolerance_prices};
    return std::nullopt;
  }
  std::string rest = key;
  if (!StripSuffix(rest, "_gw")) return std::nullopt;
  if (StartsWith(rest, "K_")) {
    const std::string name = rest.substr(2);
    for (std::size_t g = 0; g < s.generators.size(); ++g) {
      if (s.generators[g].name == name) {
        return Metric{eq.gen_capacity[g] / kMwPerGw, cfg.tolerance_quantities};
      }
    }
    return std::nullopt;
  }
  if (StartsWith(rest, "ell_")) {
    if (auto i = FindPeriod(s, rest.substr(4))) {
      return Metric{eq.load[*i] / kMwPerGw, cfg.tolerance_quantities};
    }
    return std::nullopt;
  }
  for (const auto& [prefix, series] :
       {std::pair{std::string("q_plus_"), &eq.charge}, std::pair{std::string("q_minus_"), &eq.discharge}}) {
    if (StartsWith(rest, prefix)) {
      auto i = FindPeriod(s, rest.substr(prefix.size()));
      if (i && eq.has_storage) return Metric{(*series)[*i] / kMwPerGw, cfg.tolerance_quantities};
      return std::nullopt;
    }
  }
  if (StartsWith(rest, "q_")) {
    for (std::size_t g = 0; g < s.generators.size(); ++g) {
      const std::string prefix = "q_" + s.generators[g].name + "_";
      if (!StartsWith(rest, prefix)) continue;
      if (auto i = FindPeriod(s, rest.substr(prefix.size()))) {
        return Metric{eq.generation[g][*i] / kMwPerGw, cfg.tolerance_quantities};
      }
    }
  }
  return std::nullopt;
}

void AddReferenceChecks(EquilibriumReport& r, const json& reference, const RunConfig& cfg) {
  if (!reference.is_object()) return;
  const auto it = reference.find(r.label);
  if (it == reference.end()) return;
  if (!it->is_object()) throw ValidationError("reference." + r.label, "must be an object");
  for (const auto& [key, expected] : it->items()) {
    if (!expected.is_number()) {
      throw ValidationError("reference." + r.label + "." + key, "must be a number");
    }
    const std::optional<Metric> m = LookupMetric(r, key, cfg);
    if (!m) throw ValidationError("reference." + r.label + "." + key, "unknown metric");
    const double diff = std::abs(m->value - expected.get<double>());
    r.checks.push_back({"reference." + key, diff, m->tolerance, diff <= m->tolerance, false,
                        fmt::format("solved {:.4f}, reference {}", m->value, expected.dump())});
  }
}

json OracleCheck(EquilibriumReport& r) {
  const auto start = std::chrono::steady_clock::now();
  const oracle::OracleResult res = oracle::GridSearch(r.scenario);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double rel =
      std::abs(res.best_welfare - r.eq.objective) / std::max(1.0, std::abs(r.eq.objective));
  r.checks.push_back({"oracle_agreement", rel, kOracleTolerance, rel <= kOracleTolerance, false,
                      fmt::format("grid {:.6f} vs solver {:.6f} in {:.2f} s", res.best_welfare,
                                  r.eq.objective, seconds)});
  json j = oracle::ToJson(res);
  j["seconds"] = seconds;
  j["relative_gap"] = rel;
  return j;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

json ChecksJson(const std::vector<EquilibriumReport>& reports, bool passed) {
  json scenarios = json::object();
  for (const EquilibriumReport& r : reports) {
    json checks = ToJson(r)["checks"];
    scenarios[r.label] = {{"checks", checks}, {"passed", r.Passed()}};
  }
  return {{"scenarios", scenarios}, {"passed", passed}};
}

}  // namespace

int Run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.format != "text" && cfg.format != "json" && cfg.format != "csv") {
    err << "error: --format must be text, json or csv\n";
    return kInputError;
  }

  json doc;
  Scenario scenario;
  try {
    std::ifstream in(cfg.scenario_path);
    if (!in) {
      err << "error: cannot open scenario file " << cfg.scenario_path << '\n';
      return kInputError;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    doc = json::parse(buf.str());
    scenario = ParseScenario(doc);
  } catch (const json::parse_error& e) {
    err << fmt::format("error: {}: malformed JSON at byte offset {}: {}\n", cfg.scenario_path,
                       e.byte, e.what());
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << cfg.scenario_path << ": " << e.what() << '\n';
    return kInputError;
  }

  std::vector<std::pair<std::string, Scenario>> runs;
  if (cfg.no_storage_only || !scenario.HasStorage()) {
    runs.emplace_back("without_storage", scenario.WithoutStorage());
  } else {
    runs.emplace_back("with_storage", scenario);
    if (cfg.counterfactual) runs.emplace_back("without_storage", scenario.WithoutStorage());
  }

  std::vector<EquilibriumReport> reports;
  json oracle_json = json::object();
  try {
    std::vector<std::future<EquilibriumReport>> pending;
    for (const auto& [label, s] : runs) {
      pending.push_back(std::async(std::launch::async, [label = label, s = s] {
        return SolveScenario(s, label);
      }));
    }
    for (auto& f : pending) reports.push_back(f.get());
  } catch (const SolverError& e) {
    err << "error: solver failed: " << e.what() << " (working set size "
        << e.last_active_set().size() << ")\n";
    return kSolverFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    for (EquilibriumReport& r : reports) {
      AddReferenceChecks(r, doc.value("reference", json()), cfg);
      if (cfg.oracle) oracle_json[r.label] = OracleCheck(r);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  const bool passed = std::all_of(reports.begin(), reports.end(),
                                  [](const EquilibriumReport& r) { return r.Passed(); });
  const Table operating = OperatingTable(reports);
  const Table capacity = CapacityTable(reports);
  const Table checks = ChecksTable(reports);
  const PriceSeries series = EmitPriceSeries(
      reports.front(), reports.size() > 1 ? &reports[1] : nullptr, cfg.peak_start_hour);

  if (cfg.format == "json") {
    json j = {{"scenario", scenario.name},
              {"tables",
               {{"operating", operating.ToJson()},
                {"capacity", capacity.ToJson()},
                {"checks", checks.ToJson()}}},
              {"price_series", series.ToJson()},
              {"passed", passed}};
    for (const EquilibriumReport& r : reports) j["reports"][r.label] = ToJson(r);
    if (cfg.oracle) j["oracle"] = oracle_json;
    out << j.dump(2) << '\n';
  } else if (cfg.format == "csv") {
    out << operating.ToCsv() << '\n' << capacity.ToCsv() << '\n' << series.ToCsv();
  } else {
    out << "scenario: " << scenario.name << "\n\n"
        << operating.ToText() << '\n'
        << capacity.ToText() << '\n'
        << checks.ToText() << '\n'
        << series.ToText() << '\n';
    for (const EquilibriumReport& r : reports) {
      for (const CheckResult& c : r.checks) {
        if (c.warning_only) {
          out << fmt::format("warning: {}/{}: {}\n", r.label, c.name, c.detail);
        } else if (!c.passed) {
          out << fmt::format("FAILED: {}/{}: value {:.6g} exceeds {:.6g}{}{}\n", r.label, c.name,
                             c.value, c.tolerance, c.detail.empty() ? "" : "; ", c.detail);
        }
      }
    }
    out << (passed ? "verification: PASS\n" : "verification: FAIL\n");
  }

  if (!cfg.output_dir.empty()) {
    try {
      const fs::path dir(cfg.output_dir);
      fs::create_directories(dir);
      WriteFile(dir / "operating.csv", operating.ToCsv());
      WriteFile(dir / "capacity.csv", capacity.ToCsv());
      WriteFile(dir / "checks.json", ChecksJson(reports, passed).dump(2) + "\n");
      WriteFile(dir / "price_series.csv", series.ToCsv());
      spdlog::info("wrote artifacts to {}", dir.string());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kInputError;
    }
  }

  if (!passed) spdlog::warn("verification failed");
  return passed ? kOk : kVerificationFailed;
}

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  if (!spdlog::get("peakstore")) {
    auto logger = spdlog::stderr_color_mt("peakstore");
    logger->set_level(spdlog::level::warn);
    spdlog::set_default_logger(logger);
    spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=debug etc.
  }

  CLI::App app{"Peak-load pricing equilibrium with duration-limited storage"};
  app.require_subcommand(1);
  RunConfig cfg;
  CLI::App* run = app.add_subcommand("run", "Solve a scenario file and verify the equilibrium");
  run->add_option("scenario", cfg.scenario_path, "Scenario JSON file")->required();
  run->add_flag("--counterfactual", cfg.counterfactual, "Also solve without storage");
  run->add_flag("--no-storage-only", cfg.no_storage_only, "Solve only without storage");
  run->add_option("--format", cfg.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "csv"}));
  run->add_option("--out", cfg.output_dir, "Directory for CSV/JSON artifacts");
  run->add_flag("--oracle", cfg.oracle, "Cross-check optima by grid search");
  run->add_option("--tolerance-prices", cfg.tolerance_prices, "$/MWh")->check(CLI::NonNegativeNumber);
  run->add_option("--tolerance-quantities", cfg.tolerance_quantities, "GW")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--tolerance-energy", cfg.tolerance_energy, "GWh")->check(CLI::NonNegativeNumber);
  run->add_option("--peak-start", cfg.peak_start_hour, "Hour at which the on-peak block starts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }
  return Run(cfg, out, err);
}

}  // namespace peakstore::cli
