#include "peakstore/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace peakstore::oracle {

namespace {

// Merit-order market of one period for a fixed generator fleet. A storage
// device enters as a net injection e (MW, negative while charging).
class PeriodMarket {
 public:
  struct Clearing {
    double load = 0.0;
    double generation = 0.0;
    double price = 0.0;  // derivative of value w.r.t. e
    double value = 0.0;  // gross surplus minus operating cost, $/h
  };

  PeriodMarket(const Period& period, const std::vector<GeneratorTech>& gens,
               const std::vector<double>& capacity)
      : a_(period.demand.intercept_a), b_(period.demand.slope_b) {
    for (std::size_t g = 0; g < gens.size(); ++g) {
      if (capacity[g] > 0.0) units_.push_back({gens[g].variable_cost, capacity[g], g, 0.0});
    }
    std::stable_sort(units_.begin(), units_.end(),
                     [](const Unit& l, const Unit& r) { return l.cost < r.cost; });
    double cumulative = 0.0;
    for (Unit& u : units_) {
      cumulative += u.capacity;
      u.cumulative = cumulative;
    }
    total_ = cumulative;
  }

  double TotalCapacity() const { return total_; }

  Clearing Clear(double e) const {
    const double floor = std::min(std::max(0.0, -e), total_);
    double g = floor;
    double price = 0.0;
    bool settled = false;
    double lo = 0.0;
    for (const Unit& u : units_) {
      const double hi = u.cumulative;
      const double seg_lo = lo;
      lo = hi;
      if (hi <= g) continue;
      const double start = std::max(g, seg_lo);
      // Generation level at which the inverse demand meets this unit's cost.
      const double target = (a_ - u.cost) / b_ - e;
      if (target <= start) {
        g = start;
        // Consumers priced out entirely: the marginal value is the unit's cost.
        price = (floor > 0.0 && start == floor) ? u.cost : a_ - b_ * (start + e);
        settled = true;
        break;
      }
      if (target < hi) {
        g = target;
        price = u.cost;
        settled = true;
        break;
      }
      g = hi;
    }
    if (!settled) price = a_ - b_ * (g + e);

    Clearing c;
    c.generation = g;
    c.load = std::max(0.0, g + e);
    c.price = price;
    c.value = a_ * c.load - 0.5 * b_ * c.load * c.load - OperatingCost(g);
    return c;
  }

  double OperatingCost(double generation) const {
    double cost = 0.0;
    double lo = 0.0;
    for (const Unit& u : units_) {
      if (generation <= lo) break;
      cost += u.cost * (std::min(generation, u.cumulative) - lo);
      lo = u.cumulative;
    }
    return cost;
  }

  // Merit-order split of a generation total, written into out[g][period].
  void Split(double generation, std::size_t period, std::vector<std::vector<double>>& out) const {
    double lo = 0.0;
    for (const Unit& u : units_) {
      out[u.index][period] = std::clamp(generation - lo, 0.0, u.capacity);
      lo = u.cumulative;
    }
  }

  // Injections where the price regime can change.
  std::vector<double> Knots() const {
    std::vector<double> knots;
    double lo = 0.0;
    for (const Unit& u : units_) {
      const double meet = (a_ - u.cost) / b_;
      knots.push_back(meet - lo);
      knots.push_back(meet - u.cumulative);
      knots.push_back(-u.cumulative);
      lo = u.cumulative;
    }
    return knots;
  }

 private:
  struct Unit {
    double cost;
    double capacity;
    std::size_t index;
    double cumulative;
  };

  double a_;
  double b_;
  std::vector<Unit> units_;
  double total_ = 0.0;
};

// Storage shifting s MWh per cycle from period `from` to period `to`.
// Welfare is concave in s, so the optimum under a cap is clamp(free optimum).
class Transfer {
 public:
  Transfer(const PeriodMarket& src, const PeriodMarket& dst, double t_from, double t_to,
           double eta)
      : src_(src), dst_(dst), t_from_(t_from), t_to_(t_to), eta_(eta) {}

  double Domain() const { return eta_ * t_from_ * src_.TotalCapacity(); }

  // Storage limits on s for the given power and energy capacity.
  double Cap(double power, double energy) const {
    return std::min({power * t_to_, eta_ * power * t_from_, energy, Domain()});
  }

  double Derivative(double s) const {
    return dst_.Clear(s / t_to_).price - src_.Clear(-s / (eta_ * t_from_)).price / eta_;
  }

  double Welfare(double s) const {
    return t_from_ * src_.Clear(-s / (eta_ * t_from_)).value + t_to_ * dst_.Clear(s / t_to_).value;
  }

  // Maximizer over [0, Domain()] ignoring storage capacity, smallest on ties.
  // The derivative is linear between knots, so it is reconstructed exactly
  // from two interior samples per interval.
  double FreeOptimum() const {
    const double domain = Domain();
    if (domain <= 0.0) return 0.0;
    std::vector<double> points{0.0, domain};
    for (double e : dst_.Knots()) {
      if (e > 0.0) points.push_back(e * t_to_);
    }
    for (double e : src_.Knots()) {
      if (e < 0.0) points.push_back(-e * eta_ * t_from_);
    }
    std::erase_if(points, [domain](double s) { return s < 0.0 || s > domain; });
    std::sort(points.begin(), points.end());
    const double tiny = 1e-12 * std::max(1.0, domain);
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
      const double left = points[k];
      const double len = points[k + 1] - left;
      if (len <= tiny) continue;
      const double d1 = Derivative(left + len / 3.0);
      const double d2 = Derivative(left + 2.0 * len / 3.0);
      const double slope = (d2 - d1) / (len / 3.0);
      const double at_left = d1 - slope * len / 3.0;
      const double at_right = d2 + slope * len / 3.0;
      if (at_left <= 0.0) return left;
      if (at_right < 0.0) return std::clamp(left - at_left / slope, left, points[k + 1]);
    }
    return domain;
  }

 private:
  const PeriodMarket& src_;
  const PeriodMarket& dst_;
  double t_from_;
  double t_to_;
  double eta_;
};

// Everything that depends only on the generator capacities.
class FleetEvaluator {
 public:
  FleetEvaluator(const Scenario& s, const std::vector<double>& gen_caps) : s_(s) {
    for (const Period& p : s.periods) markets_.emplace_back(p, s.generators, gen_caps);
    base_value_ = 0.0;
    for (std::size_t i = 0; i < markets_.size(); ++i) {
      base_value_ += s.periods[i].duration_hours * markets_[i].Clear(0.0).value;
    }
    gen_investment_ = 0.0;
    for (std::size_t g = 0; g < gen_caps.size(); ++g) {
      gen_investment_ += s.generators[g].inv_cost_power * gen_caps[g];
    }
    if (s.storage) {
      const double eta = s.storage->efficiency;
      for (std::size_t from = 0; from < markets_.size(); ++from) {
        for (std::size_t to = 0; to < markets_.size(); ++to) {
          if (from == to) continue;
          Direction d{from, to,
                      Transfer(markets_[from], markets_[to], s.periods[from].duration_hours,
                               s.periods[to].duration_hours, eta),
                      0.0, 0.0};
          d.free_optimum = d.transfer.FreeOptimum();
          d.free_value = d.transfer.Welfare(d.free_optimum);
          directions_.push_back(d);
        }
      }
    }
  }

  struct Choice {
    int direction = -1;  // -1: storage idle
    double shifted = 0.0;
    double operating_welfare = 0.0;
  };

  Choice Operate(double power, double energy) const {
    Choice best{-1, 0.0, base_value_};
    for (std::size_t k = 0; k < directions_.size(); ++k) {
      const Direction& d = directions_[k];
      if (d.free_optimum <= 0.0) continue;
      const double s = std::min(d.free_optimum, d.transfer.Cap(power, energy));
      if (s <= 0.0) continue;
      const double value = s == d.free_optimum ? d.free_value : d.transfer.Welfare(s);
      if (value > best.operating_welfare) best = {static_cast<int>(k), s, value};
    }
    return best;
  }

  double NetWelfare(double power, double energy) const {
    double investment = gen_investment_;
    if (s_.storage) {
      investment += s_.storage->inv_cost_power * power + s_.storage->inv_cost_energy * energy;
    }
    return Operate(power, energy).operating_welfare - investment / s_.cycles_n;
  }

  Dispatch Build(double power, double energy) const {
    const Choice c = Operate(power, energy);
    const std::size_t periods = markets_.size();
    Dispatch out;
    out.load.assign(periods, 0.0);
    out.price.assign(periods, 0.0);
    out.charge.assign(periods, 0.0);
    out.discharge.assign(periods, 0.0);
    out.generation.assign(s_.generators.size(), std::vector<double>(periods, 0.0));
    std::vector<double> injection(periods, 0.0);
    if (c.direction >= 0) {
      const Direction& d = directions_[c.direction];
      const double eta = s_.storage->efficiency;
      out.charge[d.from] = c.shifted / (eta * s_.periods[d.from].duration_hours);
      out.discharge[d.to] = c.shifted / s_.periods[d.to].duration_hours;
      injection[d.from] = -out.charge[d.from];
      injection[d.to] = out.discharge[d.to];
    }
    for (std::size_t i = 0; i < periods; ++i) {
      const PeriodMarket::Clearing cl = markets_[i].Clear(injection[i]);
      out.load[i] = cl.load;
      out.price[i] = cl.price;
      markets_[i].Split(cl.generation, i, out.generation);
    }
    out.operating_welfare = c.operating_welfare;
    out.welfare = NetWelfare(power, energy);
    return out;
  }

 private:
  struct Direction {
    std::size_t from;
    std::size_t to;
    Transfer transfer;
    double free_optimum;
    double free_value;
  };

  const Scenario& s_;
  std::vector<PeriodMarket> markets_;
  std::vector<Direction> directions_;
  double base_value_ = 0.0;
  double gen_investment_ = 0.0;
};

struct Incumbent {
  double welfare = -std::numeric_limits<double>::infinity();
  std::vector<double> point;
};

std::vector<std::vector<double>> PassAxes(const GridSpec& grid, const Incumbent* center,
                                          const PassSummary* previous, PassSummary& summary) {
  const std::size_t dims = grid.upper.size();
  const int points = grid.points_per_axis;
  std::vector<std::vector<double>> axes(dims);
  summary.lower.assign(dims, 0.0);
  summary.upper.assign(dims, 0.0);
  summary.step.assign(dims, 0.0);
  for (std::size_t d = 0; d < dims; ++d) {
    if (center == nullptr) {
      const double step = grid.upper[d] / (points - 1);
      for (int k = 0; k < points; ++k) axes[d].push_back(k == points - 1 ? grid.upper[d] : k * step);
      summary.step[d] = step;
    } else {
      // +-1 previous step around the incumbent; the incumbent itself is a node.
      const double step = 2.0 * previous->step[d] / (points - 1);
      const int half = (points - 1) / 2;
      const double slack = 1e-12 * std::max(1.0, grid.upper[d]);
      for (int k = -half; k <= half; ++k) {
        const double v = center->point[d] + k * step;
        if (v >= -slack && v <= grid.upper[d] + slack) axes[d].push_back(std::clamp(v, 0.0, grid.upper[d]));
      }
      summary.step[d] = step;
    }
    summary.lower[d] = axes[d].front();
    summary.upper[d] = axes[d].back();
  }
  return axes;
}

// Scans the Cartesian product of `axes` whose first coordinate index lies in
// [first_begin, first_end). Lexicographic order, strict improvement only.
Incumbent ScanChunk(const Scenario& s, const std::vector<std::vector<double>>& axes,
                    std::size_t first_begin, std::size_t first_end, long long& evaluations) {
  const std::size_t gens = s.generators.size();
  const bool storage = s.HasStorage();
  Incumbent best;
  std::vector<std::size_t> idx(gens, 0);
  idx[0] = first_begin;
  std::vector<double> caps(gens);
  while (idx[0] < first_end) {
    for (std::size_t g = 0; g < gens; ++g) caps[g] = axes[g][idx[g]];
    const FleetEvaluator fleet(s, caps);
    if (!storage) {
      ++evaluations;
      const double w = fleet.NetWelfare(0.0, 0.0);
      if (w > best.welfare) best = {w, caps};
    } else {
      for (double power : axes[gens]) {
        for (double hours : axes[gens + 1]) {
          ++evaluations;
          const double w = fleet.NetWelfare(power, power * hours);
          if (w > best.welfare) {
            best.welfare = w;
            best.point = caps;
            best.point.push_back(power);
            best.point.push_back(hours);
          }
        }
      }
    }
    // Odometer over generator axes, last axis fastest.
    std::size_t d = gens;
    while (d > 0) {
      --d;
      if (++idx[d] < axes[d].size() || d == 0) break;
      idx[d] = 0;
    }
  }
  return best;
}

Capacities ToCapacities(const Scenario& s, const std::vector<double>& point) {
  Capacities c;
  const std::size_t gens = s.generators.size();
  c.generator.assign(point.begin(), point.begin() + gens);
  if (s.HasStorage()) {
    c.storage_power = point[gens];
    c.storage_energy = point[gens] * point[gens + 1];
  }
  return c;
}

}  // namespace

Dispatch InnerDispatch(const Scenario& s, const Capacities& caps) {
  if (caps.generator.size() != s.generators.size()) {
    throw std::invalid_argument("InnerDispatch: one capacity per generator is required");
  }
  for (double k : caps.generator) {
    if (k < 0.0) throw std::invalid_argument("InnerDispatch: negative capacity");
  }
  if (caps.storage_power < 0.0 || caps.storage_energy < 0.0) {
    throw std::invalid_argument("InnerDispatch: negative storage capacity");
  }
  const FleetEvaluator fleet(s, caps.generator);
  return fleet.Build(s.HasStorage() ? caps.storage_power : 0.0,
                     s.HasStorage() ? caps.storage_energy : 0.0);
}

GridSpec DefaultGrid(const Scenario& s) {
  double choke = 0.0;
  for (const Period& p : s.periods) choke = std::max(choke, p.demand.ChokeLoad());
  GridSpec grid;
  for (const GeneratorTech& g : s.generators) {
    grid.axes.push_back("K[" + g.name + "]");
    grid.upper.push_back(choke);
  }
  if (s.storage) {
    const double eta = s.storage->efficiency;
    double duration = 0.0;
    for (std::size_t from = 0; from < s.periods.size(); ++from) {
      for (std::size_t to = 0; to < s.periods.size(); ++to) {
        if (from == to) continue;
        duration = std::max(duration, std::min(s.periods[to].duration_hours,
                                               eta * s.periods[from].duration_hours));
      }
    }
    grid.axes.push_back("K_s");
    grid.upper.push_back(choke);
    grid.axes.push_back("h=E/K_s");
    grid.upper.push_back(1.02 * duration);
  }
  return grid;
}

OracleResult GridSearch(const Scenario& s, const GridSpec& grid) {
  const std::size_t dims = s.generators.size() + (s.HasStorage() ? 2 : 0);
  if (grid.upper.empty() || grid.upper.size() != dims || grid.points_per_axis < 2 ||
      grid.passes < 1) {
    throw std::invalid_argument(
        fmt::format("GridSearch: empty or mismatched grid ({} axes given, {} needed)",
                    grid.upper.size(), dims));
  }
  for (double u : grid.upper) {
    if (!(u >= 0.0)) throw std::invalid_argument("GridSearch: axis upper bounds must be >= 0");
  }

  OracleResult result;
  result.grid = grid;
  Incumbent best;
  for (int pass = 0; pass < grid.passes; ++pass) {
    PassSummary summary;
    const auto axes = PassAxes(grid, pass == 0 ? nullptr : &best,
                               pass == 0 ? nullptr : &result.passes.back(), summary);

    const std::size_t first = axes[0].size();
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, first);
    std::vector<Incumbent> partial(workers);
    std::vector<long long> counts(workers, 0);
    {
      std::vector<std::jthread> threads;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = first * w / workers;
        const std::size_t end = first * (w + 1) / workers;
        threads.emplace_back([&, w, begin, end] {
          partial[w] = ScanChunk(s, axes, begin, end, counts[w]);
        });
      }
    }
    // Chunks are in lexicographic order, so strict improvement keeps the
    // smallest point among equal welfare values.
    for (std::size_t w = 0; w < workers; ++w) {
      result.evaluations += counts[w];
      if (partial[w].welfare > best.welfare) best = partial[w];
    }
    summary.best_welfare = best.welfare;
    result.passes.push_back(summary);
  }

  result.best_welfare = best.welfare;
  result.best_capacities = ToCapacities(s, best.point);
  result.best_dispatch = InnerDispatch(s, result.best_capacities);
  return result;
}

OracleResult GridSearch(const Scenario& s) { return GridSearch(s, DefaultGrid(s)); }

nlohmann::json ToJson(const OracleResult& r) {
  nlohmann::json passes = nlohmann::json::array();
  for (const PassSummary& p : r.passes) {
    passes.push_back({{"lower", p.lower},
                      {"upper", p.upper},
                      {"step", p.step},
                      {"best_welfare", p.best_welfare}});
  }
  const Dispatch& d = r.best_dispatch;
  return {
      {"best_welfare", r.best_welfare},
      {"best_point",
       {{"generator_capacity", r.best_capacities.generator},
        {"storage_power", r.best_capacities.storage_power},
        {"storage_energy", r.best_capacities.storage_energy},
        {"load", d.load},
        {"generation", d.generation},
        {"charge", d.charge},
        {"discharge", d.discharge},
        {"price", d.price}}},
      {"grid_spec",
       {{"axes", r.grid.axes},
        {"upper", r.grid.upper},
        {"points_per_axis", r.grid.points_per_axis},
        {"passes", passes}}},
      {"evaluations", r.evaluations},
  };
}

}  // namespace peakstore::oracle
