#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "peakstore/model.hpp"

using namespace peakstore;

namespace {

// Point elasticity magnitude of the inverse demand at load q.
double Elasticity(const LinearDemand& d, double q) { return d.Price(q) / (d.slope_b * q); }

double SimpsonSurplus(const LinearDemand& d, double l) {
  const int n = 2000;
  const double h = l / n;
  double sum = d.Price(0.0) + d.Price(l);
  for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * d.Price(k * h);
  return sum * h / 3.0;
}

}  // namespace

TEST(CalibrateDemand, OffPeakBaseline) {
  const LinearDemand d = CalibrateDemand(10000.0, 20.0, 0.1);
  EXPECT_NEAR(d.intercept_a, 220.0, 1e-9);
  EXPECT_NEAR(d.slope_b, 0.02, 1e-12);
  EXPECT_NEAR(d.Price(10000.0), 20.0, 1e-9);
  EXPECT_NEAR(Elasticity(d, 10000.0), 0.1, 1e-12);
}

TEST(CalibrateDemand, OnPeakBaseline) {
  const LinearDemand d = CalibrateDemand(15000.0, 100.0, 0.1);
  EXPECT_NEAR(d.intercept_a, 1100.0, 1e-9);
  EXPECT_NEAR(d.slope_b, 100.0 / 1500.0, 1e-12);
  EXPECT_NEAR(d.Price(15000.0), 100.0, 1e-9);
  EXPECT_NEAR(Elasticity(d, 15000.0), 0.1, 1e-12);
}

TEST(CalibrateDemand, UnitElasticityDoublesPrice) {
  for (double q0 : {1.0, 250.0, 12345.0}) {
    for (double p0 : {0.5, 42.0, 300.0}) {
      const LinearDemand d = CalibrateDemand(q0, p0, 1.0);
      EXPECT_NEAR(d.intercept_a, 2.0 * p0, 1e-12 * p0);
      EXPECT_NEAR(d.slope_b, p0 / q0, 1e-12 * p0 / q0);
    }
  }
}

TEST(CalibrateDemand, RandomBaselinesReproduceElasticity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> load(100.0, 50000.0), price(1.0, 500.0), eps(0.01, 3.0);
  for (int k = 0; k < 200; ++k) {
    const double q0 = load(rng), p0 = price(rng), e = eps(rng);
    const LinearDemand d = CalibrateDemand(q0, p0, e);
    EXPECT_NEAR(d.Price(q0), p0, 1e-9 * p0);
    EXPECT_NEAR(Elasticity(d, q0), e, 1e-9 * e);
  }
}

TEST(CalibrateDemand, RejectsNonPositiveInputs) {
  try {
    CalibrateDemand(100.0, 10.0, 0.0);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "elasticity");
  }
  EXPECT_THROW(CalibrateDemand(0.0, 10.0, 0.1), ValidationError);
  EXPECT_THROW(CalibrateDemand(100.0, -1.0, 0.1), ValidationError);
}

TEST(GrossSurplus, ZeroConsumption) {
  EXPECT_EQ(GrossSurplus({220.0, 0.02}, 0.0), 0.0);
}

TEST(GrossSurplus, MatchesQuadrature) {
  const LinearDemand d{220.0, 0.02};
  EXPECT_NEAR(GrossSurplus(d, 10000.0), 1200000.0, 1e-6);
  EXPECT_NEAR(SimpsonSurplus(d, 10000.0), 1200000.0, 1e-3);
  for (double l : {1.0, 777.0, 5000.0, 11000.0, 20000.0}) {
    EXPECT_NEAR(GrossSurplus(d, l), SimpsonSurplus(d, l), 1e-6 * std::max(1.0, GrossSurplus(d, l)));
  }
}

TEST(GrossSurplus, TriangleAndRectangle) {
  const double p0 = 37.0, q0 = 900.0;
  EXPECT_NEAR(GrossSurplus({2.0 * p0, p0 / q0}, q0), 1.5 * p0 * q0, 1e-9);
}

TEST(GrossSurplus, ConcaveAlongRandomSegments) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 20000.0), t(0.0, 1.0);
  const LinearDemand d{1100.0, 100.0 / 1500.0};
  for (int k = 0; k < 500; ++k) {
    const double x = u(rng), y = u(rng), w = t(rng);
    const double mid = GrossSurplus(d, w * x + (1 - w) * y);
    EXPECT_GE(mid + 1e-6, w * GrossSurplus(d, x) + (1 - w) * GrossSurplus(d, y));
  }
}

TEST(GrossSurplus, NegativeConsumptionIsADomainError) {
  EXPECT_THROW(GrossSurplus({220.0, 0.02}, -1.0), std::domain_error);
}

TEST(ValidateScenario, TableScenarioIsValid) {
  EXPECT_TRUE(ValidateScenario(fixture::TableScenario()).empty());
}

TEST(ValidateScenario, EfficiencyAboveOne) {
  Scenario s = fixture::TableScenario();
  s.storage->efficiency = 1.2;
  const auto v = ValidateScenario(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "storage.efficiency");
  EXPECT_NE(v[0].message.find("(0, 1]"), std::string::npos);
}

TEST(ValidateScenario, TwoOnPeakPeriods) {
  Scenario s = fixture::TableScenario();
  s.periods[1].label = PeriodLabel::kOnPeak;
  const auto v = ValidateScenario(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].field.find("label"), std::string::npos);
}

TEST(ValidateScenario, CollectsEveryViolation) {
  Scenario s = fixture::TableScenario();
  s.cycles_n = 0;
  s.periods[0].duration_hours = 0.0;
  s.generators[1].name = "baseload";
  s.storage->inv_cost_energy = -1.0;
  EXPECT_EQ(ValidateScenario(s).size(), 4u);
}

TEST(ChokeWarnings, FlagsLoadPastChoke) {
  const Scenario s = fixture::TableScenario();
  EXPECT_TRUE(ChokeWarnings(s, {15000.0, 10000.0}).empty());
  const auto w = ChokeWarnings(s, {15000.0, 12000.0});
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].field, "periods[1]");
}

TEST(Scenario, IndexHelpers) {
  const Scenario s = fixture::TableScenario();
  EXPECT_EQ(s.BaseloadIndex(), 0u);
  EXPECT_EQ(s.PeakerIndex(), 1u);
  EXPECT_EQ(s.OnPeak().duration_hours, 4.0);
  EXPECT_FALSE(s.WithoutStorage().HasStorage());
}

TEST(ParseScenario, BundledFile) {
  const Scenario s = LoadScenario(fixture::ScenarioFile());
  EXPECT_EQ(s.cycles_n, 365);
  ASSERT_TRUE(s.HasStorage());
  EXPECT_NEAR(s.OnPeak().demand.intercept_a, 1100.0, 1e-9);
  EXPECT_NEAR(s.OffPeak().demand.slope_b, 0.02, 1e-12);
  EXPECT_EQ(s.generators[1].name, "peaker");
  EXPECT_DOUBLE_EQ(s.storage->efficiency, 0.85);
}

TEST(ParseScenario, DemandForms) {
  nlohmann::json doc = ScenarioToJson(fixture::TableScenario());
  doc["periods"][0]["demand"] = {{"baseline_load_gw", 15.0}, {"baseline_price", 100.0}, {"elasticity", 0.1}};
  const Scenario s = ParseScenario(doc);
  EXPECT_NEAR(s.OnPeak().demand.intercept_a, 1100.0, 1e-9);
  EXPECT_NEAR(s.OffPeak().demand.intercept_a, 220.0, 1e-9);
}

TEST(ParseScenario, RoundTrip) {
  const Scenario a = fixture::TableScenario();
  const Scenario b = ParseScenario(ScenarioToJson(a));
  EXPECT_EQ(ScenarioToJson(a), ScenarioToJson(b));
}

TEST(ParseScenario, MissingFieldNamesIt) {
  nlohmann::json doc = ScenarioToJson(fixture::TableScenario());
  doc["generators"][1].erase("variable_cost");
  try {
    ParseScenario(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(e.field().find("variable_cost"), std::string::npos);
  }
}

TEST(ParseScenario, InvariantViolationIsReported) {
  nlohmann::json doc = ScenarioToJson(fixture::TableScenario());
  doc["storage"]["efficiency"] = 1.5;
  EXPECT_THROW(ParseScenario(doc), ValidationError);
  doc["storage"] = nullptr;
  EXPECT_FALSE(ParseScenario(doc).HasStorage());
}

TEST(ParseScenario, MalformedTextReportsOffset) {
  try {
    ParseScenarioText("{\"name\": \"x\", \"cycles_n\": 365,, }");
    FAIL() << "expected parse_error";
  } catch (const nlohmann::json::parse_error& e) {
    EXPECT_EQ(e.byte, 31u);  // 1-based position of the second comma
  }
}
