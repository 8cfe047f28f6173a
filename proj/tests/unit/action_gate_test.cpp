#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "selfrep/action_gate.hpp"
#include "selfrep/errors.hpp"
#include "support.hpp"

using namespace selfrep;

namespace {

/// Single-layer model whose heads are constant: (lo, hi) regardless of input.
QuantileModel constant_model(double lo, double hi, double alpha) {
  auto m = QuantileModel::initialize({19, 2}, alpha, 1);
  m.layers[0].weight.setZero();
  m.layers[0].bias << lo, hi;
  m.scaler.stddev.fill(1.0);
  return m;
}

CalibrationResult zero_calibration(double alpha) {
  CalibrationResult c;
  c.alpha = alpha;
  c.q = 0.0;
  c.n_cal = 100;
  return c;
}

SceneContext scene(double w_min) {
  SceneContext s;
  s.segment = selfrep::testing::straight_segment(150.0, w_min, 3.0, "scene");
  return s;
}

}  // namespace

TEST(FreeSpace, Examples) {
  EXPECT_EQ(free_lateral_space(2.78, 1.96), 0.41);
  EXPECT_EQ(free_lateral_space(2.5, 2.5), 0.0);
  EXPECT_EQ(free_lateral_space(3.00, 2.00), 0.50);
  EXPECT_THROW(free_lateral_space(1.9, 1.96), ValidationError);
  EXPECT_THROW(free_lateral_space(2.0, 0.0), ValidationError);
}

TEST(FreeSpace, DecimalInputsGiveTheNearestDouble) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const long long a = 250 + static_cast<long long>(rng.below(150));  // centimetres
    const long long b = 150 + static_cast<long long>(rng.below(100));
    const double w_min = a / 100.0, w_veh = b / 100.0;
    // (a - b) / 200 exactly, rounded once.
    ASSERT_EQ(free_lateral_space(w_min, w_veh), static_cast<double>(a - b) / 200.0) << w_min << " " << w_veh;
  }
}

TEST(Gate, TieRule) {
  const double f = free_lateral_space(2.78, 1.96);
  EXPECT_TRUE(is_feasible(f, f));
  EXPECT_FALSE(is_feasible(std::nextafter(f, 1.0), f));
  EXPECT_TRUE(is_feasible(std::nextafter(f, 0.0), f));
}

TEST(Gate, FeasibleAndInfeasibleExamples) {
  const auto sc = scene(2.78);
  const auto range = FeatureRange::from_config({}, {});
  ManeuverParams p;
  p.a_max = 3.0;
  const auto ok = assess_action(sc, p, constant_model(0.05, 0.24, 0.05), zero_calibration(0.05), range);
  EXPECT_EQ(ok.verdict, Verdict::feasible);
  EXPECT_NEAR(ok.margin, 0.17, 1e-12);
  const auto bad = assess_action(sc, p, constant_model(0.05, 0.53, 0.01), zero_calibration(0.01), range);
  EXPECT_EQ(bad.verdict, Verdict::infeasible);
  EXPECT_LT(bad.margin, 0.0);
}

TEST(Gate, HiEqualToFreeSpaceIsFeasible) {
  const auto sc = scene(2.78);
  ManeuverParams p;
  const auto a = assess_action(sc, p, constant_model(0.0, 0.41, 0.1), zero_calibration(0.1), FeatureRange::from_config({}, {}));
  EXPECT_EQ(a.interval.hi, 0.41);
  EXPECT_EQ(a.verdict, Verdict::feasible);
  EXPECT_EQ(a.margin, 0.0);
}

TEST(Gate, EnumerationSortsByMarginAndAppendsStop) {
  const auto sc = scene(2.78);
  const std::vector<double> grid{1, 2, 3, 4, 5};
  const auto out = enumerate_admissible(sc, grid, constant_model(0.01, 0.1, 0.1), zero_calibration(0.1),
                                        FeatureRange::from_config({}, {}));
  ASSERT_EQ(out.size(), 6u);
  for (std::size_t i = 0; i + 1 < 5; ++i) {
    EXPECT_EQ(out[i].verdict, Verdict::feasible);
    EXPECT_GE(out[i].margin, out[i + 1].margin);
  }
  EXPECT_EQ(out.back().label, "stop");
  EXPECT_EQ(out.back().verdict, Verdict::fallback);
  EXPECT_EQ(out[0].params.v_end_kmh, sc.speed_kmh);

  const auto empty = enumerate_admissible(sc, std::vector<double>{}, constant_model(0.01, 0.1, 0.1),
                                          zero_calibration(0.1), FeatureRange::from_config({}, {}));
  ASSERT_EQ(empty.size(), 1u);
  EXPECT_EQ(empty[0].label, "stop");
}

TEST(Gate, WarnsOnExtrapolation) {
  auto sc = scene(2.78);
  sc.speed_kmh = 80.0;  // outside the 30..50 km/h training range
  ManeuverParams p;
  p.v_init_kmh = p.v_end_kmh = 80.0;
  const auto a = assess_action(sc, p, constant_model(0.0, 0.1, 0.1), zero_calibration(0.1), FeatureRange::from_config({}, {}));
  ASSERT_FALSE(a.warnings.empty());
  EXPECT_NE(a.warnings[0].find("v_init"), std::string::npos);
}

TEST(Gate, AssessmentJsonFields) {
  const auto sc = scene(2.78);
  const std::vector<double> grid{2, 4};
  const auto out = enumerate_admissible(sc, grid, constant_model(0.0, 0.5, 0.1), zero_calibration(0.1),
                                        FeatureRange::from_config({}, {}));
  const auto j = nlohmann::json::parse(assessment_json(sc, 0.1, out));
  EXPECT_EQ(j["alpha"], 0.1);
  ASSERT_EQ(j["candidates"].size(), 3u);
  for (const char* key : {"a_max", "lo_m", "hi_m", "eps_free_m", "margin_m", "verdict", "warnings"})
    EXPECT_TRUE(j["candidates"][0].contains(key)) << key;
  EXPECT_EQ(j["candidates"][0]["verdict"], "infeasible");
  EXPECT_EQ(j["candidates"][2]["verdict"], "fallback");
  EXPECT_EQ(j["scene"]["w_min_m"], 2.78);
}
