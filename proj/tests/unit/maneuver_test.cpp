#include <gtest/gtest.h>

#include <cmath>

#include "selfrep/errors.hpp"
#include "selfrep/maneuver.hpp"
#include "selfrep/units.hpp"
#include "support.hpp"

using namespace selfrep;

namespace {

// Peak |p''| of the rest-to-rest quintic by dense-grid maximization.
double dense_quintic_peak() {
  double peak = 0.0;
  constexpr int n = 2'000'000;
  for (int i = 0; i <= n; ++i) {
    const double u = double(i) / n;
    peak = std::max(peak, std::abs(60 * u - 180 * u * u + 120 * u * u * u));
  }
  return peak;
}

double peak_combined(const ReferenceTrajectory& ref) {
  double m = 0.0;
  for (const auto& r : ref.states) m = std::max(m, std::hypot(r.ax, r.ay));
  return m;
}

ManeuverParams params(double v0, double v1, double a) {
  ManeuverParams p;
  p.v_init_kmh = v0;
  p.v_end_kmh = v1;
  p.a_max = a;
  return p;
}

}  // namespace

TEST(ManeuverSampling, DeterministicLeftAndInRange) {
  Rng a(99), b(99);
  const auto pa = sample_maneuver_params(a);
  const auto pb = sample_maneuver_params(b);
  EXPECT_EQ(pa.v_init_kmh, pb.v_init_kmh);
  EXPECT_EQ(pa.v_end_kmh, pb.v_end_kmh);
  EXPECT_EQ(pa.a_max, pb.a_max);

  Rng rng(5);
  double sum = 0.0;
  constexpr int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto p = sample_maneuver_params(rng);
    EXPECT_EQ(p.direction, Direction::left);
    EXPECT_EQ(p.mu, 1.0);
    ASSERT_GE(p.v_init_kmh, 30.0);
    ASSERT_LE(p.v_init_kmh, 50.0);
    ASSERT_GE(p.v_end_kmh, 30.0);
    ASSERT_LE(p.v_end_kmh, 50.0);
    ASSERT_GE(p.a_max, 1.0);
    ASSERT_LE(p.a_max, 5.0);
    sum += p.a_max;
  }
  const double stderr_mean = (4.0 / std::sqrt(12.0)) / std::sqrt(double(n));
  EXPECT_NEAR(sum / n, 3.0, 3.0 * stderr_mean);
}

TEST(LaneChange, QuinticPeakConstantMatchesDenseGrid) {
  EXPECT_NEAR(kQuinticPeakAccel, dense_quintic_peak(), 1e-9);
}

TEST(LaneChange, DurationOnStraightRoadMatchesOracle) {
  const auto seg = selfrep::testing::straight_segment(200.0, 3.5, 3.5);
  const double peak = dense_quintic_peak();
  const auto r3 = generate_lane_change(seg, params(50, 50, 3.0));
  EXPECT_NEAR(r3.duration, std::sqrt(peak * 3.5 / 3.0), 1e-6);
  EXPECT_NEAR(r3.duration, 2.60, 0.005);
  const auto r5 = generate_lane_change(seg, params(50, 50, 5.0));
  EXPECT_NEAR(r5.duration, 2.01, 0.005);

  double prev = 1e9;
  for (double a = 1.0; a <= 5.0; a += 0.25) {
    const double T = generate_lane_change(seg, params(40, 40, a)).duration;
    EXPECT_LE(T, prev);
    prev = T;
  }
}

TEST(LaneChange, BoundaryConditionsAreExact) {
  Rng rng(17);
  for (const auto& seg : generate_segments(20, 4)) {
    auto p = sample_maneuver_params(rng);
    ReferenceTrajectory ref;
    try {
      ref = generate_lane_change(seg, p);
    } catch (const InfeasibleManeuver&) {
      continue;
    }
    const auto& a = ref.states.front();
    const auto& b = ref.states.back();
    EXPECT_EQ(a.v, units::kmh_to_mps(p.v_init_kmh));
    EXPECT_EQ(b.v, units::kmh_to_mps(p.v_end_kmh));
    EXPECT_EQ(a.d, 0.0);
    EXPECT_EQ(b.d, ref.lane_offset);
    EXPECT_EQ(a.d_dot, 0.0);
    EXPECT_EQ(b.d_dot, 0.0);
    EXPECT_EQ(ref.lane_offset, resolve_lane_offset(seg));
    EXPECT_LE(peak_combined(ref), p.a_max + 1e-6);
  }
}

TEST(LaneChange, TighterToleranceConverges) {
  const auto seg = selfrep::testing::straight_segment(250.0, 3.2, 3.2);
  LaneChangeOptions coarse, fine;
  fine.tolerance = coarse.tolerance / 10.0;
  for (const auto& p : {params(30, 50, 2.0), params(50, 30, 4.0), params(35, 45, 1.2)}) {
    const double t1 = generate_lane_change(seg, p, coarse).duration;
    const double t2 = generate_lane_change(seg, p, fine).duration;
    EXPECT_LT(std::abs(t1 - t2), coarse.tolerance);
  }
}

TEST(LaneChange, SecondDerivativeIntegratesBackToOffset) {
  // On a straight road a_y is d''; trapezoidal double integration recovers d to O(dt^2).
  const auto seg = selfrep::testing::straight_segment(200.0, 3.0, 3.0);
  const auto ref = generate_lane_change(seg, params(40, 40, 2.0));
  double d = 0.0, v = 0.0, worst = 0.0;
  for (std::size_t i = 1; i < ref.states.size(); ++i) {
    const auto& p = ref.states[i - 1];
    const auto& q = ref.states[i];
    const double h = q.t - p.t;
    const double v_next = v + 0.5 * h * (p.ay + q.ay);
    d += 0.5 * h * (v + v_next);
    v = v_next;
    worst = std::max(worst, std::abs(d - q.d));
  }
  EXPECT_LT(worst, 5.0 * ref.dt * ref.dt);
}

TEST(LaneChange, YawRateIsDerivativeOfYaw) {
  const auto segs = generate_segments(5, 9);
  for (const auto& seg : segs) {
    ReferenceTrajectory ref;
    try {
      ref = generate_lane_change(seg, params(45, 35, 3.0));
    } catch (const InfeasibleManeuver&) {
      continue;
    }
    for (std::size_t i = 1; i + 1 < ref.states.size(); ++i) {
      const auto& a = ref.states[i - 1];
      const auto& b = ref.states[i + 1];
      const double fd = (b.psi - a.psi) / (b.t - a.t);
      EXPECT_NEAR(ref.states[i].psidot, fd, 0.02);
    }
  }
}

TEST(LaneChange, LaneOffsetFollowsWidthProfile) {
  EXPECT_DOUBLE_EQ(resolve_lane_offset(selfrep::testing::straight_segment(100.0, 3.2, 3.2)), 3.2);
  const auto seg = selfrep::testing::straight_segment(200.0, 2.78, 3.44);
  EXPECT_NEAR(resolve_lane_offset(seg, 100.0), 3.11, 1e-12);
  for (double s = 0.0; s <= 200.0; s += 7.0) {
    const double w = resolve_lane_offset(seg, s);
    EXPECT_GE(w, seg.w_min);
    EXPECT_LE(w, seg.w_max);
  }
}

TEST(LaneChange, ShortSegmentIsInfeasible) {
  const auto seg = selfrep::testing::straight_segment(20.0, 3.0, 3.0);
  EXPECT_THROW(generate_lane_change(seg, params(50, 50, 1.0)), InfeasibleManeuver);
}

TEST(LaneChange, RejectsInvalidParameters) {
  const auto seg = selfrep::testing::straight_segment(200.0, 3.0, 3.0);
  EXPECT_THROW(generate_lane_change(seg, params(50, 50, 0.0)), ValidationError);
  auto p = params(50, 50, 3.0);
  p.direction = Direction::right;
  EXPECT_THROW(generate_lane_change(seg, p), ValidationError);
}

TEST(LaneChange, HoldsTargetLaneAfterTheEnd) {
  const auto seg = selfrep::testing::straight_segment(200.0, 3.0, 3.0);
  const auto ref = generate_lane_change(seg, params(40, 30, 3.0));
  const auto r = ref.at(ref.duration + 0.7);
  EXPECT_EQ(r.d, 3.0);
  EXPECT_NEAR(r.v, units::kmh_to_mps(30.0), 1e-12);
  EXPECT_NEAR(r.s, ref.states.back().s + 0.7 * r.v, 1e-9);
}
