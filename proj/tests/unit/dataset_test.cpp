#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "selfrep/dataset.hpp"
#include "selfrep/errors.hpp"
#include "support.hpp"

using namespace selfrep;
using selfrep::testing::TempDir;

namespace {

DatasetConfig small_config(int ns, int nm, int nd) {
  DatasetConfig c;
  c.n_segments = ns;
  c.n_maneuvers = nm;
  c.n_degradations = nd;
  c.segment_pool = std::max(ns, 8);
  c.threads = 2;
  return c;
}

/// Synthetic samples with independent uniform features; no simulation involved.
std::vector<Sample> fake_samples(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.seg_id = "S" + std::to_string(i / 400);
    s.man_idx = (i / 20) % 20;
    s.deg_idx = i % 20;
    for (auto& v : s.x) v = rng.uniform(-2.0, 5.0);
    s.y = rng.uniform(0.0, 1.0);
  }
  return out;
}

}  // namespace

TEST(Degradations, FirstIsNominalRestUniform) {
  Rng a(4), b(4);
  const auto da = sample_degradations(20, a);
  const auto db = sample_degradations(20, b);
  ASSERT_EQ(da.size(), 20u);
  EXPECT_EQ(da[0], DegradationSet::nominal());
  for (std::size_t i = 0; i < da.size(); ++i) EXPECT_EQ(da[i], db[i]);

  Rng rng(77);
  constexpr int n = 10000;
  const auto d = sample_degradations(n + 1, rng);
  std::array<double, 12> sum{};
  for (int i = 1; i <= n; ++i) {
    for (std::size_t w = 0; w < kWheels; ++w) {
      sum[w] += d[i].steer_angle[w];
      sum[4 + w] += d[i].steer_rate[w];
      sum[8 + w] += d[i].torque[w];
    }
  }
  const double se = std::sqrt(1.0 / 12.0) / std::sqrt(double(n));
  for (double s : sum) EXPECT_NEAR(s / n, 0.5, 3.0 * se);
}

TEST(Dataset, DefaultCountsGiveTwentyThousandSamples) {
  const DatasetConfig c;
  EXPECT_EQ(c.n_segments * c.n_maneuvers * c.n_degradations, 20000);
}

TEST(Dataset, SingleSampleIsNominal) {
  const auto r = generate_dataset(small_config(1, 1, 1), 3);
  ASSERT_EQ(r.samples.size(), 1u);
  for (std::size_t f = 7; f < kFeatureCount; ++f) EXPECT_EQ(r.samples[0].x[f], 1.0);
  EXPECT_EQ(r.samples[0].flag, SampleFlag::ok);
  EXPECT_GT(r.samples[0].y, 0.0);
}

TEST(Dataset, FactorialLayoutDeterminismAndExactConstraints) {
  const auto cfg = small_config(2, 2, 3);
  const auto a = generate_dataset(cfg, 42);
  ASSERT_EQ(a.samples.size(), 12u);
  EXPECT_EQ(a.bound_violations, 0);
  std::set<std::string> keys;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto& s = a.samples[i];
    EXPECT_EQ(s.man_idx, static_cast<int>((i / 3) % 2));
    EXPECT_EQ(s.deg_idx, static_cast<int>(i % 3));
    keys.insert(s.key());
  }
  EXPECT_EQ(keys.size(), 12u);

  auto single = cfg;
  single.threads = 1;
  const auto b = generate_dataset(single, 42);
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i].y, b.samples[i].y);
  EXPECT_EQ(dataset_csv(a.samples), dataset_csv(b.samples));
}

TEST(Dataset, TooManyInfeasibleSamplesIsAnError) {
  auto cfg = small_config(2, 2, 2);
  cfg.maneuver_retries = 1;
  std::vector<RoadSegment> pool{selfrep::testing::straight_segment(15.0, 3.0, 3.0, "a"),
                                selfrep::testing::straight_segment(15.0, 3.0, 3.0, "b")};
  EXPECT_THROW(generate_dataset(cfg, pool, 1), Error);
  cfg.max_flagged_fraction = 1.0;
  const auto r = generate_dataset(cfg, pool, 1);
  EXPECT_EQ(r.flagged, 8);
  for (const auto& s : r.samples) {
    EXPECT_EQ(s.flag, SampleFlag::infeasible);
    EXPECT_TRUE(std::isnan(s.y));
  }
}

TEST(Dataset, CsvRoundTripIncludingFlaggedRows) {
  TempDir dir("dataset");
  auto s = fake_samples(30, 5);
  s[3].flag = SampleFlag::diverged;
  s[3].y = std::nan("");
  write_dataset(dir / "d.csv", s);
  const auto back = read_dataset(dir / "d.csv");
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back[i].key(), s[i].key());
    EXPECT_EQ(back[i].x, s[i].x);
    EXPECT_EQ(back[i].flag, s[i].flag);
    if (s[i].flag == SampleFlag::ok) {
      EXPECT_EQ(back[i].y, s[i].y);
    }
  }
  EXPECT_TRUE(std::isnan(back[3].y));
  EXPECT_EQ(dataset_csv(back), dataset_csv(s));
}

TEST(Dataset, CsvHeaderIsFixed) {
  const auto text = dataset_csv(fake_samples(1, 1));
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "schema_version,seg_id,man_idx,deg_idx,w_min,w_max,k_min,k_max,v_init,v_end,a_max,"
            "dsf_fl,dsf_fr,dsf_rl,dsf_rr,drf_fl,drf_fr,drf_rl,drf_rr,trf_fl,trf_fr,trf_rl,trf_rr,eps_lat_max,flag");
}

TEST(Split, ReferenceScaleSizes) {
  const auto s = fake_samples(20000, 9);
  const auto sp = split_and_scale(s, 0.8, 2000, 1);
  EXPECT_EQ(sp.train.size(), 16000u);
  EXPECT_EQ(sp.calibration.size(), 2000u);
  EXPECT_EQ(sp.test.size(), 2000u);
  std::set<std::string> all;
  for (const auto* part : {&sp.train, &sp.calibration, &sp.test})
    for (const auto& x : *part) all.insert(x.key());
  EXPECT_EQ(all.size(), 20000u);  // disjoint and complete
}

TEST(Split, ScaledTrainFeaturesAreStandardized) {
  const auto sp = split_and_scale(fake_samples(3000, 2), 0.8, 300, 4);
  const Eigen::MatrixXd Z = scaled_features(sp.train, sp.scaler);
  for (Eigen::Index f = 0; f < Z.cols(); ++f) {
    const double mean = Z.col(f).mean();
    const double var = (Z.col(f).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-9);
  }
}

TEST(Split, ExcludesFlaggedAndIsDeterministic) {
  auto s = fake_samples(500, 3);
  for (int i = 0; i < 50; ++i) {
    s[static_cast<std::size_t>(i * 10)].flag = SampleFlag::infeasible;
    s[static_cast<std::size_t>(i * 10)].y = std::nan("");
  }
  const auto a = split_and_scale(s, 0.8, 40, 6);
  const auto b = split_and_scale(s, 0.8, 40, 6);
  EXPECT_EQ(a.train.size() + a.test.size() + a.calibration.size(), 450u);
  EXPECT_EQ(split_manifest_json(a), split_manifest_json(b));
  EXPECT_NE(split_manifest_json(a), split_manifest_json(split_and_scale(s, 0.8, 40, 7)));
}

TEST(Scaler, ConstantColumnIsRejected) {
  auto s = fake_samples(50, 1);
  for (auto& x : s) x.x[7] = 1.0;
  try {
    Scaler::fit(s);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("dsf_fl"), std::string::npos);
  }
}

TEST(Split, RejectsBadFractions) {
  const auto s = fake_samples(100, 1);
  EXPECT_THROW(split_and_scale(s, 1.0, 5, 1), ValidationError);
  EXPECT_THROW(split_and_scale(s, 0.8, 20, 1), ValidationError);
  EXPECT_THROW(split_and_scale(s, 0.8, 0, 1), ValidationError);
}
