#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "selfrep/maneuver.hpp"
#include "selfrep/road_model.hpp"
#include "selfrep/tracking_controller.hpp"
#include "selfrep/vehicle_plant.hpp"

namespace selfrep {

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr std::size_t kFeatureCount = 19;

/// [w_min, w_max, k_min, k_max, v_init (km/h), v_end (km/h), a_max,
///  steer-angle factors FL..RR, steer-rate factors FL..RR, torque factors FL..RR]
using FeatureVector = std::array<double, kFeatureCount>;

const std::array<std::string_view, kFeatureCount>& feature_names();

FeatureVector make_features(const RoadSegment& seg, const ManeuverParams& params, const DegradationSet& deg);

enum class SampleFlag : int { ok = 0, infeasible = 1, diverged = 2 };

struct Sample {
  std::string seg_id;
  int man_idx = 0;
  int deg_idx = 0;
  FeatureVector x{};
  double y = 0.0;  // max lateral deviation [m]; NaN when flagged
  SampleFlag flag = SampleFlag::ok;

  std::string key() const;
};

/// First entry nominal, the rest with all twelve factors independent uniform on [0, 1].
std::vector<DegradationSet> sample_degradations(int count, Rng& rng);

struct DatasetConfig {
  int n_segments = 50;
  int n_maneuvers = 20;
  int n_degradations = 20;
  int segment_pool = 403;       // synthetic segments generated when none are supplied
  int maneuver_retries = 10;    // resamples of an infeasible maneuver before flagging it
  double max_flagged_fraction = 0.2;
  unsigned threads = 0;         // 0: hardware concurrency
  SegmentRanges roads;
  ManeuverRanges maneuvers;
  PlantConfig plant;
  ControllerConfig controller;

  void validate() const;
};

struct DatasetResult {
  std::vector<Sample> samples;  // ordered by (segment, maneuver, degradation)
  long long bound_violations = 0;
  int flagged = 0;
};

/// Factorial sampling over segments x maneuvers x degradations, one closed-loop
/// simulation per sample. Segments are drawn without replacement from `pool`.
/// Throws Error when more than `max_flagged_fraction` of the samples are flagged.
DatasetResult generate_dataset(const DatasetConfig& cfg, std::span<const RoadSegment> pool, std::uint64_t seed);

/// The `cfg.segment_pool` synthetic segments used when no pool is supplied.
std::vector<RoadSegment> synthetic_pool(const DatasetConfig& cfg, std::uint64_t seed);

/// Same, with a synthetic pool of `cfg.segment_pool` segments drawn from `seed`.
DatasetResult generate_dataset(const DatasetConfig& cfg, std::uint64_t seed);

std::string dataset_csv(std::span<const Sample> samples);
void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples);
std::vector<Sample> read_dataset(const std::filesystem::path& path);

struct Scaler {
  FeatureVector mean{};
  FeatureVector stddev{};

  /// Population statistics; throws ValidationError on a constant column.
  static Scaler fit(std::span<const Sample> samples);
  FeatureVector apply(const FeatureVector& x) const;
};

struct DatasetSplits {
  std::vector<Sample> train, test, calibration;
  Scaler scaler;
};

/// Shuffles the unflagged samples, splits train/held-out, and takes `cal_count` of the
/// held-out samples for calibration. The scaler is fitted on train only.
DatasetSplits split_and_scale(std::span<const Sample> samples, double train_frac, int cal_count, std::uint64_t seed);

/// Scaled feature rows (n x 19) and labels.
Eigen::MatrixXd scaled_features(std::span<const Sample> samples, const Scaler& scaler);
Eigen::VectorXd labels(std::span<const Sample> samples);

/// JSON listing sample keys per split plus the scaler statistics.
std::string split_manifest_json(const DatasetSplits& splits);

}  // namespace selfrep
