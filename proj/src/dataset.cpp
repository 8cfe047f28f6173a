#include "selfrep/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "selfrep/errors.hpp"
#include "selfrep/text_io.hpp"

namespace selfrep {
namespace {

constexpr std::uint64_t kStreamSegments = 0x5e9;
constexpr std::uint64_t kStreamPool = 0x9001;
constexpr std::uint64_t kStreamManeuver = 0x3a11;
constexpr std::uint64_t kStreamDegradation = 0xde9;

std::string csv_header() {
  std::string h = "schema_version,seg_id,man_idx,deg_idx";
  for (auto name : feature_names()) {
    h += ',';
    h += name;
  }
  h += ",eps_lat_max,flag";
  return h;
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names{
      "w_min",  "w_max",  "k_min",  "k_max",  "v_init", "v_end",  "a_max",  "dsf_fl", "dsf_fr", "dsf_rl",
      "dsf_rr", "drf_fl", "drf_fr", "drf_rl", "drf_rr", "trf_fl", "trf_fr", "trf_rl", "trf_rr"};
  return names;
}

FeatureVector make_features(const RoadSegment& seg, const ManeuverParams& p, const DegradationSet& deg) {
  FeatureVector x{};
  x[0] = seg.w_min;
  x[1] = seg.w_max;
  x[2] = seg.k_min;
  x[3] = seg.k_max;
  x[4] = p.v_init_kmh;
  x[5] = p.v_end_kmh;
  x[6] = p.a_max;
  for (std::size_t w = 0; w < kWheels; ++w) {
    x[7 + w] = deg.steer_angle[w];
    x[11 + w] = deg.steer_rate[w];
    x[15 + w] = deg.torque[w];
  }
  return x;
}

std::string Sample::key() const { return seg_id + "/" + std::to_string(man_idx) + "/" + std::to_string(deg_idx); }

std::vector<DegradationSet> sample_degradations(int count, Rng& rng) {
  if (count < 1) throw ValidationError("degradation count must be >= 1");
  std::vector<DegradationSet> out(static_cast<std::size_t>(count));
  for (std::size_t i = 1; i < out.size(); ++i) {
    auto& d = out[i];
    for (auto* arr : {&d.steer_angle, &d.steer_rate, &d.torque})
      for (double& f : *arr) f = rng.uniform();
  }
  return out;
}

void DatasetConfig::validate() const {
  if (n_segments < 1 || n_maneuvers < 1 || n_degradations < 1)
    throw ValidationError("dataset counts must all be >= 1");
  if (segment_pool < n_segments) throw ValidationError("segment pool smaller than the number of segments");
  if (maneuver_retries < 0) throw ValidationError("maneuver retries must be >= 0");
  if (!(max_flagged_fraction >= 0.0 && max_flagged_fraction <= 1.0))
    throw ValidationError("max flagged fraction must lie in [0, 1]");
  plant.validate();
  controller.validate();
}

std::vector<RoadSegment> synthetic_pool(const DatasetConfig& cfg, std::uint64_t seed) {
  return generate_segments(cfg.segment_pool, derive_seed(seed, {kStreamPool}), cfg.roads);
}

DatasetResult generate_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto pool = synthetic_pool(cfg, seed);
  return generate_dataset(cfg, pool, seed);
}

DatasetResult generate_dataset(const DatasetConfig& cfg, std::span<const RoadSegment> pool, std::uint64_t seed) {
  cfg.validate();
  if (static_cast<int>(pool.size()) < cfg.n_segments)
    throw ValidationError("segment pool has " + std::to_string(pool.size()) + " segments, " +
                          std::to_string(cfg.n_segments) + " requested");

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng pick(derive_seed(seed, {kStreamSegments}));
  pick.shuffle(std::span<std::size_t>(order));
  order.resize(static_cast<std::size_t>(cfg.n_segments));

  const auto n_ref = static_cast<std::size_t>(cfg.n_segments) * static_cast<std::size_t>(cfg.n_maneuvers);
  const auto n_deg = static_cast<std::size_t>(cfg.n_degradations);
  DatasetResult result;
  result.samples.resize(n_ref * n_deg);
  std::vector<long long> violations(n_ref, 0);

  // One job per reference trajectory; every job owns its seed streams and output slots.
  auto run_job = [&](std::size_t job) {
    const std::size_t i = job / static_cast<std::size_t>(cfg.n_maneuvers);
    const std::size_t j = job % static_cast<std::size_t>(cfg.n_maneuvers);
    const RoadSegment& seg = pool[order[i]];

    Rng man_rng(derive_seed(seed, {kStreamManeuver, i, j}));
    ManeuverParams params;
    ReferenceTrajectory ref;
    bool feasible = false;
    for (int attempt = 0; attempt <= cfg.maneuver_retries && !feasible; ++attempt) {
      params = sample_maneuver_params(man_rng, cfg.maneuvers);
      try {
        ref = generate_lane_change(seg, params);
        feasible = true;
      } catch (const InfeasibleManeuver&) {
      }
    }

    Rng deg_rng(derive_seed(seed, {kStreamDegradation, i, j}));
    const auto degs = sample_degradations(cfg.n_degradations, deg_rng);
    for (std::size_t k = 0; k < n_deg; ++k) {
      Sample& s = result.samples[job * n_deg + k];
      s.seg_id = seg.id;
      s.man_idx = static_cast<int>(j);
      s.deg_idx = static_cast<int>(k);
      s.x = make_features(seg, params, degs[k]);
      s.y = std::numeric_limits<double>::quiet_NaN();
      if (!feasible) {
        s.flag = SampleFlag::infeasible;
        continue;
      }
      try {
        const auto trace = track_trajectory(ref, degs[k], cfg.plant, cfg.controller);
        violations[job] += trace.bound_violations;
        s.y = max_deviation(trace).eps_lat;
        s.flag = SampleFlag::ok;
      } catch (const SimulationDiverged&) {
        s.flag = SampleFlag::diverged;
      }
    }
  };

  unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_ref));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < n_ref;) run_job(job);
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }

  for (long long v : violations) result.bound_violations += v;
  for (const auto& s : result.samples)
    if (s.flag != SampleFlag::ok) ++result.flagged;
  const double frac = static_cast<double>(result.flagged) / static_cast<double>(result.samples.size());
  if (frac > cfg.max_flagged_fraction)
    throw Error(std::to_string(result.flagged) + " of " + std::to_string(result.samples.size()) +
                " samples flagged (infeasible or diverged); check plant and controller settings");
  return result;
}

std::string dataset_csv(std::span<const Sample> samples) {
  std::string out = csv_header();
  out += '\n';
  for (const auto& s : samples) {
    out += std::to_string(kDatasetSchemaVersion);
    out += ',' + s.seg_id + ',' + std::to_string(s.man_idx) + ',' + std::to_string(s.deg_idx);
    for (double v : s.x) {
      out += ',';
      out += io::format_double(v);
    }
    out += ',';
    out += io::format_double(s.y);
    out += ',' + std::to_string(static_cast<int>(s.flag));
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples) {
  io::write_file(path, dataset_csv(samples));
}

std::vector<Sample> read_dataset(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  if (lines.empty() || lines[0] != csv_header())
    throw ValidationError(path.string() + ": unexpected dataset header (schema " +
                          std::to_string(kDatasetSchemaVersion) + " expected)");
  std::vector<Sample> out;
  out.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cols = io::split(lines[r], ',');
    const std::string where = path.string() + " row " + std::to_string(r);
    if (cols.size() != 4 + kFeatureCount + 2) throw ValidationError(where + ": wrong column count");
    try {
      if (io::parse_int(cols[0]) != kDatasetSchemaVersion) throw ValidationError("schema version mismatch");
      Sample s;
      s.seg_id = std::string(cols[1]);
      s.man_idx = static_cast<int>(io::parse_int(cols[2]));
      s.deg_idx = static_cast<int>(io::parse_int(cols[3]));
      for (std::size_t f = 0; f < kFeatureCount; ++f) s.x[f] = io::parse_double(cols[4 + f]);
      s.y = io::parse_double(cols[4 + kFeatureCount]);
      const auto flag = io::parse_int(cols[5 + kFeatureCount]);
      if (flag < 0 || flag > 2) throw ValidationError("unknown flag " + std::to_string(flag));
      s.flag = static_cast<SampleFlag>(flag);
      if (s.flag == SampleFlag::ok && !(s.y >= 0.0)) throw ValidationError("label must be >= 0");
      out.push_back(std::move(s));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

Scaler Scaler::fit(std::span<const Sample> samples) {
  if (samples.empty()) throw ValidationError("cannot fit a scaler on an empty set");
  Scaler sc;
  const double n = static_cast<double>(samples.size());
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double sum = 0.0;
    for (const auto& s : samples) sum += s.x[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& s : samples) ss += (s.x[f] - mean) * (s.x[f] - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) throw ValidationError(std::string("feature '") + std::string(feature_names()[f]) +
                                           "' is constant on the training set");
    sc.mean[f] = mean;
    sc.stddev[f] = sd;
  }
  return sc;
}

FeatureVector Scaler::apply(const FeatureVector& x) const {
  FeatureVector z{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) z[f] = (x[f] - mean[f]) / stddev[f];
  return z;
}

DatasetSplits split_and_scale(std::span<const Sample> samples, double train_frac, int cal_count,
                              std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ValidationError("train fraction must lie in (0, 1)");
  std::vector<const Sample*> usable;
  for (const auto& s : samples)
    if (s.flag == SampleFlag::ok) usable.push_back(&s);
  Rng rng(seed);
  rng.shuffle(std::span<const Sample*>(usable));

  const auto n = usable.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  const auto held_out = n - n_train;
  if (cal_count < 1 || static_cast<std::size_t>(cal_count) >= held_out)
    throw ValidationError("calibration count " + std::to_string(cal_count) + " must lie in [1, " +
                          std::to_string(held_out) + ") for " + std::to_string(n) + " usable samples");

  DatasetSplits out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train)
      out.train.push_back(*usable[i]);
    else if (i < n_train + static_cast<std::size_t>(cal_count))
      out.calibration.push_back(*usable[i]);
    else
      out.test.push_back(*usable[i]);
  }
  out.scaler = Scaler::fit(out.train);
  return out;
}

Eigen::MatrixXd scaled_features(std::span<const Sample> samples, const Scaler& scaler) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto z = scaler.apply(samples[i].x);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = z[f];
  }
  return X;
}

Eigen::VectorXd labels(std::span<const Sample> samples) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) y[static_cast<Eigen::Index>(i)] = samples[i].y;
  return y;
}

std::string split_manifest_json(const DatasetSplits& splits) {
  nlohmann::ordered_json j;
  auto keys = [](const std::vector<Sample>& v) {
    std::vector<std::string> k;
    k.reserve(v.size());
    for (const auto& s : v) k.push_back(s.key());
    return k;
  };
  j["train"] = keys(splits.train);
  j["calibration"] = keys(splits.calibration);
  j["test"] = keys(splits.test);
  nlohmann::ordered_json sc;
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    sc[std::string(feature_names()[f])] = {{"mean", splits.scaler.mean[f]}, {"std", splits.scaler.stddev[f]}};
  j["scaler"] = sc;
  return j.dump(2) + "\n";
}

}  // namespace selfrep
