#include "selfrep/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Core>
#include <json.hpp>

#include "selfrep/errors.hpp"
#include "selfrep/hashing.hpp"
#include "selfrep/text_io.hpp"

namespace selfrep {
namespace {

using Json = nlohmann::ordered_json;

Json parse_json(const std::filesystem::path& path) {
  try {
    return Json::parse(io::read_file(path));
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Json summary_json(const QuantileSummary& s, double scale) {
  return {{"q10", s.q10 * scale}, {"median", s.median * scale}, {"mean", s.mean * scale}, {"q90", s.q90 * scale}};
}

}  // namespace

std::string version_string() {
  return std::string("selfrep ") + kVersion + "; eigen " + std::to_string(EIGEN_WORLD_VERSION) + "." +
         std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION) + "; " +
#if defined(__clang__)
         "clang " + __clang_version__;
#elif defined(__GNUC__)
         "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__) + "." +
         std::to_string(__GNUC_PATCHLEVEL__);
#else
         "unknown compiler";
#endif
}

void require_artifact(const std::filesystem::path& path, const std::string& produced_by) {
  if (!std::filesystem::exists(path))
    throw MissingArtifactError("missing artifact " + path.string() + " (run `" + produced_by + "` first)");
}

void RunManifest::add_input(const std::filesystem::path& root, const std::filesystem::path& file) {
  inputs.emplace_back(std::filesystem::relative(file, root).generic_string(), sha256_file(file));
}

void RunManifest::add_output(const std::filesystem::path& root, const std::filesystem::path& file) {
  outputs.emplace_back(std::filesystem::relative(file, root).generic_string(), sha256_file(file));
}

std::string RunManifest::to_json() const {
  Json j;
  j["command"] = command;
  j["version"] = version_string();
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["overrides"] = overrides;
  Json in = Json::object(), out = Json::object();
  for (const auto& [name, hash] : inputs) in[name] = hash;
  for (const auto& [name, hash] : outputs) out[name] = hash;
  j["inputs"] = std::move(in);
  j["outputs"] = std::move(out);
  return j.dump(2) + "\n";
}

std::string alpha_tag(double alpha) { return "a" + io::format_double(alpha); }

void save_model(const std::filesystem::path& path, const QuantileModel& model) {
  io::write_file(path, model.to_json());
}

QuantileModel load_model(const std::filesystem::path& path) {
  require_artifact(path, "train");
  try {
    return QuantileModel::from_json(io::read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string calibration_json(const CalibrationResult& c, const std::string& config_hash) {
  Json j;
  j["alpha"] = c.alpha;
  j["q_correction_m"] = c.infinite ? Json(nullptr) : Json(c.q);
  j["infinite"] = c.infinite;
  j["n_cal"] = c.n_cal;
  j["rank"] = conformal_rank(c.n_cal, c.alpha);
  j["scores"] = {{"min", c.scores.min}, {"median", c.scores.median}, {"max", c.scores.max}, {"mean", c.scores.mean}};
  j["model_id"] = c.model_id;
  j["dataset_hash"] = c.dataset_hash;
  j["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

void save_calibration(const std::filesystem::path& path, const CalibrationResult& c, const std::string& config_hash) {
  io::write_file(path, calibration_json(c, config_hash));
}

CalibrationResult load_calibration(const std::filesystem::path& path) {
  require_artifact(path, "calibrate");
  const Json j = parse_json(path);
  CalibrationResult c;
  try {
    c.alpha = j.at("alpha").get<double>();
    c.infinite = j.at("infinite").get<bool>();
    c.q = c.infinite ? std::numeric_limits<double>::infinity() : j.at("q_correction_m").get<double>();
    c.n_cal = j.at("n_cal").get<std::size_t>();
    const auto& s = j.at("scores");
    c.scores = {s.at("min").get<double>(), s.at("median").get<double>(), s.at("max").get<double>(),
                s.at("mean").get<double>()};
    c.model_id = j.at("model_id").get<std::string>();
    c.dataset_hash = j.at("dataset_hash").get<std::string>();
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!(c.alpha > 0.0 && c.alpha < 0.5) || (!c.infinite && !std::isfinite(c.q)))
    throw ValidationError(path.string() + ": invalid calibration values");
  return c;
}

std::string evaluation_json(const EvaluationReport& r, const EvaluationProvenance& p) {
  Json j;
  j["alpha"] = r.alpha;
  j["target_coverage"] = 1.0 - r.alpha;
  j["n_test"] = r.n_test;
  j["n_covered"] = r.n_covered;
  j["coverage"] = r.coverage;
  j["interval_length_cm"] = summary_json(r.length, 100.0);
  j["overshoot_cm"] = summary_json(r.overshoot, 100.0);
  j["q_correction_m"] = std::isfinite(p.q) ? Json(p.q) : Json(nullptr);
  j["model_id"] = p.model_id;
  j["dataset_hash"] = p.dataset_hash;
  j["config_hash"] = p.config_hash;
  return j.dump(2) + "\n";
}

std::string evaluation_table(const std::vector<EvaluationReport>& reports) {
  std::string out = "  C_a     cov%   |I| q10/med/mean/q90 [cm]          dI_hi q10/med/mean/q90 [cm]\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "  %5.1f%%  %6.2f  %6.2f %6.2f %6.2f %6.2f           %6.2f %6.2f %6.2f %6.2f\n",
                  100.0 * (1.0 - r.alpha), 100.0 * r.coverage, 100 * r.length.q10, 100 * r.length.median,
                  100 * r.length.mean, 100 * r.length.q90, 100 * r.overshoot.q10, 100 * r.overshoot.median,
                  100 * r.overshoot.mean, 100 * r.overshoot.q90);
    out += buf;
  }
  return out;
}

}  // namespace selfrep
