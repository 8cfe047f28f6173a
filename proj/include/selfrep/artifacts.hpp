#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "selfrep/conformal.hpp"
#include "selfrep/quantile_net.hpp"

namespace selfrep {

inline constexpr const char* kVersion = "1.0.0";

/// Library, compiler and dependency versions recorded in every manifest.
std::string version_string();

/// Throws MissingArtifactError naming the producing command when `path` is absent.
void require_artifact(const std::filesystem::path& path, const std::string& produced_by);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;  // "key = value"
  std::vector<std::pair<std::string, std::string>> inputs;   // file name, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // file name, sha256

  /// Records a file by its name relative to `root` together with its digest.
  void add_input(const std::filesystem::path& root, const std::filesystem::path& file);
  void add_output(const std::filesystem::path& root, const std::filesystem::path& file);

  std::string to_json() const;
};

/// File-name token for a miscoverage level, e.g. 0.05 -> "a0.05".
std::string alpha_tag(double alpha);

void save_model(const std::filesystem::path& path, const QuantileModel& model);
QuantileModel load_model(const std::filesystem::path& path);

std::string calibration_json(const CalibrationResult& c, const std::string& config_hash);
void save_calibration(const std::filesystem::path& path, const CalibrationResult& c, const std::string& config_hash);
CalibrationResult load_calibration(const std::filesystem::path& path);

struct EvaluationProvenance {
  std::string model_id;
  std::string dataset_hash;
  std::string config_hash;
  double q = 0.0;
};

std::string evaluation_json(const EvaluationReport& r, const EvaluationProvenance& p);

/// Coverage / length / overshoot table with one row per alpha, lengths in cm.
std::string evaluation_table(const std::vector<EvaluationReport>& reports);

}  // namespace selfrep
