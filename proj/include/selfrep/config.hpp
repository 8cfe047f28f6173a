#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selfrep/dataset.hpp"
#include "selfrep/quantile_net.hpp"

namespace selfrep {

/// What-if scene for the `scenario` command.
struct ScenarioConfig {
  double w_min_m = 2.78;
  double w_max_m = 3.0;
  double length_m = 150.0;
  double speed_kmh = 50.0;
  std::vector<double> a_max_grid{1.0, 2.0, 3.0, 4.0, 5.0};
  int degradation_sets = 5;  // D1..Dn, steering-only, in addition to the nominal D0
  bool simulate = true;      // also run the closed loop for the true deviation
};

/// Every experiment parameter, read from a flat `section.key_unit = value` file.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  DatasetConfig dataset;
  TrainingConfig training;
  double train_fraction = 0.8;
  int calibration_count = 2000;
  std::vector<double> alphas{0.1, 0.05, 0.01};
  ScenarioConfig scenario;

  /// Keys whose values were set explicitly (file or command line), in order of assignment.
  std::vector<std::string> overrides;

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  /// Canonical `key = value` text of every parameter; the config hash is taken over it.
  std::string canonical_text() const;
  std::string hash() const;

  void validate() const;
};

/// Parses a config file on top of the defaults. Unknown keys and malformed values are
/// reported with their line number.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");

std::vector<double> parse_double_list(const std::string& text);

}  // namespace selfrep
