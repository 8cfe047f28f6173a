#pragma once

#include <span>
#include <string>
#include <vector>

#include "selfrep/quantile_net.hpp"

namespace selfrep {

/// max(lo − y, y − hi); negative iff y lies strictly inside [lo, hi].
double conformity_score(double y, double lo, double hi);

/// ⌈(n + 1)(1 − α)⌉, the rank of the calibration order statistic.
long long conformal_rank(std::size_t n, double alpha);

struct ScoreSummary {
  double min = 0.0, median = 0.0, max = 0.0, mean = 0.0;
};

struct CalibrationResult {
  double alpha = 0.1;
  double q = 0.0;          // correction [m]; +inf when the rank exceeds n_cal
  std::size_t n_cal = 0;
  bool infinite = false;
  ScoreSummary scores;
  std::string model_id;
  std::string dataset_hash;
};

/// Q as the k-th smallest score, k = ⌈(n + 1)(1 − α)⌉.
CalibrationResult calibrate_scores(std::span<const double> scores, double alpha);

CalibrationResult calibrate(const QuantileModel& model, std::span<const Sample> cal_set, double alpha);

struct PredictionInterval {
  double lo = 0.0;
  double hi = 0.0;
  double alpha = 0.0;
  bool infinite = false;
};

/// Interval from raw quantile outputs: [lo − Q, hi + Q], ordered and floored at 0.
PredictionInterval conformalize(QuantilePair raw, const CalibrationResult& calib);

/// Model prediction for raw (unscaled) features, corrected by the calibration.
PredictionInterval predict_interval(const QuantileModel& model, const CalibrationResult& calib,
                                    const FeatureVector& x);

struct QuantileSummary {
  double q10 = 0.0, median = 0.0, mean = 0.0, q90 = 0.0;
};

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double empirical_quantile(std::vector<double> values, double p);
QuantileSummary summarize(const std::vector<double>& values);

struct EvaluationReport {
  double alpha = 0.0;
  std::size_t n_test = 0;
  std::size_t n_covered = 0;
  double coverage = 0.0;
  QuantileSummary length;    // |I| = hi − lo
  QuantileSummary overshoot; // hi − y over covered samples
};

/// Report from labels and their intervals (exposed for hand-built checks).
EvaluationReport evaluate_intervals(std::span<const double> y, std::span<const PredictionInterval> intervals,
                                    double alpha);

EvaluationReport evaluate(const QuantileModel& model, const CalibrationResult& calib, std::span<const Sample> test_set);

}  // namespace selfrep
