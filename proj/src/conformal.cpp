#include "selfrep/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "selfrep/errors.hpp"

namespace selfrep {

double conformity_score(double y, double lo, double hi) { return std::max(lo - y, y - hi); }

long long conformal_rank(std::size_t n, double alpha) {
  // The slack absorbs representation error in decimal alphas such as 0.1.
  const double target = static_cast<double>(n + 1) * (1.0 - alpha);
  return static_cast<long long>(std::ceil(target - 1e-9));
}

CalibrationResult calibrate_scores(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw ValidationError("empty calibration set");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  CalibrationResult r;
  r.alpha = alpha;
  r.n_cal = s.size();
  const long long k = conformal_rank(s.size(), alpha);
  if (k > static_cast<long long>(s.size())) {
    r.infinite = true;
    r.q = std::numeric_limits<double>::infinity();
  } else {
    r.q = s[static_cast<std::size_t>(std::max(1LL, k) - 1)];
  }
  r.scores.min = s.front();
  r.scores.max = s.back();
  r.scores.median = empirical_quantile(s, 0.5);
  r.scores.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  return r;
}

CalibrationResult calibrate(const QuantileModel& model, std::span<const Sample> cal_set, double alpha) {
  std::vector<double> scores;
  scores.reserve(cal_set.size());
  for (const auto& s : cal_set) {
    const auto p = model.predict(s.x);
    scores.push_back(conformity_score(s.y, p.lo, p.hi));
  }
  auto r = calibrate_scores(scores, alpha);
  r.model_id = model.checksum();
  return r;
}

PredictionInterval conformalize(QuantilePair raw, const CalibrationResult& calib) {
  PredictionInterval out;
  out.alpha = calib.alpha;
  if (calib.infinite) {
    out.infinite = true;
    out.lo = 0.0;
    out.hi = std::numeric_limits<double>::infinity();
    return out;
  }
  const double a = raw.lo - calib.q, b = raw.hi + calib.q;
  out.lo = std::max(0.0, std::min(a, b));
  out.hi = std::max(0.0, std::max(a, b));
  return out;
}

PredictionInterval predict_interval(const QuantileModel& model, const CalibrationResult& calib,
                                    const FeatureVector& x) {
  if (std::abs(calib.alpha - model.alpha) > 1e-12)
    throw ValidationError("calibration alpha does not match the model's quantile levels");
  return conformalize(model.predict(x), calib);
}

double empirical_quantile(std::vector<double> v, double p) {
  if (v.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(i);
  if (frac == 0.0 || v[i] == v[i + 1]) return v[i];  // also keeps infinite entries from producing NaN
  return v[i] + frac * (v[i + 1] - v[i]);
}

QuantileSummary summarize(const std::vector<double>& values) {
  QuantileSummary s;
  if (values.empty()) return s;
  s.q10 = empirical_quantile(values, 0.1);
  s.median = empirical_quantile(values, 0.5);
  s.q90 = empirical_quantile(values, 0.9);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

EvaluationReport evaluate_intervals(std::span<const double> y, std::span<const PredictionInterval> intervals,
                                    double alpha) {
  if (y.empty()) throw ValidationError("empty test set");
  if (y.size() != intervals.size()) throw ValidationError("label/interval count mismatch");
  EvaluationReport r;
  r.alpha = alpha;
  r.n_test = y.size();
  std::vector<double> lengths, over;
  lengths.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& I = intervals[i];
    lengths.push_back(I.hi - I.lo);
    if (y[i] >= I.lo && y[i] <= I.hi) {
      ++r.n_covered;
      over.push_back(I.hi - y[i]);
    }
  }
  r.coverage = static_cast<double>(r.n_covered) / static_cast<double>(r.n_test);
  r.length = summarize(lengths);
  r.overshoot = summarize(over);
  return r;
}

EvaluationReport evaluate(const QuantileModel& model, const CalibrationResult& calib, std::span<const Sample> test_set) {
  std::vector<double> y;
  std::vector<PredictionInterval> iv;
  y.reserve(test_set.size());
  iv.reserve(test_set.size());
  for (const auto& s : test_set) {
    y.push_back(s.y);
    iv.push_back(predict_interval(model, calib, s.x));
  }
  return evaluate_intervals(y, iv, calib.alpha);
}

}  // namespace selfrep
