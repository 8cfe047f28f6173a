#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "selfrep/errors.hpp"
#include "selfrep/quantile_net.hpp"

using namespace selfrep;

namespace {

struct Synthetic {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

/// y exactly linear in the first feature; the other features are noise.
Synthetic linear_data(int n, std::uint64_t seed) {
  Rng rng(seed);
  Synthetic d{Eigen::MatrixXd(n, 19), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < 19; ++f) d.X(i, f) = rng.uniform(-1.7, 1.7);
    d.y[i] = 0.6 + 0.3 * d.X(i, 0);
  }
  return d;
}

/// y = 0.5 + 0.2 x0 + uniform noise of width 0.4, so the conditional quantiles are known.
Synthetic noisy_linear_data(int n, std::uint64_t seed, int width = 19) {
  Rng rng(seed);
  Synthetic d{Eigen::MatrixXd(n, width), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < width; ++f) d.X(i, f) = rng.uniform(-1.7, 1.7);
    d.y[i] = 0.5 + 0.2 * d.X(i, 0) + rng.uniform(0.0, 0.4);
  }
  return d;
}

TrainingConfig small_training(int width, int epochs) {
  TrainingConfig c;
  c.hidden_width = width;
  c.max_epochs = epochs;
  c.patience = 30;
  return c;
}

}  // namespace

TEST(Pinball, TabulatedValues) {
  EXPECT_EQ(pinball_loss(0.3, 0.3, 0.05), 0.0);
  EXPECT_EQ(pinball_loss(0.3, 0.3, 0.95), 0.0);
  EXPECT_NEAR(pinball_loss(1.0, 0.0, 0.95), 0.95, 1e-12);
  EXPECT_NEAR(pinball_loss(1.0, 0.0, 0.05), 0.05, 1e-12);
  EXPECT_NEAR(pinball_loss(0.0, 1.0, 0.05), 0.95, 1e-12);
  EXPECT_NEAR(pinball_loss(2.5, 1.5, 0.5), 0.5, 1e-12);
}

TEST(Pinball, ComplementaryLevelsSumToAbsoluteResidual) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double y = rng.uniform(-3, 3), yh = rng.uniform(-3, 3), q = rng.uniform();
    ASSERT_NEAR(pinball_loss(y, yh, q) + pinball_loss(y, yh, 1.0 - q), std::abs(y - yh), 1e-12);
    ASSERT_GE(pinball_loss(y, yh, q), 0.0);
  }
}

TEST(QuantileNet, GradientMatchesCentralDifferences) {
  Rng rng(12);
  const double h = 1e-6;
  int checked = 0;
  for (int net = 0; net < 5; ++net) {
    auto m = QuantileModel::initialize({19, 8, 8, 2}, 0.1, 100 + net);
    // Push the output biases up so most rectified heads are active.
    m.layers.back().bias.setConstant(0.5);
    Eigen::MatrixXd X(16, 19);
    Eigen::VectorXd y(16);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index f = 0; f < 19; ++f) X(i, f) = rng.uniform(-2, 2);
      y[i] = rng.uniform(0.0, 1.5);
    }
    Eigen::VectorXd g;
    std::vector<signed char> base;
    m.loss_and_gradient(X, y, &g, &base);
    const Eigen::VectorXd theta = m.parameters();
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      std::vector<signed char> p_plus, p_minus;
      Eigen::VectorXd t = theta;
      t[k] += h;
      m.set_parameters(t);
      const double lp = m.loss_and_gradient(X, y, nullptr, &p_plus);
      t[k] = theta[k] - h;
      m.set_parameters(t);
      const double lm = m.loss_and_gradient(X, y, nullptr, &p_minus);
      m.set_parameters(theta);
      if (p_plus != base || p_minus != base) continue;  // a kink lies within the stencil
      const double fd = (lp - lm) / (2 * h);
      const double scale = std::max(std::abs(fd), std::abs(g[k]));
      ASSERT_LE(std::abs(fd - g[k]), 1e-4 * scale + 1e-10) << "net " << net << " parameter " << k;
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(QuantileNet, ParameterRoundTrip) {
  auto m = QuantileModel::initialize({19, 6, 2}, 0.05, 3);
  auto theta = m.parameters();
  theta.array() += 0.25;
  m.set_parameters(theta);
  EXPECT_EQ(m.parameters(), theta);
  EXPECT_EQ(m.q_lo, 0.025);
  EXPECT_EQ(m.q_hi, 0.975);
  EXPECT_THROW(m.set_parameters(Eigen::VectorXd::Zero(3)), ValidationError);
}

TEST(QuantileNet, ReferenceArchitecture) {
  const auto m = QuantileModel::initialize({19, 209, 209, 2}, 0.1, 1);
  ASSERT_EQ(m.layers.size(), 3u);
  EXPECT_EQ(m.layers[0].weight.rows(), 209);
  EXPECT_EQ(m.layers[0].weight.cols(), 19);
  EXPECT_EQ(m.layers[2].weight.rows(), 2);
  EXPECT_TRUE(m.layers[0].batch_norm);
  EXPECT_TRUE(m.layers[1].batch_norm);
  EXPECT_FALSE(m.layers[2].batch_norm);
}

TEST(QuantileNet, LearnsAnExactLinearTarget) {
  const auto tr = linear_data(2000, 1);
  const auto te = linear_data(500, 2);
  const auto m = train(tr.X, tr.y, 0.1, small_training(32, 300), 5);
  const double sd = std::sqrt((te.y.array() - te.y.mean()).square().mean());
  EXPECT_LT(m.evaluate_loss(te.X, te.y), 0.1 * sd);
}

TEST(QuantileNet, LowerHeadHitsItsQuantile) {
  // Few inputs: with 18 irrelevant ones this small network overfits the quantiles.
  const auto tr = noisy_linear_data(4000, 101, 3);
  const auto te = noisy_linear_data(4000, 202, 3);
  const double alpha = 0.2;
  const auto m = train(tr.X, tr.y, alpha, small_training(32, 300), 6);
  const Eigen::MatrixXd H = m.heads_batch(te.X);
  int below = 0, above = 0;
  for (Eigen::Index i = 0; i < te.X.rows(); ++i) {
    const double lo = std::min(H(i, 0), H(i, 1)), hi = std::max(H(i, 0), H(i, 1));
    below += te.y[i] < lo;
    above += te.y[i] > hi;
  }
  EXPECT_NEAR(double(below) / te.X.rows(), alpha / 2, 0.03);
  EXPECT_NEAR(double(above) / te.X.rows(), alpha / 2, 0.03);
}

TEST(QuantileNet, OneEpochReducesTrainingLoss) {
  const auto d = noisy_linear_data(16000, 21);
  const std::uint64_t seed = 9;
  TrainingConfig cfg;
  cfg.max_epochs = 1;
  const auto init = QuantileModel::initialize({19, 209, 209, 2}, 0.1, derive_seed(seed, {1}));
  const auto m = train(d.X, d.y, 0.1, cfg, seed);
  EXPECT_EQ(m.epochs_run, 1);
  EXPECT_LT(m.evaluate_loss(d.X, d.y), init.evaluate_loss(d.X, d.y));
}

TEST(QuantileNet, TrainingIsDeterministic) {
  const auto d = noisy_linear_data(600, 4);
  const auto a = train(d.X, d.y, 0.1, small_training(16, 20), 77);
  const auto b = train(d.X, d.y, 0.1, small_training(16, 20), 77);
  const auto c = train(d.X, d.y, 0.1, small_training(16, 20), 78);
  EXPECT_EQ(a.checksum(), b.checksum());
  EXPECT_NE(a.checksum(), c.checksum());
}

TEST(QuantileNet, PredictionsAreOrderedAndBatchInvariant) {
  const auto d = noisy_linear_data(800, 5);
  auto m = train(d.X, d.y, 0.1, small_training(16, 15), 1);
  // Swap the heads so that the raw outputs cross.
  std::swap(m.q_lo, m.q_hi);
  const Eigen::MatrixXd H = m.heads_batch(d.X);
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    FeatureVector z;
    for (int f = 0; f < 19; ++f) z[static_cast<std::size_t>(f)] = d.X(i, f);
    const auto single = m.heads(d.X.row(i).transpose());
    EXPECT_NEAR(single.lo, H(i, 0), 1e-12);
    EXPECT_NEAR(single.hi, H(i, 1), 1e-12);
    const auto p = predict_quantiles(m, z);
    EXPECT_LE(p.lo, p.hi);
  }
}

TEST(QuantileNet, JsonRoundTripKeepsChecksum) {
  const auto d = noisy_linear_data(300, 8);
  auto m = train(d.X, d.y, 0.05, small_training(8, 5), 2);
  m.dataset_hash = "abc";
  const auto text = m.to_json();
  const auto back = QuantileModel::from_json(text);
  EXPECT_EQ(back.checksum(), m.checksum());
  EXPECT_EQ(back.dataset_hash, "abc");
  EXPECT_EQ(back.alpha, 0.05);
  Eigen::VectorXd z = d.X.row(0).transpose();
  EXPECT_EQ(back.heads(z).lo, m.heads(z).lo);

  auto j = nlohmann::ordered_json::parse(text);
  j["layers"][0]["bias"][0] = j["layers"][0]["bias"][0].get<double>() + 1e-9;
  EXPECT_THROW(QuantileModel::from_json(j.dump()), ValidationError);
  EXPECT_THROW(QuantileModel::from_json("{not json"), ValidationError);
}

TEST(TrainingConfig, Validation) {
  TrainingConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
}
