#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selfrep/dataset.hpp"

namespace selfrep {

/// max(q·r, (q−1)·r) with r = y − ŷ.
double pinball_loss(double y, double y_hat, double q);

struct TrainingConfig {
  int hidden_width = 209;
  int hidden_layers = 2;
  int batch_size = 64;
  double learning_rate = 5e-4;
  int max_epochs = 1200;
  double validation_fraction = 0.1;  // of the training set, for early stopping
  int patience = 50;                 // epochs without validation improvement
  double rms_decay = 0.99;
  double rms_eps = 1e-8;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  void validate() const;
};

/// Fully connected layer; hidden layers are followed by batch normalization, every
/// layer by a rectifier.
struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  bool batch_norm = false;
  Eigen::VectorXd gamma, beta, running_mean, running_var;
};

struct QuantilePair {
  double lo = 0.0;
  double hi = 0.0;
};

class QuantileModel {
 public:
  static constexpr int kFormatVersion = 1;

  std::vector<DenseLayer> layers;
  double alpha = 0.1;
  double q_lo = 0.05;
  double q_hi = 0.95;
  Scaler scaler;
  TrainingConfig hyper;
  std::uint64_t seed = 0;
  int epochs_run = 0;
  double best_validation_loss = 0.0;
  /// Labels are divided by this during training; head outputs are multiplied back.
  double target_scale = 1.0;

  // Provenance, stored alongside the weights but not part of the checksum.
  std::string dataset_hash;
  std::string split_hash;
  std::string config_hash;

  /// Fresh network with uniform(±1/sqrt(fan_in)) weights and biases.
  static QuantileModel initialize(const std::vector<int>& widths, double alpha, std::uint64_t seed);

  int input_width() const { return static_cast<int>(layers.front().weight.cols()); }

  /// Raw head outputs (lo, hi) for one scaled input row, inference mode.
  QuantilePair heads(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  /// Head outputs for every row of Z (scaled), as an n x 2 matrix.
  Eigen::MatrixXd heads_batch(const Eigen::MatrixXd& Z) const;

  /// Ordered pair for a raw (unscaled) feature vector.
  QuantilePair predict(const FeatureVector& x) const;

  /// Flat views of the trainable parameters (weights, biases, gamma, beta per layer).
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);

  /// Mean pinball loss over the rows of X (scaled) and both heads, with batch
  /// statistics in the normalization layers (training mode, running stats untouched).
  /// Works on raw network outputs, i.e. labels in units of `target_scale`.
  /// Optionally returns the gradient w.r.t. parameters() and a sign pattern of every
  /// rectifier input and residual, used to detect kinks in finite-difference checks.
  double loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::VectorXd* grad,
                           std::vector<signed char>* pattern = nullptr) const;

  /// Inference-mode mean pinball loss.
  double evaluate_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) const;

  /// SHA-256 of the parameters and normalization statistics.
  std::string checksum() const;

  std::string to_json() const;
  static QuantileModel from_json(const std::string& text);
};

/// Ordered pair for an already scaled feature vector; heads are swapped if they cross.
QuantilePair predict_quantiles(const QuantileModel& model, const FeatureVector& scaled);

/// Trains on scaled rows X with labels y. Quantile levels are (alpha/2, 1 - alpha/2).
/// Throws TrainingDiverged when the loss becomes non-finite.
QuantileModel train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha, const TrainingConfig& cfg,
                    std::uint64_t seed);

/// Trains on the split's training set and stores its scaler in the model.
QuantileModel train(const DatasetSplits& splits, double alpha, const TrainingConfig& cfg, std::uint64_t seed);

}  // namespace selfrep
