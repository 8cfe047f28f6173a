#include "selfrep/quantile_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "selfrep/errors.hpp"
#include "selfrep/hashing.hpp"
#include "selfrep/text_io.hpp"

namespace selfrep {
namespace {

using Json = nlohmann::ordered_json;

struct LayerCache {
  Eigen::MatrixXd input;  // in x B
  Eigen::MatrixXd xhat;   // normalized pre-activations (BN layers)
  Eigen::VectorXd inv_std;
  Eigen::MatrixXd pre;    // rectifier input
};

struct BatchStats {
  std::vector<Eigen::VectorXd> mean, var;  // per BN layer, biased variance
};

std::size_t parameter_count(const std::vector<DenseLayer>& layers) {
  std::size_t n = 0;
  for (const auto& l : layers) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    if (l.batch_norm) n += static_cast<std::size_t>(l.gamma.size() + l.beta.size());
  }
  return n;
}

double residual_grad(double r, double q) {
  if (r > 0.0) return -q;
  if (r < 0.0) return 1.0 - q;
  return 0.0;
}

// Training-mode pass over a batch stored column-wise (features x B).
double forward_backward(const QuantileModel& m, const Eigen::MatrixXd& A0, const Eigen::VectorXd& y,
                        Eigen::VectorXd* grad, std::vector<signed char>* pattern, BatchStats* stats) {
  const Eigen::Index B = A0.cols();
  const double eps = m.hyper.bn_eps;
  std::vector<LayerCache> cache(m.layers.size());
  Eigen::MatrixXd a = A0;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& L = m.layers[l];
    auto& c = cache[l];
    c.input = a;
    Eigen::MatrixXd z = L.weight * a;
    z.colwise() += L.bias;
    if (L.batch_norm) {
      const Eigen::VectorXd mu = z.rowwise().mean();
      z.colwise() -= mu;
      const Eigen::VectorXd var = z.array().square().rowwise().mean();
      c.inv_std = (var.array() + eps).rsqrt();
      c.xhat = c.inv_std.asDiagonal() * z;
      c.pre = L.gamma.asDiagonal() * c.xhat;
      c.pre.colwise() += L.beta;
      if (stats) {
        stats->mean.push_back(mu);
        stats->var.push_back(var);
      }
    } else {
      c.pre = std::move(z);
    }
    a = c.pre.cwiseMax(0.0);
  }

  const double qs[2] = {m.q_lo, m.q_hi};
  const double scale = 1.0 / (2.0 * static_cast<double>(B));
  double loss = 0.0;
  Eigen::MatrixXd d_out(2, B);
  for (Eigen::Index i = 0; i < B; ++i) {
    for (int h = 0; h < 2; ++h) {
      const double r = y[i] - a(h, i);
      loss += pinball_loss(y[i], a(h, i), qs[h]);
      d_out(h, i) = residual_grad(r, qs[h]) * scale;
    }
  }
  loss *= scale;

  if (pattern) {
    pattern->clear();
    for (const auto& c : cache)
      for (Eigen::Index k = 0; k < c.pre.size(); ++k) pattern->push_back(c.pre(k) > 0.0 ? 1 : (c.pre(k) < 0.0 ? -1 : 0));
    for (Eigen::Index i = 0; i < B; ++i)
      for (int h = 0; h < 2; ++h) {
        const double r = y[i] - a(h, i);
        pattern->push_back(r > 0.0 ? 1 : (r < 0.0 ? -1 : 0));
      }
  }
  if (!grad) return loss;

  grad->resize(static_cast<Eigen::Index>(parameter_count(m.layers)));
  // Parameter blocks are laid out per layer in forward order; fill them backwards.
  Eigen::Index offset = grad->size();
  Eigen::MatrixXd d = d_out;
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const auto& L = m.layers[l];
    const auto& c = cache[l];
    Eigen::MatrixXd dpre = (c.pre.array() > 0.0).select(d, 0.0);
    Eigen::MatrixXd dz;
    Eigen::VectorXd dgamma, dbeta;
    if (L.batch_norm) {
      dgamma = (dpre.array() * c.xhat.array()).rowwise().sum();
      dbeta = dpre.rowwise().sum();
      const Eigen::MatrixXd dxhat = L.gamma.asDiagonal() * dpre;
      const Eigen::VectorXd sum_dx = dxhat.rowwise().sum();
      const Eigen::VectorXd sum_dxx = (dxhat.array() * c.xhat.array()).rowwise().sum();
      const double n = static_cast<double>(B);
      Eigen::MatrixXd t = n * dxhat;
      t.colwise() -= sum_dx;
      t -= sum_dxx.asDiagonal() * c.xhat;
      dz = (c.inv_std / n).asDiagonal() * t;
    } else {
      dz = std::move(dpre);
    }
    const Eigen::MatrixXd dW = dz * c.input.transpose();
    const Eigen::VectorXd db = dz.rowwise().sum();

    if (L.batch_norm) {
      offset -= dbeta.size();
      grad->segment(offset, dbeta.size()) = dbeta;
      offset -= dgamma.size();
      grad->segment(offset, dgamma.size()) = dgamma;
    }
    offset -= db.size();
    grad->segment(offset, db.size()) = db;
    offset -= dW.size();
    for (Eigen::Index r = 0; r < dW.rows(); ++r)
      grad->segment(offset + r * dW.cols(), dW.cols()) = dW.row(r).transpose();
    if (l > 0) d = L.weight.transpose() * dz;
  }
  return loss;
}

Json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const Json& j, Eigen::Index expected, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != expected)
    throw ValidationError(std::string("model file: wrong size for ") + what);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), expected);
}

}  // namespace

double pinball_loss(double y, double y_hat, double q) {
  const double r = y - y_hat;
  return std::max(q * r, (q - 1.0) * r);
}

void TrainingConfig::validate() const {
  if (hidden_width < 1 || hidden_layers < 0) throw ValidationError("invalid network shape");
  if (batch_size < 2) throw ValidationError("batch size must be >= 2");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (max_epochs < 1) throw ValidationError("max epochs must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5))
    throw ValidationError("validation fraction must lie in (0, 0.5)");
  if (patience < 1) throw ValidationError("patience must be >= 1");
  if (!(rms_decay > 0.0 && rms_decay < 1.0) || !(rms_eps > 0.0)) throw ValidationError("invalid optimizer settings");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0) || !(bn_eps > 0.0))
    throw ValidationError("invalid normalization settings");
}

QuantileModel QuantileModel::initialize(const std::vector<int>& widths, double alpha, std::uint64_t seed) {
  if (widths.size() < 2 || widths.back() != 2) throw ValidationError("network needs >= 2 widths ending in 2");
  if (!(alpha > 0.0 && alpha < 0.5)) throw ValidationError("alpha must lie in (0, 0.5)");
  QuantileModel m;
  m.alpha = alpha;
  m.q_lo = alpha / 2.0;
  m.q_hi = 1.0 - alpha / 2.0;
  m.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    DenseLayer L;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    L.weight.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) L.weight(r, c) = rng.uniform(-bound, bound);
    L.bias.resize(out);
    for (int r = 0; r < out; ++r) L.bias[r] = rng.uniform(-bound, bound);
    L.batch_norm = l + 2 < widths.size();
    if (L.batch_norm) {
      L.gamma = Eigen::VectorXd::Ones(out);
      L.beta = Eigen::VectorXd::Zero(out);
      L.running_mean = Eigen::VectorXd::Zero(out);
      L.running_var = Eigen::VectorXd::Ones(out);
    }
    m.layers.push_back(std::move(L));
  }
  return m;
}

QuantilePair QuantileModel::heads(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != input_width()) throw ValidationError("feature dimension mismatch");
  Eigen::VectorXd a = z;
  for (const auto& L : layers) {
    Eigen::VectorXd v = L.weight * a + L.bias;
    if (L.batch_norm)
      v = (L.gamma.array() * (v - L.running_mean).array() / (L.running_var.array() + hyper.bn_eps).sqrt() +
           L.beta.array())
              .matrix();
    a = v.cwiseMax(0.0);
  }
  return {a[0] * target_scale, a[1] * target_scale};
}

Eigen::MatrixXd QuantileModel::heads_batch(const Eigen::MatrixXd& Z) const {
  if (Z.cols() != input_width()) throw ValidationError("feature dimension mismatch");
  Eigen::MatrixXd a = Z.transpose();
  for (const auto& L : layers) {
    Eigen::MatrixXd v = L.weight * a;
    v.colwise() += L.bias;
    if (L.batch_norm) {
      const Eigen::ArrayXd inv = (L.running_var.array() + hyper.bn_eps).sqrt().inverse();
      v.colwise() -= L.running_mean;
      v = ((v.array().colwise() * (L.gamma.array() * inv)).colwise() + L.beta.array()).matrix();
    }
    a = v.cwiseMax(0.0);
  }
  return a.transpose() * target_scale;
}

QuantilePair predict_quantiles(const QuantileModel& model, const FeatureVector& scaled) {
  const auto h = model.heads(Eigen::Map<const Eigen::VectorXd>(scaled.data(), static_cast<Eigen::Index>(scaled.size())));
  return {std::min(h.lo, h.hi), std::max(h.lo, h.hi)};
}

QuantilePair QuantileModel::predict(const FeatureVector& x) const { return predict_quantiles(*this, scaler.apply(x)); }

Eigen::VectorXd QuantileModel::parameters() const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parameter_count(layers)));
  Eigen::Index o = 0;
  for (const auto& L : layers) {
    for (Eigen::Index r = 0; r < L.weight.rows(); ++r) {
      theta.segment(o, L.weight.cols()) = L.weight.row(r).transpose();
      o += L.weight.cols();
    }
    theta.segment(o, L.bias.size()) = L.bias;
    o += L.bias.size();
    if (L.batch_norm) {
      theta.segment(o, L.gamma.size()) = L.gamma;
      o += L.gamma.size();
      theta.segment(o, L.beta.size()) = L.beta;
      o += L.beta.size();
    }
  }
  return theta;
}

void QuantileModel::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != static_cast<Eigen::Index>(parameter_count(layers)))
    throw ValidationError("parameter vector size mismatch");
  Eigen::Index o = 0;
  for (auto& L : layers) {
    for (Eigen::Index r = 0; r < L.weight.rows(); ++r) {
      L.weight.row(r) = theta.segment(o, L.weight.cols()).transpose();
      o += L.weight.cols();
    }
    L.bias = theta.segment(o, L.bias.size());
    o += L.bias.size();
    if (L.batch_norm) {
      L.gamma = theta.segment(o, L.gamma.size());
      o += L.gamma.size();
      L.beta = theta.segment(o, L.beta.size());
      o += L.beta.size();
    }
  }
}

double QuantileModel::loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::VectorXd* grad,
                                        std::vector<signed char>* pattern) const {
  if (X.cols() != input_width() || X.rows() != y.size() || X.rows() < 2)
    throw ValidationError("loss_and_gradient: bad batch shape");
  return forward_backward(*this, X.transpose(), y, grad, pattern, nullptr);
}

double QuantileModel::evaluate_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) const {
  if (X.rows() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto h = heads(X.row(i).transpose());
    sum += pinball_loss(y[i], h.lo, q_lo) + pinball_loss(y[i], h.hi, q_hi);
  }
  return sum / (2.0 * static_cast<double>(X.rows()));
}

std::string QuantileModel::checksum() const {
  std::string text;
  auto add = [&](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      text += io::format_double(v[i]);
      text += ',';
    }
    text += ';';
  };
  add(parameters());
  for (const auto& L : layers)
    if (L.batch_norm) {
      add(L.running_mean);
      add(L.running_var);
    }
  text += io::format_double(q_lo) + ',' + io::format_double(q_hi) + ',' + io::format_double(target_scale);
  return sha256_hex(text);
}

QuantileModel train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha, const TrainingConfig& cfg,
                    std::uint64_t seed) {
  cfg.validate();
  if (X.rows() != y.size()) throw ValidationError("feature/label count mismatch");
  const Eigen::Index n = X.rows();
  const auto n_val = std::max<Eigen::Index>(1, std::llround(cfg.validation_fraction * static_cast<double>(n)));
  const Eigen::Index n_tr = n - n_val;
  if (n_tr < 2) throw ValidationError("training set too small");

  std::vector<int> widths{static_cast<int>(X.cols())};
  for (int l = 0; l < cfg.hidden_layers; ++l) widths.push_back(cfg.hidden_width);
  widths.push_back(2);
  QuantileModel model = QuantileModel::initialize(widths, alpha, derive_seed(seed, {1}));
  model.seed = seed;
  model.hyper = cfg;

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng split_rng(derive_seed(seed, {2}));
  split_rng.shuffle(std::span<Eigen::Index>(idx));
  const Eigen::Index d = X.cols();
  Eigen::MatrixXd Xt_tr(d, n_tr), X_val(n_val, d);
  Eigen::VectorXd y_tr(n_tr), y_val(n_val);
  for (Eigen::Index i = 0; i < n_tr; ++i) {
    Xt_tr.col(i) = X.row(idx[static_cast<std::size_t>(i)]).transpose();
    y_tr[i] = y[idx[static_cast<std::size_t>(i)]];
  }
  for (Eigen::Index i = 0; i < n_val; ++i) {
    X_val.row(i) = X.row(idx[static_cast<std::size_t>(n_tr + i)]);
    y_val[i] = y[idx[static_cast<std::size_t>(n_tr + i)]];
  }
  // Unit-scale targets keep the first sign-like RMSprop steps from driving the
  // rectified heads below zero for every sample, after which they never recover.
  const double mean_y = y_tr.mean();
  const double std_y = std::sqrt((y_tr.array() - mean_y).square().mean());
  const double scale = std_y > 0.0 && std::isfinite(std_y) ? std_y : 1.0;
  y_tr /= scale;
  y_val /= scale;

  Eigen::VectorXd theta = model.parameters();
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd grad;
  QuantileModel best = model;
  best.best_validation_loss = model.evaluate_loss(X_val, y_val);
  int since_best = 0;

  Rng batch_rng(derive_seed(seed, {3}));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_tr));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index bs = cfg.batch_size;
  int epoch = 0;
  for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    batch_rng.shuffle(std::span<Eigen::Index>(order));
    for (Eigen::Index start = 0; start < n_tr; start += bs) {
      const Eigen::Index m = std::min(bs, n_tr - start);
      if (m < 2) break;  // batch statistics need two samples
      Eigen::MatrixXd A(d, m);
      Eigen::VectorXd yb(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto src = order[static_cast<std::size_t>(start + i)];
        A.col(i) = Xt_tr.col(src);
        yb[i] = y_tr[src];
      }
      BatchStats stats;
      const double loss = forward_backward(model, A, yb, &grad, nullptr, &stats);
      if (!std::isfinite(loss) || !grad.allFinite())
        throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch));

      sq = cfg.rms_decay * sq + (1.0 - cfg.rms_decay) * grad.cwiseAbs2();
      theta.array() -= cfg.learning_rate * grad.array() / (sq.array().sqrt() + cfg.rms_eps);
      model.set_parameters(theta);

      const double unbias = static_cast<double>(m) / static_cast<double>(m - 1);
      std::size_t k = 0;
      for (auto& L : model.layers) {
        if (!L.batch_norm) continue;
        L.running_mean = (1.0 - cfg.bn_momentum) * L.running_mean + cfg.bn_momentum * stats.mean[k];
        L.running_var = (1.0 - cfg.bn_momentum) * L.running_var + cfg.bn_momentum * unbias * stats.var[k];
        ++k;
      }
    }

    const double val = model.evaluate_loss(X_val, y_val);
    if (!std::isfinite(val)) throw TrainingDiverged("non-finite validation loss at epoch " + std::to_string(epoch));
    if (val < best.best_validation_loss) {
      best = model;
      best.best_validation_loss = val;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  best.epochs_run = std::min(epoch, cfg.max_epochs);
  best.target_scale = scale;
  best.best_validation_loss *= scale;  // pinball loss is positively homogeneous
  return best;
}

QuantileModel train(const DatasetSplits& splits, double alpha, const TrainingConfig& cfg, std::uint64_t seed) {
  if (splits.train.empty()) throw ValidationError("empty training set");
  QuantileModel m = train(scaled_features(splits.train, splits.scaler), labels(splits.train), alpha, cfg, seed);
  m.scaler = splits.scaler;
  return m;
}

std::string QuantileModel::to_json() const {
  Json j;
  j["format_version"] = kFormatVersion;
  std::vector<int> widths{input_width()};
  for (const auto& L : layers) widths.push_back(static_cast<int>(L.weight.rows()));
  j["widths"] = widths;
  j["activation"] = "relu";
  j["alpha"] = alpha;
  j["q_lo"] = q_lo;
  j["q_hi"] = q_hi;
  j["seed"] = seed;
  j["epochs_run"] = epochs_run;
  j["best_validation_loss"] = best_validation_loss;
  j["target_scale"] = target_scale;
  j["hyper"] = {{"hidden_width", hyper.hidden_width},
                {"hidden_layers", hyper.hidden_layers},
                {"batch_size", hyper.batch_size},
                {"learning_rate", hyper.learning_rate},
                {"max_epochs", hyper.max_epochs},
                {"validation_fraction", hyper.validation_fraction},
                {"patience", hyper.patience},
                {"rms_decay", hyper.rms_decay},
                {"rms_eps", hyper.rms_eps},
                {"bn_momentum", hyper.bn_momentum},
                {"bn_eps", hyper.bn_eps}};
  std::vector<std::string> names;
  for (auto s : feature_names()) names.emplace_back(s);
  j["features"] = names;
  j["scaler"] = {{"mean", std::vector<double>(scaler.mean.begin(), scaler.mean.end())},
                 {"std", std::vector<double>(scaler.stddev.begin(), scaler.stddev.end())}};
  Json arr = Json::array();
  for (const auto& L : layers) {
    Json lj;
    lj["in"] = L.weight.cols();
    lj["out"] = L.weight.rows();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(L.weight.size()));
    for (Eigen::Index r = 0; r < L.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < L.weight.cols(); ++c) w.push_back(L.weight(r, c));
    lj["weight"] = w;
    lj["bias"] = vec_json(L.bias);
    lj["batch_norm"] = L.batch_norm;
    if (L.batch_norm) {
      lj["gamma"] = vec_json(L.gamma);
      lj["beta"] = vec_json(L.beta);
      lj["running_mean"] = vec_json(L.running_mean);
      lj["running_var"] = vec_json(L.running_var);
    }
    arr.push_back(std::move(lj));
  }
  j["layers"] = std::move(arr);
  j["dataset_hash"] = dataset_hash;
  j["split_hash"] = split_hash;
  j["config_hash"] = config_hash;
  j["checksum"] = checksum();
  return j.dump() + "\n";
}

QuantileModel QuantileModel::from_json(const std::string& text) {
  QuantileModel m;
  try {
    const Json j = Json::parse(text);
    if (j.at("format_version").get<int>() != kFormatVersion) throw ValidationError("unsupported model format version");
    m.alpha = j.at("alpha").get<double>();
    m.q_lo = j.at("q_lo").get<double>();
    m.q_hi = j.at("q_hi").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.epochs_run = j.at("epochs_run").get<int>();
    m.best_validation_loss = j.at("best_validation_loss").get<double>();
    m.target_scale = j.at("target_scale").get<double>();
    m.dataset_hash = j.value("dataset_hash", "");
    m.split_hash = j.value("split_hash", "");
    m.config_hash = j.value("config_hash", "");
    const auto& h = j.at("hyper");
    m.hyper.hidden_width = h.at("hidden_width").get<int>();
    m.hyper.hidden_layers = h.at("hidden_layers").get<int>();
    m.hyper.batch_size = h.at("batch_size").get<int>();
    m.hyper.learning_rate = h.at("learning_rate").get<double>();
    m.hyper.max_epochs = h.at("max_epochs").get<int>();
    m.hyper.validation_fraction = h.at("validation_fraction").get<double>();
    m.hyper.patience = h.at("patience").get<int>();
    m.hyper.rms_decay = h.at("rms_decay").get<double>();
    m.hyper.rms_eps = h.at("rms_eps").get<double>();
    m.hyper.bn_momentum = h.at("bn_momentum").get<double>();
    m.hyper.bn_eps = h.at("bn_eps").get<double>();
    const auto mean = j.at("scaler").at("mean").get<std::vector<double>>();
    const auto sd = j.at("scaler").at("std").get<std::vector<double>>();
    if (mean.size() != kFeatureCount || sd.size() != kFeatureCount) throw ValidationError("bad scaler size");
    std::copy(mean.begin(), mean.end(), m.scaler.mean.begin());
    std::copy(sd.begin(), sd.end(), m.scaler.stddev.begin());
    for (const auto& lj : j.at("layers")) {
      DenseLayer L;
      const auto in = lj.at("in").get<Eigen::Index>(), out = lj.at("out").get<Eigen::Index>();
      const auto w = json_vec(lj.at("weight"), in * out, "weight");
      L.weight.resize(out, in);
      for (Eigen::Index r = 0; r < out; ++r) L.weight.row(r) = w.segment(r * in, in).transpose();
      L.bias = json_vec(lj.at("bias"), out, "bias");
      L.batch_norm = lj.at("batch_norm").get<bool>();
      if (L.batch_norm) {
        L.gamma = json_vec(lj.at("gamma"), out, "gamma");
        L.beta = json_vec(lj.at("beta"), out, "beta");
        L.running_mean = json_vec(lj.at("running_mean"), out, "running_mean");
        L.running_var = json_vec(lj.at("running_var"), out, "running_var");
      }
      m.layers.push_back(std::move(L));
    }
    if (m.layers.empty() || m.layers.back().weight.rows() != 2) throw ValidationError("model must end in 2 outputs");
    for (std::size_t l = 1; l < m.layers.size(); ++l)
      if (m.layers[l].weight.cols() != m.layers[l - 1].weight.rows()) throw ValidationError("inconsistent layer shapes");
    if (m.checksum() != j.at("checksum").get<std::string>()) throw ValidationError("model checksum mismatch");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
  return m;
}

}  // namespace selfrep
