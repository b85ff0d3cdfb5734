#pragma once

// Minimal dense feed-forward network: forward pass, BCE/MSE losses,
// mini-batch SGD backpropagation and a finite-difference gradient check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsopt/errors.hpp"
#include "dsopt/matrix.hpp"
#include "dsopt/rng.hpp"

namespace dsopt {

enum class Activation { ReLU, Sigmoid, Identity };
enum class ModelKind { Classifier, Regressor };
enum class Loss { BCE, MSE };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "?";
}

inline const char* to_string(ModelKind k) {
  return k == ModelKind::Classifier ? "classifier" : "regressor";
}

struct LayerSpec {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  Activation activation = Activation::Identity;
};

/// weights is input_dim x output_dim so a batch forward is inputs * weights.
struct DenseLayer {
  Matrix weights;
  std::vector<double> biases;
  Activation activation = Activation::Identity;

  std::size_t input_dim() const noexcept { return weights.rows(); }
  std::size_t output_dim() const noexcept { return weights.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

namespace detail {

// Sigmoid kept inside the open interval (0,1): values that would round to
// exactly 0 or 1 in double precision are pinned to the nearest representable
// interior value.
inline double sigmoid(double z) noexcept {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double s;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  return std::clamp(s, lo, hi);
}

inline void apply_activation(Activation a, std::span<double> v) noexcept {
  switch (a) {
    case Activation::ReLU:
      for (double& x : v) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::Sigmoid:
      for (double& x : v) x = sigmoid(x);
      break;
    case Activation::Identity:
      break;
  }
}

// Derivative expressed through the activation output.
inline double activation_grad(Activation a, double out) noexcept {
  switch (a) {
    case Activation::ReLU: return out > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return out * (1.0 - out);
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

// out = in * layer.weights + biases, then activation.
inline Matrix dense_forward(const DenseLayer& layer, const Matrix& in) {
  const std::size_t nout = layer.output_dim();
  const std::size_t nin = layer.input_dim();
  Matrix out(in.rows(), nout);
  const double* w = layer.weights.data().data();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    double* o = out.row(r).data();
    const double* x = in.row(r).data();
    std::copy(layer.biases.begin(), layer.biases.end(), o);
    for (std::size_t i = 0; i < nin; ++i) {
      const double xi = x[i];
      const double* wi = w + i * nout;
      for (std::size_t j = 0; j < nout; ++j) o[j] += xi * wi[j];
    }
  }
  apply_activation(layer.activation, out.data());
  return out;
}

}  // namespace detail

/// Layered dense network. The classifier (sigmoid head) and the
/// sensitivity regressor (identity head) share this representation.
/// A regressor with no layers is the identity map.
class MLPModel {
public:
  MLPModel() = default;
  MLPModel(ModelKind kind, std::vector<DenseLayer> layers) : kind_(kind), layers_(std::move(layers)) {
    validate();
  }

  /// Glorot-uniform weights, zero biases, ReLU hidden layers.
  static MLPModel create(std::size_t input_dim, std::span<const std::size_t> hidden_dims,
                         std::size_t output_dim, ModelKind kind, std::uint64_t seed) {
    std::vector<LayerSpec> specs;
    std::size_t prev = input_dim;
    for (std::size_t h : hidden_dims) {
      specs.push_back({prev, h, Activation::ReLU});
      prev = h;
    }
    specs.push_back({prev, output_dim,
                     kind == ModelKind::Classifier ? Activation::Sigmoid : Activation::Identity});
    return create(specs, kind, seed);
  }

  static MLPModel create(std::span<const LayerSpec> specs, ModelKind kind, std::uint64_t seed) {
    Rng rng = make_rng(seed, "init");
    std::vector<DenseLayer> layers;
    for (const auto& s : specs) {
      if (s.input_dim < 1 || s.output_dim < 1) throw ShapeError("layer dimensions must be >= 1");
      DenseLayer layer{Matrix(s.input_dim, s.output_dim), std::vector<double>(s.output_dim, 0.0),
                       s.activation};
      const double limit = std::sqrt(6.0 / static_cast<double>(s.input_dim + s.output_dim));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& w : layer.weights.data()) w = dist(rng);
      layers.push_back(std::move(layer));
    }
    return MLPModel(kind, std::move(layers));
  }

  ModelKind kind() const noexcept { return kind_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().input_dim(); }
  std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().output_dim(); }

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
    return n;
  }

  void validate() const {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& l = layers_[k];
      if (l.input_dim() < 1 || l.output_dim() < 1)
        throw ShapeError("layer " + std::to_string(k) + " has a zero dimension");
      if (l.biases.size() != l.output_dim())
        throw ShapeError("layer " + std::to_string(k) + " bias length mismatch");
      if (k + 1 < layers_.size() && l.output_dim() != layers_[k + 1].input_dim())
        throw ShapeError("layer " + std::to_string(k) + " output does not chain into layer " +
                         std::to_string(k + 1));
    }
    if (kind_ == ModelKind::Classifier) {
      if (layers_.empty() || layers_.back().activation != Activation::Sigmoid)
        throw ShapeError("classifier must end in a sigmoid layer");
    } else if (!layers_.empty() && layers_.back().activation != Activation::Identity) {
      throw ShapeError("regressor must end in an identity layer");
    }
  }

  /// Same as forward(*this, inputs).
  Matrix predict(const Matrix& inputs) const;

  friend bool operator==(const MLPModel&, const MLPModel&) = default;

private:
  ModelKind kind_ = ModelKind::Regressor;
  std::vector<DenseLayer> layers_;
};

inline Matrix forward(const MLPModel& model, const Matrix& inputs) {
  if (model.layers().empty()) return inputs;
  if (inputs.cols() != model.input_dim())
    throw ShapeError("forward: input has " + std::to_string(inputs.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  Matrix a = detail::dense_forward(model.layers().front(), inputs);
  for (std::size_t k = 1; k < model.layers().size(); ++k) a = detail::dense_forward(model.layers()[k], a);
  return a;
}

inline Matrix MLPModel::predict(const Matrix& inputs) const { return forward(*this, inputs); }

inline constexpr double kProbabilityClamp = 1e-7;

/// Mean binary cross-entropy over all elements. Probabilities are clamped to
/// [1e-7, 1-1e-7] here only. An optional per-label weight scales the
/// positive-class term.
inline double bce_loss(const Matrix& predictions, const Matrix& targets,
                       std::span<const double> positive_weight = {}) {
  require_same_shape(predictions, targets, "bce_loss");
  if (predictions.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < predictions.rows(); ++r) {
    for (std::size_t c = 0; c < predictions.cols(); ++c) {
      const double p = std::clamp(predictions(r, c), kProbabilityClamp, 1.0 - kProbabilityClamp);
      const double y = targets(r, c);
      const double w = positive_weight.empty() ? 1.0 : positive_weight[c];
      sum -= w * y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
  }
  return sum / static_cast<double>(predictions.size());
}

inline double mse_loss(const Matrix& predictions, const Matrix& targets) {
  require_same_shape(predictions, targets, "mse_loss");
  if (predictions.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions.data()[i] - targets.data()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 300;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  Loss loss = Loss::BCE;
  std::vector<std::size_t> hidden_dims{64};
  /// Optional per-label positive-class weight for BCE; empty means unweighted.
  std::vector<double> positive_weight;

  void validate(std::size_t m) const {
    // zero is accepted: it turns training into a no-op on the weights
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning_rate must be a finite non-negative number");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1 || batch_size > m)
      throw ConfigError("batch_size must lie in [1, " + std::to_string(m) + "]");
  }
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double final_loss = 0.0;
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

inline double loss_value(const MLPModel& model, const Matrix& X, const Matrix& Y, Loss loss,
                         std::span<const double> positive_weight = {}) {
  const Matrix p = forward(model, X);
  return loss == Loss::BCE ? bce_loss(p, Y, positive_weight) : mse_loss(p, Y);
}

/// Analytic gradient of the mean loss over all elements of (X, Y).
inline Gradients gradients(const MLPModel& model, const Matrix& X, const Matrix& Y, Loss loss,
                           std::span<const double> positive_weight = {}) {
  const auto& layers = model.layers();
  Gradients g;
  if (layers.empty()) return g;

  std::vector<Matrix> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(X);
  for (const auto& l : layers) acts.push_back(detail::dense_forward(l, acts.back()));

  const Matrix& out = acts.back();
  require_same_shape(out, Y, "gradients");
  const double norm = static_cast<double>(out.size());
  const Activation head = layers.back().activation;

  // delta = dLoss/dZ for the output layer
  Matrix delta(out.rows(), out.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const double p = out(r, c);
      const double y = Y(r, c);
      const double w = positive_weight.empty() ? 1.0 : positive_weight[c];
      double d;
      if (loss == Loss::BCE && head == Activation::Sigmoid) {
        d = p * (w * y + 1.0 - y) - w * y;
      } else if (loss == Loss::MSE && head == Activation::Identity) {
        d = 2.0 * (p - y);
      } else if (loss == Loss::BCE) {
        const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
        d = (-w * y / pc + (1.0 - y) / (1.0 - pc)) * detail::activation_grad(head, p);
      } else {
        d = 2.0 * (p - y) * detail::activation_grad(head, p);
      }
      delta(r, c) = d / norm;
    }
  }

  g.weights.resize(layers.size());
  g.biases.resize(layers.size());
  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& layer = layers[k];
    const Matrix& input = acts[k];
    const std::size_t nin = layer.input_dim();
    const std::size_t nout = layer.output_dim();
    Matrix gw(nin, nout);
    std::vector<double> gb(nout, 0.0);
    for (std::size_t r = 0; r < input.rows(); ++r) {
      const double* x = input.row(r).data();
      const double* d = delta.row(r).data();
      for (std::size_t j = 0; j < nout; ++j) gb[j] += d[j];
      for (std::size_t i = 0; i < nin; ++i) {
        double* gwi = gw.row(i).data();
        const double xi = x[i];
        for (std::size_t j = 0; j < nout; ++j) gwi[j] += xi * d[j];
      }
    }
    if (k > 0) {
      const Activation prev_act = layers[k - 1].activation;
      Matrix prev(input.rows(), nin);
      for (std::size_t r = 0; r < input.rows(); ++r) {
        const double* d = delta.row(r).data();
        for (std::size_t i = 0; i < nin; ++i) {
          const double* wi = layer.weights.row(i).data();
          double s = 0.0;
          for (std::size_t j = 0; j < nout; ++j) s += wi[j] * d[j];
          prev(r, i) = s * detail::activation_grad(prev_act, input(r, i));
        }
      }
      delta = std::move(prev);
    }
    g.weights[k] = std::move(gw);
    g.biases[k] = std::move(gb);
  }
  return g;
}

/// Mini-batch SGD. Deterministic given cfg.seed (shuffling stream).
/// Initialization is the caller's; see MLPModel::create.
inline std::pair<MLPModel, TrainReport> train(MLPModel model, const Matrix& X, const Matrix& Y,
                                              const TrainConfig& cfg) {
  if (X.rows() != Y.rows()) throw ShapeError("train: X and Y row counts differ");
  if (X.cols() != model.input_dim()) throw ShapeError("train: X width does not match model input");
  if (Y.cols() != model.output_dim()) throw ShapeError("train: Y width does not match model output");
  cfg.validate(X.rows());
  if (!cfg.positive_weight.empty() && cfg.positive_weight.size() != Y.cols())
    throw ConfigError("positive_weight length must equal label count");

  Rng rng = make_rng(cfg.seed, "shuffle");
  std::vector<std::size_t> order(X.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  report.epoch_loss.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix xb = X.select_rows(idx);
      const Matrix yb = Y.select_rows(idx);
      const double batch_loss = loss_value(model, xb, yb, cfg.loss, cfg.positive_weight);
      if (!std::isfinite(batch_loss)) throw TrainingDivergedError(epoch);
      weighted += batch_loss * static_cast<double>(idx.size());
      const Gradients g = gradients(model, xb, yb, cfg.loss, cfg.positive_weight);
      auto& layers = model.layers();
      for (std::size_t k = 0; k < layers.size(); ++k) {
        auto& w = layers[k].weights.data();
        const auto& gw = g.weights[k].data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * gw[i];
        auto& b = layers[k].biases;
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= cfg.learning_rate * g.biases[k][i];
      }
    }
    const double mean = weighted / static_cast<double>(X.rows());
    if (!std::isfinite(mean)) throw TrainingDivergedError(epoch);
    report.epoch_loss.push_back(mean);
  }
  report.final_loss = report.epoch_loss.back();
  return {std::move(model), std::move(report)};
}

/// Builds a fresh network from cfg.hidden_dims and trains it.
inline std::pair<MLPModel, TrainReport> fit(const Matrix& X, const Matrix& Y, const TrainConfig& cfg,
                                            ModelKind kind) {
  MLPModel model = MLPModel::create(X.cols(), cfg.hidden_dims, Y.cols(), kind, cfg.seed);
  return train(std::move(model), X, Y, cfg);
}

struct AnalyticGradient {
  Gradients operator()(const MLPModel& m, const Matrix& X, const Matrix& Y, Loss loss) const {
    return gradients(m, X, Y, loss);
  }
};

/// Max over parameters of |g_a - g_n| / max(1, |g_a|, |g_n|), where g_n is a
/// central difference with step 1e-5. The loss follows the model kind.
template <typename GradientFn = AnalyticGradient>
double grad_check(const MLPModel& model, const Matrix& X, const Matrix& Y,
                  GradientFn&& gradient_fn = {}) {
  if (model.parameter_count() == 0) return 0.0;
  constexpr double h = 1e-5;
  const Loss loss = model.kind() == ModelKind::Classifier ? Loss::BCE : Loss::MSE;
  const Gradients analytic = gradient_fn(model, X, Y, loss);
  MLPModel probe = model;
  double worst = 0.0;
  auto check = [&](double& param, double ga) {
    const double saved = param;
    param = saved + h;
    const double up = loss_value(probe, X, Y, loss);
    param = saved - h;
    const double down = loss_value(probe, X, Y, loss);
    param = saved;
    const double gn = (up - down) / (2.0 * h);
    const double rel = std::abs(ga - gn) / std::max({1.0, std::abs(ga), std::abs(gn)});
    worst = std::max(worst, rel);
  };
  for (std::size_t k = 0; k < probe.layers().size(); ++k) {
    auto& layer = probe.layers()[k];
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
      check(layer.weights.data()[i], analytic.weights[k].data()[i]);
    for (std::size_t i = 0; i < layer.biases.size(); ++i) check(layer.biases[i], analytic.biases[k][i]);
  }
  return worst;
}

}  // namespace dsopt
