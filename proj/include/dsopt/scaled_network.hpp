#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <utility>
#include <vector>

#include "dsopt/matrix.hpp"
#include "dsopt/nn.hpp"

namespace dsopt {

/// Anything that maps a batch of raw feature rows to a batch of outputs.
/// Trained pipelines, bare networks and hand-built test models all qualify.
template <typename P>
concept Predictor = requires(const P& p, const Matrix& x) {
  { p.predict(x) } -> std::convertible_to<Matrix>;
};

/// Per-column min-max scaling to [0,1]; constant columns map to 0.
struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;

  static MinMaxScaler fit(const Matrix& X) {
    MinMaxScaler s;
    s.min.assign(X.cols(), 0.0);
    s.max.assign(X.cols(), 0.0);
    for (std::size_t c = 0; c < X.cols(); ++c) {
      double lo = X.rows() ? X(0, c) : 0.0;
      double hi = lo;
      for (std::size_t r = 1; r < X.rows(); ++r) {
        lo = std::min(lo, X(r, c));
        hi = std::max(hi, X(r, c));
      }
      s.min[c] = lo;
      s.max[c] = hi;
    }
    return s;
  }

  static MinMaxScaler identity(std::size_t n) {
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
  }

  std::size_t width() const noexcept { return min.size(); }

  double scale(std::size_t c, double v) const noexcept {
    const double span = max[c] - min[c];
    return span > 0.0 ? (v - min[c]) / span : 0.0;
  }

  Matrix transform(const Matrix& X) const {
    if (X.cols() != width())
      throw ShapeError("scaler expects " + std::to_string(width()) + " columns, got " +
                       std::to_string(X.cols()));
    Matrix out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r)
      for (std::size_t c = 0; c < X.cols(); ++c) out(r, c) = scale(c, X(r, c));
    return out;
  }

  friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;
};

/// A network together with the input scaling fitted on its training data.
/// Callers work in raw feature units; scaling happens inside predict.
struct ScaledNetwork {
  MinMaxScaler scaler;
  MLPModel network;

  Matrix predict(const Matrix& raw) const { return forward(network, scaler.transform(raw)); }
  std::size_t input_dim() const noexcept { return scaler.width(); }
  std::size_t output_dim() const noexcept { return network.output_dim(); }

  friend bool operator==(const ScaledNetwork&, const ScaledNetwork&) = default;
};

}  // namespace dsopt
