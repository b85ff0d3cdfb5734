#pragma once

// Sensitivity surrogate: a regression network trained to reproduce the
// oracle's per-label sensitivity from a fixed-size encoding of the assignment.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "dsopt/assignment.hpp"
#include "dsopt/errors.hpp"
#include "dsopt/matrix.hpp"
#include "dsopt/nn.hpp"
#include "dsopt/rng.hpp"
#include "dsopt/scaled_network.hpp"
#include "dsopt/sensitivity.hpp"

namespace dsopt {

inline constexpr int kEncodingVersion = 1;

/// values: fixed value for assigned features, reference column mean otherwise.
/// mask: 1 for assigned features.
struct AssignmentEncoding {
  std::vector<double> values;
  std::vector<double> mask;

  /// [values..., mask...], the 2n-wide network input.
  std::vector<double> flat() const {
    std::vector<double> out(values);
    out.insert(out.end(), mask.begin(), mask.end());
    return out;
  }

  friend bool operator==(const AssignmentEncoding&, const AssignmentEncoding&) = default;
};

inline AssignmentEncoding encode(const FeatureAssignment& a, std::span<const double> column_mean) {
  AssignmentEncoding e{std::vector<double>(column_mean.begin(), column_mean.end()),
                       std::vector<double>(column_mean.size(), 0.0)};
  for (const auto& f : a) {
    e.values[f.feature] = f.value;
    e.mask[f.feature] = 1.0;
  }
  return e;
}

inline AssignmentEncoding encode(const FeatureAssignment& a, const ReferenceSet& T) {
  validate_assignment(a, T.width(), T.domains);
  return encode(a, column_means(T.features));
}

struct DistillationSet {
  Matrix inputs;   // rows x 2n
  Matrix targets;  // rows x L, oracle per-label sensitivity
  std::vector<FeatureAssignment> assignments;
  std::uint64_t sampling_seed = 0;

  std::size_t size() const noexcept { return assignments.size(); }

  /// First `count` rows and the remainder.
  std::pair<DistillationSet, DistillationSet> split_at(std::size_t count) const {
    count = std::min(count, size());
    auto take = [&](std::size_t lo, std::size_t hi) {
      std::vector<std::size_t> idx(hi - lo);
      std::iota(idx.begin(), idx.end(), lo);
      DistillationSet d{inputs.select_rows(idx), targets.select_rows(idx),
                        {assignments.begin() + static_cast<std::ptrdiff_t>(lo),
                         assignments.begin() + static_cast<std::ptrdiff_t>(hi)},
                        sampling_seed};
      return d;
    };
    return {take(0, count), take(count, size())};
  }
};

/// Samples assignments (arity uniform in [1, max_arity], features uniform
/// without replacement, values uniform over each domain) and labels each with
/// the oracle's per-label sensitivity.
template <Predictor P>
DistillationSet build_distillation_set(const P& model, const ReferenceSet& T, const ValueDomains& domains,
                                       std::size_t n_samples, std::size_t max_arity, std::uint64_t seed) {
  const std::size_t n = T.width();
  if (n_samples < 1) throw ConfigError("distillation needs at least one sample");
  if (max_arity < 1 || max_arity > n) throw ConfigError("max_arity must lie in [1, n]");
  if (domains.size() != n) throw ConfigError("value domains do not match the feature count");
  for (std::size_t j = 0; j < n; ++j)
    if (domains[j].empty()) throw ConfigError("feature " + std::to_string(j) + " has an empty domain");

  OracleSensitivity<P> oracle(model, T);
  const std::vector<double> means = column_means(T.features);
  Rng rng = make_rng(seed, "distill");
  std::uniform_int_distribution<std::size_t> arity_dist(1, max_arity);

  DistillationSet d;
  d.sampling_seed = seed;
  d.inputs = Matrix(n_samples, 2 * n);
  d.targets = Matrix(n_samples, oracle.label_count());
  d.assignments.reserve(n_samples);
  std::vector<std::size_t> features(n);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::size_t arity = arity_dist(rng);
    std::iota(features.begin(), features.end(), std::size_t{0});
    // partial Fisher-Yates: first `arity` entries are a uniform subset
    for (std::size_t i = 0; i < arity; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(features[i], features[pick(rng)]);
    }
    std::vector<Fixing> fixings;
    for (std::size_t i = 0; i < arity; ++i) {
      const auto& dom = domains[features[i]];
      std::uniform_int_distribution<std::size_t> pick(0, dom.size() - 1);
      fixings.push_back({features[i], dom[pick(rng)]});
    }
    FeatureAssignment a(std::move(fixings));
    const auto row = encode(a, means).flat();
    std::copy(row.begin(), row.end(), d.inputs.row(s).begin());
    const auto score = oracle.score(a);
    std::copy(score.per_label.begin(), score.per_label.end(), d.targets.row(s).begin());
    d.assignments.push_back(std::move(a));
  }
  return d;
}

/// Trains the regressor; requires at least two hidden layers and MSE loss.
inline std::pair<ScaledNetwork, TrainReport> train_ds(const DistillationSet& dset, const TrainConfig& cfg) {
  if (cfg.hidden_dims.size() < 2) throw ConfigError("the sensitivity surrogate needs at least two hidden layers");
  if (cfg.loss != Loss::MSE) throw ConfigError("the sensitivity surrogate is trained with MSE loss");
  MinMaxScaler scaler = MinMaxScaler::fit(dset.inputs);
  auto [net, report] = fit(scaler.transform(dset.inputs), dset.targets, cfg, ModelKind::Regressor);
  return {ScaledNetwork{std::move(scaler), std::move(net)}, std::move(report)};
}

/// Coefficient of determination pooled over outputs (variance-weighted):
/// 1 - sum of squared residuals / sum of squared deviations from each
/// column's mean.
inline double r_squared(const Matrix& predictions, const Matrix& targets) {
  require_same_shape(predictions, targets, "r_squared");
  const auto mean = column_means(targets);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t r = 0; r < targets.rows(); ++r) {
    for (std::size_t c = 0; c < targets.cols(); ++c) {
      const double e = predictions(r, c) - targets(r, c);
      const double d = targets(r, c) - mean[c];
      ss_res += e * e;
      ss_tot += d * d;
    }
  }
  if (ss_tot <= 0.0) return ss_res <= 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

/// Surrogate prediction; the output is reported unclamped.
inline SensitivityScore predict_sensitivity(const ScaledNetwork& ds, const FeatureAssignment& a,
                                            std::span<const double> column_mean) {
  if (ds.input_dim() != 2 * column_mean.size())
    throw ShapeError("surrogate expects " + std::to_string(ds.input_dim()) + " inputs, encoding has " +
                     std::to_string(2 * column_mean.size()));
  const auto row = encode(a, column_mean).flat();
  const Matrix out = ds.predict(Matrix(1, row.size(), row));
  return SensitivityScore::from_per_label(std::vector<double>(out.row(0).begin(), out.row(0).end()));
}

inline SensitivityScore predict_sensitivity(const ScaledNetwork& ds, const FeatureAssignment& a,
                                            const ReferenceSet& T) {
  validate_assignment(a, T.width(), T.domains);
  return predict_sensitivity(ds, a, column_means(T.features));
}

/// Sensitivity source backed by a trained surrogate.
class SurrogateSensitivity {
public:
  SurrogateSensitivity(const ScaledNetwork& ds, const ReferenceSet& T)
      : ds_(&ds), means_(column_means(T.features)) {
    if (ds.input_dim() != 2 * T.width())
      throw ShapeError("surrogate input width " + std::to_string(ds.input_dim()) + " != 2 x " +
                       std::to_string(T.width()));
  }

  SensitivityScore score(const FeatureAssignment& a) const { return predict_sensitivity(*ds_, a, means_); }
  SensitivityScore score(const FeatureAssignment& a, const Matrix&) const { return score(a); }

private:
  const ScaledNetwork* ds_;
  std::vector<double> means_;
};

}  // namespace dsopt
