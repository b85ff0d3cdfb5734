#pragma once

// Variance-ratio global sensitivity of a feature-value assignment:
//
//   U_l = Cov(p_fixed[:, l], p_ref[:, l]) / Var(p_ref[:, l])
//
// where p_ref are the model's predictions on the reference rows and p_fixed
// its predictions on the same rows with the assigned columns overwritten.
// Rows stay paired, so the empty assignment scores exactly 1 and a full
// assignment (constant p_fixed) scores exactly 0.

#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "dsopt/assignment.hpp"
#include "dsopt/errors.hpp"
#include "dsopt/matrix.hpp"
#include "dsopt/scaled_network.hpp"

namespace dsopt {

inline constexpr double kDegenerateVariance = 1e-12;

struct SensitivityScore {
  std::vector<double> per_label;
  double aggregate = 0.0;

  static SensitivityScore from_per_label(std::vector<double> v) {
    SensitivityScore s;
    s.aggregate = v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.per_label = std::move(v);
    return s;
  }

  friend bool operator==(const SensitivityScore&, const SensitivityScore&) = default;
};

namespace detail {

// Mean accumulated as offsets from the first element: a constant column has
// a mean equal to that constant bit for bit, so its deviations are exactly 0.
inline double shifted_mean(const Matrix& m, std::size_t col) {
  const double base = m(0, col);
  double acc = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) acc += m(r, col) - base;
  return base + acc / static_cast<double>(m.rows());
}

}  // namespace detail

/// Population covariance (divide by k) between two paired columns.
inline double population_covariance(const Matrix& a, std::size_t col_a, const Matrix& b, std::size_t col_b) {
  if (a.rows() != b.rows()) throw ShapeError("covariance: row counts differ");
  if (a.rows() == 0) return 0.0;
  const double ma = detail::shifted_mean(a, col_a);
  const double mb = detail::shifted_mean(b, col_b);
  double acc = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) acc += (a(r, col_a) - ma) * (b(r, col_b) - mb);
  return acc / static_cast<double>(a.rows());
}

/// Sensitivity oracle bound to a frozen model and reference set. Reference
/// predictions and variances are computed once at construction.
template <Predictor P>
class OracleSensitivity {
public:
  OracleSensitivity(const P& model, const ReferenceSet& reference)
      : model_(&model), reference_(&reference), reference_predictions_(model.predict(reference.features)) {
    const std::size_t labels = reference_predictions_.cols();
    variance_.resize(labels);
    for (std::size_t l = 0; l < labels; ++l) {
      variance_[l] = population_covariance(reference_predictions_, l, reference_predictions_, l);
      if (!(variance_[l] >= kDegenerateVariance)) throw DegenerateReferenceError(l, variance_[l]);
    }
  }

  const P& model() const noexcept { return *model_; }
  const ReferenceSet& reference() const noexcept { return *reference_; }
  const Matrix& reference_predictions() const noexcept { return reference_predictions_; }
  std::size_t label_count() const noexcept { return variance_.size(); }

  SensitivityScore score(const FeatureAssignment& a) const {
    return score(a, model_->predict(clone_and_fix(*reference_, a)));
  }

  /// Score from predictions already computed on clone_and_fix(T, a).
  SensitivityScore score(const FeatureAssignment&, const Matrix& fixed_predictions) const {
    require_same_shape(fixed_predictions, reference_predictions_, "sensitivity");
    std::vector<double> per_label(variance_.size());
    for (std::size_t l = 0; l < variance_.size(); ++l)
      per_label[l] = population_covariance(fixed_predictions, l, reference_predictions_, l) / variance_[l];
    return SensitivityScore::from_per_label(std::move(per_label));
  }

private:
  const P* model_;
  const ReferenceSet* reference_;
  Matrix reference_predictions_;
  std::vector<double> variance_;
};

template <Predictor P>
SensitivityScore sensitivity_score(const P& model, const ReferenceSet& T, const FeatureAssignment& a) {
  return OracleSensitivity<P>(model, T).score(a);
}

/// Aggregate sensitivity of base + {(feature, v)} for each v, in input order.
template <Predictor P>
std::vector<double> mean_sensitivity_over_values(const P& model, const ReferenceSet& T,
                                                 const FeatureAssignment& base, std::size_t feature,
                                                 std::span<const double> values) {
  if (base.contains(feature))
    throw IndexError("feature " + std::to_string(feature) + " is already part of the base assignment");
  OracleSensitivity<P> oracle(model, T);
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(oracle.score(base.with(feature, v)).aggregate);
  return out;
}

}  // namespace dsopt
