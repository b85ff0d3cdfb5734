#pragma once

// Synthetic multi-label data with a planted optimum.
//
// Every feature takes integer levels 0..K-1. For label l the generator scores
//   z_l(x) = bias_l + sum_j w_lj * |x_j - v_j| / (K - 1)
//                   + sum_(i,j) w_ij * [x_i != v_i] * [x_j != v_j]
// with v the planted assignment, w_lj > 0 and interaction weights >= 0, so z_l
// is minimized exactly at v. Labels are y_l = [z_l(x) + noise_level * e > 0],
// e ~ N(0, 1): deterministic in x when noise_level is 0. bias_l places the
// noiseless positive rate at the requested fraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "dsopt/assignment.hpp"
#include "dsopt/data.hpp"
#include "dsopt/errors.hpp"
#include "dsopt/rng.hpp"

namespace dsopt {

struct InteractionTerm {
  std::size_t first = 0;
  std::size_t second = 0;
  double weight = 0.0;
};

struct SyntheticSpec {
  std::size_t n_features = 8;
  std::size_t n_samples = 1000;
  std::size_t label_count = 3;
  std::size_t levels = 3;
  FeatureAssignment planted_assignment;  // empty: drawn from the seed
  std::vector<InteractionTerm> interaction_terms;
  double noise_level = 0.1;
  double positive_rate = 0.25;
  double min_weight = 0.5;
  double max_weight = 1.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_features < 1 || n_samples < 2 || label_count < 1) throw ConfigError("synthetic sizes must be positive");
    if (levels < 2) throw ConfigError("synthetic features need at least 2 levels");
    if (noise_level < 0.0) throw ConfigError("noise_level must be >= 0");
    if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw ConfigError("positive_rate must lie in (0, 1)");
    if (!(min_weight > 0.0 && max_weight >= min_weight)) throw ConfigError("feature weights must be positive");
    if (!planted_assignment.empty()) {
      if (planted_assignment.size() != n_features)
        throw ConfigError("planted assignment must fix every feature");
      for (const auto& f : planted_assignment) {
        if (f.feature >= n_features) throw ConfigError("planted feature out of range");
        if (f.value < 0.0 || f.value > static_cast<double>(levels - 1) || f.value != std::floor(f.value))
          throw ConfigError("planted value outside the level range");
      }
    }
    for (const auto& t : interaction_terms) {
      if (t.first >= n_features || t.second >= n_features || t.first == t.second)
        throw ConfigError("interaction term needs two distinct valid features");
      if (t.weight < 0.0) throw ConfigError("interaction weights must be >= 0 to keep the planted optimum");
    }
  }
};

struct GroundTruth {
  SyntheticSpec spec;
  FeatureAssignment planted;
  Matrix weights;  // L x n
  std::vector<double> bias;

  /// z_l(x) without noise.
  double logit(std::span<const double> x, std::size_t label) const {
    const double span = static_cast<double>(spec.levels - 1);
    double z = bias[label];
    for (const auto& f : planted) z += weights(label, f.feature) * std::abs(x[f.feature] - f.value) / span;
    for (const auto& t : spec.interaction_terms) {
      const bool a = x[t.first] != planted[t.first].value;
      const bool b = x[t.second] != planted[t.second].value;
      if (a && b) z += t.weight;
    }
    return z;
  }

  /// sigmoid(z_l(x)); minimal exactly at the planted assignment.
  double probability(std::span<const double> x, std::size_t label) const {
    return 1.0 / (1.0 + std::exp(-logit(x, label)));
  }
};

struct SyntheticData {
  Dataset dataset;
  GroundTruth truth;
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_features;
  const std::size_t L = spec.label_count;
  Rng rng = make_rng(spec.seed, "synthetic");
  std::uniform_int_distribution<std::size_t> level(0, spec.levels - 1);

  GroundTruth truth;
  truth.spec = spec;
  if (spec.planted_assignment.empty()) {
    std::vector<Fixing> planted;
    for (std::size_t j = 0; j < n; ++j) planted.push_back({j, static_cast<double>(level(rng))});
    truth.planted = FeatureAssignment(std::move(planted));
  } else {
    truth.planted = spec.planted_assignment;
  }
  truth.weights = Matrix(L, n);
  std::uniform_real_distribution<double> wdist(spec.min_weight, spec.max_weight);
  for (double& w : truth.weights.data()) w = wdist(rng);
  truth.bias.assign(L, 0.0);

  Dataset d;
  d.X = Matrix(spec.n_samples, n);
  for (double& x : d.X.data()) x = static_cast<double>(level(rng));

  // Calibrate the bias so the noiseless positive rate is positive_rate.
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<double> z(spec.n_samples);
    for (std::size_t r = 0; r < spec.n_samples; ++r) z[r] = truth.logit(d.X.row(r), l);
    std::sort(z.begin(), z.end());
    const auto k = static_cast<std::size_t>(
        std::floor((1.0 - spec.positive_rate) * static_cast<double>(spec.n_samples - 1)));
    truth.bias[l] = -0.5 * (z[k] + z[std::min(k + 1, z.size() - 1)]);
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  d.Y = Matrix(spec.n_samples, L);
  for (std::size_t r = 0; r < spec.n_samples; ++r)
    for (std::size_t l = 0; l < L; ++l) {
      const double e = spec.noise_level > 0.0 ? spec.noise_level * noise(rng) : 0.0;
      d.Y(r, l) = truth.logit(d.X.row(r), l) + e > 0.0 ? 1.0 : 0.0;
    }

  for (std::size_t j = 0; j < n; ++j) {
    FeatureMeta meta;
    meta.name = "x" + std::to_string(j);
    meta.kind = FeatureKind::Categorical;
    for (std::size_t k = 0; k < spec.levels; ++k) {
      meta.domain.push_back(static_cast<double>(k));
      meta.raw_categories.push_back(std::to_string(k));
    }
    d.features.push_back(std::move(meta));
  }
  for (std::size_t l = 0; l < L; ++l) d.label_names.push_back("y" + std::to_string(l));
  return {std::move(d), std::move(truth)};
}

/// Sidecar record of the generating parameters.
inline nlohmann::json to_json(const GroundTruth& t) {
  nlohmann::json planted = nlohmann::json::array();
  for (const auto& f : t.planted) planted.push_back({{"feature", f.feature}, {"value", f.value}});
  nlohmann::json inter = nlohmann::json::array();
  for (const auto& i : t.spec.interaction_terms)
    inter.push_back({{"first", i.first}, {"second", i.second}, {"weight", i.weight}});
  nlohmann::json weights = nlohmann::json::array();
  for (std::size_t l = 0; l < t.weights.rows(); ++l)
    weights.push_back(std::vector<double>(t.weights.row(l).begin(), t.weights.row(l).end()));
  return {{"schema_version", 1},
          {"spec",
           {{"n_features", t.spec.n_features},
            {"n_samples", t.spec.n_samples},
            {"label_count", t.spec.label_count},
            {"levels", t.spec.levels},
            {"noise_level", t.spec.noise_level},
            {"positive_rate", t.spec.positive_rate},
            {"seed", t.spec.seed},
            {"interaction_terms", inter}}},
          {"planted_assignment", planted},
          {"weights", weights},
          {"bias", t.bias}};
}

}  // namespace dsopt
