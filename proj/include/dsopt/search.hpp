#pragma once

// Objective-oriented beam search over feature-value assignments.
//
// Each candidate is scored per objective label as
//   gamma_l = omega * (1 - lambda_l) + (1 - omega) * upsilon_l   (minimize)
//   gamma_l = omega * lambda_l       + (1 - omega) * upsilon_l   (maximize)
// and gamma is the mean over the objective's labels. lambda is the mean
// prediction over the clone-and-fixed reference set; upsilon comes from the
// sensitivity oracle or the trained surrogate. After every expansion only the
// zeta best candidates survive.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dsopt/assignment.hpp"
#include "dsopt/errors.hpp"
#include "dsopt/format.hpp"
#include "dsopt/matrix.hpp"
#include "dsopt/parallel.hpp"
#include "dsopt/scaled_network.hpp"
#include "dsopt/sensitivity.hpp"

namespace dsopt {

enum class Direction { MinimizeLabels, MaximizeLabels };

struct Objective {
  Direction direction = Direction::MinimizeLabels;
  std::vector<std::size_t> label_subset;  // empty: every label

  std::vector<std::size_t> labels(std::size_t label_count) const {
    if (label_subset.empty()) {
      std::vector<std::size_t> all(label_count);
      for (std::size_t i = 0; i < label_count; ++i) all[i] = i;
      return all;
    }
    for (std::size_t l : label_subset)
      if (l >= label_count)
        throw ConfigError("objective label " + std::to_string(l) + " out of range for " +
                          std::to_string(label_count) + " labels");
    return label_subset;
  }

  /// True when objective value a is strictly better than b.
  bool better(double a, double b) const noexcept {
    return direction == Direction::MinimizeLabels ? a < b : a > b;
  }
};

enum class SensitivityMode { Oracle, Surrogate };

struct SearchConfig {
  double omega = 0.6;
  std::size_t zeta = 5;
  std::optional<std::size_t> max_depth;  // default: every feature
  SensitivityMode mode = SensitivityMode::Oracle;
  ValueDomains value_domains;

  std::size_t depth(std::size_t n) const { return max_depth.value_or(n); }

  void validate(std::size_t n) const {
    if (!(omega >= 0.0 && omega <= 1.0)) throw ConfigError("omega must lie in [0, 1]");
    if (zeta < 1) throw ConfigError("zeta must be >= 1");
    if (depth(n) > n) throw ConfigError("max_depth exceeds the feature count");
    if (value_domains.size() != n) throw ConfigError("value_domains must list every feature");
    for (std::size_t j = 0; j < n; ++j)
      if (value_domains[j].empty()) throw ConfigError("feature " + std::to_string(j) + " has an empty value domain");
  }
};

struct Candidate {
  FeatureAssignment assignment;
  double gamma = 0.0;
  double mean_lambda = 0.0;  // over the objective labels
  std::vector<double> lambda_per_label;
  std::vector<double> upsilon_per_label;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Shared total order: higher gamma first, then the assignment tie-break.
inline bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.gamma != b.gamma) return a.gamma > b.gamma;
  return tie_break_order(a.assignment, b.assignment) < 0;
}

/// Combines per-label lambda and upsilon into gamma for one objective.
inline double relevance(double omega, std::span<const double> lambda, std::span<const double> upsilon,
                        const Objective& objective) {
  const auto labels = objective.labels(lambda.size());
  double sum = 0.0;
  for (std::size_t l : labels) {
    const double attain = objective.direction == Direction::MinimizeLabels ? 1.0 - lambda[l] : lambda[l];
    sum += omega * attain + (1.0 - omega) * upsilon[l];
  }
  return sum / static_cast<double>(labels.size());
}

inline double mean_over(std::span<const double> v, const std::vector<std::size_t>& labels) {
  double sum = 0.0;
  for (std::size_t l : labels) sum += v[l];
  return sum / static_cast<double>(labels.size());
}

/// Expected per-label prediction when the assignment is enforced on every
/// reference row.
template <Predictor P>
std::vector<double> lambda_of(const P& model, const ReferenceSet& T, const FeatureAssignment& a) {
  return column_means(model.predict(clone_and_fix(T, a)));
}

template <typename S>
concept SensitivitySource = requires(const S& s, const FeatureAssignment& a, const Matrix& preds) {
  { s.score(a, preds) } -> std::convertible_to<SensitivityScore>;
};

template <Predictor P, SensitivitySource S>
Candidate score_candidate(const P& model, const ReferenceSet& T, const FeatureAssignment& a, double omega,
                          const Objective& objective, const S& sensitivity) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw ConfigError("omega must lie in [0, 1]");
  const Matrix preds = model.predict(clone_and_fix(T, a));
  Candidate c;
  c.assignment = a;
  c.lambda_per_label = column_means(preds);
  c.upsilon_per_label = sensitivity.score(a, preds).per_label;
  if (c.upsilon_per_label.size() != c.lambda_per_label.size())
    throw ShapeError("sensitivity and prediction label counts differ");
  c.gamma = relevance(omega, c.lambda_per_label, c.upsilon_per_label, objective);
  c.mean_lambda = mean_over(c.lambda_per_label, objective.labels(c.lambda_per_label.size()));
  return c;
}

/// Binds model, reference set, sensitivity source, omega and objective.
template <Predictor P, SensitivitySource S>
struct CandidateScorer {
  const P& model;
  const ReferenceSet& reference;
  const S& sensitivity;
  double omega;
  Objective objective;

  Candidate operator()(const FeatureAssignment& a) const {
    return score_candidate(model, reference, a, omega, objective, sensitivity);
  }
};

/// Every single-fixing extension of every beam member, scored. Repeated
/// assignments (reached from different parents) are scored once and copied.
template <typename Scorer>
std::vector<Candidate> expand(const std::vector<Candidate>& beam, const ValueDomains& domains,
                              const Scorer& scorer) {
  std::vector<FeatureAssignment> extensions;
  for (const auto& parent : beam) {
    for (std::size_t j = 0; j < domains.size(); ++j) {
      if (parent.assignment.contains(j)) continue;
      for (double v : domains[j]) extensions.push_back(parent.assignment.with(j, v));
    }
  }
  std::vector<std::size_t> slot(extensions.size());
  std::vector<const FeatureAssignment*> unique;
  {
    auto less = [](const FeatureAssignment* a, const FeatureAssignment* b) {
      return tie_break_order(*a, *b) < 0;
    };
    std::map<const FeatureAssignment*, std::size_t, decltype(less)> seen(less);
    for (std::size_t i = 0; i < extensions.size(); ++i) {
      auto [it, inserted] = seen.try_emplace(&extensions[i], unique.size());
      if (inserted) unique.push_back(&extensions[i]);
      slot[i] = it->second;
    }
  }
  std::vector<Candidate> scored(unique.size());
  parallel_for(unique.size(), [&](std::size_t i) { scored[i] = scorer(*unique[i]); });
  std::vector<Candidate> out;
  out.reserve(extensions.size());
  for (std::size_t i = 0; i < extensions.size(); ++i) out.push_back(scored[slot[i]]);
  return out;
}

/// The zeta best distinct candidates, sorted by ranks_before.
inline std::vector<Candidate> prune(std::vector<Candidate> candidates, std::size_t zeta) {
  if (zeta < 1) throw ConfigError("zeta must be >= 1");
  std::sort(candidates.begin(), candidates.end(), ranks_before);
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const Candidate& a, const Candidate& b) { return a.assignment == b.assignment; }),
                   candidates.end());
  if (candidates.size() > zeta) candidates.resize(zeta);
  return candidates;
}

struct SearchStage {
  std::size_t stage = 0;
  std::vector<Candidate> candidates;
  double best_gamma = 0.0;
  double best_mean_lambda = 0.0;  // best in the objective's direction
  double running_best_gamma = 0.0;
};

struct SearchTrace {
  std::vector<SearchStage> stages;
};

struct SearchResult {
  std::vector<Candidate> selected;  // final beam plus the running best
  Candidate running_best;
  SearchTrace trace;
};

template <Predictor P, SensitivitySource S>
SearchResult run_search(const P& model, const ReferenceSet& T, const SearchConfig& config,
                        const Objective& objective, const S& sensitivity) {
  config.validate(T.width());
  const CandidateScorer<P, S> scorer{model, T, sensitivity, config.omega, objective};
  std::vector<Candidate> beam{scorer(FeatureAssignment{})};
  SearchResult result;
  result.running_best = beam.front();

  auto record = [&](std::size_t stage) {
    SearchStage s;
    s.stage = stage;
    s.candidates = beam;
    s.best_gamma = beam.front().gamma;
    s.best_mean_lambda = beam.front().mean_lambda;
    for (const auto& c : beam)
      if (objective.better(c.mean_lambda, s.best_mean_lambda)) s.best_mean_lambda = c.mean_lambda;
    if (ranks_before(beam.front(), result.running_best)) result.running_best = beam.front();
    s.running_best_gamma = result.running_best.gamma;
    result.trace.stages.push_back(std::move(s));
  };

  record(0);
  const std::size_t depth = config.depth(T.width());
  for (std::size_t stage = 1; stage <= depth; ++stage) {
    auto extensions = expand(beam, config.value_domains, scorer);
    if (extensions.empty()) break;
    beam = prune(std::move(extensions), config.zeta);
    record(stage);
  }

  result.selected = beam;
  if (std::find_if(beam.begin(), beam.end(), [&](const Candidate& c) {
        return c.assignment == result.running_best.assignment;
      }) == beam.end())
    result.selected.push_back(result.running_best);
  return result;
}

struct FeatureReportEntry {
  std::size_t feature = 0;
  double value = 0.0;
  double gamma = 0.0;
  double gamma_delta = 0.0;  // gamma minus the empty assignment's gamma; negative allowed
  std::vector<double> lambda_per_label;
  std::vector<double> upsilon_per_label;
};

/// All single-feature assignments ranked by gamma; the best k.
template <Predictor P, SensitivitySource S>
std::vector<FeatureReportEntry> top_feature_report(const P& model, const ReferenceSet& T,
                                                   const SearchConfig& config, const Objective& objective,
                                                   const S& sensitivity, std::size_t k) {
  if (k < 1) throw ConfigError("report size k must be >= 1");
  config.validate(T.width());
  const CandidateScorer<P, S> scorer{model, T, sensitivity, config.omega, objective};
  const Candidate empty = scorer(FeatureAssignment{});
  auto ranked = prune(expand({empty}, config.value_domains, scorer), k);
  std::vector<FeatureReportEntry> out;
  for (const auto& c : ranked) {
    out.push_back({c.assignment[0].feature, c.assignment[0].value, c.gamma, c.gamma - empty.gamma,
                   c.lambda_per_label, c.upsilon_per_label});
  }
  return out;
}

inline constexpr int kReportSchemaVersion = 1;

/// stage,candidate_rank,gamma,mean_lambda,assignment
inline void write_trace_csv(std::ostream& out, const SearchTrace& trace,
                            const std::vector<std::string>& feature_names = {}) {
  out << "# schema_version: " << kReportSchemaVersion << '\n';
  out << "stage,candidate_rank,gamma,mean_lambda,assignment\n";
  for (const auto& s : trace.stages) {
    for (std::size_t r = 0; r < s.candidates.size(); ++r) {
      const auto& c = s.candidates[r];
      out << s.stage << ',' << r << ',' << format_double(c.gamma) << ',' << format_double(c.mean_lambda) << ','
          << csv_field(format_assignment(c.assignment, feature_names)) << '\n';
    }
  }
}

}  // namespace dsopt
