#pragma once

// Exact reference optimizers over the same value grid the search uses:
// exhaustive enumeration and a sequential per-feature greedy pass.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dsopt/assignment.hpp"
#include "dsopt/errors.hpp"
#include "dsopt/format.hpp"
#include "dsopt/parallel.hpp"
#include "dsopt/search.hpp"

namespace dsopt {

inline constexpr double kDefaultEnumerationBudget = 1e6;

struct BaselineStage {
  std::size_t stage = 0;  // arity of the assignment
  FeatureAssignment assignment;
  double objective = 0.0;  // mean lambda over the objective labels
};

struct BaselineResult {
  FeatureAssignment best_assignment;
  double best_objective = 0.0;
  std::size_t evaluations = 0;
  std::vector<BaselineStage> trace;
};

/// Number of assignments of arity <= max_arity: sum over arities s of the
/// degree-s elementary symmetric polynomial of the domain sizes.
inline double enumeration_size(const ValueDomains& domains, std::size_t max_arity) {
  std::vector<double> e(domains.size() + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t j = 0; j < domains.size(); ++j)
    for (std::size_t s = j + 1; s >= 1; --s) e[s] += e[s - 1] * static_cast<double>(domains[j].size());
  double total = 0.0;
  for (std::size_t s = 0; s <= std::min(max_arity, domains.size()); ++s) total += e[s];
  return total;
}

namespace detail {

// True when (va, a) beats (vb, b) for this objective, ties going to the
// lexicographically smaller assignment.
inline bool objective_before(const Objective& objective, double va, const FeatureAssignment& a, double vb,
                             const FeatureAssignment& b) {
  if (va != vb) return objective.better(va, vb);
  return tie_break_order(a, b) < 0;
}

inline void for_each_subset(std::size_t n, std::size_t arity, auto&& fn) {
  std::vector<std::size_t> idx(arity);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    fn(idx);
    // rightmost position that can still advance
    std::size_t i = arity;
    while (i > 0 && idx[i - 1] == n - arity + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t k = i; k < arity; ++k) idx[k] = idx[k - 1] + 1;
  }
}

// Calls fn(assignment) for every value tuple over the given features.
inline void for_each_value_tuple(const std::vector<std::size_t>& features, const ValueDomains& domains,
                                 auto&& fn) {
  std::vector<std::size_t> digit(features.size(), 0);
  while (true) {
    std::vector<Fixing> fixings(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) fixings[i] = {features[i], domains[features[i]][digit[i]]};
    fn(FeatureAssignment(std::move(fixings)));
    std::size_t i = features.size();
    while (i-- > 0) {
      if (++digit[i] < domains[features[i]].size()) break;
      digit[i] = 0;
      if (i == 0) return;
    }
    if (features.empty()) return;
  }
}

inline void check_domains(const ValueDomains& domains, std::size_t width) {
  if (domains.size() != width) throw ConfigError("value domains do not match the feature count");
  for (std::size_t j = 0; j < width; ++j)
    if (domains[j].empty()) throw ConfigError("feature " + std::to_string(j) + " has an empty value domain");
}

}  // namespace detail

/// Exact optimum of mean lambda over every assignment of arity <= max_arity.
/// Refuses when the enumeration exceeds the budget.
template <Predictor P>
BaselineResult brute_force(const P& model, const ReferenceSet& T, const ValueDomains& domains,
                           const Objective& objective, std::size_t max_arity,
                           double budget = kDefaultEnumerationBudget) {
  detail::check_domains(domains, T.width());
  max_arity = std::min(max_arity, T.width());
  const double size = enumeration_size(domains, max_arity);
  if (size > budget) throw BudgetExceededError(size, budget);

  std::vector<std::vector<std::size_t>> subsets;
  for (std::size_t s = 0; s <= max_arity; ++s)
    detail::for_each_subset(T.width(), s, [&](const std::vector<std::size_t>& idx) { subsets.push_back(idx); });

  struct Local {
    BaselineStage best;
    std::size_t evaluations = 0;
  };
  std::vector<Local> local(subsets.size());
  const auto labels_of = [&](std::size_t label_count) { return objective.labels(label_count); };
  parallel_for(subsets.size(), [&](std::size_t i) {
    auto& out = local[i];
    bool first = true;
    detail::for_each_value_tuple(subsets[i], domains, [&](FeatureAssignment a) {
      const auto lambda = lambda_of(model, T, a);
      const double value = mean_over(lambda, labels_of(lambda.size()));
      ++out.evaluations;
      if (first || detail::objective_before(objective, value, a, out.best.objective, out.best.assignment)) {
        out.best = {a.size(), std::move(a), value};
        first = false;
      }
    });
  });

  BaselineResult result;
  std::vector<std::optional<BaselineStage>> per_arity(max_arity + 1);
  for (auto& l : local) {
    result.evaluations += l.evaluations;
    auto& slot = per_arity[l.best.stage];
    if (!slot || detail::objective_before(objective, l.best.objective, l.best.assignment, slot->objective,
                                          slot->assignment))
      slot = l.best;
  }
  for (auto& s : per_arity) result.trace.push_back(*s);
  const auto best = std::min_element(result.trace.begin(), result.trace.end(), [&](const auto& a, const auto& b) {
    return detail::objective_before(objective, a.objective, a.assignment, b.objective, b.assignment);
  });
  result.best_assignment = best->assignment;
  result.best_objective = best->objective;
  return result;
}

/// Visits features in order and fixes each to the value that best serves the
/// objective given all earlier fixings. Costs 1 + sum |domain_j| evaluations.
template <Predictor P>
BaselineResult sequential_dp(const P& model, const ReferenceSet& T, const ValueDomains& domains,
                             const Objective& objective, std::vector<std::size_t> feature_order = {}) {
  detail::check_domains(domains, T.width());
  if (feature_order.empty()) {
    feature_order.resize(T.width());
    std::iota(feature_order.begin(), feature_order.end(), std::size_t{0});
  }
  {
    auto sorted = feature_order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != i || sorted.size() != T.width())
        throw ConfigError("feature_order must be a permutation of the features");
  }

  auto evaluate = [&](const FeatureAssignment& a) {
    const auto lambda = lambda_of(model, T, a);
    return mean_over(lambda, objective.labels(lambda.size()));
  };

  BaselineResult result;
  FeatureAssignment current;
  double current_value = evaluate(current);
  result.evaluations = 1;
  result.trace.push_back({0, current, current_value});
  for (std::size_t j : feature_order) {
    std::optional<BaselineStage> step;
    for (double v : domains[j]) {
      FeatureAssignment a = current.with(j, v);
      const double value = evaluate(a);
      ++result.evaluations;
      if (!step || detail::objective_before(objective, value, a, step->objective, step->assignment))
        step = BaselineStage{a.size(), std::move(a), value};
    }
    current = step->assignment;
    result.trace.push_back(*step);
  }
  const auto best = std::min_element(result.trace.begin(), result.trace.end(), [&](const auto& a, const auto& b) {
    return detail::objective_before(objective, a.objective, a.assignment, b.objective, b.assignment);
  });
  result.best_assignment = best->assignment;
  result.best_objective = best->objective;
  return result;
}

/// Exhaustive argmax of gamma over assignments of exactly `arity` fixings,
/// under the same order the beam search prunes with.
template <Predictor P, SensitivitySource S>
Candidate brute_force_gamma(const P& model, const ReferenceSet& T, const ValueDomains& domains, double omega,
                            const Objective& objective, const S& sensitivity, std::size_t arity,
                            double budget = kDefaultEnumerationBudget) {
  detail::check_domains(domains, T.width());
  if (arity > T.width()) throw ConfigError("arity exceeds the feature count");
  const CandidateScorer<P, S> scorer{model, T, sensitivity, omega, objective};
  std::vector<std::vector<std::size_t>> subsets;
  detail::for_each_subset(T.width(), arity, [&](const std::vector<std::size_t>& idx) { subsets.push_back(idx); });
  double size = 0.0;
  for (const auto& s : subsets) {
    double prod = 1.0;
    for (std::size_t j : s) prod *= static_cast<double>(domains[j].size());
    size += prod;
  }
  if (size > budget) throw BudgetExceededError(size, budget);

  std::vector<std::optional<Candidate>> local(subsets.size());
  parallel_for(subsets.size(), [&](std::size_t i) {
    detail::for_each_value_tuple(subsets[i], domains, [&](const FeatureAssignment& a) {
      Candidate c = scorer(a);
      if (!local[i] || ranks_before(c, *local[i])) local[i] = std::move(c);
    });
  });
  std::optional<Candidate> best;
  for (auto& c : local)
    if (!best || ranks_before(*c, *best)) best = std::move(c);
  return *best;
}

/// method,stage,candidate_rank,gamma,mean_lambda,assignment (gamma left empty)
inline void write_baseline_trace_csv(std::ostream& out, const std::string& method, const BaselineResult& r,
                                     const std::vector<std::string>& feature_names = {}, bool header = true) {
  if (header) {
    out << "# schema_version: " << kReportSchemaVersion << '\n';
    out << "method,stage,candidate_rank,gamma,mean_lambda,assignment\n";
  }
  for (const auto& s : r.trace)
    out << method << ',' << s.stage << ",0,," << format_double(s.objective) << ','
        << csv_field(format_assignment(s.assignment, feature_names)) << '\n';
}

}  // namespace dsopt
