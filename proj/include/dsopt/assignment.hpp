#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "dsopt/errors.hpp"
#include "dsopt/format.hpp"
#include "dsopt/matrix.hpp"

namespace dsopt {

/// One feature pinned to one value.
struct Fixing {
  std::size_t feature = 0;
  double value = 0.0;
  friend bool operator==(const Fixing&, const Fixing&) = default;
};

/// Candidate values per feature, each list sorted ascending without duplicates.
using ValueDomains = std::vector<std::vector<double>>;

/// A set of feature-value fixings, kept sorted by feature index.
class FeatureAssignment {
public:
  FeatureAssignment() = default;
  FeatureAssignment(std::initializer_list<Fixing> fixings) : FeatureAssignment(std::vector<Fixing>(fixings)) {}
  explicit FeatureAssignment(std::vector<Fixing> fixings) : fixings_(std::move(fixings)) {
    std::sort(fixings_.begin(), fixings_.end(),
              [](const Fixing& a, const Fixing& b) { return a.feature < b.feature; });
    for (std::size_t i = 1; i < fixings_.size(); ++i)
      if (fixings_[i].feature == fixings_[i - 1].feature)
        throw IndexError("feature " + std::to_string(fixings_[i].feature) + " assigned twice");
  }

  std::size_t size() const noexcept { return fixings_.size(); }
  bool empty() const noexcept { return fixings_.empty(); }
  auto begin() const noexcept { return fixings_.begin(); }
  auto end() const noexcept { return fixings_.end(); }
  const Fixing& operator[](std::size_t i) const noexcept { return fixings_[i]; }
  const std::vector<Fixing>& fixings() const noexcept { return fixings_; }

  bool contains(std::size_t feature) const noexcept {
    return std::any_of(fixings_.begin(), fixings_.end(),
                       [&](const Fixing& f) { return f.feature == feature; });
  }

  /// Copy with one more fixing; the feature must be free.
  FeatureAssignment with(std::size_t feature, double value) const {
    if (contains(feature)) throw IndexError("feature " + std::to_string(feature) + " already assigned");
    FeatureAssignment out = *this;
    auto pos = std::lower_bound(out.fixings_.begin(), out.fixings_.end(), feature,
                                [](const Fixing& f, std::size_t j) { return f.feature < j; });
    out.fixings_.insert(pos, Fixing{feature, value});
    return out;
  }

  /// Tie-break order: feature index sequence first, then value sequence,
  /// both lexicographic ascending.
  friend std::weak_ordering tie_break_order(const FeatureAssignment& a, const FeatureAssignment& b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i)
      if (a[i].feature != b[i].feature)
        return a[i].feature < b[i].feature ? std::weak_ordering::less : std::weak_ordering::greater;
    if (a.size() != b.size())
      return a.size() < b.size() ? std::weak_ordering::less : std::weak_ordering::greater;
    for (std::size_t i = 0; i < n; ++i)
      if (a[i].value != b[i].value)
        return a[i].value < b[i].value ? std::weak_ordering::less : std::weak_ordering::greater;
    return std::weak_ordering::equivalent;
  }

  friend bool operator==(const FeatureAssignment&, const FeatureAssignment&) = default;

private:
  std::vector<Fixing> fixings_;
};

/// "3=1;5=0.25" using feature indices, or names when given.
inline std::string format_assignment(const FeatureAssignment& a,
                                     const std::vector<std::string>& names = {}) {
  std::string out;
  for (const auto& f : a) {
    if (!out.empty()) out += ';';
    out += f.feature < names.size() ? names[f.feature] : std::to_string(f.feature);
    out += '=';
    out += format_double(f.value);
  }
  return out;
}

enum class ReferenceSource { TrainSplit, TestSplit };

/// Empirical reference distribution for sensitivity and partial-assignment
/// predictions. Domains are optional; when present, fixed values are checked
/// against them.
struct ReferenceSet {
  Matrix features;
  ReferenceSource source = ReferenceSource::TrainSplit;
  ValueDomains domains;

  ReferenceSet() = default;
  explicit ReferenceSet(Matrix x, ReferenceSource src = ReferenceSource::TrainSplit, ValueDomains doms = {})
      : features(std::move(x)), source(src), domains(std::move(doms)) {
    if (features.rows() < 2) throw DataError("reference set needs at least 2 rows");
    if (!domains.empty() && domains.size() != features.cols())
      throw ShapeError("reference set domains do not match its width");
  }

  std::size_t rows() const noexcept { return features.rows(); }
  std::size_t width() const noexcept { return features.cols(); }
};

inline void validate_assignment(const FeatureAssignment& a, std::size_t width, const ValueDomains& domains) {
  for (const auto& f : a) {
    if (f.feature >= width)
      throw IndexError("feature index " + std::to_string(f.feature) + " out of range for width " +
                       std::to_string(width));
    if (!domains.empty()) {
      const auto& dom = domains[f.feature];
      if (std::find(dom.begin(), dom.end(), f.value) == dom.end())
        throw DomainError("value " + format_double(f.value) + " not in the domain of feature " +
                          std::to_string(f.feature));
    }
  }
}

/// Copy of T with every fixed column overwritten in all rows.
inline Matrix clone_and_fix(const ReferenceSet& T, const FeatureAssignment& a) {
  validate_assignment(a, T.width(), T.domains);
  Matrix out = T.features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (const auto& f : a) row[f.feature] = f.value;
  }
  return out;
}

}  // namespace dsopt
