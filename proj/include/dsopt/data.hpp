#pragma once

// Tabular multi-label datasets: CSV ingestion and export, seeded splits,
// value domains for the optimizers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dsopt/assignment.hpp"
#include "dsopt/errors.hpp"
#include "dsopt/format.hpp"
#include "dsopt/matrix.hpp"
#include "dsopt/rng.hpp"

namespace dsopt {

class MissingFileError : public DataError {
public:
  using DataError::DataError;
};
class NonBinaryLabelError : public DataError {
public:
  using DataError::DataError;
};
class RaggedRowError : public DataError {
public:
  using DataError::DataError;
};
class MissingCellError : public DataError {
public:
  using DataError::DataError;
};

enum class FeatureKind { Categorical, Continuous };

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  std::vector<double> domain;                // sorted ascending, unique
  std::vector<std::string> raw_categories;  // categorical only; index == code

  friend bool operator==(const FeatureMeta&, const FeatureMeta&) = default;
};

struct Dataset {
  Matrix X;  // m x n
  Matrix Y;  // m x L, entries in {0, 1}
  std::vector<FeatureMeta> features;
  std::vector<std::string> label_names;

  std::size_t rows() const noexcept { return X.rows(); }
  std::size_t feature_count() const noexcept { return X.cols(); }
  std::size_t label_count() const noexcept { return Y.cols(); }

  ValueDomains domains() const {
    ValueDomains d;
    for (const auto& f : features) d.push_back(f.domain);
    return d;
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    for (const auto& f : features) names.push_back(f.name);
    return names;
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    return {X.select_rows(rows), Y.select_rows(rows), features, label_names};
  }
};

/// Linear-interpolation quantiles at 0, 25, 50, 75, 100 percent, deduplicated.
inline std::vector<double> quantile_grid(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  std::vector<double> grid;
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    grid.push_back(frac == 0.0 ? values[lo] : values[lo] + frac * (values[hi] - values[lo]));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace detail {

// One CSV record; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace detail

/// Parses a header-first CSV. Named label columns must hold 0/1; every other
/// column becomes a feature: numeric columns are Continuous with a quantile
/// value grid, anything else is Categorical with codes in order of first
/// appearance. Locations in errors are 1-based file lines.
inline Dataset parse_csv(std::istream& in, const std::vector<std::string>& label_columns,
                         const std::string& source = "<csv>") {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file, header row expected");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_record(line);

  std::vector<std::size_t> label_idx;
  for (const auto& name : label_columns) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(source + ": label column '" + name + "' not in header");
    label_idx.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  if (label_idx.empty()) throw DataError(source + ": at least one label column is required");
  std::vector<std::size_t> feature_idx;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (std::find(label_idx.begin(), label_idx.end(), c) == label_idx.end()) feature_idx.push_back(c);
  if (feature_idx.empty()) throw DataError(source + ": no feature columns");

  std::vector<std::vector<std::string>> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto rec = detail::split_csv_record(line);
    if (rec.size() != header.size())
      throw RaggedRowError(source + ":" + std::to_string(line_no) + ": " + std::to_string(rec.size()) +
                           " fields, header has " + std::to_string(header.size()));
    for (std::size_t c = 0; c < rec.size(); ++c)
      if (rec[c].empty())
        throw MissingCellError(source + ":" + std::to_string(line_no) + ": missing value in column '" +
                               header[c] + "'");
    cells.push_back(std::move(rec));
  }
  const std::size_t m = cells.size();
  if (m == 0) throw DataError(source + ": no data rows");

  Dataset d;
  d.X = Matrix(m, feature_idx.size());
  d.Y = Matrix(m, label_idx.size());
  d.label_names = label_columns;
  for (std::size_t l = 0; l < label_idx.size(); ++l) {
    for (std::size_t r = 0; r < m; ++r) {
      double v;
      if (!parse_double(cells[r][label_idx[l]], v) || (v != 0.0 && v != 1.0))
        throw NonBinaryLabelError(source + ":" + std::to_string(r + 2) + ": label column '" + header[label_idx[l]] +
                                  "' holds non-binary value '" + cells[r][label_idx[l]] + "'");
      d.Y(r, l) = v;
    }
  }
  for (std::size_t f = 0; f < feature_idx.size(); ++f) {
    const std::size_t c = feature_idx[f];
    FeatureMeta meta;
    meta.name = header[c];
    std::vector<double> numeric(m);
    bool all_numeric = true;
    for (std::size_t r = 0; r < m && all_numeric; ++r) all_numeric = parse_double(cells[r][c], numeric[r]);
    if (all_numeric) {
      meta.kind = FeatureKind::Continuous;
      for (std::size_t r = 0; r < m; ++r) d.X(r, f) = numeric[r];
      meta.domain = quantile_grid(numeric);
    } else {
      meta.kind = FeatureKind::Categorical;
      std::map<std::string, std::size_t> codes;
      for (std::size_t r = 0; r < m; ++r) {
        auto [it, inserted] = codes.try_emplace(cells[r][c], meta.raw_categories.size());
        if (inserted) meta.raw_categories.push_back(cells[r][c]);
        d.X(r, f) = static_cast<double>(it->second);
      }
      meta.domain.resize(meta.raw_categories.size());
      std::iota(meta.domain.begin(), meta.domain.end(), 0.0);
    }
    d.features.push_back(std::move(meta));
  }
  return d;
}

inline Dataset load_csv(const std::string& path, const std::vector<std::string>& label_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open data file '" + path + "'");
  return parse_csv(in, label_columns, path);
}

/// Features then labels; categorical cells as their raw text.
inline void write_csv(std::ostream& out, const Dataset& d) {
  for (std::size_t f = 0; f < d.features.size(); ++f) out << (f ? "," : "") << csv_field(d.features[f].name);
  for (const auto& name : d.label_names) out << ',' << csv_field(name);
  out << '\n';
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t f = 0; f < d.features.size(); ++f) {
      if (f) out << ',';
      const auto& meta = d.features[f];
      const double v = d.X(r, f);
      if (meta.kind == FeatureKind::Categorical && !meta.raw_categories.empty())
        out << csv_field(meta.raw_categories.at(static_cast<std::size_t>(v)));
      else
        out << format_double(v);
    }
    for (std::size_t l = 0; l < d.label_count(); ++l) out << ',' << (d.Y(r, l) != 0.0 ? '1' : '0');
    out << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, d);
}

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Seeded shuffle split; test size is round(m * test_fraction), at least 1.
/// With stratify_label set, positives and negatives of that label are split
/// separately.
inline Split split(const Dataset& d, double test_fraction, std::uint64_t seed,
                   std::optional<std::size_t> stratify_label = std::nullopt) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  const std::size_t m = d.rows();
  Rng rng = make_rng(seed, "split");
  std::vector<std::size_t> train_rows, test_rows;
  auto take = [&](std::vector<std::size_t> rows) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  };
  std::vector<std::size_t> all(m);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (stratify_label) {
    if (*stratify_label >= d.label_count()) throw ConfigError("stratify label out of range");
    std::vector<std::size_t> pos, neg;
    for (std::size_t r : all) (d.Y(r, *stratify_label) != 0.0 ? pos : neg).push_back(r);
    take(std::move(pos));
    take(std::move(neg));
  } else {
    take(std::move(all));
  }
  if (test_rows.empty() && !train_rows.empty()) {
    test_rows.push_back(train_rows.back());
    train_rows.pop_back();
  }
  if (train_rows.size() < 2 || test_rows.empty())
    throw DataError("split of " + std::to_string(m) + " rows leaves train " + std::to_string(train_rows.size()) +
                    " / test " + std::to_string(test_rows.size()));
  return {d.subset(train_rows), d.subset(test_rows), std::move(train_rows), std::move(test_rows)};
}

/// Per-label positive fraction.
inline std::vector<double> imbalance_report(const Dataset& d) { return column_means(d.Y); }

}  // namespace dsopt
