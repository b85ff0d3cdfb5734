#pragma once

// Pipeline commands behind the dsopt executable. Each command reads a
// RunConfig, works from files in out_dir and writes its reports there.
//
//   generate    synthetic data.csv + ground_truth.json
//   train       model_m.json, metrics_m.json, split.json
//   distill     ds_model.json, ds_fidelity.json
//   optimize    sn_report.json, trace_search.csv, top_features.csv
//   baseline    baseline_report.json, trace_baseline.csv
//   compare     comparison.csv
//   sweep-omega sweep_omega.csv

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dsopt/assignment.hpp"
#include "dsopt/baseline.hpp"
#include "dsopt/data.hpp"
#include "dsopt/errors.hpp"
#include "dsopt/format.hpp"
#include "dsopt/model_io.hpp"
#include "dsopt/nn.hpp"
#include "dsopt/rng.hpp"
#include "dsopt/scaled_network.hpp"
#include "dsopt/search.hpp"
#include "dsopt/sensitivity.hpp"
#include "dsopt/surrogate.hpp"
#include "dsopt/synthetic.hpp"

namespace dsopt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr std::size_t kDefaultTrajectoryDepth = 10;

inline std::vector<double> default_omega_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 9; ++k) g.push_back(k / 10.0);
  return g;
}

struct RunConfig {
  // data
  std::string csv;
  std::vector<std::string> labels;
  double test_fraction = 0.1;
  std::optional<std::size_t> stratify_label;

  std::uint64_t seed = 0;
  std::string out_dir = "out";

  TrainConfig model;  // M

  // surrogate
  std::size_t ds_samples = 5000;
  std::optional<std::size_t> ds_max_arity;  // default: n
  double ds_holdout_fraction = 0.2;
  TrainConfig ds = [] {
    TrainConfig c;
    c.loss = Loss::MSE;
    c.hidden_dims = {64, 32};
    return c;
  }();

  // search
  double omega = 0.6;
  std::size_t zeta = 5;
  std::optional<std::size_t> max_depth;  // default: min(n, 10)
  SensitivityMode mode = SensitivityMode::Oracle;
  std::size_t top_k = 10;

  // objective
  Direction direction = Direction::MinimizeLabels;
  std::vector<std::string> objective_labels;  // empty: all

  // baseline
  double budget = kDefaultEnumerationBudget;
  std::optional<std::size_t> baseline_max_arity;  // default: n
  std::vector<std::string> feature_order;         // default: column order

  std::vector<double> sweep_omegas = default_omega_grid();

  SyntheticSpec synthetic;

  void validate() const {
    if (!(omega >= 0.0 && omega <= 1.0)) throw ConfigError("omega must lie in [0, 1], got " + format_double(omega));
    if (zeta < 1) throw ConfigError("zeta must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("data.test_fraction must lie in (0, 1)");
    if (!(ds_holdout_fraction > 0.0 && ds_holdout_fraction < 1.0))
      throw ConfigError("surrogate.holdout_fraction must lie in (0, 1)");
    if (ds_samples < 2) throw ConfigError("surrogate.samples must be >= 2");
    if (top_k < 1) throw ConfigError("search.top_k must be >= 1");
    if (!(budget > 0.0)) throw ConfigError("baseline.budget must be positive");
    for (double w : sweep_omegas)
      if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("sweep.omegas entries must lie in [0, 1]");
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  }

  /// Checks the inputs a data-consuming command depends on.
  void require_data() const {
    if (csv.empty()) throw ConfigError("data.csv is not set");
    if (!fs::exists(csv)) throw ConfigError("data.csv '" + csv + "' does not exist");
    if (labels.empty()) throw ConfigError("data.labels is empty");
  }

  fs::path out(const std::string& name) const { return fs::path(out_dir) / name; }
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read(j, key, v, where);
  out = v;
}

inline void read_train(const json& j, TrainConfig& cfg, const std::string& where) {
  check_keys(j, {"hidden", "epochs", "learning_rate", "batch_size", "positive_weight"}, where);
  read(j, "hidden", cfg.hidden_dims, where);
  read(j, "epochs", cfg.epochs, where);
  read(j, "learning_rate", cfg.learning_rate, where);
  read(j, "batch_size", cfg.batch_size, where);
  read(j, "positive_weight", cfg.positive_weight, where);
}

inline std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

}  // namespace detail

inline SensitivityMode parse_mode(const std::string& s) {
  if (s == "oracle") return SensitivityMode::Oracle;
  if (s == "surrogate") return SensitivityMode::Surrogate;
  throw ConfigError("mode must be 'oracle' or 'surrogate', got '" + s + "'");
}

inline const char* to_string(SensitivityMode m) { return m == SensitivityMode::Oracle ? "oracle" : "surrogate"; }

/// Builds a RunConfig from a parsed config document. Relative paths are
/// taken relative to base_dir.
inline RunConfig parse_config(const json& j, const fs::path& base_dir = ".") {
  using detail::read;
  RunConfig c;
  detail::check_keys(j, {"data", "seed", "out_dir", "model", "surrogate", "search", "objective", "baseline", "sweep",
                         "synthetic"},
                     "config");
  read(j, "seed", c.seed, "config");
  read(j, "out_dir", c.out_dir, "config");
  c.out_dir = detail::resolve(c.out_dir, base_dir);
  if (j.contains("data")) {
    const auto& d = j["data"];
    detail::check_keys(d, {"csv", "labels", "test_fraction", "stratify_label"}, "data");
    read(d, "csv", c.csv, "data");
    c.csv = detail::resolve(c.csv, base_dir);
    read(d, "labels", c.labels, "data");
    read(d, "test_fraction", c.test_fraction, "data");
    read(d, "stratify_label", c.stratify_label, "data");
  }
  if (j.contains("model")) detail::read_train(j["model"], c.model, "model");
  if (j.contains("surrogate")) {
    const auto& s = j["surrogate"];
    detail::check_keys(s, {"samples", "max_arity", "holdout_fraction", "train"}, "surrogate");
    read(s, "samples", c.ds_samples, "surrogate");
    read(s, "max_arity", c.ds_max_arity, "surrogate");
    read(s, "holdout_fraction", c.ds_holdout_fraction, "surrogate");
    if (s.contains("train")) detail::read_train(s["train"], c.ds, "surrogate.train");
  }
  if (j.contains("search")) {
    const auto& s = j["search"];
    detail::check_keys(s, {"omega", "zeta", "max_depth", "mode", "top_k"}, "search");
    read(s, "omega", c.omega, "search");
    read(s, "zeta", c.zeta, "search");
    read(s, "max_depth", c.max_depth, "search");
    read(s, "top_k", c.top_k, "search");
    std::string mode = to_string(c.mode);
    read(s, "mode", mode, "search");
    c.mode = parse_mode(mode);
  }
  if (j.contains("objective")) {
    const auto& o = j["objective"];
    detail::check_keys(o, {"direction", "labels"}, "objective");
    std::string dir = "minimize";
    read(o, "direction", dir, "objective");
    if (dir == "minimize") c.direction = Direction::MinimizeLabels;
    else if (dir == "maximize") c.direction = Direction::MaximizeLabels;
    else throw ConfigError("objective.direction must be 'minimize' or 'maximize'");
    read(o, "labels", c.objective_labels, "objective");
  }
  if (j.contains("baseline")) {
    const auto& b = j["baseline"];
    detail::check_keys(b, {"budget", "max_arity", "feature_order"}, "baseline");
    read(b, "budget", c.budget, "baseline");
    read(b, "max_arity", c.baseline_max_arity, "baseline");
    read(b, "feature_order", c.feature_order, "baseline");
  }
  if (j.contains("sweep")) {
    detail::check_keys(j["sweep"], {"omegas"}, "sweep");
    read(j["sweep"], "omegas", c.sweep_omegas, "sweep");
  }
  if (j.contains("synthetic")) {
    const auto& s = j["synthetic"];
    detail::check_keys(s,
                       {"n_features", "n_samples", "label_count", "levels", "noise_level", "positive_rate",
                        "interaction_terms"},
                       "synthetic");
    read(s, "n_features", c.synthetic.n_features, "synthetic");
    read(s, "n_samples", c.synthetic.n_samples, "synthetic");
    read(s, "label_count", c.synthetic.label_count, "synthetic");
    read(s, "levels", c.synthetic.levels, "synthetic");
    read(s, "noise_level", c.synthetic.noise_level, "synthetic");
    read(s, "positive_rate", c.synthetic.positive_rate, "synthetic");
    if (s.contains("interaction_terms")) {
      for (const auto& t : s["interaction_terms"]) {
        detail::check_keys(t, {"first", "second", "weight"}, "synthetic.interaction_terms");
        InteractionTerm term;
        read(t, "first", term.first, "synthetic.interaction_terms");
        read(t, "second", term.second, "synthetic.interaction_terms");
        read(t, "weight", term.weight, "synthetic.interaction_terms");
        c.synthetic.interaction_terms.push_back(term);
      }
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return parse_config(j, fs::path(path).parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// File helpers

namespace detail {

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path, const std::string& produced_by) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing '" + path.string() + "'; run '" + produced_by + "' first");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline json domains_to_json(const ValueDomains& d) {
  json out = json::array();
  for (const auto& dom : d) out.push_back(dom);
  return out;
}

}  // namespace detail

/// Everything the downstream commands need from a trained M: the model, the
/// reference set (train split), the value grid and naming.
struct Workspace {
  ScaledNetwork model;
  Dataset data;
  ReferenceSet reference;
  ValueDomains domains;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;

  std::size_t n() const { return reference.width(); }
};

inline Workspace load_workspace(const RunConfig& cfg) {
  cfg.require_data();
  Workspace w;
  json header;
  w.model = load_model(cfg.out("model_m.json").string(), &header);
  w.data = load_csv(cfg.csv, cfg.labels);
  const json manifest = detail::read_json(cfg.out("split.json"), "train");
  std::vector<std::size_t> train_rows;
  try {
    train_rows = manifest.at("train_rows").get<std::vector<std::size_t>>();
    w.domains = header.at("value_domains").get<ValueDomains>();
    w.feature_names = header.at("feature_names").get<std::vector<std::string>>();
    w.label_names = header.at("label_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model header or split manifest: ") + e.what());
  }
  for (std::size_t r : train_rows)
    if (r >= w.data.rows()) throw DataError("split manifest row " + std::to_string(r) + " beyond the data");
  if (w.feature_names != w.data.feature_names())
    throw DataError("model features do not match the columns of '" + cfg.csv + "'");
  if (w.label_names != w.data.label_names) throw DataError("model labels do not match data.labels");
  if (w.model.input_dim() != w.data.features.size() || w.model.output_dim() != w.data.label_count())
    throw DataError("model shape does not match the data");
  w.reference = ReferenceSet(w.data.X.select_rows(train_rows), ReferenceSource::TrainSplit, w.domains);
  return w;
}

inline Objective make_objective(const RunConfig& cfg, const std::vector<std::string>& label_names) {
  Objective o{cfg.direction, {}};
  for (const auto& name : cfg.objective_labels) {
    auto it = std::find(label_names.begin(), label_names.end(), name);
    if (it == label_names.end()) throw ConfigError("objective label '" + name + "' is not a label column");
    o.label_subset.push_back(static_cast<std::size_t>(it - label_names.begin()));
  }
  return o;
}

inline SearchConfig make_search_config(const RunConfig& cfg, const Workspace& w) {
  SearchConfig s;
  s.omega = cfg.omega;
  s.zeta = cfg.zeta;
  s.max_depth = cfg.max_depth.value_or(std::min(w.n(), kDefaultTrajectoryDepth));
  s.mode = cfg.mode;
  s.value_domains = w.domains;
  s.validate(w.n());
  return s;
}

/// Assignment with feature names and, for categorical features, raw category text.
inline json assignment_json(const FeatureAssignment& a, const Workspace& w) {
  json out = json::array();
  for (const auto& f : a) {
    json e{{"feature", w.feature_names[f.feature]}, {"index", f.feature}, {"value", f.value}};
    const auto& meta = w.data.features[f.feature];
    if (meta.kind == FeatureKind::Categorical && !meta.raw_categories.empty())
      e["category"] = meta.raw_categories.at(static_cast<std::size_t>(f.value));
    out.push_back(std::move(e));
  }
  return out;
}

inline json per_label_json(const std::vector<double>& v, const std::vector<std::string>& names) {
  json out = json::object();
  for (std::size_t l = 0; l < v.size(); ++l) out[names[l]] = v[l];
  return out;
}

// ---------------------------------------------------------------------------
// Commands

inline void cmd_generate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  SyntheticSpec spec = cfg.synthetic;
  spec.seed = derive_seed(cfg.seed, "generate");
  const auto s = generate_synthetic(spec);
  std::ostringstream csv;
  write_csv(csv, s.dataset);
  detail::write_file(cfg.out("data.csv"), csv.str());
  detail::write_json(cfg.out("ground_truth.json"), dsopt::to_json(s.truth));
  log << "generate: " << s.dataset.rows() << " rows, " << s.dataset.features.size() << " features, "
      << s.dataset.label_count() << " labels -> " << cfg.out("data.csv").string() << '\n';
}

inline void cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  cfg.require_data();
  const Dataset d = load_csv(cfg.csv, cfg.labels);
  const Split s = split(d, cfg.test_fraction, derive_seed(cfg.seed, "split"), cfg.stratify_label);

  // Continuous grids come from the training column only.
  ValueDomains domains = d.domains();
  for (std::size_t j = 0; j < d.features.size(); ++j)
    if (d.features[j].kind == FeatureKind::Continuous) domains[j] = quantile_grid(s.train.X.column(j));

  TrainConfig tc = cfg.model;
  tc.seed = derive_seed(cfg.seed, "model_m");
  tc.loss = Loss::BCE;
  MinMaxScaler scaler = MinMaxScaler::fit(s.train.X);
  auto [net, report] = fit(scaler.transform(s.train.X), s.train.Y, tc, ModelKind::Classifier);
  const ScaledNetwork model{std::move(scaler), std::move(net)};

  json header{{"role", "classifier"},
              {"feature_names", d.feature_names()},
              {"label_names", d.label_names},
              {"value_domains", detail::domains_to_json(domains)},
              {"seed", cfg.seed}};
  detail::write_file(cfg.out("model_m.json"), dsopt::to_json(model, header).dump(1) + "\n");

  const Matrix p_train = model.predict(s.train.X), p_test = model.predict(s.test.X);
  json labels = json::array();
  for (std::size_t l = 0; l < d.label_count(); ++l) {
    auto accuracy = [&](const Matrix& p, const Matrix& y) {
      std::size_t hit = 0;
      for (std::size_t r = 0; r < y.rows(); ++r) hit += ((p(r, l) >= 0.5) == (y(r, l) != 0.0));
      return static_cast<double>(hit) / static_cast<double>(y.rows());
    };
    labels.push_back({{"name", d.label_names[l]},
                      {"train_accuracy", accuracy(p_train, s.train.Y)},
                      {"test_accuracy", accuracy(p_test, s.test.Y)},
                      {"positive_rate", imbalance_report(d)[l]}});
  }
  const json metrics{{"schema_version", kReportSchemaVersion},
                     {"labels", labels},
                     {"train_loss", bce_loss(p_train, s.train.Y)},
                     {"test_loss", bce_loss(p_test, s.test.Y)},
                     {"constant_half_loss", std::log(2.0)},
                     {"loss_curve", report.epoch_loss}};
  detail::write_json(cfg.out("metrics_m.json"), metrics);
  detail::write_json(cfg.out("split.json"), {{"schema_version", kReportSchemaVersion},
                                             {"test_fraction", cfg.test_fraction},
                                             {"seed", cfg.seed},
                                             {"train_rows", s.train_rows},
                                             {"test_rows", s.test_rows}});
  log << "train: " << s.train.rows() << " train / " << s.test.rows() << " test rows, final loss "
      << format_double(report.final_loss) << '\n';
}

inline void cmd_distill(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Workspace w = load_workspace(cfg);
  const std::size_t arity = cfg.ds_max_arity.value_or(w.n());
  const auto dset = build_distillation_set(w.model, w.reference, w.domains, cfg.ds_samples, arity,
                                           derive_seed(cfg.seed, "distill"));
  const auto holdout = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.ds_samples) * cfg.ds_holdout_fraction));
  if (holdout < 1 || holdout >= cfg.ds_samples) throw ConfigError("surrogate holdout leaves an empty side");
  const auto [train_set, test_set] = dset.split_at(cfg.ds_samples - holdout);

  TrainConfig tc = cfg.ds;
  tc.seed = derive_seed(cfg.seed, "model_ds");
  tc.loss = Loss::MSE;
  auto [ds, report] = train_ds(train_set, tc);

  const Matrix p_test = ds.predict(test_set.inputs);
  std::vector<double> per_label(test_set.targets.cols());
  for (std::size_t l = 0; l < per_label.size(); ++l) {
    Matrix p(p_test.rows(), 1), t(p_test.rows(), 1);
    for (std::size_t r = 0; r < p_test.rows(); ++r) {
      p(r, 0) = p_test(r, l);
      t(r, 0) = test_set.targets(r, l);
    }
    per_label[l] = r_squared(p, t);
  }
  const double r2 = r_squared(p_test, test_set.targets);
  json header{{"role", "sensitivity_surrogate"}, {"encoding_version", kEncodingVersion}, {"seed", cfg.seed}};
  detail::write_file(cfg.out("ds_model.json"), dsopt::to_json(ds, header).dump(1) + "\n");
  detail::write_json(cfg.out("ds_fidelity.json"),
                     {{"schema_version", kReportSchemaVersion},
                      {"samples", cfg.ds_samples},
                      {"max_arity", arity},
                      {"train_samples", train_set.size()},
                      {"holdout_samples", test_set.size()},
                      {"r_squared", r2},
                      {"r_squared_per_label", per_label_json(per_label, w.label_names)},
                      {"train_r_squared", r_squared(ds.predict(train_set.inputs), train_set.targets)},
                      {"final_loss", report.final_loss}});
  log << "distill: held-out R^2 " << format_double(r2) << " on " << test_set.size() << " assignments\n";
}

namespace detail {

template <typename Fn>
auto with_sensitivity(const RunConfig& cfg, const Workspace& w, Fn&& fn) {
  if (cfg.mode == SensitivityMode::Surrogate) {
    const ScaledNetwork ds = load_model(cfg.out("ds_model.json").string());
    return fn(SurrogateSensitivity(ds, w.reference));
  }
  return fn(OracleSensitivity<ScaledNetwork>(w.model, w.reference));
}

inline json candidate_json(const Candidate& c, const Workspace& w) {
  return {{"assignment", assignment_json(c.assignment, w)},
          {"gamma", c.gamma},
          {"mean_lambda", c.mean_lambda},
          {"lambda", per_label_json(c.lambda_per_label, w.label_names)},
          {"upsilon", per_label_json(c.upsilon_per_label, w.label_names)}};
}

}  // namespace detail

inline void cmd_optimize(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Workspace w = load_workspace(cfg);
  const SearchConfig sc = make_search_config(cfg, w);
  const Objective obj = make_objective(cfg, w.label_names);
  const auto [result, top] = detail::with_sensitivity(cfg, w, [&](const auto& sens) {
    return std::pair{run_search(w.model, w.reference, sc, obj, sens),
                     top_feature_report(w.model, w.reference, sc, obj, sens, cfg.top_k)};
  });

  json selected = json::array();
  for (std::size_t i = 0; i < result.selected.size(); ++i) {
    json c = detail::candidate_json(result.selected[i], w);
    c["rank"] = i;
    selected.push_back(std::move(c));
  }
  json stages = json::array();
  for (const auto& s : result.trace.stages)
    stages.push_back({{"stage", s.stage},
                      {"best_gamma", s.best_gamma},
                      {"best_mean_lambda", s.best_mean_lambda},
                      {"running_best_gamma", s.running_best_gamma}});
  detail::write_json(cfg.out("sn_report.json"),
                     {{"schema_version", kReportSchemaVersion},
                      {"omega", sc.omega},
                      {"zeta", sc.zeta},
                      {"max_depth", *sc.max_depth},
                      {"mode", to_string(sc.mode)},
                      {"objective", cfg.direction == Direction::MinimizeLabels ? "minimize" : "maximize"},
                      {"selected", selected},
                      {"running_best", detail::candidate_json(result.running_best, w)},
                      {"stages", stages}});

  std::ostringstream trace;
  write_trace_csv(trace, result.trace, w.feature_names);
  detail::write_file(cfg.out("trace_search.csv"), trace.str());

  std::ostringstream tf;
  tf << "# schema_version: " << kReportSchemaVersion << '\n' << "rank,feature,value,gamma,gamma_delta";
  for (const auto& l : w.label_names) tf << ',' << csv_field("lambda_" + l);
  for (const auto& l : w.label_names) tf << ',' << csv_field("upsilon_" + l);
  tf << '\n';
  for (std::size_t i = 0; i < top.size(); ++i) {
    const auto& e = top[i];
    tf << i << ',' << csv_field(w.feature_names[e.feature]) << ',' << format_double(e.value) << ','
       << format_double(e.gamma) << ',' << format_double(e.gamma_delta);
    for (double v : e.lambda_per_label) tf << ',' << format_double(v);
    for (double v : e.upsilon_per_label) tf << ',' << format_double(v);
    tf << '\n';
  }
  detail::write_file(cfg.out("top_features.csv"), tf.str());
  log << "optimize: best gamma " << format_double(result.running_best.gamma) << " at "
      << format_assignment(result.running_best.assignment, w.feature_names) << '\n';
}

inline void cmd_baseline(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Workspace w = load_workspace(cfg);
  const Objective obj = make_objective(cfg, w.label_names);
  const std::size_t arity = std::min(cfg.baseline_max_arity.value_or(w.n()), w.n());

  std::vector<std::size_t> order;
  for (const auto& name : cfg.feature_order) {
    auto it = std::find(w.feature_names.begin(), w.feature_names.end(), name);
    if (it == w.feature_names.end()) throw ConfigError("baseline.feature_order names unknown feature '" + name + "'");
    order.push_back(static_cast<std::size_t>(it - w.feature_names.begin()));
  }

  auto result_json = [&](const BaselineResult& r) {
    return json{{"best_assignment", assignment_json(r.best_assignment, w)},
                {"best_objective", r.best_objective},
                {"evaluations", r.evaluations}};
  };

  std::ostringstream trace;
  json report{{"schema_version", kReportSchemaVersion},
              {"objective", cfg.direction == Direction::MinimizeLabels ? "minimize" : "maximize"}};
  const double size = enumeration_size(w.domains, arity);
  try {
    const auto bf = brute_force(w.model, w.reference, w.domains, obj, arity, cfg.budget);
    report["brute_force"] = result_json(bf);
    report["brute_force"]["expected_evaluations"] = size;
    report["brute_force"]["max_arity"] = arity;
    write_baseline_trace_csv(trace, "brute_force", bf, w.feature_names, true);
    log << "baseline: brute force best " << format_double(bf.best_objective) << " after " << bf.evaluations
        << " evaluations\n";
  } catch (const BudgetExceededError& e) {
    report["brute_force"] = {{"status", "budget_exceeded"},
                             {"enumeration_size", e.size()},
                             {"budget", cfg.budget},
                             {"max_arity", arity}};
    trace << "# schema_version: " << kReportSchemaVersion << '\n'
          << "method,stage,candidate_rank,gamma,mean_lambda,assignment\n";
    log << "baseline: brute force skipped, " << e.what() << '\n';
  }
  const auto seq = sequential_dp(w.model, w.reference, w.domains, obj, order);
  report["sequential"] = result_json(seq);
  json used = json::array();
  if (order.empty())
    for (std::size_t j = 0; j < w.n(); ++j) used.push_back(w.feature_names[j]);
  else
    for (std::size_t j : order) used.push_back(w.feature_names[j]);
  report["sequential"]["feature_order"] = used;
  write_baseline_trace_csv(trace, "sequential", seq, w.feature_names, false);
  detail::write_json(cfg.out("baseline_report.json"), report);
  detail::write_file(cfg.out("trace_baseline.csv"), trace.str());
  log << "baseline: sequential best " << format_double(seq.best_objective) << " after " << seq.evaluations
      << " evaluations\n";
}

namespace detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const std::string& source) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(source + ": column '" + name + "' missing");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable read_csv_table(const fs::path& path, const std::string& produced_by) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing '" + path.string() + "'; run '" + produced_by + "' first");
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto rec = dsopt::detail::split_csv_record(line);
    if (t.header.empty()) {
      t.header = std::move(rec);
    } else {
      if (rec.size() != t.header.size()) throw DataError(path.string() + ": ragged row");
      t.rows.push_back(std::move(rec));
    }
  }
  if (t.header.empty()) throw DataError(path.string() + ": no header");
  return t;
}

}  // namespace detail

/// One row per (stage, method) with that method's best mean lambda at the
/// stage, copied verbatim from the source trace.
inline void cmd_compare(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Objective obj{cfg.direction, {}};
  // stage -> method -> (value, source token)
  std::map<std::size_t, std::map<int, std::pair<double, std::string>>> best;
  const std::vector<std::string> methods{"search", "brute_force", "sequential"};

  auto offer = [&](std::size_t stage, int method, const std::string& token, const std::string& src) {
    double v;
    if (!parse_double(token, v)) throw DataError(src + ": bad mean_lambda '" + token + "'");
    auto& slot = best[stage];
    auto it = slot.find(method);
    if (it == slot.end() || obj.better(v, it->second.first)) slot[method] = {v, token};
  };
  auto stage_of = [](const std::string& s, const std::string& src) {
    double v;
    if (!parse_double(s, v) || v < 0 || v != std::floor(v)) throw DataError(src + ": bad stage '" + s + "'");
    return static_cast<std::size_t>(v);
  };

  const auto search_path = cfg.out("trace_search.csv");
  const auto search = detail::read_csv_table(search_path, "optimize");
  const std::size_t s_stage = search.column("stage", search_path.string());
  const std::size_t s_lambda = search.column("mean_lambda", search_path.string());
  for (const auto& r : search.rows) offer(stage_of(r[s_stage], search_path.string()), 0, r[s_lambda], search_path.string());

  const auto base_path = cfg.out("trace_baseline.csv");
  const auto base = detail::read_csv_table(base_path, "baseline");
  const std::size_t b_method = base.column("method", base_path.string());
  const std::size_t b_stage = base.column("stage", base_path.string());
  const std::size_t b_lambda = base.column("mean_lambda", base_path.string());
  for (const auto& r : base.rows) {
    auto it = std::find(methods.begin() + 1, methods.end(), r[b_method]);
    if (it == methods.end()) throw DataError(base_path.string() + ": unknown method '" + r[b_method] + "'");
    offer(stage_of(r[b_stage], base_path.string()), static_cast<int>(it - methods.begin()), r[b_lambda],
          base_path.string());
  }

  std::ostringstream out;
  out << "# schema_version: " << kReportSchemaVersion << '\n' << "stage,method,best_mean_lambda\n";
  std::size_t rows = 0;
  for (const auto& [stage, per_method] : best)
    for (const auto& [method, value] : per_method) {
      out << stage << ',' << methods[static_cast<std::size_t>(method)] << ',' << value.second << '\n';
      ++rows;
    }
  detail::write_file(cfg.out("comparison.csv"), out.str());
  log << "compare: " << rows << " rows -> " << cfg.out("comparison.csv").string() << '\n';
}

/// One search per omega; the best mean lambda of the final stage and the
/// running best over all stages.
inline void cmd_sweep_omega(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.sweep_omegas.empty()) throw ConfigError("sweep.omegas is empty");
  const Workspace w = load_workspace(cfg);
  const Objective obj = make_objective(cfg, w.label_names);
  std::ostringstream out;
  out << "# schema_version: " << kReportSchemaVersion << '\n'
      << "omega,final_best_mean_lambda,best_mean_lambda_any_stage,running_best_gamma,running_best_assignment\n";
  detail::with_sensitivity(cfg, w, [&](const auto& sens) {
    for (double omega : cfg.sweep_omegas) {
      RunConfig c = cfg;
      c.omega = omega;
      const SearchConfig sc = make_search_config(c, w);
      const auto r = run_search(w.model, w.reference, sc, obj, sens);
      double any = r.trace.stages.front().best_mean_lambda;
      for (const auto& s : r.trace.stages)
        if (obj.better(s.best_mean_lambda, any)) any = s.best_mean_lambda;
      out << format_double(omega) << ',' << format_double(r.trace.stages.back().best_mean_lambda) << ','
          << format_double(any) << ',' << format_double(r.running_best.gamma) << ','
          << csv_field(format_assignment(r.running_best.assignment, w.feature_names)) << '\n';
    }
    return 0;
  });
  detail::write_file(cfg.out("sweep_omega.csv"), out.str());
  log << "sweep-omega: " << cfg.sweep_omegas.size() << " rows -> " << cfg.out("sweep_omega.csv").string() << '\n';
}

/// Exit status for an exception escaping a command.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return 3;
  if (dynamic_cast<const Error*>(&e)) return 2;
  return 1;
}

}  // namespace dsopt::cli
