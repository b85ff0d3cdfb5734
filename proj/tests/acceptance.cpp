// Acceptance checks AC1-AC9. One PASS/FAIL line each; exits non-zero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "dsopt/baseline.hpp"
#include "dsopt/cli.hpp"
#include "dsopt/data.hpp"
#include "dsopt/nn.hpp"
#include "dsopt/scaled_network.hpp"
#include "dsopt/search.hpp"
#include "dsopt/sensitivity.hpp"
#include "dsopt/surrogate.hpp"
#include "dsopt/synthetic.hpp"

using namespace dsopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(const char* id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s %s: %s | %s | %.2fs (limit %.0fs)%s\n", id, pass ? "PASS" : "FAIL", title, o.detail.c_str(), secs,
              budget_s, in_time ? "" : " over time");
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct LinearModel {
  std::vector<double> coef;
  Matrix predict(const Matrix& x) const {
    Matrix out(x.rows(), 1);
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < coef.size(); ++j) out(r, 0) += coef[j] * x(r, j);
    return out;
  }
};

struct XorLike {
  Matrix predict(const Matrix& x) const {
    Matrix out(x.rows(), 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const bool a = x(r, 0) > 0.5, b = x(r, 1) > 0.5;
      out(r, 0) = !a ? 0.5 : (b ? 0.1 : 0.95);
    }
    return out;
  }
};

struct TrainedSynthetic {
  ScaledNetwork model;
  ReferenceSet T;
  ValueDomains domains;
};

// Generates synthetic data, splits 90/10 and trains M on the training rows.
TrainedSynthetic train_on_synthetic(const SyntheticSpec& spec, std::vector<std::size_t> hidden, std::size_t epochs,
                                    std::uint64_t seed) {
  const auto s = generate_synthetic(spec);
  const Split sp = split(s.dataset, 0.1, derive_seed(seed, "split"));
  TrainConfig tc;
  tc.hidden_dims = std::move(hidden);
  tc.epochs = epochs;
  tc.seed = derive_seed(seed, "model_m");
  MinMaxScaler scaler = MinMaxScaler::fit(sp.train.X);
  auto net = fit(scaler.transform(sp.train.X), sp.train.Y, tc, ModelKind::Classifier).first;
  const ValueDomains domains = s.dataset.domains();
  return {ScaledNetwork{std::move(scaler), std::move(net)}, ReferenceSet(sp.train.X, ReferenceSource::TrainSplit, domains),
          domains};
}

ValueDomains grid(std::size_t n, std::size_t levels) {
  std::vector<double> dom;
  for (std::size_t v = 0; v < levels; ++v) dom.push_back(static_cast<double>(v));
  return ValueDomains(n, dom);
}

Outcome ac1() {
  const std::vector<double> a{1.0, -0.8, 0.6, 0.4, 0.3, 0.1};
  const LinearModel model{a};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(10000, 6);
  for (double& v : X.data()) v = u(rng);
  const ReferenceSet T(X);
  const OracleSensitivity<LinearModel> oracle(model, T);
  double total = 0.0;
  for (double c : a) total += c * c;  // Var(x_q) = 1/12 for every q, so it cancels
  double worst = 0.0;
  for (std::size_t q = 0; q < 6; ++q)
    for (double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double expected = 1.0 - a[q] * a[q] / total;
      worst = std::max(worst, std::abs(oracle.score({{q, v}}).per_label[0] - expected));
    }
  return {worst <= 0.05, "max |error| " + fmt("%.4g", worst) + " over 6 features x 5 values (tol 0.05)"};
}

Outcome ac2() {
  double worst = 0.0;
  for (std::uint64_t c = 0; c < 20; ++c) {
    std::mt19937_64 rng(c);
    const std::size_t n = 2 + c % 6, L = 1 + c % 3, k = 30 + 7 * c;
    Matrix X(k, n), Y(k, L);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : X.data()) v = u(rng);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t l = 0; l < L; ++l) Y(r, l) = X(r, l % n) + 0.3 * X(r, (l + 1) % n) > 0.0 ? 1.0 : 0.0;
    TrainConfig tc;
    tc.hidden_dims = {8};
    tc.epochs = 20;
    tc.seed = c;
    const MLPModel m = fit(X, Y, tc, ModelKind::Classifier).first;
    const ReferenceSet T(X);
    const OracleSensitivity<MLPModel> oracle(m, T);
    for (double v : oracle.score({}).per_label) worst = std::max(worst, std::abs(v - 1.0));
    std::vector<Fixing> full;
    for (std::size_t j = 0; j < n; ++j) full.push_back({j, u(rng)});
    for (double v : oracle.score(FeatureAssignment(full)).per_label) worst = std::max(worst, std::abs(v));
  }
  return {worst <= 1e-12, "max boundary deviation " + fmt("%.3g", worst) + " over 20 trained configs (tol 1e-12)"};
}

Outcome ac3() {
  SyntheticSpec spec;
  spec.n_features = 5;
  spec.n_samples = 400;
  spec.seed = 31;
  const auto ts = train_on_synthetic(spec, {16}, 60, 31);
  const OracleSensitivity<ScaledNetwork> oracle(ts.model, ts.T);
  SearchConfig cfg;
  // 405 = C(5,4) * 3^4, the largest arity count, so no stage ever truncates
  cfg.zeta = 405;
  cfg.value_domains = ts.domains;
  const Objective obj;
  const auto r = run_search(ts.model, ts.T, cfg, obj, oracle);
  std::size_t matched = 0;
  for (std::size_t d = 1; d <= 5; ++d) {
    const auto bf = brute_force_gamma(ts.model, ts.T, ts.domains, cfg.omega, obj, oracle, d);
    const Candidate& top = r.trace.stages.at(d).candidates.front();
    if (top.assignment == bf.assignment && top.gamma == bf.gamma) ++matched;
  }
  return {matched == 5, std::to_string(matched) + "/5 depths bit-identical to exhaustive argmax (zeta 405)"};
}

Outcome ac4() {
  int within = 0;
  std::string gaps;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec spec;
    spec.n_features = 8;
    spec.n_samples = 400;
    spec.noise_level = 0.1;
    spec.seed = derive_seed(seed, "ac4");
    const auto ts = train_on_synthetic(spec, {32}, 200, seed);
    SearchConfig cfg;  // omega 0.6, zeta 5
    cfg.value_domains = ts.domains;
    const Objective obj;
    const auto r = run_search(ts.model, ts.T, cfg, obj, OracleSensitivity<ScaledNetwork>(ts.model, ts.T));
    const double found = r.trace.stages.back().best_mean_lambda;
    const auto bf = brute_force(ts.model, ts.T, ts.domains, obj, 8);
    const double gap = found - bf.best_objective;
    if (gap <= 0.05) ++within;
    gaps += (gaps.empty() ? "" : ",") + fmt("%.3f", gap);
  }
  return {within >= 8, std::to_string(within) + "/10 seeds within 0.05 of brute force (need 8); gaps " + gaps};
}

Outcome ac5() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix X(8, 4), Y(8, 2);
    for (double& v : X.data()) v = u(rng);
    for (double& v : Y.data()) v = u(rng) > 0.0 ? 1.0 : 0.0;
    MLPModel m = MLPModel::create(4, std::vector<std::size_t>{6, 5}, 2, ModelKind::Classifier, seed);
    for (auto& l : m.layers())
      for (double& b : l.biases) b = 0.5 * u(rng);
    worst = std::max(worst, grad_check(m, X, Y));
  }
  return {worst < 1e-4, "max relative error " + fmt("%.3g", worst) + " over 5 networks (tol 1e-4)"};
}

Outcome ac6() {
  SyntheticSpec spec;
  spec.seed = 6;
  const auto ts = train_on_synthetic(spec, {64}, 300, 6);
  const auto dset = build_distillation_set(ts.model, ts.T, ts.domains, 5000, 8, derive_seed(6, "distill"));
  const auto [train_set, test_set] = dset.split_at(4000);
  TrainConfig tc;
  tc.loss = Loss::MSE;
  tc.hidden_dims = {64, 32};
  tc.seed = derive_seed(6, "model_ds");
  const auto ds = train_ds(train_set, tc).first;
  const double r2 = r_squared(ds.predict(test_set.inputs), test_set.targets);
  return {r2 >= 0.8, "held-out R^2 " + fmt("%.4f", r2) + " on 1000 of 5000 assignments (need 0.8)"};
}

Outcome ac7() {
  const ReferenceSet T(Matrix::from_rows({{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
  const XorLike model;
  const ValueDomains d = grid(2, 2);
  const Objective obj;
  const auto bf = brute_force(model, T, d, obj, 2);
  const auto seq = sequential_dp(model, T, d, obj);
  SearchConfig cfg;
  cfg.value_domains = d;
  const auto r = run_search(model, T, cfg, obj, OracleSensitivity<XorLike>(model, T));
  const double found = r.trace.stages.back().best_mean_lambda;
  const bool ok = seq.best_objective > bf.best_objective && std::abs(found - bf.best_objective) <= 0.01;
  return {ok, "brute force " + fmt("%.3f", bf.best_objective) + ", sequential " + fmt("%.3f", seq.best_objective) +
                  ", search " + fmt("%.3f", found)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

cli::RunConfig pipeline_config(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dsopt_acceptance_" + name);
  fs::remove_all(dir);
  cli::RunConfig c;
  c.seed = 8;
  c.out_dir = dir.string();
  c.csv = (dir / "data.csv").string();
  c.labels = {"y0", "y1", "y2"};
  return c;
}

Outcome ac8() {
  const cli::RunConfig c = pipeline_config("determinism");
  std::ostringstream log;
  cli::cmd_generate(c, log);
  const std::vector<std::string> files{"model_m.json", "metrics_m.json", "split.json", "sn_report.json",
                                       "trace_search.csv", "top_features.csv"};
  std::vector<std::string> first;
  cli::cmd_train(c, log);
  cli::cmd_optimize(c, log);
  for (const auto& f : files) first.push_back(slurp(c.out(f)));
  cli::cmd_train(c, log);
  cli::cmd_optimize(c, log);
  std::size_t same = 0;
  for (std::size_t i = 0; i < files.size(); ++i) same += slurp(c.out(files[i])) == first[i] && !first[i].empty();
  return {same == files.size(), std::to_string(same) + "/" + std::to_string(files.size()) + " outputs byte-identical"};
}

Outcome ac9() {
  cli::RunConfig c = pipeline_config("sweep");
  c.model.epochs = 100;
  std::ostringstream log;
  cli::cmd_generate(c, log);
  cli::cmd_train(c, log);
  cli::cmd_sweep_omega(c, log);
  std::istringstream in(slurp(c.out("sweep_omega.csv")));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line.rfind("omega,", 0) != 0) ++rows;

  // omega boundaries of the relevance score
  const MLPModel m = MLPModel::create(3, std::vector<std::size_t>{5}, 2, ModelKind::Classifier, 9);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Matrix X(50, 3);
  for (double& v : X.data()) v = u(rng);
  const ReferenceSet T(X);
  const OracleSensitivity<MLPModel> oracle(m, T);
  double worst = 0.0;
  for (auto dir : {Direction::MinimizeLabels, Direction::MaximizeLabels}) {
    const Objective obj{dir, {}};
    for (const FeatureAssignment& a : {FeatureAssignment{}, FeatureAssignment{{1, 0.5}},
                                       FeatureAssignment{{0, 2.0}, {2, 1.0}}}) {
      const Candidate one = score_candidate(m, T, a, 1.0, obj, oracle);
      const Candidate zero = score_candidate(m, T, a, 0.0, obj, oracle);
      double attain = 0.0, sens = 0.0;
      for (std::size_t l = 0; l < 2; ++l) {
        attain += dir == Direction::MinimizeLabels ? 1.0 - one.lambda_per_label[l] : one.lambda_per_label[l];
        sens += zero.upsilon_per_label[l];
      }
      worst = std::max({worst, std::abs(one.gamma - attain / 2.0), std::abs(zero.gamma - sens / 2.0)});
    }
  }
  return {rows == 9 && worst <= 1e-12,
          std::to_string(rows) + " sweep rows (need 9); omega 0/1 boundary deviation " + fmt("%.3g", worst)};
}

}  // namespace

int main() {
  run("AC1", "sensitivity matches the additive first-order identity", 10, ac1);
  run("AC2", "empty and full assignments give sensitivity 1 and 0", 5, ac2);
  run("AC3", "wide beam equals exhaustive gamma argmax at every depth", 60, ac3);
  run("AC4", "planted optimum recovered at omega 0.6, zeta 5", 300, ac4);
  run("AC5", "analytic gradients agree with finite differences", 5, ac5);
  run("AC6", "surrogate reproduces oracle sensitivity", 120, ac6);
  run("AC7", "interaction defeats the sequential baseline but not the search", 30, ac7);
  run("AC8", "train and optimize are byte-identical on rerun", 120, ac8);
  run("AC9", "omega sweep shape and boundary degeneracies", 120, ac9);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
