#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "dsopt/model_io.hpp"
#include "dsopt/nn.hpp"

using namespace dsopt;
using Catch::Approx;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (double& v : m.data()) v = d(rng);
  return m;
}

Matrix random_binary(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution d(0.4);
  Matrix m(r, c);
  for (double& v : m.data()) v = d(rng) ? 1.0 : 0.0;
  return m;
}

// Random weights and biases; zero biases can park a ReLU exactly on its kink.
MLPModel random_net(std::size_t in, std::vector<std::size_t> hidden, std::size_t out, ModelKind kind,
                    std::uint64_t seed) {
  MLPModel m = MLPModel::create(in, hidden, out, kind, seed);
  std::mt19937_64 rng(seed ^ 0xb1a5);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (auto& l : m.layers())
    for (double& b : l.biases) b = d(rng);
  return m;
}

}  // namespace

TEST_CASE("forward: zero classifier outputs one half", "[nn][forward]") {
  DenseLayer layer{Matrix(3, 2), {0.0, 0.0}, Activation::Sigmoid};
  MLPModel m(ModelKind::Classifier, {layer});
  const Matrix out = forward(m, random_matrix(4, 3, 1, -50, 50));
  for (double v : out.data()) CHECK(v == 0.5);
}

TEST_CASE("forward: identity layer returns its input", "[nn][forward]") {
  Matrix eye(3, 3);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  MLPModel m(ModelKind::Regressor, {DenseLayer{eye, {0, 0, 0}, Activation::Identity}});
  const Matrix out = forward(m, Matrix(1, 3, {1, 2, 3}));
  CHECK(out == Matrix(1, 3, {1, 2, 3}));
}

TEST_CASE("forward: hand-set two layer net matches scalar evaluation", "[nn][forward]") {
  // hidden: 2 -> 2 relu, output: 2 -> 1 sigmoid
  DenseLayer h{Matrix(2, 2, {0.5, -1.0, 0.25, 2.0}), {0.1, -0.2}, Activation::ReLU};
  DenseLayer o{Matrix(2, 1, {1.5, -0.75}), {0.05}, Activation::Sigmoid};
  MLPModel m(ModelKind::Classifier, {h, o});
  const double x0 = 0.8, x1 = -0.3;
  const double h0 = std::max(0.0, 0.1 + x0 * 0.5 + x1 * 0.25);
  const double h1 = std::max(0.0, -0.2 + x0 * -1.0 + x1 * 2.0);
  const double z = 0.05 + h0 * 1.5 + h1 * -0.75;
  const double expected = 1.0 / (1.0 + std::exp(-z));
  const Matrix out = forward(m, Matrix(1, 2, {x0, x1}));
  CHECK(out(0, 0) == Approx(expected).epsilon(1e-14));
}

TEST_CASE("forward: dimension mismatch is a shape error", "[nn][forward]") {
  MLPModel m = MLPModel::create(3, std::vector<std::size_t>{4}, 2, ModelKind::Classifier, 1);
  CHECK_THROWS_AS(forward(m, Matrix(2, 4)), ShapeError);
}

TEST_CASE("forward: classifier outputs stay inside (0,1)", "[nn][forward][property]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    MLPModel m = MLPModel::create(4, std::vector<std::size_t>{8}, 3, ModelKind::Classifier, seed);
    for (auto& l : m.layers())
      for (double& w : l.weights.data()) w *= 200.0;
    const Matrix out = forward(m, random_matrix(16, 4, seed + 100, -1e3, 1e3));
    for (double v : out.data()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("model invariants are enforced", "[nn]") {
  DenseLayer a{Matrix(2, 3), {0, 0, 0}, Activation::ReLU};
  DenseLayer b{Matrix(2, 1), {0}, Activation::Sigmoid};
  CHECK_THROWS_AS(MLPModel(ModelKind::Classifier, {a, b}), ShapeError);
  DenseLayer c{Matrix(3, 1), {0}, Activation::Identity};
  CHECK_THROWS_AS(MLPModel(ModelKind::Classifier, {a, c}), ShapeError);
  DenseLayer s{Matrix(3, 1), {0}, Activation::Sigmoid};
  CHECK_THROWS_AS(MLPModel(ModelKind::Regressor, {a, s}), ShapeError);
}

TEST_CASE("bce_loss", "[nn][loss]") {
  SECTION("all one half gives ln 2 for any binary targets") {
    const Matrix y = random_binary(5, 3, 7);
    CHECK(bce_loss(Matrix(5, 3, 0.5), y) == Approx(std::log(2.0)).epsilon(1e-15));
  }
  SECTION("perfect predictions are bounded by the clamp") {
    const Matrix y = random_binary(5, 3, 8);
    CHECK(bce_loss(y, y) <= -std::log(1.0 - kProbabilityClamp) + 1e-15);
    CHECK(bce_loss(y, y) >= 0.0);
  }
  SECTION("direct formula") {
    const double expected = -(std::log(0.8) + std::log(0.7)) / 2.0;
    CHECK(bce_loss(Matrix(1, 2, {0.8, 0.3}), Matrix(1, 2, {1.0, 0.0})) == Approx(expected).epsilon(1e-15));
    CHECK(expected == Approx(0.2899092476).epsilon(1e-9));
  }
  SECTION("positive weight scales only the positive term") {
    const std::vector<double> w{3.0};
    CHECK(bce_loss(Matrix(1, 1, {0.8}), Matrix(1, 1, {1.0}), w) == Approx(-3.0 * std::log(0.8)));
    CHECK(bce_loss(Matrix(1, 1, {0.3}), Matrix(1, 1, {0.0}), w) == Approx(-std::log(0.7)));
  }
  SECTION("shape mismatch") { CHECK_THROWS_AS(bce_loss(Matrix(1, 2), Matrix(2, 1)), ShapeError); }
}

TEST_CASE("mse_loss", "[nn][loss]") {
  const Matrix a = random_matrix(4, 3, 3);
  CHECK(mse_loss(a, a) == 0.0);
  CHECK(mse_loss(Matrix(1, 2, {1, 2}), Matrix(1, 2, {0, 0})) == 2.5);
  const Matrix b = random_matrix(4, 3, 4);
  double sum = 0.0;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) sum += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
  CHECK(mse_loss(a, b) == Approx(sum / 12.0).epsilon(1e-14));
  CHECK_THROWS_AS(mse_loss(Matrix(1, 2), Matrix(1, 3)), ShapeError);
}

TEST_CASE("grad_check agrees with finite differences", "[nn][grad]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix X = random_matrix(6, 3, seed + 10);
    const Matrix Yc = random_binary(6, 2, seed + 20);
    MLPModel clf = random_net(3, {5}, 2, ModelKind::Classifier, seed);
    CHECK(grad_check(clf, X, Yc) < 1e-4);
    const Matrix Yr = random_matrix(6, 2, seed + 30);
    MLPModel reg = random_net(3, {4, 3}, 2, ModelKind::Regressor, seed);
    CHECK(grad_check(reg, X, Yr) < 1e-4);
  }
}

TEST_CASE("grad_check catches a scaled gradient", "[nn][grad]") {
  const Matrix X = random_matrix(6, 3, 1);
  const Matrix Y = random_binary(6, 2, 2);
  // steepen the net so gradients are far from zero
  MLPModel m = MLPModel::create(3, std::vector<std::size_t>{5}, 2, ModelKind::Classifier, 3);
  for (auto& l : m.layers())
    for (double& w : l.weights.data()) w *= 3.0;
  auto doubled = [](const MLPModel& model, const Matrix& x, const Matrix& y, Loss loss) {
    Gradients g = gradients(model, x, y, loss);
    for (auto& w : g.weights)
      for (double& v : w.data()) v *= 2.0;
    for (auto& b : g.biases)
      for (double& v : b) v *= 2.0;
    return g;
  };
  CHECK(grad_check(m, X, Y, doubled) > 0.1);
}

TEST_CASE("grad_check on a parameterless model is vacuous", "[nn][grad]") {
  MLPModel identity(ModelKind::Regressor, {});
  CHECK(grad_check(identity, random_matrix(3, 2, 1), random_matrix(3, 2, 2)) == 0.0);
}

TEST_CASE("train", "[nn][train]") {
  // linearly separable: label = x0 + x1 > 0
  const Matrix X = random_matrix(200, 2, 42);
  Matrix Y(200, 1);
  for (std::size_t r = 0; r < 200; ++r) Y(r, 0) = X(r, 0) + X(r, 1) > 0.0 ? 1.0 : 0.0;

  SECTION("zero learning rate leaves weights unchanged") {
    MLPModel m = MLPModel::create(2, std::vector<std::size_t>{4}, 1, ModelKind::Classifier, 5);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 1;
    auto [trained, report] = train(m, X, Y, cfg);
    CHECK(trained == m);
    CHECK(report.epoch_loss.size() == 1);
  }
  SECTION("loss decreases on separable data") {
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.hidden_dims = {8};
    cfg.seed = 3;
    MLPModel m = MLPModel::create(2, cfg.hidden_dims, 1, ModelKind::Classifier, cfg.seed);
    const double initial = bce_loss(forward(m, X), Y);
    auto [trained, report] = train(m, X, Y, cfg);
    CHECK(report.epoch_loss.size() == 500);
    CHECK(bce_loss(forward(trained, X), Y) < initial);
    CHECK(report.final_loss < 0.2);
    for (double l : report.epoch_loss) {
      CHECK(std::isfinite(l));
      CHECK(l >= 0.0);
    }
  }
  SECTION("same seed gives bit-identical weights") {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 11;
    auto a = fit(X, Y, cfg, ModelKind::Classifier);
    auto b = fit(X, Y, cfg, ModelKind::Classifier);
    CHECK(a.first == b.first);
    cfg.seed = 12;
    auto c = fit(X, Y, cfg, ModelKind::Classifier);
    CHECK_FALSE(a.first == c.first);
  }
  SECTION("divergence names the epoch") {
    TrainConfig cfg;
    cfg.learning_rate = 1e300;
    cfg.epochs = 5;
    cfg.loss = Loss::MSE;
    MLPModel m = MLPModel::create(2, std::vector<std::size_t>{4}, 1, ModelKind::Regressor, 1);
    try {
      Matrix big = X;
      for (double& v : big.data()) v *= 1e3;
      train(m, big, Y, cfg);
      FAIL("expected divergence");
    } catch (const TrainingDivergedError& e) {
      CHECK(e.epoch() < 5);
    }
  }
  SECTION("invalid config") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    MLPModel m = MLPModel::create(2, std::vector<std::size_t>{4}, 1, ModelKind::Classifier, 1);
    CHECK_THROWS_AS(train(m, X, Y, cfg), ConfigError);
    cfg.batch_size = 201;
    CHECK_THROWS_AS(train(m, X, Y, cfg), ConfigError);
    cfg.batch_size = 16;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(m, X, Y, cfg), ConfigError);
  }
}

TEST_CASE("model file round trip is bit exact", "[nn][io]") {
  MLPModel net = MLPModel::create(5, std::vector<std::size_t>{7, 3}, 2, ModelKind::Regressor, 99);
  const Matrix X = random_matrix(10, 5, 1, -3, 3);
  ScaledNetwork sn{MinMaxScaler::fit(X), net};
  const auto j = to_json(sn, {{"n", 5}});
  nlohmann::json header;
  const ScaledNetwork back = scaled_network_from_json(nlohmann::json::parse(j.dump()), &header);
  CHECK(back == sn);
  CHECK(header.at("n") == 5);
  const Matrix a = sn.predict(X), b = back.predict(X);
  CHECK(a == b);
  CHECK_THROWS_AS(scaled_network_from_json(nlohmann::json{{"format", "other"}}), DataError);
}
