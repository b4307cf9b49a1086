#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>

#include "doctest.h"
#include "fd_check.hpp"
#include "smtw/nn.hpp"

using namespace smtw;

namespace {

// Straightforward reference matrix-vector product, written independently of
// the library loops.
std::vector<double> naive_affine(const std::vector<double>& w, const std::vector<double>& b,
                                 const std::vector<double>& x, size_t rows, size_t cols) {
  std::vector<double> y(rows, 0.0);
  for (size_t r = 0; r < rows; ++r) {
    y[r] = b[r];
    for (size_t c = 0; c < cols; ++c) y[r] += w[r * cols + c] * x[c];
  }
  return y;
}

std::vector<double> random_vector(size_t len, Rng& rng, double scale = 1.0) {
  std::vector<double> v(len);
  for (double& x : v) x = rng.uniform_symmetric(scale);
  return v;
}

// Loss used for gradient checking the recurrent core: squared norm of every
// hidden state against fixed random targets.
struct LstmProbe {
  ParamStore store;
  LstmCore lstm;
  std::vector<double> xs, targets;
  size_t steps;

  LstmProbe(size_t in, size_t hidden, size_t T, uint64_t seed)
      : lstm(store, "cell", in, hidden), steps(T) {
    Rng rng(seed);
    lstm.init(rng);
    xs = random_vector(T * in, rng);
    targets = random_vector(T * hidden, rng);
  }

  double loss_only() {
    lstm.forward(xs.data(), steps);
    double loss = 0.0;
    for (size_t i = 0; i < targets.size(); ++i) {
      const double d = lstm.hidden(0)[i] - targets[i];
      loss += d * d;
    }
    return loss;
  }

  double loss_and_grads() {
    lstm.forward(xs.data(), steps);
    std::vector<double> dh(targets.size());
    double loss = 0.0;
    for (size_t i = 0; i < targets.size(); ++i) {
      const double d = lstm.hidden(0)[i] - targets[i];
      loss += d * d;
      dh[i] = 2.0 * d;
    }
    store.zero_grad();
    lstm.backward(xs.data(), dh.data());
    return loss;
  }
};

void check_gradients(ParamStore& store, const std::function<double()>& loss_fn) {
  CHECK(fdcheck::check_store(store, loss_fn) == 0);
}

}  // namespace

TEST_CASE("dense forward matches the naive reference") {
  Rng rng(1);
  ParamStore store;
  DenseLayer layer(store, "d", 9, 6);
  layer.init(rng);
  Array& b = store.at("d.b");
  for (double& x : b.data) x = rng.uniform_symmetric(0.5);

  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_vector(9, rng);
    std::vector<double> y(6);
    layer.forward(x.data(), y.data());
    auto expected = naive_affine(store.at("d.w").data, b.data, x, 6, 9);
    for (size_t i = 0; i < y.size(); ++i) {
      CHECK(std::abs(y[i] - expected[i]) <= 1e-12);
    }
  }
}

TEST_CASE("identity-initialized dense layer reproduces its input") {
  ParamStore store;
  DenseLayer layer(store, "d", 4, 4);
  Array& w = store.at("d.w");
  for (size_t i = 0; i < 4; ++i) w.data[i * 4 + i] = 1.0;
  std::vector<double> x = {0.5, -2.0, 3.25, 0.0}, y(4);
  layer.forward(x.data(), y.data());
  CHECK(y == x);
}

TEST_CASE("rectifier clamps negatives and passes positives") {
  CHECK(relu(-3.5) == 0.0);
  CHECK(relu(0.0) == 0.0);
  CHECK(relu(2.25) == 2.25);
}

TEST_CASE("zero-parameter recurrent cell emits zero hidden states") {
  ParamStore store;
  LstmCore lstm(store, "cell", 3, 5);  // constructed without init: all zeros
  std::vector<double> xs = {1.0, -1.0, 0.5, 0.25, 2.0, -0.75};
  lstm.forward(xs.data(), 2);
  for (size_t t = 0; t < 2; ++t) {
    for (size_t j = 0; j < 5; ++j) CHECK(lstm.hidden(t)[j] == 0.0);
  }
}

TEST_CASE("sequence forward at T=1 equals a single cell step") {
  Rng rng(2);
  ParamStore store;
  LstmCore lstm(store, "cell", 4, 6);
  lstm.init(rng);
  auto x = random_vector(4, rng);
  lstm.forward(x.data(), 1);
  auto state = lstm.initial_state();
  lstm.step(x.data(), state);
  for (size_t j = 0; j < 6; ++j) CHECK(lstm.hidden(0)[j] == state.h[j]);
}

TEST_CASE("per-step outputs ignore future inputs") {
  Rng rng(3);
  ParamStore store;
  LstmCore lstm(store, "cell", 3, 4);
  lstm.init(rng);
  auto xs = random_vector(3 * 8, rng);
  lstm.forward(xs.data(), 8);
  std::vector<double> prefix(lstm.hidden(0), lstm.hidden(0) + 5 * 4);

  auto perturbed = xs;
  for (size_t i = 5 * 3; i < perturbed.size(); ++i) perturbed[i] += 10.0;
  lstm.forward(perturbed.data(), 8);
  std::vector<double> prefix_after(lstm.hidden(0), lstm.hidden(0) + 5 * 4);
  CHECK(prefix == prefix_after);
}

TEST_CASE("recurrent gradients match central finite differences") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    LstmProbe probe(3, 4, 5, 100 + seed);
    probe.loss_and_grads();
    check_gradients(probe.store, [&] { return probe.loss_only(); });
  }
}

TEST_CASE("dense + rectifier gradients match finite differences") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(200 + seed);
    ParamStore store;
    DenseLayer l1(store, "l1", 5, 7), l2(store, "l2", 7, 3);
    l1.init(rng);
    l2.init(rng);
    auto x = random_vector(5, rng);
    auto target = random_vector(3, rng);

    auto loss_only = [&] {
      std::vector<double> h(7), y(3);
      l1.forward(x.data(), h.data());
      for (double& v : h) v = relu(v);
      l2.forward(h.data(), y.data());
      double loss = 0.0;
      for (size_t i = 0; i < 3; ++i) loss += (y[i] - target[i]) * (y[i] - target[i]);
      return loss;
    };

    std::vector<double> pre(7), h(7), y(3);
    l1.forward(x.data(), pre.data());
    for (size_t i = 0; i < 7; ++i) h[i] = relu(pre[i]);
    l2.forward(h.data(), y.data());
    std::vector<double> dy(3), dh(7, 0.0);
    for (size_t i = 0; i < 3; ++i) dy[i] = 2.0 * (y[i] - target[i]);
    store.zero_grad();
    l2.backward(h.data(), dy.data(), dh.data());
    for (size_t i = 0; i < 7; ++i) {
      if (pre[i] <= 0.0) dh[i] = 0.0;
    }
    l1.backward(x.data(), dh.data(), nullptr);

    check_gradients(store, loss_only);
  }
}

TEST_CASE("softmax cross-entropy: uniform logits cost ln 7") {
  std::vector<double> logits(7, 0.0), grad(7);
  const double loss = softmax_cross_entropy(logits, 3, grad);
  CHECK(std::abs(loss - std::log(7.0)) <= 1e-12);
}

TEST_CASE("softmax cross-entropy gradient sums to zero") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto logits = random_vector(7, rng, 3.0);
    std::vector<double> grad(7);
    softmax_cross_entropy(logits, static_cast<int>(rng.uniform_index(7)), grad);
    double sum = 0.0;
    for (double g : grad) sum += g;
    CHECK(std::abs(sum) <= 1e-12);
  }
}

TEST_CASE("squared-error gradient vanishes at the target") {
  // d/dy (y - t)^2 = 2 (y - t) = 0 when y == t.
  const double y = 1.5, t = 1.5;
  CHECK(2.0 * (y - t) == 0.0);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  std::vector<double> v = {1.0, 3.0, 3.0, 2.0};
  CHECK(argmax_index(v) == 1);
}

TEST_CASE("optimizer: zero gradient leaves parameters fixed") {
  Rng rng(5);
  ParamStore store;
  DenseLayer layer(store, "d", 3, 3);
  layer.init(rng);
  auto snapshot = store.at("d.w").data;
  store.zero_grad();
  Adam adam({.lr = 0.1});
  adam.step(store);
  CHECK(store.at("d.w").data == snapshot);
}

TEST_CASE("optimizer: first step moves by roughly -lr * sign(gradient)") {
  ParamStore store;
  Array& a = store.add("p", {4});
  a.data = {1.0, -2.0, 0.5, 3.0};
  a.grad = {0.3, -4.0, 1e-2, 2.5};
  const double lr = 1e-3;
  Adam adam({.lr = lr});
  auto before = a.data;
  adam.step(store);
  for (size_t i = 0; i < 4; ++i) {
    const double move = a.data[i] - before[i];
    const double expected = -lr * (a.grad[i] > 0 ? 1.0 : -1.0);
    CHECK(std::abs(move - expected) <= lr * 1e-5);
  }
}

TEST_CASE("optimizer rejects non-finite gradients") {
  ParamStore store;
  Array& a = store.add("p", {2});
  a.grad = {1.0, std::numeric_limits<double>::infinity()};
  Adam adam({.lr = 1e-3});
  CHECK_THROWS_AS(adam.step(store), std::runtime_error);
}

TEST_CASE("optimizer updates are deterministic") {
  auto run = [] {
    ParamStore store;
    Array& a = store.add("p", {3});
    a.data = {0.1, 0.2, 0.3};
    Adam adam({.lr = 1e-2});
    for (int i = 0; i < 5; ++i) {
      a.grad = {0.5, -0.25, static_cast<double>(i)};
      adam.step(store);
    }
    return a.data;
  };
  CHECK(run() == run());
}

TEST_CASE("seeded initialization is bit-reproducible and fan-in bounded") {
  ParamStore s1, s2;
  DenseLayer a(s1, "d", 16, 8), b(s2, "d", 16, 8);
  Rng r1(42), r2(42);
  a.init(r1);
  b.init(r2);
  CHECK(s1.at("d.w").data == s2.at("d.w").data);
  const double bound = 1.0 / std::sqrt(16.0);
  for (double w : s1.at("d.w").data) {
    CHECK(std::abs(w) <= bound);
  }
}

TEST_CASE("forget-gate bias starts at one") {
  ParamStore store;
  LstmCore lstm(store, "cell", 3, 4);
  Rng rng(6);
  lstm.init(rng);
  const Array& b = store.at("cell.b");
  for (size_t j = 0; j < 4; ++j) {
    CHECK(b.data[j] == 0.0);        // input gate
    CHECK(b.data[4 + j] == 1.0);    // forget gate
    CHECK(b.data[8 + j] == 0.0);    // candidate
    CHECK(b.data[12 + j] == 0.0);   // output gate
  }
}

TEST_CASE("checkpoints round-trip bit-exactly and reject unknown content") {
  Rng rng(7);
  ParamStore store;
  DenseLayer layer(store, "d", 6, 5);
  layer.init(rng);
  CheckpointMeta meta;
  meta.kind = "policy";
  meta.n = 5;
  meta.extra["lstm_units"] = 64;

  const auto path = std::filesystem::temp_directory_path() / "smtw_test_ckpt.json";
  save_checkpoint(path.string(), store, meta);

  ParamStore loaded_store;
  DenseLayer same_shape(loaded_store, "d", 6, 5);
  CheckpointMeta loaded = load_checkpoint(path.string(), loaded_store);
  CHECK(loaded.kind == "policy");
  CHECK(loaded.extra.at("lstm_units") == 64);
  CHECK(loaded_store.at("d.w").data == store.at("d.w").data);
  CHECK(loaded_store.at("d.b").data == store.at("d.b").data);

  ParamStore wrong_shape;
  DenseLayer other(wrong_shape, "d", 5, 5);
  CHECK_THROWS(load_checkpoint(path.string(), wrong_shape));
  std::filesystem::remove(path);
}

TEST_CASE("backward without a forward pass is rejected") {
  ParamStore store;
  LstmCore lstm(store, "cell", 2, 3);
  std::vector<double> xs(2), dh(3);
  CHECK_THROWS_AS(lstm.backward(xs.data(), dh.data()), std::logic_error);
}
