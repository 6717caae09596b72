#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sefar/nn.hpp"
#include "sefar/params.hpp"
#include "sefar/rng.hpp"

using namespace sefar;

namespace {

// Straight-line scalar reference for a 2-layer net, independent of the
// Matrix code paths.
std::vector<double> reference_mlp(const std::vector<std::vector<double>>& w1,
                                  const std::vector<double>& b1,
                                  const std::vector<std::vector<double>>& w2,
                                  const std::vector<double>& b2, const std::vector<double>& x) {
  const std::size_t hidden = b1.size();
  const std::size_t out = b2.size();
  std::vector<double> h(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    double s = b1[j];
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w1[i][j];
    h[j] = s > 0.0 ? s : 0.0;
  }
  std::vector<double> y(out);
  for (std::size_t k = 0; k < out; ++k) {
    double s = b2[k];
    for (std::size_t j = 0; j < hidden; ++j) s += h[j] * w2[j][k];
    y[k] = s;
  }
  return y;
}

ParamSet random_mlp_params(std::size_t in, std::size_t hidden, std::size_t out,
                           std::uint64_t seed) {
  ParamSet params;
  add_mlp_params(params, "net", in, hidden, out, RngStream(seed, 0));
  return params;
}

}  // namespace

TEST_SUITE("nn_core") {

TEST_CASE("rng stream determinism and independence") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  RngStream c(42, 8);
  bool all_equal = true;
  bool any_differ = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_differ = any_differ || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_differ);
}

TEST_CASE("rng uniform and gaussian ranges") {
  RngStream rng(1, 2);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += rng.next_gaussian();
  }
  CHECK(std::abs(sum / 10000.0) < 0.05);
}

TEST_CASE("matrix multiply agrees with hand result") {
  Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
  Matrix b(3, 2, {7, 8, 9, 10, 11, 12});
  Matrix c = matmul(a, b);
  CHECK(c.at(0, 0) == doctest::Approx(58));
  CHECK(c.at(0, 1) == doctest::Approx(64));
  CHECK(c.at(1, 0) == doctest::Approx(139));
  CHECK(c.at(1, 1) == doctest::Approx(154));
  CHECK_THROWS_AS(matmul(a, a), std::invalid_argument);
}

TEST_CASE("mlp forward: zero weights give zero logits") {
  ParamSet params;
  params.add("net.w1", Matrix(3, 4));
  params.add("net.b1", Matrix(1, 4));
  params.add("net.w2", Matrix(4, 2));
  params.add("net.b2", Matrix(1, 2));
  Matrix x(2, 3, {1, -2, 3, 0.5, 0.1, -0.7});
  MlpCache cache;
  Matrix y = mlp_forward(params, "net", x, 0.0, Mode::kTrain, RngStream(0, 0), cache);
  for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("mlp forward: dropout 0 makes train equal eval") {
  ParamSet params = random_mlp_params(3, 5, 2, 11);
  Matrix x(4, 3);
  RngStream rng(5, 5);
  for (double& v : x.data) v = rng.next_gaussian();
  MlpCache c1, c2;
  Matrix y_train = mlp_forward(params, "net", x, 0.0, Mode::kTrain, RngStream(1, 1), c1);
  Matrix y_eval = mlp_forward(params, "net", x, 0.0, Mode::kEval, RngStream(2, 2), c2);
  REQUIRE(y_train.data.size() == y_eval.data.size());
  for (std::size_t i = 0; i < y_train.data.size(); ++i) CHECK(y_train.data[i] == y_eval.data[i]);
}

TEST_CASE("mlp forward matches straight-line scalar reference (3->4->2)") {
  ParamSet params = random_mlp_params(3, 4, 2, 99);
  std::vector<std::vector<double>> w1(3, std::vector<double>(4));
  std::vector<std::vector<double>> w2(4, std::vector<double>(2));
  std::vector<double> b1(4), b2(2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) w1[i][j] = params.at("net.w1").value.at(i, j);
  for (std::size_t j = 0; j < 4; ++j) b1[j] = params.at("net.b1").value.at(0, j);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = 0; k < 2; ++k) w2[j][k] = params.at("net.w2").value.at(j, k);
  for (std::size_t k = 0; k < 2; ++k) b2[k] = params.at("net.b2").value.at(0, k);

  const std::vector<double> x = {0.3, -1.2, 0.8};
  Matrix xm(1, 3, std::vector<double>(x));
  MlpCache cache;
  Matrix y = mlp_forward(params, "net", xm, 0.0, Mode::kEval, RngStream(0, 0), cache);
  const auto ref = reference_mlp(w1, b1, w2, b2, x);
  CHECK(y.at(0, 0) == doctest::Approx(ref[0]).epsilon(1e-12));
  CHECK(y.at(0, 1) == doctest::Approx(ref[1]).epsilon(1e-12));
}

TEST_CASE("mlp backward: zero upstream gradient gives zero grads") {
  ParamSet params = random_mlp_params(3, 4, 2, 3);
  Matrix x(2, 3, {1, 2, 3, 4, 5, 6});
  MlpCache cache;
  mlp_forward(params, "net", x, 0.0, Mode::kTrain, RngStream(0, 0), cache);
  mlp_backward(params, "net", cache, Matrix(2, 2));
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double g : params[i].grad.data) CHECK(g == 0.0);
  }
}

TEST_CASE("mlp backward: finite-difference oracle, rel err < 1e-4") {
  const double h = 1e-5;
  ParamSet params = random_mlp_params(3, 4, 2, 17);
  Matrix x(5, 3);
  RngStream xr(9, 9);
  for (double& v : x.data) v = xr.next_gaussian();
  Matrix targets = one_hot({0, 1, 0, 1, 1}, 2);

  // Loss as a pure function of params (dropout active with a fixed stream).
  auto loss_fn = [&]() {
    MlpCache cache;
    Matrix y = mlp_forward(params, "net", x, 0.2, Mode::kTrain, RngStream(7, 7), cache);
    return cross_entropy(softmax(y), targets).first;
  };

  params.zero_grads();
  {
    MlpCache cache;
    Matrix y = mlp_forward(params, "net", x, 0.2, Mode::kTrain, RngStream(7, 7), cache);
    auto [loss, dlogits] = cross_entropy(softmax(y), targets);
    (void)loss;
    mlp_backward(params, "net", cache, dlogits);
  }

  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t k = 0; k < params[p].value.data.size(); ++k) {
      double& v = params[p].value.data[k];
      const double orig = v;
      v = orig + h;
      const double up = loss_fn();
      v = orig - h;
      const double down = loss_fn();
      v = orig;
      const double fd = (up - down) / (2 * h);
      const double analytic = params[p].grad.data[k];
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
      CHECK(std::abs(fd - analytic) / denom < 1e-4);
    }
  }
}

TEST_CASE("linear net: grad of W equals input^T * dlogits exactly") {
  ParamSet params;
  RngStream rng(21, 3);
  Matrix w(3, 2);
  for (double& v : w.data) v = rng.next_gaussian();
  params.add("lin.w", w);
  params.add("lin.b", Matrix(1, 2));
  Matrix x(4, 3);
  for (double& v : x.data) v = rng.next_gaussian();
  LinearCache cache;
  linear_forward(params, "lin", x, cache);
  Matrix dlogits(4, 2);
  for (double& v : dlogits.data) v = rng.next_gaussian();
  linear_backward(params, "lin", cache, dlogits);
  Matrix expected = matmul_at_b(x, dlogits);
  for (std::size_t i = 0; i < expected.data.size(); ++i) {
    CHECK(params.at("lin.w").grad.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-14));
  }
}

TEST_CASE("softmax: symmetry, shift invariance, direct formula") {
  Matrix a(1, 2, {0.0, 0.0});
  Matrix pa = softmax(a);
  CHECK(pa.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

  Matrix b(1, 3, {4.2, 4.2, 4.2});
  Matrix pb = softmax(b);
  for (std::size_t j = 0; j < 3; ++j) CHECK(pb.at(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Matrix c(1, 2, {1.0, 0.0});
  Matrix pc = softmax(c);
  const double e = std::exp(1.0);
  CHECK(pc.at(0, 0) == doctest::Approx(e / (e + 1)).epsilon(1e-12));
  CHECK(pc.at(0, 1) == doctest::Approx(1 / (e + 1)).epsilon(1e-12));
}

TEST_CASE("softmax properties: rows sum to 1, additive shift invariance") {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix logits(1, 6);
    for (double& v : logits.data) v = 10.0 * rng.next_gaussian();
    Matrix p = softmax(logits);
    double sum = 0.0;
    for (double v : p.data) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);

    const double shift = 5.0 * rng.next_gaussian();
    Matrix shifted = logits;
    for (double& v : shifted.data) v += shift;
    Matrix q = softmax(shifted);
    for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(p.data[j] - q.data[j]) < 1e-10);
  }
}

TEST_CASE("cross entropy: perfect prediction, ln 2, batch mean") {
  Matrix perfect(1, 3, {0.0, 1.0, 0.0});
  Matrix target = one_hot({1}, 3);
  CHECK(cross_entropy(perfect, target).first == doctest::Approx(0.0).epsilon(1e-12));

  Matrix half(1, 2, {0.5, 0.5});
  CHECK(cross_entropy(half, one_hot({0}, 2)).first ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Two-row batch = mean of per-row losses.
  Matrix rows(2, 2, {0.5, 0.5, 0.25, 0.75});
  Matrix tgt = one_hot({0, 1}, 2);
  const double row0 = cross_entropy(Matrix(1, 2, {0.5, 0.5}), one_hot({0}, 2)).first;
  const double row1 = cross_entropy(Matrix(1, 2, {0.25, 0.75}), one_hot({1}, 2)).first;
  CHECK(cross_entropy(rows, tgt).first == doctest::Approx((row0 + row1) / 2).epsilon(1e-12));
}

TEST_CASE("cross entropy: nonnegative, dlogits composite gradient") {
  RngStream rng(13, 1);
  Matrix logits(3, 4);
  for (double& v : logits.data) v = rng.next_gaussian();
  Matrix probs = softmax(logits);
  Matrix targets = one_hot({0, 2, 3}, 4);
  auto [loss, dlogits] = cross_entropy(probs, targets);
  CHECK(loss >= 0.0);
  for (std::size_t i = 0; i < dlogits.data.size(); ++i) {
    CHECK(dlogits.data[i] ==
          doctest::Approx((probs.data[i] - targets.data[i]) / 3.0).epsilon(1e-14));
  }
}

TEST_CASE("sgd: lr=0 is the identity on values") {
  ParamSet params = random_mlp_params(2, 3, 2, 5);
  RngStream rng(2, 2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double& g : params[i].grad.data) g = rng.next_gaussian();
  }
  ParamSet before = params.clone_values();
  sgd_momentum_step(params, 0.0, 0.9, 0.01);
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].value.data.size(); ++k) {
      CHECK(params[i].value.data[k] == before[i].value.data[k]);
    }
  }
}

TEST_CASE("sgd: plain gradient step and weight-decay shrinkage") {
  ParamSet params;
  params.add("w", Matrix(1, 1, {2.0}));
  params.at("w").grad.data[0] = 0.5;
  sgd_momentum_step(params, 0.1, 0.0, 0.0);
  CHECK(params.at("w").value.data[0] == doctest::Approx(2.0 - 0.1 * 0.5).epsilon(1e-15));

  ParamSet decay;
  decay.add("w", Matrix(1, 1, {1.0}));
  sgd_momentum_step(decay, 0.1, 0.0, 0.5);  // grad 0
  CHECK(decay.at("w").value.data[0] == doctest::Approx(1.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-15));
  sgd_momentum_step(decay, 0.1, 0.0, 0.5);
  CHECK(decay.at("w").value.data[0] ==
        doctest::Approx(1.0 * (1.0 - 0.1 * 0.5) * (1.0 - 0.1 * 0.5)).epsilon(1e-15));

  CHECK_THROWS_AS(sgd_momentum_step(decay, -0.1, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("sgd: momentum buffer recurrence") {
  ParamSet params;
  params.add("w", Matrix(1, 1, {0.0}));
  params.at("w").grad.data[0] = 1.0;
  sgd_momentum_step(params, 1.0, 0.5, 0.0);
  // buf = 1, value = -1
  CHECK(params.at("w").value.data[0] == doctest::Approx(-1.0));
  params.at("w").grad.data[0] = 1.0;
  sgd_momentum_step(params, 1.0, 0.5, 0.0);
  // buf = 0.5*1 + 1 = 1.5, value = -2.5
  CHECK(params.at("w").value.data[0] == doctest::Approx(-2.5));
  CHECK(params.at("w").grad.data[0] == 0.0);  // grads zeroed after the step
}

TEST_CASE("param set: ordered, unique names, serialization round trip") {
  ParamSet params = random_mlp_params(3, 4, 2, 123);
  CHECK(params.names() == std::vector<std::string>{"net.w1", "net.b1", "net.w2", "net.b2"});
  CHECK_THROWS_AS(params.add("net.w1", Matrix(1, 1)), std::invalid_argument);

  const std::string path = (std::filesystem::temp_directory_path() / "sefar_params_test.sfar").string();
  save_params(params, path);
  ParamSet loaded = load_params(path);
  REQUIRE(loaded.size() == params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(loaded.names()[i] == params.names()[i]);
    REQUIRE(loaded[i].value.data.size() == params[i].value.data.size());
    for (std::size_t k = 0; k < params[i].value.data.size(); ++k) {
      CHECK(loaded[i].value.data[k] == params[i].value.data[k]);
    }
  }

  // Byte-exact: saving the loaded set reproduces the file exactly.
  const std::string path2 = path + ".2";
  save_params(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(c1 == c2);
  CHECK(c1.substr(0, 4) == "SFAR");
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("param file: bad magic rejected") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "sefar_bad_magic.sfar").string();
  std::ofstream os(path, std::ios::binary);
  os << "NOPE12345";
  os.close();
  CHECK_THROWS_AS(load_params(path), std::runtime_error);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
