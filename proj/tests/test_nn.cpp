#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "raekit/nn.hpp"

using namespace raekit;
using testutil::max_gradient_rel_error;
using testutil::random_matrix;

namespace {

nn::Network single_layer(const nn::Matrix& w, const nn::Vector& b,
                         nn::Activation activation) {
  nn::DenseLayer layer;
  layer.weights = w;
  layer.bias = b;
  layer.activation = activation;
  nn::Network net;
  net.layers.push_back(layer);
  return net;
}

}  // namespace

TEST_SUITE_BEGIN("nn");

TEST_CASE("selu values match the defining formula") {
  nn::Matrix z(1, 3);
  z << 0.0, 1.0, -1.0;
  const nn::Matrix a = nn::apply_activation(nn::Activation::Selu, z);
  CHECK(a(0, 0) == 0.0);  // exact fixed point
  CHECK(a(0, 1) == doctest::Approx(1.0507009873554805).epsilon(1e-15));
  // lambda * alpha * (e^-1 - 1), evaluated independently
  const double expected = 1.0507009873554805 * 1.6732632423543772 * std::expm1(-1.0);
  CHECK(a(0, 2) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(a(0, 2) == doctest::Approx(-1.11133).epsilon(1e-5));
}

TEST_CASE("selu is continuous at 0") {
  // Left and right limits both agree with selu(0) = 0 within 1e-12.
  nn::Matrix z(1, 2);
  z << 1e-13, -1e-13;
  const nn::Matrix a = nn::apply_activation(nn::Activation::Selu, z);
  CHECK(std::abs(a(0, 0)) < 1e-12);
  CHECK(std::abs(a(0, 1)) < 1e-12);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(7);
  const nn::Matrix z = random_matrix(rng, 20, 9, -8.0, 8.0);
  const nn::Matrix a = nn::apply_activation(nn::Activation::Softmax, z);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    CHECK(a.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.row(i).minCoeff() >= 0.0);
  }
}

TEST_CASE("forward: identity layer passes input through") {
  const auto net = single_layer(nn::Matrix::Identity(2, 2), nn::Vector::Zero(2),
                                nn::Activation::Linear);
  nn::Matrix x(1, 2);
  x << 1.0, 2.0;
  const nn::Matrix y = nn::forward(net, x);
  CHECK(y(0, 0) == 1.0);
  CHECK(y(0, 1) == 2.0);
}

TEST_CASE("forward: hand-computed affine map") {
  nn::Matrix w(2, 2);
  w << 2.0, 0.0, 0.0, 3.0;
  nn::Vector b(2);
  b << 1.0, 1.0;
  const auto net = single_layer(w, b, nn::Activation::Linear);
  nn::Matrix x(1, 2);
  x << 1.0, 1.0;
  const nn::Matrix y = nn::forward(net, x);
  CHECK(y(0, 0) == doctest::Approx(3.0));
  CHECK(y(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("forward: selu(0) = 0 through an identity layer") {
  const auto net = single_layer(nn::Matrix::Identity(2, 2), nn::Vector::Zero(2),
                                nn::Activation::Selu);
  const nn::Matrix y = nn::forward(net, nn::Matrix::Zero(1, 2));
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 0.0);
}

TEST_CASE("forward rejects mismatched batch width") {
  const auto net = single_layer(nn::Matrix::Identity(2, 2), nn::Vector::Zero(2),
                                nn::Activation::Linear);
  CHECK_THROWS_AS(nn::forward(net, nn::Matrix::Zero(1, 3)), ShapeError);
}

TEST_CASE("losses: frozen example values") {
  nn::Matrix x(1, 2);
  x << 0.3, -0.7;
  CHECK(nn::loss_eval(nn::Loss::Mse, x, x) == 0.0);

  nn::Matrix zeros = nn::Matrix::Zero(1, 2);
  nn::Matrix ones = nn::Matrix::Ones(1, 2);
  CHECK(nn::loss_eval(nn::Loss::Mse, zeros, ones) == doctest::Approx(1.0));

  nn::Matrix half(1, 1), one(1, 1);
  half << 0.5;
  one << 1.0;
  CHECK(nn::loss_eval(nn::Loss::BinaryCrossEntropy, half, one) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("losses: shape mismatch throws") {
  CHECK_THROWS_AS(nn::loss_eval(nn::Loss::Mse, nn::Matrix::Zero(1, 2),
                                nn::Matrix::Zero(2, 1)),
                  ShapeError);
}

TEST_CASE("losses are non-negative on random inputs") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rows = static_cast<Eigen::Index>(1 + rng.integer(6));
    const auto cols = static_cast<Eigen::Index>(1 + rng.integer(6));
    CHECK(nn::loss_eval(nn::Loss::Mse, random_matrix(rng, rows, cols),
                        random_matrix(rng, rows, cols)) >= 0.0);
    const nn::Matrix p = random_matrix(rng, rows, cols, 0.01, 0.99);
    const nn::Matrix t = random_matrix(rng, rows, cols, 0.0, 1.0);
    CHECK(nn::loss_eval(nn::Loss::BinaryCrossEntropy, p, t) >= 0.0);
    nn::Matrix onehot = nn::Matrix::Zero(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      onehot(r, static_cast<Eigen::Index>(rng.integer(static_cast<std::uint64_t>(cols)))) = 1.0;
    }
    nn::Matrix q = random_matrix(rng, rows, cols, 0.05, 1.0);
    for (Eigen::Index r = 0; r < rows; ++r) q.row(r) /= q.row(r).sum();
    CHECK(nn::loss_eval(nn::Loss::CategoricalCrossEntropy, q, onehot) >= 0.0);
  }
}

TEST_CASE("backprop: zero gradients when prediction equals target") {
  nn::Matrix w(2, 2);
  w << 0.5, -0.25, 1.0, 2.0;
  const auto net = single_layer(w, nn::Vector::Zero(2), nn::Activation::Linear);
  nn::Matrix x(3, 2);
  x << 1.0, 2.0, -1.0, 0.5, 0.0, 4.0;
  const auto cache = nn::forward_cached(net, x);
  const auto grads = nn::backprop(net, cache, cache.output, nn::Loss::Mse);
  CHECK(grads.weights[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.biases[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backprop: scalar chain rule dL/dw = 2*z*x") {
  // z = w*x with x=2, w=1, target 0, L = z^2 (single element, so the mean
  // reduction is the identity): dL/dw = 2*z*x = 8.
  nn::Matrix w(1, 1);
  w << 1.0;
  const auto net = single_layer(w, nn::Vector::Zero(1), nn::Activation::Linear);
  nn::Matrix x(1, 1), t(1, 1);
  x << 2.0;
  t << 0.0;
  const auto cache = nn::forward_cached(net, x);
  const auto grads = nn::backprop(net, cache, t, nn::Loss::Mse);
  CHECK(grads.weights[0](0, 0) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("backprop matches central finite differences") {
  const std::vector<nn::Activation> pool{nn::Activation::Linear, nn::Activation::Selu,
                                         nn::Activation::Sigmoid, nn::Activation::Tanh,
                                         nn::Activation::Softmax};
  Rng rng(2024);
  for (nn::Loss kind : {nn::Loss::Mse, nn::Loss::BinaryCrossEntropy,
                        nn::Loss::CategoricalCrossEntropy}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto in_dim = static_cast<Eigen::Index>(2 + rng.integer(6));
      const auto out_dim = static_cast<Eigen::Index>(2 + rng.integer(6));
      nn::Network net = testutil::random_net_for(kind, rng, in_dim, out_dim, pool);
      const nn::Matrix x = random_matrix(rng, 4, in_dim, -1.0, 1.0);
      const nn::Matrix t = testutil::targets_for(kind, rng, 4, out_dim);
      CHECK(max_gradient_rel_error(net, x, t, kind) < 1e-4);
    }
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  nn::Matrix w(1, 1);
  w << 0.75;
  auto net = single_layer(w, nn::Vector::Zero(1), nn::Activation::Linear);
  nn::Optimizer opt({}, net);
  nn::Gradients grads;
  grads.weights.push_back(nn::Matrix::Zero(1, 1));
  grads.biases.push_back(nn::Vector::Zero(1));
  opt.step(net, grads);
  CHECK(net.layers[0].weights(0, 0) == 0.75);
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adam: first step with unit gradient moves by ~learning rate") {
  auto net = single_layer(nn::Matrix::Zero(1, 1), nn::Vector::Zero(1),
                          nn::Activation::Linear);
  nn::Optimizer opt({}, net);
  nn::Gradients grads;
  grads.weights.push_back(nn::Matrix::Ones(1, 1));
  grads.biases.push_back(nn::Vector::Zero(1));
  opt.step(net, grads);
  // bias-corrected m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
  CHECK(net.layers[0].weights(0, 0) ==
        doctest::Approx(-0.001).epsilon(1e-7));
}

TEST_CASE("sgd step is plain gradient descent") {
  auto net = single_layer(nn::Matrix::Ones(1, 1), nn::Vector::Zero(1),
                          nn::Activation::Linear);
  nn::OptimizerConfig config;
  config.kind = nn::OptimizerKind::Sgd;
  config.learning_rate = 0.1;
  nn::Optimizer opt(config, net);
  nn::Gradients grads;
  grads.weights.push_back(nn::Matrix::Ones(1, 1) * 2.0);
  grads.biases.push_back(nn::Vector::Ones(1));
  opt.step(net, grads);
  CHECK(net.layers[0].weights(0, 0) == doctest::Approx(0.8));
  CHECK(net.layers[0].bias(0) == doctest::Approx(-0.1));
}

TEST_CASE("glorot init: bound, determinism, seed sensitivity") {
  Rng a(5), b(5), c(6);
  const auto wa = nn::glorot_uniform(2, 2, a);
  const auto wb = nn::glorot_uniform(2, 2, b);
  const auto wc = nn::glorot_uniform(2, 2, c);
  const double limit = std::sqrt(6.0 / 4.0);
  CHECK(wa.cwiseAbs().maxCoeff() <= limit);
  CHECK(wa == wb);
  CHECK(wa != wc);
}

TEST_CASE("fit: identical seeds give identical trained parameters") {
  Rng data_rng(3);
  const nn::Matrix x = random_matrix(data_rng, 32, 4);
  const nn::Matrix y = random_matrix(data_rng, 32, 2);
  const auto train_once = [&]() {
    Rng init(77);
    nn::Network net = nn::make_network(
        {4, 8, 2}, {nn::Activation::Selu, nn::Activation::Linear}, init);
    nn::FitOptions options;
    options.epochs = 5;
    options.batch_size = 8;
    options.seed = 99;
    nn::fit(net, x, y, options);
    return net;
  };
  const nn::Network first = train_once();
  const nn::Network second = train_once();
  for (std::size_t i = 0; i < first.layers.size(); ++i) {
    CHECK(first.layers[i].weights == second.layers[i].weights);
    CHECK(first.layers[i].bias == second.layers[i].bias);
  }
}

TEST_CASE("fit: non-finite loss raises TrainingError with the epoch") {
  nn::Matrix x(1, 1), y(1, 1);
  x << std::numeric_limits<double>::infinity();
  y << 0.0;
  auto net = single_layer(nn::Matrix::Ones(1, 1), nn::Vector::Zero(1),
                          nn::Activation::Linear);
  nn::FitOptions options;
  options.epochs = 3;
  try {
    nn::fit(net, x, y, options);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.epoch == 1);
  }
}

TEST_SUITE_END();
