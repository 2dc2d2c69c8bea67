#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "raekit/experiment.hpp"
#include "raekit/nn.hpp"
#include "raekit/rng.hpp"

// Shared test machinery: the finite-difference gradient oracle, random net
// builders, and a reduced synthetic benchmark for the slower suites.
namespace testutil {

using raekit::Rng;
namespace nn = raekit::nn;

inline nn::Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                double lo = -1.0, double hi = 1.0) {
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

// Loss evaluated through the public forward pass only; this is the
// independent path the analytic gradients are checked against.
inline double loss_at(const nn::Network& net, const nn::Matrix& x,
                      const nn::Matrix& t, nn::Loss kind) {
  return nn::loss_eval(kind, nn::forward(net, x), t);
}

// Central finite differences over every weight and bias; returns the
// maximum relative error against backprop.
inline double max_gradient_rel_error(nn::Network net, const nn::Matrix& x,
                                     const nn::Matrix& t, nn::Loss kind,
                                     double h = 1e-5) {
  const nn::ForwardCache cache = nn::forward_cached(net, x);
  const nn::Gradients grads = nn::backprop(net, cache, t, kind);

  double worst = 0.0;
  const auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = loss_at(net, x, t, kind);
    param = saved - h;
    const double down = loss_at(net, x, t, kind);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    auto& layer = net.layers[li];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        check(layer.weights(r, c), grads.weights[li](r, c));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      check(layer.bias(r), grads.biases[li](r));
    }
  }
  return worst;
}

// Random small net whose head matches the loss: sigmoid for BCE, softmax
// for CCE, anything for MSE.
inline nn::Network random_net_for(nn::Loss kind, Rng& rng, Eigen::Index in_dim,
                                  Eigen::Index out_dim,
                                  const std::vector<nn::Activation>& hidden_pool) {
  const int n_hidden = static_cast<int>(rng.integer(3));  // 0..2 hidden layers
  std::vector<Eigen::Index> dims{in_dim};
  std::vector<nn::Activation> activations;
  for (int i = 0; i < n_hidden; ++i) {
    dims.push_back(1 + static_cast<Eigen::Index>(rng.integer(16)));
    activations.push_back(hidden_pool[rng.integer(hidden_pool.size())]);
  }
  dims.push_back(out_dim);
  switch (kind) {
    case nn::Loss::Mse:
      activations.push_back(hidden_pool[rng.integer(hidden_pool.size())]);
      break;
    case nn::Loss::BinaryCrossEntropy:
      activations.push_back(nn::Activation::Sigmoid);
      break;
    case nn::Loss::CategoricalCrossEntropy:
      activations.push_back(nn::Activation::Softmax);
      break;
  }
  return nn::make_network(dims, activations, rng);
}

inline nn::Matrix targets_for(nn::Loss kind, Rng& rng, Eigen::Index rows,
                              Eigen::Index out_dim) {
  switch (kind) {
    case nn::Loss::Mse:
      return random_matrix(rng, rows, out_dim, -1.5, 1.5);
    case nn::Loss::BinaryCrossEntropy:
      return random_matrix(rng, rows, out_dim, 0.05, 0.95);
    case nn::Loss::CategoricalCrossEntropy: {
      nn::Matrix t = nn::Matrix::Zero(rows, out_dim);
      for (Eigen::Index r = 0; r < rows; ++r) {
        t(r, static_cast<Eigen::Index>(rng.integer(static_cast<std::uint64_t>(out_dim)))) = 1.0;
      }
      return t;
    }
  }
  return {};
}

// Scaled-down synthetic benchmark (same structure as the default config,
// fewer windows and epochs) for tests that train real models.
inline raekit::experiment::ExperimentConfig small_benchmark_config(
    const std::filesystem::path& out, std::uint64_t seed = 42,
    Eigen::Index windows_per_class = 40) {
  raekit::experiment::ExperimentConfig config;
  config.out = out;
  config.channels = 6;
  config.window_len = 30;
  config.window_step = 3;
  config.seed = seed;
  raekit::data::SyntheticConfig synthetic;
  synthetic.channels = config.channels;
  synthetic.window_len = config.window_len;
  synthetic.windows_per_class = windows_per_class;
  synthetic.seed = raekit::Rng(seed).fork(raekit::experiment::kSeedData).seed();
  config.synthetic = synthetic;
  config.rae_epochs = 20;
  config.classifier_epochs = 15;
  config.gan.epochs = 15;
  config.gan.snapshot_epochs = {1, 5, 15};
  config.gan_generated = 200;
  return config;
}

// Unique scratch directory under the build tree.
inline std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("raekit_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
