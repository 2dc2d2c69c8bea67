#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "raekit/errors.hpp"
#include "raekit/rng.hpp"

// Minimal dense neural-network engine: forward pass, analytic
// backpropagation, SGD/Adam, and the activation/loss vocabulary the rest of
// the toolkit builds on. Batches are row-major: one sample per row.
namespace raekit::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { Linear, Selu, Sigmoid, Softmax, Tanh };
enum class Loss { Mse, BinaryCrossEntropy, CategoricalCrossEntropy };

const char* to_string(Activation a);
const char* to_string(Loss l);
Activation activation_from_string(const std::string& name);

// Self-normalizing constants from Klambauer et al.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

// Elementwise for all kinds except Softmax, which normalizes each row.
Matrix apply_activation(Activation kind, const Matrix& z);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Linear;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

struct Network {
  std::vector<DenseLayer> layers;

  Eigen::Index input_dim() const { return layers.front().in_dim(); }
  Eigen::Index output_dim() const { return layers.back().out_dim(); }
};

// Throws ShapeError if consecutive layer dimensions disagree.
void validate(const Network& net);

// Glorot-uniform samples in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// Stack of dense layers sized dims[0] -> dims[1] -> ... -> dims.back(),
// Glorot weights and zero biases; activations.size() == dims.size()-1.
Network make_network(const std::vector<Eigen::Index>& dims,
                     const std::vector<Activation>& activations, Rng& rng);

Matrix forward(const Network& net, const Matrix& batch);

// Per-layer inputs and pre-activations retained for backprop.
struct ForwardCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> preacts;
  Matrix output;
};

ForwardCache forward_cached(const Network& net, const Matrix& batch);

// Mean-reduced losses: Mse and BinaryCrossEntropy average over every
// element, CategoricalCrossEntropy over batch rows. Cross-entropy inputs are
// clamped away from 0/1 by 1e-12 before the log.
double loss_eval(Loss kind, const Matrix& predicted, const Matrix& target);

// d loss / d predicted, consistent with loss_eval's reduction and clamping.
Matrix loss_gradient(Loss kind, const Matrix& predicted, const Matrix& target);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

Gradients backprop(const Network& net, const ForwardCache& cache,
                   const Matrix& target, Loss kind);

// Backprop from an externally supplied d loss / d output. Also returns
// d loss / d input, which lets networks be chained (GAN generator updates).
std::pair<Gradients, Matrix> backprop_through(const Network& net,
                                              const ForwardCache& cache,
                                              const Matrix& output_grad);

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Owns per-parameter Adam moments; shapes are fixed to the network it was
// created for.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, const Network& net);

  void step(Network& net, const Gradients& grads);

  std::int64_t step_count() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::vector<Matrix> m_weights_, v_weights_;
  std::vector<Vector> m_biases_, v_biases_;
  std::int64_t steps_ = 0;
};

struct FitOptions {
  Loss loss = Loss::Mse;
  int epochs = 30;
  int batch_size = 128;
  std::uint64_t seed = 0;  // per-epoch batch shuffling
  OptimizerConfig optimizer{};
};

// Minibatch training in place. Returns the mean training loss per epoch and
// throws TrainingError (with the epoch index) if the loss stops being finite.
std::vector<double> fit(Network& net, const Matrix& inputs,
                        const Matrix& targets, const FitOptions& options);

}  // namespace raekit::nn
