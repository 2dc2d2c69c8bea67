#include "raekit/nn.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace raekit::nn {

namespace {

constexpr double kLogClamp = 1e-12;

void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << where << ": shape mismatch " << a.rows() << "x" << a.cols()
        << " vs " << b.rows() << "x" << b.cols();
    throw ShapeError(msg.str());
  }
}

Matrix softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double zmax = z.row(i).maxCoeff();
    Eigen::ArrayXd e = (z.row(i).array() - zmax).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

// dL/dZ for elementwise activations, given pre-activation z, activated a
// and upstream dL/dA.
Matrix elementwise_backward(Activation kind, const Matrix& z, const Matrix& a,
                            const Matrix& da) {
  switch (kind) {
    case Activation::Linear:
      return da;
    case Activation::Selu:
      return da.binaryExpr(z, [](double g, double x) {
        return g * (x > 0.0 ? kSeluLambda
                            : kSeluLambda * kSeluAlpha * std::exp(x));
      });
    case Activation::Sigmoid:
      return (da.array() * a.array() * (1.0 - a.array())).matrix();
    case Activation::Tanh:
      return (da.array() * (1.0 - a.array().square())).matrix();
    case Activation::Softmax:
      break;  // handled by caller
  }
  throw Error("elementwise_backward: unreachable activation");
}

// Row-wise softmax Jacobian product: dZ = a .* (dA - (dA . a)).
Matrix softmax_backward(const Matrix& a, const Matrix& da) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double dot = a.row(i).dot(da.row(i));
    out.row(i) = (a.row(i).array() * (da.row(i).array() - dot)).matrix();
  }
  return out;
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Selu: return "selu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

const char* to_string(Loss l) {
  switch (l) {
    case Loss::Mse: return "mse";
    case Loss::BinaryCrossEntropy: return "binary_cross_entropy";
    case Loss::CategoricalCrossEntropy: return "categorical_cross_entropy";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::Linear;
  if (name == "selu") return Activation::Selu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "softmax") return Activation::Softmax;
  if (name == "tanh") return Activation::Tanh;
  throw ParseError("unknown activation name: " + name);
}

Matrix apply_activation(Activation kind, const Matrix& z) {
  switch (kind) {
    case Activation::Linear:
      return z;
    case Activation::Selu:
      return z.unaryExpr([](double x) {
        return x > 0.0 ? kSeluLambda * x
                       : kSeluLambda * kSeluAlpha * std::expm1(x);
      });
    case Activation::Sigmoid:
      return z.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    case Activation::Tanh:
      return z.unaryExpr([](double x) { return std::tanh(x); });
    case Activation::Softmax:
      return softmax_rows(z);
  }
  throw Error("apply_activation: unreachable activation");
}

void validate(const Network& net) {
  if (net.layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    if (layer.weights.rows() != layer.bias.size()) {
      throw ShapeError("layer " + std::to_string(i) +
                       ": bias size does not match weight rows");
    }
    if (i > 0 && net.layers[i - 1].out_dim() != layer.in_dim()) {
      throw ShapeError("layer " + std::to_string(i) +
                       ": input dim does not match previous output dim");
    }
  }
}

Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (rows <= 0 || cols <= 0) throw ShapeError("glorot_uniform: non-positive shape");
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      w(i, j) = rng.uniform(-limit, limit);
    }
  }
  return w;
}

Network make_network(const std::vector<Eigen::Index>& dims,
                     const std::vector<Activation>& activations, Rng& rng) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw ShapeError("make_network: need n+1 dims for n activations");
  }
  Network net;
  net.layers.reserve(activations.size());
  for (std::size_t i = 0; i < activations.size(); ++i) {
    DenseLayer layer;
    layer.weights = glorot_uniform(dims[i + 1], dims[i], rng);
    layer.bias = Vector::Zero(dims[i + 1]);
    layer.activation = activations[i];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Matrix forward(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim()) {
    throw ShapeError("forward: batch width " + std::to_string(batch.cols()) +
                     " does not match network input dim " +
                     std::to_string(net.input_dim()));
  }
  Matrix a = batch;
  for (const auto& layer : net.layers) {
    Matrix z = (a * layer.weights.transpose()).rowwise() + layer.bias.transpose();
    a = apply_activation(layer.activation, z);
  }
  return a;
}

ForwardCache forward_cached(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim()) {
    throw ShapeError("forward_cached: batch width does not match input dim");
  }
  ForwardCache cache;
  cache.inputs.reserve(net.layers.size());
  cache.preacts.reserve(net.layers.size());
  Matrix a = batch;
  for (const auto& layer : net.layers) {
    cache.inputs.push_back(a);
    Matrix z = (a * layer.weights.transpose()).rowwise() + layer.bias.transpose();
    cache.preacts.push_back(z);
    a = apply_activation(layer.activation, z);
  }
  cache.output = std::move(a);
  return cache;
}

double loss_eval(Loss kind, const Matrix& predicted, const Matrix& target) {
  require_same_shape(predicted, target, "loss_eval");
  const double n = static_cast<double>(predicted.size());
  switch (kind) {
    case Loss::Mse:
      return (predicted - target).squaredNorm() / n;
    case Loss::BinaryCrossEntropy: {
      Eigen::ArrayXXd p =
          predicted.array().max(kLogClamp).min(1.0 - kLogClamp);
      const Eigen::ArrayXXd t = target.array();
      return -(t * p.log() + (1.0 - t) * (1.0 - p).log()).sum() / n;
    }
    case Loss::CategoricalCrossEntropy: {
      Eigen::ArrayXXd p = predicted.array().max(kLogClamp);
      return -(target.array() * p.log()).sum() /
             static_cast<double>(predicted.rows());
    }
  }
  throw Error("loss_eval: unreachable loss kind");
}

Matrix loss_gradient(Loss kind, const Matrix& predicted, const Matrix& target) {
  require_same_shape(predicted, target, "loss_gradient");
  const double n = static_cast<double>(predicted.size());
  switch (kind) {
    case Loss::Mse:
      return (2.0 / n) * (predicted - target);
    case Loss::BinaryCrossEntropy:
      // Zero where the clamp is active, matching loss_eval.
      return predicted.binaryExpr(target, [n](double p, double t) {
        if (p <= kLogClamp || p >= 1.0 - kLogClamp) return 0.0;
        return (p - t) / (p * (1.0 - p) * n);
      });
    case Loss::CategoricalCrossEntropy: {
      const double rows = static_cast<double>(predicted.rows());
      return predicted.binaryExpr(target, [rows](double p, double t) {
        if (p <= kLogClamp) return 0.0;
        return -t / (p * rows);
      });
    }
  }
  throw Error("loss_gradient: unreachable loss kind");
}

std::pair<Gradients, Matrix> backprop_through(const Network& net,
                                              const ForwardCache& cache,
                                              const Matrix& output_grad) {
  const std::size_t n_layers = net.layers.size();
  if (cache.inputs.size() != n_layers || cache.preacts.size() != n_layers) {
    throw ShapeError("backprop_through: cache does not match network");
  }
  Gradients grads;
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);

  Matrix da = output_grad;
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& layer = net.layers[li];
    const Matrix& z = cache.preacts[li];
    const Matrix a = (li == n_layers - 1)
                         ? cache.output
                         : apply_activation(layer.activation, z);
    Matrix dz = layer.activation == Activation::Softmax
                    ? softmax_backward(a, da)
                    : elementwise_backward(layer.activation, z, a, da);
    grads.weights[li] = dz.transpose() * cache.inputs[li];
    grads.biases[li] = dz.colwise().sum().transpose();
    da = dz * layer.weights;  // dL/d input of this layer
  }
  return {std::move(grads), std::move(da)};
}

Gradients backprop(const Network& net, const ForwardCache& cache,
                   const Matrix& target, Loss kind) {
  Matrix dout = loss_gradient(kind, cache.output, target);
  return backprop_through(net, cache, dout).first;
}

Optimizer::Optimizer(OptimizerConfig config, const Network& net)
    : config_(config) {
  if (config_.kind == OptimizerKind::Adam) {
    for (const auto& layer : net.layers) {
      m_weights_.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
      v_weights_.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
      m_biases_.push_back(Vector::Zero(layer.bias.size()));
      v_biases_.push_back(Vector::Zero(layer.bias.size()));
    }
  }
}

namespace {

template <class Param>
void adam_update(Param& param, const Param& grad, Param& m, Param& v,
                 const OptimizerConfig& c, double bias1, double bias2) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = (c.beta2 * v.array() + (1.0 - c.beta2) * grad.array().square()).matrix();
  param.array() -=
      c.learning_rate * (m.array() / bias1) / ((v.array() / bias2).sqrt() + c.epsilon);
}

}  // namespace

void Optimizer::step(Network& net, const Gradients& grads) {
  if (grads.weights.size() != net.layers.size()) {
    throw ShapeError("Optimizer::step: gradient count does not match layers");
  }
  ++steps_;
  if (config_.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      net.layers[i].weights -= config_.learning_rate * grads.weights[i];
      net.layers[i].bias -= config_.learning_rate * grads.biases[i];
    }
    return;
  }
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    adam_update(net.layers[i].weights, grads.weights[i], m_weights_[i],
                v_weights_[i], config_, bias1, bias2);
    adam_update(net.layers[i].bias, grads.biases[i], m_biases_[i],
                v_biases_[i], config_, bias1, bias2);
  }
}

std::vector<double> fit(Network& net, const Matrix& inputs,
                        const Matrix& targets, const FitOptions& options) {
  if (inputs.rows() != targets.rows()) {
    throw ShapeError("fit: inputs and targets row counts differ");
  }
  if (inputs.rows() == 0) throw DataError("fit: empty training set");
  validate(net);

  const Eigen::Index n = inputs.rows();
  const Eigen::Index batch = std::max<Eigen::Index>(1, options.batch_size);
  Optimizer opt(options.optimizer, net);
  Rng rng(options.seed);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  std::vector<double> epoch_losses;
  epoch_losses.reserve(static_cast<std::size_t>(options.epochs));
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index count = std::min(batch, n - start);
      Matrix x(count, inputs.cols());
      Matrix y(count, targets.cols());
      for (Eigen::Index r = 0; r < count; ++r) {
        x.row(r) = inputs.row(order[static_cast<std::size_t>(start + r)]);
        y.row(r) = targets.row(order[static_cast<std::size_t>(start + r)]);
      }
      ForwardCache cache = forward_cached(net, x);
      const double batch_loss = loss_eval(options.loss, cache.output, y);
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("training diverged (non-finite loss) at epoch " +
                                std::to_string(epoch + 1),
                            epoch + 1);
      }
      loss_sum += batch_loss * static_cast<double>(count);
      Gradients grads = backprop(net, cache, y, options.loss);
      opt.step(net, grads);
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(n));
  }
  return epoch_losses;
}

}  // namespace raekit::nn
