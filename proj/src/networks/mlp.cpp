#include "unbounded/networks/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace unbounded::networks {

using autodiff::JetBatch;
using autodiff::Matrix;

void MlpConfig::validate() const {
  if (hidden_layers < 1 || width < 1) {
    throw std::invalid_argument("MlpConfig: hidden_layers and width must be positive");
  }
}

std::vector<std::pair<int, int>> MlpConfig::layer_shapes() const {
  validate();
  std::vector<std::pair<int, int>> shapes;
  shapes.emplace_back(2, width);
  for (int l = 1; l < hidden_layers; ++l) shapes.emplace_back(width, width);
  shapes.emplace_back(width, 1);
  return shapes;
}

std::size_t MlpConfig::parameter_count() const {
  validate();
  const auto w = static_cast<std::size_t>(width);
  const auto l = static_cast<std::size_t>(hidden_layers);
  return 2 * w + w + (l - 1) * (w * w + w) + w + 1;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data(), weights[l].data() + weights[l].size());
    flat.insert(flat.end(), biases[l].data(), biases[l].data() + biases[l].size());
  }
  return flat;
}

MlpParams MlpParams::unflatten(const MlpConfig& config, std::span<const double> flat) {
  if (flat.size() != config.parameter_count()) {
    throw std::invalid_argument("MlpParams::unflatten: expected " +
                                std::to_string(config.parameter_count()) + " values, got " +
                                std::to_string(flat.size()));
  }
  MlpParams p;
  std::size_t offset = 0;
  for (const auto& [in, out] : config.layer_shapes()) {
    p.weights.emplace_back(Eigen::Map<const Matrix>(flat.data() + offset, in, out));
    offset += static_cast<std::size_t>(in * out);
    p.biases.emplace_back(Eigen::Map<const Eigen::VectorXd>(flat.data() + offset, out));
    offset += static_cast<std::size_t>(out);
  }
  return p;
}

MlpParams mlp_init(const MlpConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MlpParams p;
  for (const auto& [in, out] : config.layer_shapes()) {
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(in, out);
    for (Eigen::Index j = 0; j < out; ++j) {
      for (Eigen::Index i = 0; i < in; ++i) w(i, j) = dist(rng);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return p;
}

void mlp_forward_batch(const MlpConfig& config, std::span<const double> flat,
                       const JetBatch& input, MlpCache& cache, JetBatch& out) {
  if (flat.size() != config.parameter_count()) {
    throw std::invalid_argument("mlp_forward_batch: parameter vector has wrong length");
  }
  if (input.cols() != 2) throw std::invalid_argument("mlp_forward_batch: input must have 2 columns");
  const auto shapes = config.layer_shapes();
  const std::size_t hidden = shapes.size() - 1;
  cache.input = input;
  cache.preacts.resize(hidden);
  cache.acts.resize(hidden);
  const JetBatch* act = &cache.input;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto [in, out_dim] = shapes[l];
    const Eigen::Map<const Matrix> w(flat.data() + offset, in, out_dim);
    offset += static_cast<std::size_t>(in * out_dim);
    const double* b = flat.data() + offset;
    offset += static_cast<std::size_t>(out_dim);
    if (l == hidden) {
      autodiff::linear_forward(*act, w, b, out);
      return;
    }
    JetBatch& z = cache.preacts[l];
    autodiff::linear_forward(*act, w, b, z);
    autodiff::tanh_forward(z, cache.acts[l]);
    act = &cache.acts[l];
  }
}

void mlp_backward_batch(const MlpConfig& config, std::span<const double> flat, MlpCache& cache,
                        const JetBatch& grad_out, std::span<double> grad) {
  if (grad.size() != flat.size() || flat.size() != config.parameter_count()) {
    throw std::invalid_argument("mlp_backward_batch: gradient vector has wrong length");
  }
  const auto shapes = config.layer_shapes();
  const std::size_t hidden = shapes.size() - 1;
  if (cache.acts.size() != hidden) {
    throw std::logic_error("mlp_backward_batch: cache does not match configuration");
  }
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& [in, out] : shapes) {
    offsets.push_back(offset);
    offset += static_cast<std::size_t>(in * out + out);
  }

  // g holds the adjoint of the current layer's output; spare receives the
  // next one, then the two swap.
  JetBatch* g = &cache.grad_a;
  JetBatch* spare = &cache.grad_b;
  *g = grad_out;
  for (std::size_t l = shapes.size(); l-- > 0;) {
    const auto [in, out] = shapes[l];
    if (l < hidden) {
      autodiff::tanh_backward(cache.preacts[l], cache.acts[l].v(), *g, *spare);
      std::swap(g, spare);
    }
    const std::size_t o = offsets[l];
    const Eigen::Map<const Matrix> w(flat.data() + o, in, out);
    Eigen::Map<Matrix> gw(grad.data() + o, in, out);
    double* gb = grad.data() + o + static_cast<std::size_t>(in * out);
    const JetBatch& layer_in = l == 0 ? cache.input : cache.acts[l - 1];
    autodiff::linear_backward(layer_in, *g, w, gw, gb, l > 0 ? spare : nullptr);
    std::swap(g, spare);
  }
}

}  // namespace unbounded::networks
