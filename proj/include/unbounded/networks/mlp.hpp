#pragma once

#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "unbounded/autodiff/jet.hpp"
#include "unbounded/autodiff/jet_batch.hpp"

namespace unbounded::networks {

/// Dense tanh network R^2 -> R with `hidden_layers` hidden layers of
/// `width` neurons each, written (L, W).
struct MlpConfig {
  int hidden_layers = 16;
  int width = 32;

  void validate() const;
  /// (fan_in, fan_out) of every affine layer, input layer first.
  std::vector<std::pair<int, int>> layer_shapes() const;
  /// 2W + W + (L-1)(W^2 + W) + W + 1.
  std::size_t parameter_count() const;
};

/// Per-layer weights (fan_in x fan_out) and biases. The flat layout stores,
/// layer by layer, the weight matrix column-major followed by the bias.
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  std::vector<double> flatten() const;
  static MlpParams unflatten(const MlpConfig& config, std::span<const double> flat);
};

/// Glorot-uniform weights, zero biases; deterministic per seed.
MlpParams mlp_init(const MlpConfig& config, std::uint64_t seed);

namespace detail {

template <class A>
struct is_jet : std::false_type {};
template <class T>
struct is_jet<autodiff::Jet2<T>> : std::true_type {};

template <class A, class P>
A lift(const P& p) {
  if constexpr (is_jet<A>::value) {
    return A::constant(p);
  } else {
    return A(p);
  }
}

}  // namespace detail

/// Scalar forward pass over any arithmetic: P is the parameter type (double
/// or TapeScalar) and A the activation type (P or Jet2<P>). The summation
/// order is fixed, so the value component of a jet evaluation equals the
/// plain evaluation bit for bit.
template <class P, class A>
A mlp_forward(const MlpConfig& config, std::span<const P> flat, const A& x, const A& y) {
  using std::tanh;
  using autodiff::tanh;
  const auto shapes = config.layer_shapes();
  std::vector<A> act{x, y};
  std::size_t offset = 0;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto [fan_in, fan_out] = shapes[l];
    const auto in = static_cast<std::size_t>(fan_in);
    const std::size_t bias_offset = offset + in * static_cast<std::size_t>(fan_out);
    std::vector<A> next;
    next.reserve(static_cast<std::size_t>(fan_out));
    for (std::size_t j = 0; j < static_cast<std::size_t>(fan_out); ++j) {
      A acc = detail::lift<A>(flat[bias_offset + j]);
      for (std::size_t i = 0; i < in; ++i) {
        acc = acc + flat[offset + j * in + i] * act[i];
      }
      next.push_back(l + 1 < shapes.size() ? A(tanh(acc)) : acc);
    }
    act = std::move(next);
    offset = bias_offset + static_cast<std::size_t>(fan_out);
  }
  return act.front();
}

/// Intermediate jets of the batched forward pass plus scratch space; kept
/// between calls so repeated passes over equal-sized chunks do not allocate.
struct MlpCache {
  autodiff::JetBatch input;
  std::vector<autodiff::JetBatch> preacts;  // pre-activation jets (hidden layers)
  std::vector<autodiff::JetBatch> acts;     // tanh jets (hidden layers)
  autodiff::JetBatch grad_a, grad_b;
};

/// Batched jet forward pass; rows are points. The jet order of `input`
/// decides which derivatives are propagated.
void mlp_forward_batch(const MlpConfig& config, std::span<const double> flat,
                       const autodiff::JetBatch& input, MlpCache& cache, autodiff::JetBatch& out);

/// Accumulates d(loss)/d(params) into `grad` given the adjoint of the
/// output jet of the preceding mlp_forward_batch on the same cache.
void mlp_backward_batch(const MlpConfig& config, std::span<const double> flat, MlpCache& cache,
                        const autodiff::JetBatch& grad_out, std::span<double> grad);

}  // namespace unbounded::networks
