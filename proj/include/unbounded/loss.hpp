#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "unbounded/autodiff/jet.hpp"
#include "unbounded/autodiff/jet_batch.hpp"
#include "unbounded/networks/network.hpp"
#include "unbounded/problems.hpp"
#include "unbounded/sampling.hpp"

namespace unbounded::loss {

using autodiff::Jet2;
using autodiff::TapeScalar;
using networks::Network;
using problems::ProblemSpec;
using sampling::PointSet;

/// lambda_1..lambda_4 of the combined loss; `bnd` is ignored on the
/// infinite domain.
struct LossWeights {
  double pde = 1.0;
  double u = 1.0;
  double k = 1.0;
  double bnd = 1.0;

  void validate() const;
};

/// Full-batch training data: collocation points for the residual, interior
/// observations of u and k, and (semi-infinite only) Dirichlet samples.
struct Batch {
  PointSet collocation;
  PointSet obs_points;
  std::vector<double> obs_u;
  std::vector<double> obs_k;
  PointSet bnd_points;
  std::vector<double> bnd_u;

  void validate(problems::DomainKind kind) const;
};

/// R = k_x u_x + k_y u_y + k (u_xx + u_yy) - f, i.e. div(k grad u) - f.
template <class T>
T residual(const Jet2<T>& u, const Jet2<T>& k, double f) {
  return k.dx * u.dx + k.dy * u.dy + k.v * (u.dxx + u.dyy) - T(f);
}

// -- Scalar-tape route ------------------------------------------------------
// One TapeScalar per elementary operation. Slow, but every node is visible,
// which makes it the reference the batched route is checked against.

struct TapeLoss {
  TapeScalar total;
  TapeScalar pde;
  TapeScalar u;
  TapeScalar k;
  TapeScalar bnd;
};

TapeScalar residual_at(const Network& u_net, std::span<const TapeScalar> u_params,
                       const Network& k_net, std::span<const TapeScalar> k_params, double x,
                       double y, const ProblemSpec& spec);

TapeScalar loss_pde(const Network& u_net, std::span<const TapeScalar> u_params,
                    const Network& k_net, std::span<const TapeScalar> k_params,
                    const PointSet& collocation, const ProblemSpec& spec);

TapeScalar loss_data(const Network& net, std::span<const TapeScalar> params, const PointSet& points,
                     std::span<const double> targets);

TapeScalar loss_boundary(const Network& u_net, std::span<const TapeScalar> u_params,
                         const PointSet& bnd_points, std::span<const double> bnd_values);

TapeLoss loss_total(const Network& u_net, std::span<const TapeScalar> u_params,
                    const Network& k_net, std::span<const TapeScalar> k_params, const Batch& batch,
                    const LossWeights& weights, const ProblemSpec& spec);

// -- Batched route ----------------------------------------------------------

struct LossValues {
  double total = 0.0;
  double pde = 0.0;
  double u = 0.0;
  double k = 0.0;
  double bnd = 0.0;
};

/// Residuals at every row of a u jet (second order) and a k jet (first
/// order or higher), one column each.
Eigen::VectorXd residual_batch(const autodiff::JetBatch& u, const autodiff::JetBatch& k,
                               const Eigen::Ref<const Eigen::VectorXd>& f);

/// Loss and gradient over the concatenated parameter vector [theta_u, theta_k].
/// Point jets and source values are prepared once at construction; passes
/// run over fixed chunks of points so intermediates stay in cache, and the
/// k-network only carries first derivatives (the residual never uses k_xx
/// or k_yy). evaluate() reuses internal scratch, so one evaluator must not be
/// shared between threads.
class LossEvaluator {
 public:
  static constexpr std::size_t kChunk = 256;

  LossEvaluator(Network u_net, Network k_net, Batch batch, LossWeights weights, ProblemSpec spec);

  std::size_t u_parameter_count() const { return u_net_.parameter_count(); }
  std::size_t k_parameter_count() const { return k_net_.parameter_count(); }
  std::size_t parameter_count() const { return u_parameter_count() + k_parameter_count(); }

  const Network& u_net() const { return u_net_; }
  const Network& k_net() const { return k_net_; }
  const Batch& batch() const { return batch_; }
  const LossWeights& weights() const { return weights_; }
  const ProblemSpec& spec() const { return spec_; }

  /// Loss components at theta; writes the gradient when `grad` is nonempty.
  LossValues evaluate(std::span<const double> theta, std::span<double> grad) const;

 private:
  struct PdeChunk {
    autodiff::JetBatch u_in;  // second-order seeds
    autodiff::JetBatch k_in;  // first-order seeds
    Eigen::VectorXd f;
  };
  struct DataChunk {
    autodiff::JetBatch in;  // value-only seeds
    Eigen::VectorXd u;
    Eigen::VectorXd k;
  };
  struct Scratch {
    Network::Cache u_cache;
    Network::Cache k_cache;
    autodiff::JetBatch u_out;
    autodiff::JetBatch k_out;
    autodiff::JetBatch gu;
    autodiff::JetBatch gk;
  };

  double data_term(const Network& net, std::span<const double> params,
                   const std::vector<DataChunk>& chunks, bool use_k, double scale,
                   std::span<double> grad) const;

  Network u_net_;
  Network k_net_;
  Batch batch_;
  LossWeights weights_;
  ProblemSpec spec_;
  bool with_boundary_;
  std::vector<PdeChunk> pde_;
  std::vector<DataChunk> obs_;
  std::vector<DataChunk> bnd_;
  mutable Scratch scratch_;
};

}  // namespace unbounded::loss
