#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "tonnsim/chip.hpp"

namespace tonnsim {

// Hamilton-Jacobi-Bellman family on the unit hypercube:
//   du/dt + lap(u) - grad_coeff * |grad u|^2 = source,   u(x, T) = |x|_1,
// with closed-form solution |x|_1 + a (T - t), a = -source - grad_coeff * dim
// (a = 1 at the 20-dim defaults). hjb_toy(d) rescales the source so the
// closed form stays |x|_1 + (T - t) at every dimension; hjb_toy(20) == hjb20.
struct PDEProblem {
  int dim = 20;
  double grad_coeff = 0.05;
  double source = -2.0;
  double horizon = 1.0;

  static PDEProblem hjb20() { return {}; }
  static PDEProblem hjb_toy(int d);

  double terminal(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double exact_solution(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const;
  double linear_rate() const { return -source - grad_coeff * dim; }
};

struct FdConfig {
  double eps_x = 0.01;
  double eps_t = 0.01;
};

struct CollocationBatch {
  Eigen::MatrixXd x;  // dim x n
  Eigen::VectorXd t;
  int size() const { return static_cast<int>(t.size()); }
};

struct DerivativeEstimate {
  double u = 0.0;
  double du_dt = 0.0;
  Eigen::VectorXd grad_x;
  double laplacian = 0.0;
  int evals = 0;  // distinct field evaluations consumed (2*dim + 2)
};

// Black-box scalar network f(x, t) with an optional batched path. Batch
// evaluation must be value-identical to per-point evaluation; the default
// implementation just loops.
class PointFunction {
 public:
  virtual ~PointFunction() = default;
  virtual double value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const = 0;
  virtual Eigen::VectorXd value_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                      const Eigen::Ref<const Eigen::VectorXd>& ts) const;
};

// Adapts a chip to (x, t): input assembled as [x; t] and zero-padded to the
// chip's input width.
class ChipField : public PointFunction {
 public:
  ChipField(const ChipInstance& chip, int dim);
  double value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const override;
  Eigen::VectorXd value_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                              const Eigen::Ref<const Eigen::VectorXd>& ts) const override;

 private:
  const ChipInstance* chip_;
  int dim_;
};

class LambdaField : public PointFunction {
 public:
  using Fn = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&, double)>;
  explicit LambdaField(Fn fn) : fn_(std::move(fn)) {}
  double value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const override {
    return fn_(x, t);
  }

 private:
  Fn fn_;
};

// Terminal-exact ansatz u(x,t) = (horizon - t) * f(x,t) + |x|_1; at t=horizon
// the f term is multiplied by exactly 0.0, so the terminal condition holds
// bit-exactly for any finite net.
double transformed_forward(const PointFunction& f, const PDEProblem& prob,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double t);

// View of a raw net as the transformed solution field u.
class TransformedField : public PointFunction {
 public:
  TransformedField(const PointFunction& f, const PDEProblem& prob) : f_(&f), prob_(&prob) {}
  double value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const override;
  Eigen::VectorXd value_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                              const Eigen::Ref<const Eigen::VectorXd>& ts) const override;

 private:
  const PointFunction* f_;
  const PDEProblem* prob_;
};

// Central spatial differences plus one forward temporal difference; exactly
// 2*dim + 2 evaluations of u_fn. Rejects points whose stencil leaves
// [0,1]^dim x [0, horizon].
DerivativeEstimate fd_derivatives(const PointFunction& u_fn, const PDEProblem& prob,
                                  const Eigen::Ref<const Eigen::VectorXd>& x, double t,
                                  const FdConfig& cfg);

double hjb_residual(const DerivativeEstimate& d, const PDEProblem& prob);

struct LossResult {
  double loss = 0.0;
  std::int64_t inference_count = 0;
};

// Mean squared PDE residual of the transformed net over the batch. One batched
// net evaluation covers all stencil points; the residual reduction runs in
// index order.
LossResult residual_loss(const PointFunction& f, const PDEProblem& prob,
                         const CollocationBatch& batch, const FdConfig& cfg);

// Same loss computed on a raw solution field u (no transform applied).
LossResult residual_loss_field(const PointFunction& u, const PDEProblem& prob,
                               const CollocationBatch& batch, const FdConfig& cfg);

// Mean squared terminal mismatch of a solution field at t = horizon. Exactly 0
// for any TransformedField by construction.
double initial_loss(const PointFunction& u, const PDEProblem& prob,
                    const Eigen::Ref<const Eigen::MatrixXd>& xs);

// x uniform in [eps_x, 1-eps_x]^dim, t uniform in [0, horizon - eps_t], so
// every FD stencil stays inside the domain. Per point: dim x-draws then t.
CollocationBatch sample_collocation(int n, const PDEProblem& prob, const FdConfig& cfg,
                                    std::uint64_t seed);

// Fresh uniform points over the full domain (no FD-safety margin needed).
CollocationBatch sample_validation_points(int n, const PDEProblem& prob, std::uint64_t seed);

// Mean squared error of the transformed net against the exact solution.
double validation_mse(const PointFunction& f, const PDEProblem& prob, int n_val,
                      std::uint64_t seed);

}  // namespace tonnsim
