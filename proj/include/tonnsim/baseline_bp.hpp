#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tonnsim/chip.hpp"
#include "tonnsim/pinn.hpp"

namespace tonnsim {

// 3-layer bias-free sine MLP, f = W3 sin(W2 sin(W1 [x; t])). Bias-free keeps
// it congruent with what the meshes can realize.
struct DenseMlp {
  Eigen::MatrixXd w1;  // hidden x (dim+1)
  Eigen::MatrixXd w2;  // hidden x hidden
  Eigen::MatrixXd w3;  // 1 x hidden
};

DenseMlp mlp_init(int hidden, int in_dim, std::uint64_t seed);

double dense_forward(const DenseMlp& mlp, const Eigen::Ref<const Eigen::VectorXd>& x, double t);

class MlpField : public PointFunction {
 public:
  explicit MlpField(const DenseMlp& mlp) : mlp_(&mlp) {}
  double value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const override;

 private:
  const DenseMlp* mlp_;
};

struct ParamGradients {
  Eigen::MatrixXd g1, g2, g3;
};

struct GradientResult {
  ParamGradients grads;
  double loss = 0.0;
  std::int64_t inference_count = 0;
};

// Exact gradient of the FD residual loss (the same loss the on-chip path
// minimizes) with respect to the weights. The loss is a finite composition of
// forwards, so the gradient is an explicit chain-rule sum over stencil
// evaluations; forward_weights lets callers backprop through a perturbed
// realization of the same parameters (straight-through noise-in-the-loop).
GradientResult loss_param_gradient(const DenseMlp& params, const DenseMlp& forward_weights,
                                   const PDEProblem& prob, const CollocationBatch& batch,
                                   const FdConfig& cfg);
GradientResult loss_param_gradient(const DenseMlp& mlp, const PDEProblem& prob,
                                   const CollocationBatch& batch, const FdConfig& cfg);

struct BpTrainConfig {
  int epochs = 2000;
  int batch = 100;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  FdConfig fd;
  std::uint64_t train_seed = 1;
  double divergence_threshold = 1e6;
  // Hardware-aware variant: each epoch the forward/backward arithmetic runs
  // through a freshly-noised photonic realization of the current weights,
  // while updates still land on the ideal weights.
  bool noise_in_loop = false;
  NoiseConfig loop_noise;
  std::uint64_t loop_noise_seed = 101;
};

struct BpTrainResult {
  std::vector<double> loss_history;
  bool diverged = false;
  int epochs_run = 0;
};

BpTrainResult offchip_train(DenseMlp& mlp, const PDEProblem& prob, const BpTrainConfig& cfg);

// Dense matrix the mesh-mapped layer realizes under one noise draw.
Eigen::MatrixXd noisy_realization(const Eigen::MatrixXd& w, const NoiseConfig& noise_cfg,
                                  std::uint64_t seed);

struct DegradeResult {
  double clean_mse = 0.0;
  std::vector<double> noisy_mse;
};

// Maps the MLP onto a chip (svd_map per layer) and scores validation MSE
// noise-free and under n_seeds independent noise draws.
DegradeResult map_and_degrade(const DenseMlp& mlp, const PDEProblem& prob,
                              const NoiseConfig& noise_cfg, int n_seeds, int val_points,
                              std::uint64_t val_seed, std::uint64_t noise_seed_base);

}  // namespace tonnsim
