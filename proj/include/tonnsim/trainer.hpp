#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tonnsim/chip.hpp"
#include "tonnsim/pinn.hpp"
#include "tonnsim/util.hpp"

namespace tonnsim {

struct SpsaConfig {
  int num_perturbations = 10;
  double sampling_radius = 0.01;  // radians
  std::uint64_t seed = 0;
};

struct ZoTrainConfig {
  int epochs = 0;
  int batch = 100;
  double learning_rate = 1e-3;
  SpsaConfig spsa;
  FdConfig fd;
  int val_every = 50;
  int val_points = 1000;
  int max_retry = 3;
  bool lr_step_decay = false;  // halve the rate every 2000 epochs when on
  std::uint64_t train_seed = 1;
  std::uint64_t val_seed = 2;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_mse;
  std::int64_t cum_inferences = 0;
  double wall_s = 0.0;
  int retries = 0;
};

struct TrainRun {
  std::vector<EpochRecord> records;
  std::int64_t total_inferences = 0;
  double final_val_mse = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

// Raised when a loss evaluation comes back non-finite.
class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using LossFn = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

// One-sided SPSA estimate over N standard-normal directions:
//   g = sum_i (L(phi + mu xi_i) - base_loss) / (N mu) * xi_i.
// Exactly N loss calls; base_loss is the caller's L(phi).
Eigen::VectorXd spsa_gradient(const LossFn& loss_fn, const Eigen::Ref<const Eigen::VectorXd>& phi,
                              double base_loss, const SpsaConfig& cfg, Rng& rng);

// phi - alpha * sign(g) elementwise (sign(0) = 0), reduced mod 2*pi.
Eigen::VectorXd sign_step(const Eigen::Ref<const Eigen::VectorXd>& phi,
                          const Eigen::Ref<const Eigen::VectorXd>& g_hat, double alpha);

struct TrainState {
  Rng train_rng;
  std::int64_t cum_inferences = 0;
  int epoch = 0;  // next epoch index (0-based)
  double lr = 0.0;
};

// One training step: fresh batch, base loss, N perturbed losses (each
// reprogramming the whole phase vector through the noise model), SPSA
// estimate, sign update. Rolls the chip back and rethrows if any loss
// evaluation is non-finite.
EpochRecord train_epoch(ChipInstance& chip, const PDEProblem& prob, const ZoTrainConfig& cfg,
                        TrainState& state);

using EpochCallback = std::function<void(const EpochRecord&, const ChipInstance&)>;

// Full run. Validation MSE is computed every val_every epochs and at the
// final epoch, always from the fixed validation seed. A failed epoch is
// retried with fresh randomness; max_retry consecutive failures abort the
// run (records so far are kept and aborted is set).
TrainRun train(ChipInstance& chip, const PDEProblem& prob, const ZoTrainConfig& cfg,
               const EpochCallback& on_epoch = nullptr);

}  // namespace tonnsim
