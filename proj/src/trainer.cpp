#include "tonnsim/trainer.hpp"

#include <chrono>
#include <cmath>

namespace tonnsim {

Eigen::VectorXd spsa_gradient(const LossFn& loss_fn, const Eigen::Ref<const Eigen::VectorXd>& phi,
                              double base_loss, const SpsaConfig& cfg, Rng& rng) {
  if (cfg.num_perturbations < 1) throw std::invalid_argument("spsa: N must be >= 1");
  if (!(cfg.sampling_radius > 0.0)) throw std::invalid_argument("spsa: mu must be > 0");
  if (!std::isfinite(base_loss)) throw NonFiniteLossError("spsa: base loss is not finite");

  const auto d = phi.size();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd xi(d);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = 1.0 / (cfg.num_perturbations * cfg.sampling_radius);
  for (int i = 0; i < cfg.num_perturbations; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) xi[k] = gauss(rng);
    const double li = loss_fn(phi + cfg.sampling_radius * xi);
    if (!std::isfinite(li))
      throw NonFiniteLossError("spsa: perturbed loss " + std::to_string(i) + " is not finite (" +
                               std::to_string(li) + ")");
    g.noalias() += (li - base_loss) * scale * xi;
  }
  return g;
}

Eigen::VectorXd sign_step(const Eigen::Ref<const Eigen::VectorXd>& phi,
                          const Eigen::Ref<const Eigen::VectorXd>& g_hat, double alpha) {
  if (phi.size() != g_hat.size()) throw std::invalid_argument("sign_step: length mismatch");
  Eigen::VectorXd out(phi.size());
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const double s = g_hat[i] > 0.0 ? 1.0 : (g_hat[i] < 0.0 ? -1.0 : 0.0);
    out[i] = wrap_angle(phi[i] - alpha * s);
  }
  return out;
}

EpochRecord train_epoch(ChipInstance& chip, const PDEProblem& prob, const ZoTrainConfig& cfg,
                        TrainState& state) {
  const auto t0 = std::chrono::steady_clock::now();
  const CollocationBatch batch = sample_collocation(cfg.batch, prob, cfg.fd, state.train_rng());
  const ChipField field(chip, prob.dim);

  const LossResult base = residual_loss(field, prob, batch, cfg.fd);
  if (!std::isfinite(base.loss)) throw NonFiniteLossError("epoch base loss is not finite");

  const Eigen::VectorXd phi0 = chip.params();
  const LossFn loss_fn = [&](const Eigen::Ref<const Eigen::VectorXd>& p) {
    chip.set_params(p);
    return residual_loss(field, prob, batch, cfg.fd).loss;
  };

  Eigen::VectorXd g;
  try {
    g = spsa_gradient(loss_fn, phi0, base.loss, cfg.spsa, state.train_rng);
  } catch (const NonFiniteLossError&) {
    chip.set_params(phi0);
    throw;
  }

  // Angles wrap and attenuations clamp inside set_params; the raw step is the
  // plain signed move so sigma coordinates are not wrapped.
  Eigen::VectorXd stepped(phi0.size());
  for (Eigen::Index i = 0; i < phi0.size(); ++i) {
    const double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
    stepped[i] = phi0[i] - state.lr * s;
  }
  chip.set_params(stepped);

  state.cum_inferences +=
      base.inference_count * static_cast<std::int64_t>(cfg.spsa.num_perturbations + 1);
  ++state.epoch;

  EpochRecord rec;
  rec.epoch = state.epoch;
  rec.train_loss = base.loss;
  rec.cum_inferences = state.cum_inferences;
  rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

TrainRun train(ChipInstance& chip, const PDEProblem& prob, const ZoTrainConfig& cfg,
               const EpochCallback& on_epoch) {
  if (cfg.epochs < 0) throw std::invalid_argument("train: negative epochs");
  if (cfg.val_every < 1) throw std::invalid_argument("train: val_every must be >= 1");
  if (cfg.max_retry < 0) throw std::invalid_argument("train: negative max_retry");

  TrainRun run;
  TrainState state;
  state.train_rng.seed(cfg.train_seed);
  state.lr = cfg.learning_rate;

  const ChipField field(chip, prob.dim);
  int consecutive_failures = 0;
  int retries_this_epoch = 0;
  while (state.epoch < cfg.epochs) {
    if (cfg.lr_step_decay && state.epoch > 0 && state.epoch % 2000 == 0)
      state.lr = cfg.learning_rate * std::pow(0.5, state.epoch / 2000);
    EpochRecord rec;
    try {
      rec = train_epoch(chip, prob, cfg, state);
    } catch (const NonFiniteLossError& e) {
      ++consecutive_failures;
      ++retries_this_epoch;
      if (consecutive_failures > cfg.max_retry) {
        run.aborted = true;
        run.abort_reason = e.what();
        break;
      }
      continue;  // same epoch index, fresh randomness from the advanced rng
    }
    consecutive_failures = 0;
    rec.retries = retries_this_epoch;
    retries_this_epoch = 0;
    if (rec.epoch % cfg.val_every == 0 || rec.epoch == cfg.epochs)
      rec.val_mse = validation_mse(field, prob, cfg.val_points, cfg.val_seed);
    run.records.push_back(rec);
    if (on_epoch) on_epoch(rec, chip);
  }

  run.total_inferences = state.cum_inferences;
  if (!run.records.empty() && run.records.back().val_mse)
    run.final_val_mse = *run.records.back().val_mse;
  else if (cfg.epochs == 0)
    run.final_val_mse = validation_mse(field, prob, cfg.val_points, cfg.val_seed);
  return run;
}

}  // namespace tonnsim
