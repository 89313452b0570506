#include "tonnsim/baseline_bp.hpp"

#include <cmath>
#include <stdexcept>

#include "tonnsim/parallel.hpp"
#include "tonnsim/util.hpp"

namespace tonnsim {

DenseMlp mlp_init(int hidden, int in_dim, std::uint64_t seed) {
  if (hidden < 1 || in_dim < 1) throw std::invalid_argument("mlp_init: dims must be positive");
  Rng rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& w, int rows, int cols) {
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
    w.resize(rows, cols);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = gauss(rng);
  };
  DenseMlp mlp;
  fill(mlp.w1, hidden, in_dim);
  fill(mlp.w2, hidden, hidden);
  fill(mlp.w3, 1, hidden);
  return mlp;
}

double dense_forward(const DenseMlp& mlp, const Eigen::Ref<const Eigen::VectorXd>& x, double t) {
  if (x.size() + 1 != mlp.w1.cols())
    throw std::invalid_argument("dense_forward: input size mismatch");
  Eigen::VectorXd in(mlp.w1.cols());
  in.head(x.size()) = x;
  in[x.size()] = t;
  const Eigen::VectorXd a1 = (mlp.w1 * in).array().sin();
  const Eigen::VectorXd a2 = (mlp.w2 * a1).array().sin();
  return (mlp.w3 * a2)(0);
}

double MlpField::value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
  return dense_forward(*mlp_, x, t);
}

namespace {

struct StencilTrace {
  Eigen::VectorXd in, z1, a1, z2, a2;
  double f = 0.0;
};

}  // namespace

GradientResult loss_param_gradient(const DenseMlp& params, const DenseMlp& fw,
                                   const PDEProblem& prob, const CollocationBatch& batch,
                                   const FdConfig& cfg) {
  const int n = batch.size();
  if (n < 1) throw std::invalid_argument("loss_param_gradient: empty batch");
  const int w = 2 * prob.dim + 2;
  const double ex = cfg.eps_x, et = cfg.eps_t;

  // Stencil coordinates, same layout as the loss: base, +-e_i pairs, forward t.
  std::vector<Eigen::VectorXd> sx(static_cast<std::size_t>(n) * w);
  std::vector<double> st(static_cast<std::size_t>(n) * w);
  for (int p = 0; p < n; ++p) {
    for (int s = 0; s < w; ++s) {
      sx[p * w + s] = batch.x.col(p);
      st[p * w + s] = batch.t[p];
    }
    for (int i = 0; i < prob.dim; ++i) {
      sx[p * w + 1 + 2 * i][i] += ex;
      sx[p * w + 2 + 2 * i][i] -= ex;
    }
    st[p * w + w - 1] = batch.t[p] + et;
  }

  // Forward through every stencil point, keeping activations for backprop.
  std::vector<StencilTrace> tr(sx.size());
  parallel_for(sx.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t s = b; s < e; ++s) {
      StencilTrace& ts = tr[s];
      ts.in.resize(fw.w1.cols());
      ts.in.head(prob.dim) = sx[s];
      ts.in[prob.dim] = st[s];
      ts.z1 = fw.w1 * ts.in;
      ts.a1 = ts.z1.array().sin();
      ts.z2 = fw.w2 * ts.a1;
      ts.a2 = ts.z2.array().sin();
      ts.f = (fw.w3 * ts.a2)(0);
    }
  });

  GradientResult out;
  out.grads.g1 = Eigen::MatrixXd::Zero(params.w1.rows(), params.w1.cols());
  out.grads.g2 = Eigen::MatrixXd::Zero(params.w2.rows(), params.w2.cols());
  out.grads.g3 = Eigen::MatrixXd::Zero(params.w3.rows(), params.w3.cols());
  out.inference_count = static_cast<std::int64_t>(sx.size());

  double acc = 0.0;
  Eigen::VectorXd v2(fw.w2.rows()), v1(fw.w1.rows());
  for (int p = 0; p < n; ++p) {
    // u at each stencil point, then the residual and its linearization.
    Eigen::VectorXd u(w);
    for (int s = 0; s < w; ++s)
      u[s] = (prob.horizon - st[p * w + s]) * tr[p * w + s].f + sx[p * w + s].cwiseAbs().sum();
    const double u0 = u[0];
    Eigen::VectorXd grad(prob.dim);
    double lap = 0.0;
    for (int i = 0; i < prob.dim; ++i) {
      grad[i] = (u[1 + 2 * i] - u[2 + 2 * i]) / (2.0 * ex);
      lap += (u[1 + 2 * i] - 2.0 * u0 + u[2 + 2 * i]) / (ex * ex);
    }
    const double dudt = (u[w - 1] - u0) / et;
    const double r = dudt + lap - prob.grad_coeff * grad.squaredNorm() - prob.source;
    acc += r * r;

    // dr/du_s: base carries -1/et - 2D/ex^2; each +-pair carries the
    // laplacian weight 1/ex^2 -+ the gradient-square correction; the forward
    // time point carries 1/et.
    for (int s = 0; s < w; ++s) {
      double dr_du;
      if (s == 0) {
        dr_du = -1.0 / et - 2.0 * prob.dim / (ex * ex);
      } else if (s == w - 1) {
        dr_du = 1.0 / et;
      } else {
        const int i = (s - 1) / 2;
        const double sign = (s % 2 == 1) ? 1.0 : -1.0;  // +eps then -eps
        dr_du = 1.0 / (ex * ex) - sign * prob.grad_coeff * grad[i] / ex;
      }
      // d loss / d f_s, including the transform's (horizon - t) factor.
      const double omega =
          (2.0 / n) * r * dr_du * (prob.horizon - st[p * w + s]);
      if (omega == 0.0) continue;
      const StencilTrace& ts = tr[p * w + s];
      out.grads.g3.noalias() += omega * ts.a2.transpose();
      v2 = (fw.w3.transpose().col(0).array() * ts.z2.array().cos()).matrix();
      out.grads.g2.noalias() += omega * (v2 * ts.a1.transpose());
      v1 = ((fw.w2.transpose() * v2).array() * ts.z1.array().cos()).matrix();
      out.grads.g1.noalias() += omega * (v1 * ts.in.transpose());
    }
  }
  out.loss = acc / n;
  return out;
}

GradientResult loss_param_gradient(const DenseMlp& mlp, const PDEProblem& prob,
                                   const CollocationBatch& batch, const FdConfig& cfg) {
  return loss_param_gradient(mlp, mlp, prob, batch, cfg);
}

Eigen::MatrixXd noisy_realization(const Eigen::MatrixXd& w, const NoiseConfig& noise_cfg,
                                  std::uint64_t seed) {
  std::vector<ChipLayer> layers;
  layers.emplace_back(DenseSvdLayer{svd_map(w)});
  const auto neighbors = ChipInstance::angle_neighbors(layers);
  NoiseModel noise =
      sample_noise(ChipInstance::count_angles(layers), neighbors, noise_cfg, seed);
  ChipInstance chip(std::move(layers), std::move(noise));
  return chip.forward_batch(Eigen::MatrixXd::Identity(w.cols(), w.cols()));
}

BpTrainResult offchip_train(DenseMlp& mlp, const PDEProblem& prob, const BpTrainConfig& cfg) {
  if (cfg.epochs < 0) throw std::invalid_argument("offchip_train: negative epochs");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("offchip_train: bad learning rate");

  struct Moments {
    Eigen::MatrixXd m, v;
  };
  auto zeros_like = [](const Eigen::MatrixXd& w) {
    return Moments{Eigen::MatrixXd::Zero(w.rows(), w.cols()),
                   Eigen::MatrixXd::Zero(w.rows(), w.cols())};
  };
  Moments mo1 = zeros_like(mlp.w1), mo2 = zeros_like(mlp.w2), mo3 = zeros_like(mlp.w3);

  BpTrainResult res;
  Rng rng(cfg.train_seed);
  Rng noise_rng(cfg.loop_noise_seed);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const CollocationBatch batch = sample_collocation(cfg.batch, prob, cfg.fd, rng());
    GradientResult g;
    if (cfg.noise_in_loop) {
      DenseMlp noisy;
      noisy.w1 = noisy_realization(mlp.w1, cfg.loop_noise, noise_rng());
      noisy.w2 = noisy_realization(mlp.w2, cfg.loop_noise, noise_rng());
      noisy.w3 = noisy_realization(mlp.w3, cfg.loop_noise, noise_rng());
      g = loss_param_gradient(mlp, noisy, prob, batch, cfg.fd);
    } else {
      g = loss_param_gradient(mlp, prob, batch, cfg.fd);
    }
    res.loss_history.push_back(g.loss);
    if (!std::isfinite(g.loss) || g.loss > cfg.divergence_threshold) {
      res.diverged = true;
      res.epochs_run = epoch;
      return res;
    }
    const double t = epoch + 1;
    const double corr = std::sqrt(1.0 - std::pow(cfg.beta2, t)) / (1.0 - std::pow(cfg.beta1, t));
    auto adam = [&](Eigen::MatrixXd& w, Moments& mo, const Eigen::MatrixXd& grad) {
      mo.m = cfg.beta1 * mo.m + (1.0 - cfg.beta1) * grad;
      mo.v = cfg.beta2 * mo.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
      w.array() -= cfg.learning_rate * corr * mo.m.array() /
                   (mo.v.array().sqrt() + cfg.adam_eps);
    };
    adam(mlp.w1, mo1, g.grads.g1);
    adam(mlp.w2, mo2, g.grads.g2);
    adam(mlp.w3, mo3, g.grads.g3);
  }
  res.epochs_run = cfg.epochs;
  return res;
}

DegradeResult map_and_degrade(const DenseMlp& mlp, const PDEProblem& prob,
                              const NoiseConfig& noise_cfg, int n_seeds, int val_points,
                              std::uint64_t val_seed, std::uint64_t noise_seed_base) {
  if (n_seeds < 1) throw std::invalid_argument("map_and_degrade: need at least one seed");
  const std::vector<Eigen::MatrixXd> weights{mlp.w1, mlp.w2, mlp.w3};

  DegradeResult out;
  {
    const NoiseConfig quiet{0.0, 0.0, false};
    ChipInstance clean = chip_from_weights(weights, quiet, 0);
    ChipField field(clean, prob.dim);
    out.clean_mse = validation_mse(field, prob, val_points, val_seed);
  }
  for (int s = 0; s < n_seeds; ++s) {
    ChipInstance noisy =
        chip_from_weights(weights, noise_cfg, mix_seed(noise_seed_base, static_cast<std::uint64_t>(s)));
    ChipField field(noisy, prob.dim);
    out.noisy_mse.push_back(validation_mse(field, prob, val_points, val_seed));
  }
  return out;
}

}  // namespace tonnsim
