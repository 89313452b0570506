#include "tonnsim/pinn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tonnsim/parallel.hpp"
#include "tonnsim/util.hpp"

namespace tonnsim {

PDEProblem PDEProblem::hjb_toy(int d) {
  if (d < 1) throw std::invalid_argument("problem dimension must be >= 1");
  PDEProblem p;
  p.dim = d;
  p.source = -(1.0 + p.grad_coeff * d);  // keeps the closed form at |x|_1 + (T - t)
  return p;
}

double PDEProblem::terminal(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return x.cwiseAbs().sum();
}

double PDEProblem::exact_solution(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
  return terminal(x) + linear_rate() * (horizon - t);
}

Eigen::VectorXd PointFunction::value_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                           const Eigen::Ref<const Eigen::VectorXd>& ts) const {
  if (xs.cols() != ts.size())
    throw std::invalid_argument("value_batch: point count mismatch");
  Eigen::VectorXd out(ts.size());
  parallel_for(static_cast<std::size_t>(ts.size()), [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      const auto i = static_cast<Eigen::Index>(c);
      out[i] = value(xs.col(i), ts[i]);
    }
  });
  return out;
}

ChipField::ChipField(const ChipInstance& chip, int dim) : chip_(&chip), dim_(dim) {
  if (chip.input_dim() < dim + 1)
    throw std::invalid_argument("chip input width " + std::to_string(chip.input_dim()) +
                                " cannot hold a " + std::to_string(dim + 1) + "-vector");
  if (chip.output_dim() != 1)
    throw std::invalid_argument("chip must produce a scalar");
}

double ChipField::value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
  Eigen::VectorXd in = Eigen::VectorXd::Zero(chip_->input_dim());
  in.head(dim_) = x;
  in[dim_] = t;
  return chip_->forward(in)[0];
}

Eigen::VectorXd ChipField::value_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                       const Eigen::Ref<const Eigen::VectorXd>& ts) const {
  if (xs.rows() != dim_ || xs.cols() != ts.size())
    throw std::invalid_argument("value_batch: bad batch shape");
  Eigen::MatrixXd in = Eigen::MatrixXd::Zero(chip_->input_dim(), xs.cols());
  in.topRows(dim_) = xs;
  in.row(dim_) = ts.transpose();
  return chip_->forward_batch(in).row(0);
}

double transformed_forward(const PointFunction& f, const PDEProblem& prob,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double t) {
  return (prob.horizon - t) * f.value(x, t) + prob.terminal(x);
}

double TransformedField::value(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
  return transformed_forward(*f_, *prob_, x, t);
}

Eigen::VectorXd TransformedField::value_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                              const Eigen::Ref<const Eigen::VectorXd>& ts) const {
  Eigen::VectorXd raw = f_->value_batch(xs, ts);
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    raw[i] = (prob_->horizon - ts[i]) * raw[i] + prob_->terminal(xs.col(i));
  return raw;
}

namespace {

void check_fd_cfg(const FdConfig& cfg) {
  if (!(cfg.eps_x > 0.0) || !(cfg.eps_t > 0.0))
    throw std::invalid_argument("FD steps must be positive");
}

bool fd_safe(const PDEProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& x, double t,
             const FdConfig& cfg) {
  if (!(t >= 0.0 && t + cfg.eps_t <= prob.horizon)) return false;
  for (int i = 0; i < prob.dim; ++i)
    if (!(x[i] >= cfg.eps_x && x[i] <= 1.0 - cfg.eps_x)) return false;
  return true;
}

// Stencil layout per point: base, then (x + eps e_i, x - eps e_i) per
// coordinate, then the forward time point. 2*dim + 2 entries.
void fill_stencil(const PDEProblem& prob, const Eigen::Ref<const Eigen::VectorXd>& x, double t,
                  const FdConfig& cfg, Eigen::Ref<Eigen::MatrixXd> xs,
                  Eigen::Ref<Eigen::VectorXd> ts) {
  const int w = 2 * prob.dim + 2;
  for (int s = 0; s < w; ++s) {
    xs.col(s) = x;
    ts[s] = t;
  }
  for (int i = 0; i < prob.dim; ++i) {
    xs(i, 1 + 2 * i) += cfg.eps_x;
    xs(i, 2 + 2 * i) -= cfg.eps_x;
  }
  ts[w - 1] = t + cfg.eps_t;
}

// Derivatives from the stencil values, in the fill_stencil order.
DerivativeEstimate stencil_estimate(const PDEProblem& prob, const FdConfig& cfg,
                                    const Eigen::Ref<const Eigen::VectorXd>& u) {
  DerivativeEstimate d;
  d.u = u[0];
  d.grad_x.resize(prob.dim);
  d.laplacian = 0.0;
  for (int i = 0; i < prob.dim; ++i) {
    const double up = u[1 + 2 * i], um = u[2 + 2 * i];
    d.grad_x[i] = (up - um) / (2.0 * cfg.eps_x);
    d.laplacian += (up - 2.0 * d.u + um) / (cfg.eps_x * cfg.eps_x);
  }
  d.du_dt = (u[2 * prob.dim + 1] - d.u) / cfg.eps_t;
  d.evals = 2 * prob.dim + 2;
  return d;
}

}  // namespace

DerivativeEstimate fd_derivatives(const PointFunction& u_fn, const PDEProblem& prob,
                                  const Eigen::Ref<const Eigen::VectorXd>& x, double t,
                                  const FdConfig& cfg) {
  check_fd_cfg(cfg);
  if (x.size() != prob.dim) throw std::invalid_argument("fd_derivatives: wrong point dimension");
  if (!fd_safe(prob, x, t, cfg))
    throw std::invalid_argument("fd_derivatives: stencil leaves the domain");
  const int w = 2 * prob.dim + 2;
  Eigen::MatrixXd xs(prob.dim, w);
  Eigen::VectorXd ts(w);
  fill_stencil(prob, x, t, cfg, xs, ts);
  const Eigen::VectorXd u = u_fn.value_batch(xs, ts);
  return stencil_estimate(prob, cfg, u);
}

double hjb_residual(const DerivativeEstimate& d, const PDEProblem& prob) {
  return d.du_dt + d.laplacian - prob.grad_coeff * d.grad_x.squaredNorm() - prob.source;
}

namespace {

LossResult residual_loss_impl(const PointFunction& u, const PDEProblem& prob,
                              const CollocationBatch& batch, const FdConfig& cfg) {
  check_fd_cfg(cfg);
  const int n = batch.size();
  if (n < 1) throw std::invalid_argument("residual_loss: empty batch");
  if (batch.x.rows() != prob.dim) throw std::invalid_argument("residual_loss: wrong dimension");
  const int w = 2 * prob.dim + 2;
  for (int p = 0; p < n; ++p)
    if (!fd_safe(prob, batch.x.col(p), batch.t[p], cfg))
      throw std::invalid_argument("residual_loss: point " + std::to_string(p) +
                                  " violates FD safety");

  Eigen::MatrixXd xs(prob.dim, static_cast<Eigen::Index>(n) * w);
  Eigen::VectorXd ts(static_cast<Eigen::Index>(n) * w);
  for (int p = 0; p < n; ++p)
    fill_stencil(prob, batch.x.col(p), batch.t[p], cfg, xs.middleCols(p * w, w),
                 ts.segment(p * w, w));
  const Eigen::VectorXd vals = u.value_batch(xs, ts);

  double acc = 0.0;
  for (int p = 0; p < n; ++p) {
    const DerivativeEstimate d = stencil_estimate(prob, cfg, vals.segment(p * w, w));
    const double r = hjb_residual(d, prob);
    acc += r * r;
  }
  return {acc / n, static_cast<std::int64_t>(n) * w};
}

}  // namespace

LossResult residual_loss(const PointFunction& f, const PDEProblem& prob,
                         const CollocationBatch& batch, const FdConfig& cfg) {
  TransformedField u(f, prob);
  return residual_loss_impl(u, prob, batch, cfg);
}

LossResult residual_loss_field(const PointFunction& u, const PDEProblem& prob,
                               const CollocationBatch& batch, const FdConfig& cfg) {
  return residual_loss_impl(u, prob, batch, cfg);
}

double initial_loss(const PointFunction& u, const PDEProblem& prob,
                    const Eigen::Ref<const Eigen::MatrixXd>& xs) {
  if (xs.cols() < 1) throw std::invalid_argument("initial_loss: empty batch");
  Eigen::VectorXd ts = Eigen::VectorXd::Constant(xs.cols(), prob.horizon);
  const Eigen::VectorXd vals = u.value_batch(xs, ts);
  double acc = 0.0;
  for (Eigen::Index p = 0; p < xs.cols(); ++p) {
    const double m = vals[p] - prob.terminal(xs.col(p));
    acc += m * m;
  }
  return acc / static_cast<double>(xs.cols());
}

CollocationBatch sample_collocation(int n, const PDEProblem& prob, const FdConfig& cfg,
                                    std::uint64_t seed) {
  check_fd_cfg(cfg);
  if (n < 1) throw std::invalid_argument("sample_collocation: need at least one point");
  if (cfg.eps_x >= 0.5) throw std::invalid_argument("sample_collocation: eps_x leaves no domain");
  CollocationBatch b;
  b.x.resize(prob.dim, n);
  b.t.resize(n);
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(cfg.eps_x, 1.0 - cfg.eps_x);
  std::uniform_real_distribution<double> ut(0.0, prob.horizon - cfg.eps_t);
  for (int p = 0; p < n; ++p) {
    for (int i = 0; i < prob.dim; ++i) b.x(i, p) = ux(rng);
    b.t[p] = ut(rng);
  }
  return b;
}

CollocationBatch sample_validation_points(int n, const PDEProblem& prob, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_validation_points: need at least one point");
  CollocationBatch b;
  b.x.resize(prob.dim, n);
  b.t.resize(n);
  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int p = 0; p < n; ++p) {
    for (int i = 0; i < prob.dim; ++i) b.x(i, p) = u01(rng);
    b.t[p] = u01(rng) * prob.horizon;
  }
  return b;
}

double validation_mse(const PointFunction& f, const PDEProblem& prob, int n_val,
                      std::uint64_t seed) {
  const CollocationBatch pts = sample_validation_points(n_val, prob, seed);
  TransformedField u(f, prob);
  const Eigen::VectorXd vals = u.value_batch(pts.x, pts.t);
  double acc = 0.0;
  for (int p = 0; p < n_val; ++p) {
    const double m = vals[p] - prob.exact_solution(pts.x.col(p), pts.t[p]);
    acc += m * m;
  }
  return acc / n_val;
}

}  // namespace tonnsim
