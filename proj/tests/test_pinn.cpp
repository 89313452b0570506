#include <doctest.h>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "tonnsim/chip.hpp"
#include "tonnsim/pinn.hpp"
#include "tonnsim/util.hpp"

using namespace tonnsim;

TEST_CASE("problem presets and the closed-form solution") {
  const PDEProblem p20 = PDEProblem::hjb20();
  CHECK(p20.dim == 20);
  CHECK(p20.source == doctest::Approx(-2.0));
  CHECK(p20.linear_rate() == doctest::Approx(1.0));
  // toys rescale the source so the closed form is |x|_1 + (T - t) at every dim
  const PDEProblem p2 = PDEProblem::hjb_toy(2);
  CHECK(p2.source == doctest::Approx(-1.1));
  CHECK(p2.linear_rate() == doctest::Approx(1.0));
  const PDEProblem p4 = PDEProblem::hjb_toy(4);
  CHECK(p4.linear_rate() == doctest::Approx(1.0));
  CHECK(PDEProblem::hjb_toy(20).source == doctest::Approx(p20.source));

  Eigen::VectorXd x(2);
  x << 0.25, -0.5;
  CHECK(p2.terminal(x) == doctest::Approx(0.75));
  CHECK(p2.exact_solution(x, p2.horizon) == doctest::Approx(0.75));
  CHECK(p2.exact_solution(x, 0.0) == doctest::Approx(0.75 + 1.0));
}

TEST_CASE("finite differences are exact on quadratics") {
  const PDEProblem prob = PDEProblem::hjb_toy(3);
  const FdConfig cfg;
  // u = x.x + 2t is quadratic in x, linear in t: central/forward FD are exact
  const LambdaField u([](const Eigen::Ref<const Eigen::VectorXd>& x, double t) {
    return x.squaredNorm() + 2.0 * t;
  });
  Eigen::VectorXd x(3);
  x << 0.3, 0.5, 0.7;
  const DerivativeEstimate d = fd_derivatives(u, prob, x, 0.2, cfg);
  CHECK(d.evals == 2 * 3 + 2);
  CHECK(d.u == doctest::Approx(x.squaredNorm() + 0.4));
  CHECK(d.du_dt == doctest::Approx(2.0));
  CHECK(d.laplacian == doctest::Approx(6.0).epsilon(1e-9));
  for (int i = 0; i < 3; ++i) CHECK(d.grad_x[i] == doctest::Approx(2.0 * x[i]).epsilon(1e-9));
}

TEST_CASE("derivative stencils refuse to leave the domain") {
  const PDEProblem prob = PDEProblem::hjb_toy(2);
  const FdConfig cfg;
  const LambdaField u([](const Eigen::Ref<const Eigen::VectorXd>&, double) { return 0.0; });
  Eigen::VectorXd edge(2);
  edge << 0.0, 0.5;  // x - eps_x leaves [0,1]
  CHECK_THROWS_AS(fd_derivatives(u, prob, edge, 0.5, cfg), std::invalid_argument);
  Eigen::VectorXd inside(2);
  inside << 0.5, 0.5;
  CHECK_THROWS_AS(fd_derivatives(u, prob, inside, prob.horizon, cfg),
                  std::invalid_argument);  // t + eps_t leaves the horizon
  CHECK_NOTHROW(fd_derivatives(u, prob, inside, prob.horizon - cfg.eps_t, cfg));
}

TEST_CASE("exact solution annihilates the residual") {
  for (int dim : {2, 5, 20}) {
    const PDEProblem prob = dim == 20 ? PDEProblem::hjb20() : PDEProblem::hjb_toy(dim);
    const FdConfig cfg;
    // as a raw field
    const LambdaField u([&prob](const Eigen::Ref<const Eigen::VectorXd>& x, double t) {
      return prob.exact_solution(x, t);
    });
    const CollocationBatch batch = sample_collocation(200, prob, cfg, 99);
    const LossResult res = residual_loss_field(u, prob, batch, cfg);
    CHECK(res.loss <= 1e-12);
    CHECK(res.inference_count == 200 * (2 * dim + 2));

    // as a transformed constant net f = linear_rate
    const double a = prob.linear_rate();
    const LambdaField f([a](const Eigen::Ref<const Eigen::VectorXd>&, double) { return a; });
    const LossResult res2 = residual_loss(f, prob, batch, cfg);
    CHECK(res2.loss <= 1e-12);
    CHECK(validation_mse(f, prob, 500, 7) <= 1e-24);
  }
}

TEST_CASE("transform pins the terminal value bit-exactly") {
  const PDEProblem prob = PDEProblem::hjb_toy(3);
  const LambdaField f([](const Eigen::Ref<const Eigen::VectorXd>& x, double t) {
    return 17.0 * std::sin(3.0 * x.sum() + t);  // arbitrary nonsense net
  });
  Rng rng(4);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Eigen::MatrixXd xs(3, 50);
  for (int j = 0; j < 50; ++j)
    for (int i = 0; i < 3; ++i) xs(i, j) = ud(rng);
  for (int j = 0; j < 50; ++j) {
    const double u = transformed_forward(f, prob, xs.col(j), prob.horizon);
    CHECK(u == prob.terminal(xs.col(j)));
  }
  const TransformedField tf(f, prob);
  CHECK(initial_loss(tf, prob, xs) == 0.0);
}

TEST_CASE("collocation sampling stays FD-safe and uniform") {
  const PDEProblem prob = PDEProblem::hjb_toy(4);
  const FdConfig cfg;
  const int n = 20000;
  const CollocationBatch batch = sample_collocation(n, prob, cfg, 2024);
  REQUIRE(batch.x.cols() == n);
  REQUIRE(batch.t.size() == n);
  CHECK(batch.x.minCoeff() >= cfg.eps_x);
  CHECK(batch.x.maxCoeff() <= 1.0 - cfg.eps_x);
  CHECK(batch.t.minCoeff() >= 0.0);
  CHECK(batch.t.maxCoeff() <= prob.horizon - cfg.eps_t);
  // mean of U(eps, 1-eps) is 0.5; sd of the sample mean ~ 1/sqrt(12 n d)
  CHECK(batch.x.mean() == doctest::Approx(0.5).epsilon(0.01));
  CHECK(batch.t.mean() == doctest::Approx((prob.horizon - cfg.eps_t) / 2).epsilon(0.05));

  const CollocationBatch again = sample_collocation(n, prob, cfg, 2024);
  CHECK((again.x - batch.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validation points cover the whole cube") {
  const PDEProblem prob = PDEProblem::hjb_toy(2);
  const CollocationBatch v = sample_validation_points(20000, prob, 5);
  CHECK(v.x.minCoeff() < 0.01);   // no FD margin
  CHECK(v.x.maxCoeff() > 0.99);
  CHECK(v.t.maxCoeff() > 0.99 * prob.horizon);
}

TEST_CASE("chip field pads input and batches like the scalar path") {
  const ChipInstance chip =
      make_tt_chip(TTShape({4, 4}, {4, 4}, {1, 2, 1}), 1, NoiseConfig{}, 0, 1);
  const PDEProblem prob = PDEProblem::hjb_toy(3);
  const ChipField f(chip, prob.dim);
  Eigen::MatrixXd xs(3, 7);
  Eigen::VectorXd ts(7);
  Rng rng(8);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int j = 0; j < 7; ++j) {
    for (int i = 0; i < 3; ++i) xs(i, j) = ud(rng);
    ts[j] = ud(rng);
  }
  const Eigen::VectorXd batch = f.value_batch(xs, ts);
  for (int j = 0; j < 7; ++j) CHECK(batch[j] == f.value(xs.col(j), ts[j]));
}

TEST_CASE("residual loss rejects unsafe batches") {
  const PDEProblem prob = PDEProblem::hjb_toy(2);
  const FdConfig cfg;
  const LambdaField f([](const Eigen::Ref<const Eigen::VectorXd>&, double) { return 0.0; });
  CollocationBatch bad;
  bad.x = Eigen::MatrixXd::Zero(2, 1);  // on the boundary
  bad.t = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(residual_loss(f, prob, bad, cfg), std::invalid_argument);
}
