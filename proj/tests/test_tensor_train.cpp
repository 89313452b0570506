#include <doctest.h>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "tonnsim/tensor_train.hpp"
#include "tonnsim/util.hpp"

using namespace tonnsim;
using testing::brute_force_dense;
using testing::random_tt;

namespace {
const TTShape kFlagshipShape({4, 8, 4, 8}, {8, 4, 8, 4}, {1, 2, 1, 2, 1});
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(TTShape({4}, {4}, {1, 2}), std::invalid_argument);       // boundary rank != 1
  CHECK_THROWS_AS(TTShape({4, 4}, {4}, {1, 1}), std::invalid_argument);    // length mismatch
  CHECK_THROWS_AS(TTShape({4, 0}, {4, 4}, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(TTShape({}, {}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(TTShape({4, 4}, {4, 4}, {1, -2, 1}), std::invalid_argument);
  const TTShape ok({2, 3}, {4, 5}, {1, 7, 1});
  CHECK(ok.out_dim() == 6);
  CHECK(ok.in_dim() == 20);
}

TEST_CASE("parameter count") {
  CHECK(tt_param_count(kFlagshipShape) == 256);
  // direct sum r_{k-1} m_k n_k r_k
  const TTShape s({2, 3}, {4, 5}, {1, 6, 1});
  CHECK(tt_param_count(s) == 1 * 2 * 4 * 6 + 6 * 3 * 5 * 1);
}

TEST_CASE("single-core train is just the dense matrix") {
  Rng rng(42);
  const TTShape s({5}, {7}, {1, 1});
  const TTCores tt = random_tt(s, rng);
  Eigen::MatrixXd direct(5, 7);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 7; ++j) direct(i, j) = tt.at(0, 0, i, j, 0);
  CHECK((tt_to_dense(tt) - direct).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(7, -1.0, 1.0);
  CHECK((tt_matvec(tt, x) - direct * x).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("densify matches brute-force rank-path sum") {
  Rng rng(7);
  for (const TTShape& s : {TTShape({2, 3}, {3, 2}, {1, 4, 1}),
                           TTShape({2, 2, 2}, {2, 2, 2}, {1, 2, 3, 1}),
                           TTShape({4, 4}, {4, 4}, {1, 2, 1})}) {
    const TTCores tt = random_tt(s, rng);
    const Eigen::MatrixXd oracle = brute_force_dense(s, tt);
    const Eigen::MatrixXd dense = tt_to_dense(tt);
    CHECK((dense - oracle).cwiseAbs().maxCoeff() < 1e-12 * oracle.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("matvec matches densified matvec including the big 1024 shape") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const TTShape& s = trial % 2 ? kFlagshipShape : TTShape({2, 3, 2}, {3, 2, 3}, {1, 3, 2, 1});
    const TTCores tt = random_tt(s, rng, 0.3);
    const Eigen::MatrixXd dense = tt_to_dense(tt);
    Eigen::VectorXd x(s.in_dim());
    std::normal_distribution<double> nd;
    for (int i = 0; i < x.size(); ++i) x(i) = nd(rng);
    const Eigen::VectorXd ref = dense * x;
    const Eigen::VectorXd got = tt_matvec(tt, x);
    CHECK((got - ref).norm() < 1e-12 * (ref.norm() + 1.0));
  }
}

TEST_CASE("sweep rejects wrong input length") {
  Rng rng(3);
  const TTCores tt = random_tt(kFlagshipShape, rng);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(100);
  CHECK_THROWS_AS(tt_matvec(tt, x), std::invalid_argument);
}

TEST_CASE("core matrix layout: rows (i*rn + s), cols (j*rp + p)") {
  Rng rng(5);
  const TTShape s({3, 2}, {2, 3}, {1, 2, 1});
  const TTCores tt = random_tt(s, rng);
  const Eigen::MatrixXd a0 = tt_core_matrix(tt, 0);
  REQUIRE(a0.rows() == 3 * 2);  // m_1 * r_1
  REQUIRE(a0.cols() == 2 * 1);  // n_1 * r_0
  CHECK(a0(2 * 2 + 1, 1 * 1 + 0) == tt.at(0, 0, 2, 1, 1));
  const Eigen::MatrixXd a1 = tt_core_matrix(tt, 1);
  REQUIRE(a1.rows() == 2 * 1);
  REQUIRE(a1.cols() == 3 * 2);
  CHECK(a1(1, 2 * 2 + 1) == tt.at(1, 1, 1, 2, 0));
}

TEST_CASE("init scales densified entries to variance 1/in_dim") {
  const TTShape s({4, 4}, {4, 4}, {1, 2, 1});  // 16x16, target variance 1/16
  double sum = 0.0, sumsq = 0.0;
  std::int64_t count = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const Eigen::MatrixXd w = tt_to_dense(tt_init(s, seed));
    sum += w.sum();
    sumsq += w.squaredNorm();
    count += w.size();
  }
  const double mean = sum / static_cast<double>(count);
  const double var = sumsq / static_cast<double>(count) - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0 / 16.0).epsilon(0.10));
}

TEST_CASE("init is seed-deterministic") {
  const TTCores a = tt_init(kFlagshipShape, 99);
  const TTCores b = tt_init(kFlagshipShape, 99);
  const TTCores c = tt_init(kFlagshipShape, 100);
  CHECK(a.cores == b.cores);
  CHECK(a.cores != c.cores);
}
