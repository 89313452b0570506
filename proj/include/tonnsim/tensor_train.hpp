#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tonnsim {

// Factorized shape of a matrix W of size (m_1*...*m_L) x (n_1*...*n_L).
// ranks has L+1 entries with ranks.front() == ranks.back() == 1.
// Row/column multi-indices are mixed-radix with factor 1 the slowest digit.
struct TTShape {
  std::vector<int> out_factors;
  std::vector<int> in_factors;
  std::vector<int> ranks;

  TTShape() = default;
  TTShape(std::vector<int> out, std::vector<int> in, std::vector<int> r);

  int order() const { return static_cast<int>(out_factors.size()); }
  std::int64_t out_dim() const;
  std::int64_t in_dim() const;
  bool operator==(const TTShape&) const = default;
};

std::int64_t tt_param_count(const TTShape& shape);

// Train of cores G_k, each a 4-way array [r_{k-1}, m_k, n_k, r_k] stored
// row-major in that order. W(i, j) = prod_k G_k(i_k, j_k) as rank slices.
struct TTCores {
  TTShape shape;
  std::vector<std::vector<double>> cores;

  double at(int k, int rp, int i, int j, int rn) const {
    const auto& s = shape;
    return cores[k][((static_cast<std::size_t>(rp) * s.out_factors[k] + i) * s.in_factors[k] + j) *
                        s.ranks[k + 1] +
                    rn];
  }
};

// Core k flattened to the matrix applied during the contraction sweep:
// (m_k * r_k) rows by (n_k * r_{k-1}) cols, row (i*r_k + s), col (j*r_{k-1} + p).
Eigen::MatrixXd tt_core_matrix(const TTCores& tt, int k);

// Contraction sweep y = W x using one prebuilt core matrix per core. The
// per-fiber arithmetic is fixed, so results do not depend on how callers
// batch or thread around this.
Eigen::VectorXd tt_sweep_apply(const TTShape& shape, const std::vector<Eigen::MatrixXd>& core_mats,
                               const Eigen::Ref<const Eigen::VectorXd>& x);

Eigen::VectorXd tt_matvec(const TTCores& tt, const Eigen::Ref<const Eigen::VectorXd>& x);

Eigen::MatrixXd tt_to_dense(const TTCores& tt);

// Gaussian init scaled so densified entries have variance 1/in_dim.
TTCores tt_init(const TTShape& shape, std::uint64_t seed);

}  // namespace tonnsim
