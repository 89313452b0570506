#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <vector>

#include "tonnsim/tensor_train.hpp"
#include "tonnsim/util.hpp"

namespace tonnsim::testing {

// Densify a TT operator by brute force: every entry is an explicit sum over
// all interior rank paths of products of core entries. Deliberately written
// as naked loops so it shares no code with the library's contraction.
inline Eigen::MatrixXd brute_force_dense(const TTShape& shape, const TTCores& cores) {
  const int L = shape.order();
  const int M = shape.out_dim();
  const int N = shape.in_dim();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(M, N);

  std::vector<int> mi(L), ni(L);
  for (int row = 0; row < M; ++row) {
    // factor 1 is the slowest digit of the row index
    int rest = row;
    for (int k = L - 1; k >= 0; --k) {
      mi[k] = rest % shape.out_factors[k];
      rest /= shape.out_factors[k];
    }
    for (int col = 0; col < N; ++col) {
      rest = col;
      for (int k = L - 1; k >= 0; --k) {
        ni[k] = rest % shape.in_factors[k];
        rest /= shape.in_factors[k];
      }
      // sum over all rank paths r_1..r_{L-1}
      std::vector<int> r(L + 1, 0);
      double total = 0.0;
      while (true) {
        double prod = 1.0;
        for (int k = 0; k < L; ++k) prod *= cores.at(k, r[k], mi[k], ni[k], r[k + 1]);
        total += prod;
        int k = L - 1;
        while (k >= 1) {
          if (++r[k] < shape.ranks[k]) break;
          r[k] = 0;
          --k;
        }
        if (k < 1) break;
      }
      w(row, col) = total;
    }
  }
  return w;
}

inline Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = nd(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
}

inline TTCores random_tt(const TTShape& shape, Rng& rng, double stddev = 1.0) {
  TTCores tt{shape, {}};
  std::normal_distribution<double> nd(0.0, stddev);
  for (int k = 0; k < shape.order(); ++k) {
    const std::size_t len = static_cast<std::size_t>(shape.ranks[k]) * shape.out_factors[k] *
                            shape.in_factors[k] * shape.ranks[k + 1];
    std::vector<double> core(len);
    for (double& v : core) v = nd(rng);
    tt.cores.push_back(std::move(core));
  }
  return tt;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace tonnsim::testing
