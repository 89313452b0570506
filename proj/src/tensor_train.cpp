#include "tonnsim/tensor_train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tonnsim/util.hpp"

namespace tonnsim {

TTShape::TTShape(std::vector<int> out, std::vector<int> in, std::vector<int> r)
    : out_factors(std::move(out)), in_factors(std::move(in)), ranks(std::move(r)) {
  if (out_factors.empty() || out_factors.size() != in_factors.size())
    throw std::invalid_argument("TTShape: factor lists must be non-empty and equal length");
  if (ranks.size() != out_factors.size() + 1)
    throw std::invalid_argument("TTShape: need order+1 ranks");
  if (ranks.front() != 1 || ranks.back() != 1)
    throw std::invalid_argument("TTShape: boundary ranks must be 1");
  for (int m : out_factors)
    if (m < 1) throw std::invalid_argument("TTShape: output factors must be positive");
  for (int n : in_factors)
    if (n < 1) throw std::invalid_argument("TTShape: input factors must be positive");
  for (int r : ranks)
    if (r < 1) throw std::invalid_argument("TTShape: ranks must be positive");
}

std::int64_t TTShape::out_dim() const {
  std::int64_t d = 1;
  for (int m : out_factors) d *= m;
  return d;
}

std::int64_t TTShape::in_dim() const {
  std::int64_t d = 1;
  for (int n : in_factors) d *= n;
  return d;
}

std::int64_t tt_param_count(const TTShape& s) {
  std::int64_t total = 0;
  for (int k = 0; k < s.order(); ++k)
    total += static_cast<std::int64_t>(s.ranks[k]) * s.out_factors[k] * s.in_factors[k] *
             s.ranks[k + 1];
  return total;
}

Eigen::MatrixXd tt_core_matrix(const TTCores& tt, int k) {
  const auto& s = tt.shape;
  const int m = s.out_factors[k], n = s.in_factors[k];
  const int rp = s.ranks[k], rn = s.ranks[k + 1];
  Eigen::MatrixXd a(m * rn, n * rp);
  for (int i = 0; i < m; ++i)
    for (int ss = 0; ss < rn; ++ss)
      for (int j = 0; j < n; ++j)
        for (int p = 0; p < rp; ++p) a(i * rn + ss, j * rp + p) = tt.at(k, p, i, j, ss);
  return a;
}

Eigen::VectorXd tt_sweep_apply(const TTShape& shape, const std::vector<Eigen::MatrixXd>& core_mats,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  const int L = shape.order();
  if (static_cast<int>(core_mats.size()) != L)
    throw std::invalid_argument("tt_sweep_apply: need one matrix per core");
  if (x.size() != shape.in_dim())
    throw std::invalid_argument("tt_sweep_apply: input length " + std::to_string(x.size()) +
                                " does not match shape in_dim " +
                                std::to_string(shape.in_dim()));

  // Buffer holds the partial contraction indexed [i_1..i_{k}, j_{k+1}..j_L, r_k],
  // all row-major. Starts as x itself ([j_1..j_L], r_0 = 1).
  std::vector<double> buf(x.data(), x.data() + x.size());
  std::vector<double> next;
  Eigen::VectorXd fiber, out;

  std::int64_t iblock = 1;                 // m_1 * ... * m_{k-1}
  std::int64_t jblock = shape.in_dim();    // n_k * ... * n_L
  for (int k = 0; k < L; ++k) {
    const int m = shape.out_factors[k], n = shape.in_factors[k];
    const int rp = shape.ranks[k], rn = shape.ranks[k + 1];
    const std::int64_t jrest = jblock / n;  // n_{k+1} * ... * n_L
    const Eigen::MatrixXd& a = core_mats[k];
    if (a.rows() != m * rn || a.cols() != n * rp)
      throw std::invalid_argument("tt_sweep_apply: core matrix " + std::to_string(k) +
                                  " has wrong dimensions");

    next.resize(static_cast<std::size_t>(iblock) * m * jrest * rn);
    fiber.resize(n * rp);
    out.resize(m * rn);
    for (std::int64_t ai = 0; ai < iblock; ++ai) {
      for (std::int64_t b = 0; b < jrest; ++b) {
        for (int j = 0; j < n; ++j)
          for (int p = 0; p < rp; ++p) fiber[j * rp + p] = buf[((ai * n + j) * jrest + b) * rp + p];
        out.noalias() = a * fiber;
        for (int i = 0; i < m; ++i)
          for (int ss = 0; ss < rn; ++ss)
            next[((ai * m + i) * jrest + b) * rn + ss] = out[i * rn + ss];
      }
    }
    buf.swap(next);
    iblock *= m;
    jblock = jrest;
  }

  return Eigen::Map<const Eigen::VectorXd>(buf.data(), static_cast<Eigen::Index>(buf.size()));
}

Eigen::VectorXd tt_matvec(const TTCores& tt, const Eigen::Ref<const Eigen::VectorXd>& x) {
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(tt.shape.order());
  for (int k = 0; k < tt.shape.order(); ++k) mats.push_back(tt_core_matrix(tt, k));
  return tt_sweep_apply(tt.shape, mats, x);
}

Eigen::MatrixXd tt_to_dense(const TTCores& tt) {
  const auto& s = tt.shape;
  const int L = s.order();
  // Progressive contraction P_k[(i_1..i_k), (j_1..j_k), r_k], row-major.
  std::vector<double> p{1.0};
  std::int64_t rows = 1, cols = 1;
  std::vector<double> nextp;
  for (int k = 0; k < L; ++k) {
    const int m = s.out_factors[k], n = s.in_factors[k];
    const int rp = s.ranks[k], rn = s.ranks[k + 1];
    nextp.assign(static_cast<std::size_t>(rows) * m * cols * n * rn, 0.0);
    for (std::int64_t a = 0; a < rows; ++a)
      for (int i = 0; i < m; ++i)
        for (std::int64_t b = 0; b < cols; ++b)
          for (int j = 0; j < n; ++j)
            for (int ss = 0; ss < rn; ++ss) {
              double acc = 0.0;
              for (int pp = 0; pp < rp; ++pp)
                acc += p[(a * cols + b) * rp + pp] * tt.at(k, pp, i, j, ss);
              nextp[(((a * m + i) * cols * n) + (b * n + j)) * rn + ss] = acc;
            }
    p.swap(nextp);
    rows *= m;
    cols *= n;
  }
  Eigen::MatrixXd w(rows, cols);
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j) w(i, j) = p[i * cols + j];
  return w;
}

TTCores tt_init(const TTShape& shape, std::uint64_t seed) {
  // Entry of the densified matrix is a sum over prod(interior ranks)
  // uncorrelated terms, each a product of L independent core entries, so
  // with per-core std dev sigma the entry variance is paths * sigma^(2L).
  // Solve for variance 1/in_dim.
  double paths = 1.0;
  for (int k = 1; k < shape.order(); ++k) paths *= shape.ranks[k];
  const double var = 1.0 / (static_cast<double>(shape.in_dim()) * paths);
  const double sigma = std::pow(var, 1.0 / (2.0 * shape.order()));

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  TTCores tt;
  tt.shape = shape;
  tt.cores.resize(shape.order());
  for (int k = 0; k < shape.order(); ++k) {
    const std::size_t len = static_cast<std::size_t>(shape.ranks[k]) * shape.out_factors[k] *
                            shape.in_factors[k] * shape.ranks[k + 1];
    tt.cores[k].resize(len);
    for (auto& v : tt.cores[k]) v = gauss(rng);
  }
  return tt;
}

}  // namespace tonnsim
