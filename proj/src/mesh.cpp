#include "tonnsim/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tonnsim/util.hpp"

namespace tonnsim {

MeshTopology MeshTopology::full(int n) {
  if (n < 1) throw std::invalid_argument("mesh size must be >= 1");
  MeshTopology t;
  t.n = n;
  t.kind = MeshKind::kFull;
  t.pair_order.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) t.pair_order.emplace_back(i, j);
  return t;
}

MeshTopology MeshTopology::chain(int n) {
  if (n < 1) throw std::invalid_argument("mesh size must be >= 1");
  MeshTopology t;
  t.n = n;
  t.kind = MeshKind::kChain;
  t.pair_order.reserve(n > 0 ? n - 1 : 0);
  for (int i = 1; i < n; ++i) t.pair_order.emplace_back(i, i - 1);
  return t;
}

std::int64_t full_mesh_cell_count(int n) {
  return static_cast<std::int64_t>(n) * (n - 1) / 2;
}

PhaseProgram PhaseProgram::identity(int n, MeshKind kind) {
  PhaseProgram p;
  p.topology = kind == MeshKind::kFull ? MeshTopology::full(n) : MeshTopology::chain(n);
  p.angles = Eigen::VectorXd::Zero(p.topology.size());
  p.diag_signs = Eigen::VectorXd::Ones(n);
  return p;
}

namespace {

void check_program(const PhaseProgram& prog) {
  if (prog.angles.size() != prog.topology.size())
    throw std::invalid_argument("phase program: angle count does not match topology");
  if (prog.diag_signs.size() != prog.topology.n)
    throw std::invalid_argument("phase program: need one sign per port");
  for (int i = 0; i < prog.diag_signs.size(); ++i)
    if (prog.diag_signs[i] != 1.0 && prog.diag_signs[i] != -1.0)
      throw std::invalid_argument("phase program: diagonal signs must be +-1");
}

}  // namespace

Eigen::MatrixXd compose_orthogonal(const PhaseProgram& prog) {
  check_program(prog);
  const int n = prog.topology.n;
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  // Right-multiplying by R(i, j, theta) combines columns j and i.
  for (int k = 0; k < prog.topology.size(); ++k) {
    const auto [i, j] = prog.topology.pair_order[k];
    const double c = std::cos(prog.angles[k]), s = std::sin(prog.angles[k]);
    for (int r = 0; r < n; ++r) {
      const double a = q(r, j), b = q(r, i);
      q(r, j) = c * a + s * b;
      q(r, i) = -s * a + c * b;
    }
  }
  for (int r = 0; r < n; ++r) q.row(r) *= prog.diag_signs[r];
  return q;
}

Eigen::MatrixXd compose_rows(const PhaseProgram& prog, const std::vector<int>& rows) {
  check_program(prog);
  const int n = prog.topology.n;
  const int k = static_cast<int>(rows.size());
  Eigen::MatrixXd sub = Eigen::MatrixXd::Zero(k, n);
  for (int r = 0; r < k; ++r) {
    if (rows[r] < 0 || rows[r] >= n) throw std::invalid_argument("compose_rows: row out of range");
    sub(r, rows[r]) = prog.diag_signs[rows[r]];  // row of diag(signs)
  }
  for (int t = 0; t < prog.topology.size(); ++t) {
    const auto [i, j] = prog.topology.pair_order[t];
    const double c = std::cos(prog.angles[t]), s = std::sin(prog.angles[t]);
    for (int r = 0; r < k; ++r) {
      const double a = sub(r, j), b = sub(r, i);
      sub(r, j) = c * a + s * b;
      sub(r, i) = -s * a + c * b;
    }
  }
  return sub;
}

Eigen::MatrixXd compose_cols(const PhaseProgram& prog, const std::vector<int>& cols) {
  check_program(prog);
  const int n = prog.topology.n;
  const int k = static_cast<int>(cols.size());
  Eigen::MatrixXd sub = Eigen::MatrixXd::Zero(n, k);
  for (int c = 0; c < k; ++c) {
    if (cols[c] < 0 || cols[c] >= n) throw std::invalid_argument("compose_cols: col out of range");
    sub(cols[c], c) = 1.0;
  }
  // Q e_c = D R_1 ... R_K e_c: apply rotations right to left; left-multiplying
  // by R(i, j, theta) combines rows j and i.
  for (int t = prog.topology.size() - 1; t >= 0; --t) {
    const auto [i, j] = prog.topology.pair_order[t];
    const double c = std::cos(prog.angles[t]), s = std::sin(prog.angles[t]);
    for (int r = 0; r < k; ++r) {
      const double a = sub(j, r), b = sub(i, r);
      sub(j, r) = c * a - s * b;
      sub(i, r) = s * a + c * b;
    }
  }
  for (int r = 0; r < n; ++r) sub.row(r) *= prog.diag_signs[r];
  return sub;
}

PhaseProgram clements_decompose(const Eigen::MatrixXd& q, double tol) {
  if (q.rows() != q.cols()) throw std::invalid_argument("decompose: matrix must be square");
  const int n = static_cast<int>(q.rows());
  const double defect = (q.transpose() * q - Eigen::MatrixXd::Identity(n, n))
                            .cwiseAbs()
                            .maxCoeff();
  if (!(defect <= tol))
    throw std::invalid_argument("decompose: input is not orthogonal (max|Q^T Q - I| = " +
                                std::to_string(defect) + ")");

  PhaseProgram prog = PhaseProgram::identity(n);
  Eigen::MatrixXd a = q;
  // Null the strict lower triangle one row block at a time, bottom row first.
  // Right-multiplying A by R(i, j, phi) with col_j' = c col_j + s col_i zeroes
  // A(i, j) when (c, s) = (A(i,i), -A(i,j)) / hypot. The applied rotations,
  // taken in reverse with negated angles, are exactly the stored pair order,
  // so Q = diag(A_final) * prod R(theta) with theta = -phi.
  int idx = prog.topology.size();
  for (int i = n - 1; i >= 1; --i) {
    for (int j = i - 1; j >= 0; --j) {
      --idx;
      const double h = std::hypot(a(i, j), a(i, i));
      double phi = 0.0;
      if (h > 0.0) {
        const double c = a(i, i) / h, s = -a(i, j) / h;
        phi = std::atan2(s, c);
        for (int r = 0; r <= i; ++r) {  // rows below i are already zeroed
          const double va = a(r, j), vb = a(r, i);
          a(r, j) = c * va + s * vb;
          a(r, i) = -s * va + c * vb;
        }
        a(i, j) = 0.0;
      }
      prog.angles[idx] = wrap_angle(-phi);
    }
  }
  for (int r = 0; r < n; ++r) prog.diag_signs[r] = a(r, r) >= 0.0 ? 1.0 : -1.0;
  return prog;
}

SvdLayerProgram svd_map(const Eigen::MatrixXd& w) {
  if (w.rows() < 1 || w.cols() < 1) throw std::invalid_argument("svd_map: empty matrix");
  SvdLayerProgram prog;
  if (std::max(w.rows(), w.cols()) <= 32) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
    prog.u_phases = clements_decompose(svd.matrixU());
    prog.v_phases = clements_decompose(svd.matrixV().transpose());
    prog.sigma = svd.singularValues();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
    prog.u_phases = clements_decompose(svd.matrixU());
    prog.v_phases = clements_decompose(svd.matrixV().transpose());
    prog.sigma = svd.singularValues();
  }
  return prog;
}

Eigen::MatrixXd svd_layer_matrix(const SvdLayerProgram& prog) {
  const int k = prog.rank();
  std::vector<int> top(k), left(k);
  for (int i = 0; i < k; ++i) top[i] = left[i] = i;
  const Eigen::MatrixXd vt = compose_rows(prog.v_phases, top);     // k x cols
  const Eigen::MatrixXd u = compose_cols(prog.u_phases, left);     // rows x k
  return u * prog.sigma.asDiagonal() * vt;
}

NoiseModel NoiseModel::identity(int n_phases) {
  NoiseModel m;
  m.gamma = Eigen::VectorXd::Ones(n_phases);
  m.phase_bias = Eigen::VectorXd::Zero(n_phases);
  return m;
}

NoiseModel sample_noise(int n_phases, const std::vector<std::pair<int, int>>& neighbors,
                        const NoiseConfig& cfg, std::uint64_t seed) {
  if (n_phases < 0) throw std::invalid_argument("sample_noise: negative phase count");
  if (cfg.sigma_gamma < 0.0) throw std::invalid_argument("sample_noise: sigma_gamma must be >= 0");
  NoiseModel m = NoiseModel::identity(n_phases);
  Rng rng(seed);
  if (cfg.sigma_gamma > 0.0) {
    std::normal_distribution<double> gauss(1.0, cfg.sigma_gamma);
    for (int i = 0; i < n_phases; ++i) m.gamma[i] = gauss(rng);
  }
  for (const auto& [a, b] : neighbors) {
    if (a < 0 || a >= n_phases || b < 0 || b >= n_phases || a == b)
      throw std::invalid_argument("sample_noise: bad neighbor pair");
    m.crosstalk.push_back({a, b, cfg.omega});
    m.crosstalk.push_back({b, a, cfg.omega});
  }
  if (cfg.bias_on) {
    std::uniform_real_distribution<double> uni(0.0, kTau);
    for (int i = 0; i < n_phases; ++i) m.phase_bias[i] = uni(rng);
  }
  return m;
}

Eigen::VectorXd effective_phases(const Eigen::Ref<const Eigen::VectorXd>& commanded,
                                 const NoiseModel& noise) {
  if (commanded.size() != noise.size())
    throw std::invalid_argument("effective_phases: commanded length " +
                                std::to_string(commanded.size()) + " vs noise model " +
                                std::to_string(noise.size()));
  Eigen::VectorXd drifted = noise.gamma.cwiseProduct(commanded);
  Eigen::VectorXd eff = drifted;
  for (const auto& t : noise.crosstalk) eff[t.to] += t.weight * drifted[t.from];
  eff += noise.phase_bias;
  for (int i = 0; i < eff.size(); ++i) eff[i] = wrap_angle(eff[i]);
  return eff;
}

}  // namespace tonnsim
