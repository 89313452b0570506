#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace tonnsim {

// Planar rotation order for an n-port mesh.
//
// kFull visits every distinct pair once, (i, j) for i = 1..n-1 and j = 0..i-1
// with i outermost, which is the order the composed product is written in:
//   Q = diag(signs) * R_{p_1}(phi_1) * ... * R_{p_K}(phi_K),  K = n(n-1)/2.
//
// kChain visits only adjacent pairs (1,0), (2,1), ..., (n-1, n-2). Its first
// output row sweeps the whole unit sphere as the n-1 angles vary, which is
// all a rank-1 fan-in layer needs; a full mesh there would burn n(n-1)/2
// phases to pick one unit vector.
enum class MeshKind { kFull, kChain };

struct MeshTopology {
  int n = 0;
  MeshKind kind = MeshKind::kFull;
  std::vector<std::pair<int, int>> pair_order;  // (i, j) with i > j

  static MeshTopology full(int n);
  static MeshTopology chain(int n);
  int size() const { return static_cast<int>(pair_order.size()); }
  bool operator==(const MeshTopology&) const = default;
};

// Number of 2x2 rotation cells in a full mesh: n(n-1)/2.
std::int64_t full_mesh_cell_count(int n);

// Angles (one per pair, canonical in [0, 2*pi)) plus fixed +-1 output signs.
struct PhaseProgram {
  MeshTopology topology;
  Eigen::VectorXd angles;
  Eigen::VectorXd diag_signs;

  static PhaseProgram identity(int n, MeshKind kind = MeshKind::kFull);
};

// Q = diag(signs) * prod R. R for pair (i, j), i > j, embeds
// [[c, -s], [s, c]] on rows/cols (j, i).
Eigen::MatrixXd compose_orthogonal(const PhaseProgram& prog);

// Selected rows of the composed Q, computed without forming all of Q:
// top-k rows cost O(k) per rotation. rows lists the row indices wanted.
Eigen::MatrixXd compose_rows(const PhaseProgram& prog, const std::vector<int>& rows);

// Selected columns of the composed Q, same trick from the right.
Eigen::MatrixXd compose_cols(const PhaseProgram& prog, const std::vector<int>& cols);

// Exact inverse of compose_orthogonal on a full topology. Throws
// std::invalid_argument if max|Q^T Q - I| > tol.
PhaseProgram clements_decompose(const Eigen::MatrixXd& q, double tol = 1e-8);

// One physical layer: W = U * diag(sigma) * V^T realized as two meshes and a
// column of attenuators. v_phases composes V^T directly (its top rows are the
// rows of V^T that multiply the input).
struct SvdLayerProgram {
  PhaseProgram u_phases;
  Eigen::VectorXd sigma;
  PhaseProgram v_phases;

  int rows() const { return u_phases.topology.n; }
  int cols() const { return v_phases.topology.n; }
  int rank() const { return static_cast<int>(sigma.size()); }
};

// Full-mesh phase realization of an arbitrary real matrix.
SvdLayerProgram svd_map(const Eigen::MatrixXd& w);

// Dense matrix the program currently realizes (ideal, no noise).
Eigen::MatrixXd svd_layer_matrix(const SvdLayerProgram& prog);

// Static fabrication-plus-drift error on a vector of commanded phases:
//   effective = Omega * (Gamma .* phi) + phi_b  (mod 2*pi)
// with Omega = I + crosstalk couplings, Gamma ~ N(1, sigma_gamma^2) per
// phase, phi_b ~ U(0, 2*pi) per phase when bias is on.
struct CrosstalkTerm {
  int from = 0;
  int to = 0;
  double weight = 0.0;
  bool operator==(const CrosstalkTerm&) const = default;
};

struct NoiseModel {
  Eigen::VectorXd gamma;
  std::vector<CrosstalkTerm> crosstalk;
  Eigen::VectorXd phase_bias;

  static NoiseModel identity(int n_phases);
  int size() const { return static_cast<int>(gamma.size()); }
};

struct NoiseConfig {
  double sigma_gamma = 0.002;
  double omega = 0.005;
  bool bias_on = true;
};

// Draws one frozen NoiseModel. neighbors lists phase-index pairs that couple
// (crosstalk acts both ways with weight omega). Draw order is fixed: all
// gammas, then all biases.
NoiseModel sample_noise(int n_phases, const std::vector<std::pair<int, int>>& neighbors,
                        const NoiseConfig& cfg, std::uint64_t seed);

Eigen::VectorXd effective_phases(const Eigen::Ref<const Eigen::VectorXd>& commanded,
                                 const NoiseModel& noise);

}  // namespace tonnsim
