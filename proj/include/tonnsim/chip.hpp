#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include "tonnsim/mesh.hpp"
#include "tonnsim/tensor_train.hpp"

namespace tonnsim {

// One layer realized as U * diag(sigma) * V^T in the phase domain.
struct DenseSvdLayer {
  SvdLayerProgram prog;
};

// One layer whose weight matrix lives in tensor-train form; every core is
// itself an SVD-programmed mesh pair.
struct TTSvdLayer {
  TTShape shape;
  std::vector<SvdLayerProgram> cores;
};

using ChipLayer = std::variant<DenseSvdLayer, TTSvdLayer>;

// A frozen hardware instance: layer programs, one static noise draw over all
// rotation angles, and elementwise sine between layers.
//
// The trainable parameter vector is [all angles; all sigmas], angles first,
// concatenated over layers (dense layer: U angles then V angles; TT layer:
// per core, U then V). Diagonal signs are fixed at build time. Noise acts on
// angles only; attenuation levels are commanded directly.
class ChipInstance {
 public:
  ChipInstance() = default;
  ChipInstance(std::vector<ChipLayer> layers, NoiseModel noise);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int angle_count() const { return angle_count_; }
  int sigma_count() const { return sigma_count_; }
  int param_count() const { return angle_count_ + sigma_count_; }

  const std::vector<ChipLayer>& layers() const { return layers_; }
  const NoiseModel& noise() const { return noise_; }

  Eigen::VectorXd params() const;
  // Writes the commanded vector back into the layer programs (angles wrapped
  // to [0, 2*pi), sigmas clamped at 0) and rebuilds the cached effective
  // matrices.
  void set_params(const Eigen::Ref<const Eigen::VectorXd>& p);

  // Noisy (effective) forward pass.
  Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Column-wise batch; each column is computed with the same per-column
  // arithmetic as forward(), so batching and threading cannot change values.
  Eigen::MatrixXd forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs) const;

  // Forward pass through the commanded (noise-free) programs.
  Eigen::VectorXd ideal_forward(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Phase-index pairs treated as physically adjacent for crosstalk purposes:
  // consecutive rotations within one mesh block.
  static std::vector<std::pair<int, int>> angle_neighbors(const std::vector<ChipLayer>& layers);
  static int count_angles(const std::vector<ChipLayer>& layers);

 private:
  struct LayerCache {
    // dense: single matrix; tt: one matrix per core, fed to tt_sweep_apply.
    std::vector<Eigen::MatrixXd> eff;
    std::vector<Eigen::MatrixXd> ideal;
  };

  void rebuild_cache();
  Eigen::VectorXd run(const Eigen::Ref<const Eigen::VectorXd>& x, bool ideal) const;

  std::vector<ChipLayer> layers_;
  NoiseModel noise_;
  std::vector<LayerCache> cache_;
  int input_dim_ = 0;
  int output_dim_ = 0;
  int angle_count_ = 0;
  int sigma_count_ = 0;
};

// TT-compressed network: tt_layers hidden layers of the given shape, then a
// rank-1 fan-in layer (chain mesh) down to one output. Cores start from a
// Gaussian tensor-train draw pushed through svd_map; the fan-in row starts at
// random angles with unit attenuation.
ChipInstance make_tt_chip(const TTShape& layer_shape, int tt_layers, const NoiseConfig& noise_cfg,
                          std::uint64_t noise_seed, std::uint64_t init_seed);

// Fully dense network over the given dims ([in, hidden..., out]), every layer
// carried by full meshes. Weights start Gaussian with variance 1/fan_in.
ChipInstance make_dense_chip(const std::vector<int>& dims, const NoiseConfig& noise_cfg,
                             std::uint64_t noise_seed, std::uint64_t init_seed);

// Maps explicit weight matrices (applied in order, sine in between) onto a
// chip via svd_map.
ChipInstance chip_from_weights(const std::vector<Eigen::MatrixXd>& weights,
                               const NoiseConfig& noise_cfg, std::uint64_t noise_seed);

}  // namespace tonnsim
