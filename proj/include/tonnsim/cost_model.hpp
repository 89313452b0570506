#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tonnsim {

enum class Architecture { kOnn, kTonn1, kTonn2 };

std::string architecture_name(Architecture a);

// Device timing/energy/footprint constants. Energy is per inference; the ONN
// has no usable energy figure (optical loss makes the full-size mesh
// impractical to power), which is represented as nullopt, never as 0.
struct DeviceConstants {
  double t_dac_ns = 24.0;
  double t_adc_ns = 24.0;
  double t_tuning_ns = 0.1;
  double t_dig_ns = 500.0;
  double t_opt_onn_ns = 51.2;
  double t_opt_tonn1_ns = 1.6;
  double t_opt_tonn2_ns = 0.4;
  std::optional<double> energy_onn_J = std::nullopt;
  double energy_tonn1_J = 6.45e-9;
  double energy_tonn2_J = 5.05e-9;
  double footprint_onn_mm2 = 2.62e5;
  double footprint_tonn1_mm2 = 648.0;
  double footprint_tonn2_mm2 = 26.0;

  double t_opt_ns(Architecture a) const;
  std::optional<double> energy_J(Architecture a) const;
  double footprint_mm2(Architecture a) const;
};

struct ArchitectureSpec {
  Architecture kind = Architecture::kTonn1;
  int n_cycle = 1;
  int wavelengths = 1;
  // Dense layer dims (rows, cols) used to derive the ONN MZI count.
  std::vector<std::pair<int, int>> layer_dims;
  // TONN counts come from fixed constants: the wavelength-multiplexed
  // core-to-mesh packing is not derivable from first principles here.
  std::optional<std::int64_t> mzi_count_override;

  static ArchitectureSpec onn();
  static ArchitectureSpec tonn1();
  static ArchitectureSpec tonn2();
};

struct TrainingBudget {
  int inferences_per_loss = 42;
  int loss_evals_per_step = 10;  // 11 in true-accounting mode
  int batch = 100;
  int epochs = 5000;
  bool pipelined = true;
};

// SVD realization of a p x q matrix: two full meshes plus min(p, q)
// attenuators.
std::int64_t mzi_count_svd(int p, int q);

std::int64_t mzi_count(const ArchitectureSpec& arch);

double latency_per_inference_ns(const ArchitectureSpec& arch, const DeviceConstants& consts);

struct EpochCost {
  std::int64_t inferences = 0;
  std::optional<double> energy_J;
  double latency_s = 0.0;
};

EpochCost epoch_cost(const TrainingBudget& budget, const ArchitectureSpec& arch,
                     const DeviceConstants& consts);

struct RunCost {
  std::int64_t inferences = 0;
  std::optional<double> energy_J;
  double time_s = 0.0;
};

RunCost run_cost(const TrainingBudget& budget, const ArchitectureSpec& arch,
                 const DeviceConstants& consts);

double reduction_ratio(std::int64_t onn_mzis, std::int64_t tonn_mzis);

}  // namespace tonnsim
