#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tonnsim/cost_model.hpp"
#include "tonnsim/mesh.hpp"
#include "tonnsim/pinn.hpp"
#include "tonnsim/tensor_train.hpp"
#include "tonnsim/trainer.hpp"

namespace tonnsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ArchKind { kTonn, kOnnDense };
enum class Accounting { kNominal, kTrue };

struct ArchConfig {
  ArchKind kind = ArchKind::kTonn;
  // tonn
  TTShape tt_shape;
  int tt_layers = 2;
  Architecture cost_profile = Architecture::kTonn1;
  // onn-dense
  int hidden = 64;
  int hidden_layers = 2;
};

struct SeedConfig {
  std::uint64_t train = 1;
  std::uint64_t validation = 2;
  std::uint64_t noise = 3;
  std::uint64_t init = 4;
};

struct RunConfig {
  PDEProblem problem;
  ArchConfig arch;
  ZoTrainConfig train;
  NoiseConfig noise;
  SeedConfig seeds;
  Accounting accounting = Accounting::kNominal;
  std::optional<std::string> output_dir;
  DeviceConstants device;
  int checkpoint_every = 0;  // 0: final checkpoint only
};

// Strict parse: unknown keys anywhere are rejected with the offending path;
// serialization round-trips losslessly.
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

// Reference-run defaults: 20-dim HJB, [4,8,4,8]x[8,4,8,4] rank-[1,2,1,2,1] TT
// layers, 5000 epochs.
RunConfig reference_run_config();

}  // namespace tonnsim
