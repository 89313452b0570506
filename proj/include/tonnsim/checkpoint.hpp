#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "tonnsim/baseline_bp.hpp"
#include "tonnsim/chip.hpp"
#include "tonnsim/pinn.hpp"

namespace tonnsim {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
  int epoch = 0;
  double learning_rate = 0.0;
  std::int64_t cum_inferences = 0;
};

struct ChipCheckpoint {
  ChipInstance chip;
  PDEProblem problem;
  CheckpointMeta meta;
};

struct MlpCheckpoint {
  DenseMlp mlp;
  PDEProblem problem;
  CheckpointMeta meta;
};

// JSON round-trips are value-exact: doubles serialize with shortest
// round-trip formatting, so save followed by load reproduces every bit.
std::string chip_checkpoint_to_json(const ChipCheckpoint& ck);
ChipCheckpoint chip_checkpoint_from_json(const std::string& text);

std::string mlp_checkpoint_to_json(const MlpCheckpoint& ck);
MlpCheckpoint mlp_checkpoint_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Reads the "kind" discriminator ("chip" or "dense_mlp") without full parsing.
std::string checkpoint_kind(const std::string& text);

}  // namespace tonnsim
