#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace tonnsim {

// Exit codes shared by the subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitTrainingAborted = 3;
inline constexpr int kExitBadCheckpoint = 4;

int cmd_train(const std::string& config_path, const std::optional<std::string>& out_dir_override);
int cmd_eval(const std::string& checkpoint_path, int n_val, std::uint64_t seed);
int cmd_cost(const std::string& config_path, const std::optional<std::string>& out_dir_override);
int cmd_mesh_demo(int n, std::uint64_t seed);

int run_cli(int argc, char** argv);

}  // namespace tonnsim
