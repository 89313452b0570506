#include "tonnsim/cost_model.hpp"

#include <stdexcept>

namespace tonnsim {

std::string architecture_name(Architecture a) {
  switch (a) {
    case Architecture::kOnn: return "ONN";
    case Architecture::kTonn1: return "TONN-1";
    case Architecture::kTonn2: return "TONN-2";
  }
  return "?";
}

double DeviceConstants::t_opt_ns(Architecture a) const {
  switch (a) {
    case Architecture::kOnn: return t_opt_onn_ns;
    case Architecture::kTonn1: return t_opt_tonn1_ns;
    case Architecture::kTonn2: return t_opt_tonn2_ns;
  }
  return 0.0;
}

std::optional<double> DeviceConstants::energy_J(Architecture a) const {
  switch (a) {
    case Architecture::kOnn: return energy_onn_J;
    case Architecture::kTonn1: return energy_tonn1_J;
    case Architecture::kTonn2: return energy_tonn2_J;
  }
  return std::nullopt;
}

double DeviceConstants::footprint_mm2(Architecture a) const {
  switch (a) {
    case Architecture::kOnn: return footprint_onn_mm2;
    case Architecture::kTonn1: return footprint_tonn1_mm2;
    case Architecture::kTonn2: return footprint_tonn2_mm2;
  }
  return 0.0;
}

ArchitectureSpec ArchitectureSpec::onn() {
  ArchitectureSpec s;
  s.kind = Architecture::kOnn;
  s.n_cycle = 1;
  s.wavelengths = 1;
  s.layer_dims = {{1024, 21}, {1024, 1024}, {1, 1024}};
  return s;
}

ArchitectureSpec ArchitectureSpec::tonn1() {
  ArchitectureSpec s;
  s.kind = Architecture::kTonn1;
  s.n_cycle = 1;
  s.wavelengths = 32;
  s.mzi_count_override = 1790;
  return s;
}

ArchitectureSpec ArchitectureSpec::tonn2() {
  ArchitectureSpec s;
  s.kind = Architecture::kTonn2;
  s.n_cycle = 64;
  s.wavelengths = 32;
  s.mzi_count_override = 28;
  return s;
}

std::int64_t mzi_count_svd(int p, int q) {
  if (p < 1 || q < 1) throw std::invalid_argument("mzi_count_svd: dims must be >= 1");
  const std::int64_t pp = p, qq = q;
  return pp * (pp - 1) / 2 + qq * (qq - 1) / 2 + std::min(pp, qq);
}

std::int64_t mzi_count(const ArchitectureSpec& arch) {
  if (arch.mzi_count_override) return *arch.mzi_count_override;
  if (arch.layer_dims.empty())
    throw std::invalid_argument("mzi_count: no layer dims and no override");
  std::int64_t total = 0;
  for (const auto& [p, q] : arch.layer_dims) total += mzi_count_svd(p, q);
  return total;
}

double latency_per_inference_ns(const ArchitectureSpec& arch, const DeviceConstants& c) {
  if (arch.n_cycle < 1) throw std::invalid_argument("latency: n_cycle must be >= 1");
  return arch.n_cycle * (c.t_dac_ns + c.t_tuning_ns + c.t_opt_ns(arch.kind) + c.t_adc_ns) +
         c.t_dig_ns;
}

EpochCost epoch_cost(const TrainingBudget& b, const ArchitectureSpec& arch,
                     const DeviceConstants& c) {
  if (b.inferences_per_loss < 1 || b.loss_evals_per_step < 1 || b.batch < 1)
    throw std::invalid_argument("epoch_cost: budget fields must be positive");
  EpochCost e;
  e.inferences = static_cast<std::int64_t>(b.inferences_per_loss) * b.loss_evals_per_step * b.batch;
  if (auto per = c.energy_J(arch.kind)) e.energy_J = static_cast<double>(e.inferences) * *per;
  // Pipelined: the batch streams through one mesh configuration, so a batch
  // of inputs costs a single inference latency per configuration.
  const double configs =
      b.pipelined ? static_cast<double>(e.inferences) / b.batch : static_cast<double>(e.inferences);
  e.latency_s = configs * latency_per_inference_ns(arch, c) * 1e-9;
  return e;
}

RunCost run_cost(const TrainingBudget& b, const ArchitectureSpec& arch, const DeviceConstants& c) {
  if (b.epochs < 0) throw std::invalid_argument("run_cost: negative epochs");
  const EpochCost e = epoch_cost(b, arch, c);
  RunCost r;
  r.inferences = e.inferences * b.epochs;
  if (e.energy_J) r.energy_J = *e.energy_J * b.epochs;
  r.time_s = e.latency_s * b.epochs;
  return r;
}

double reduction_ratio(std::int64_t onn_mzis, std::int64_t tonn_mzis) {
  if (onn_mzis < 1 || tonn_mzis < 1) throw std::invalid_argument("reduction_ratio: counts must be positive");
  return static_cast<double>(onn_mzis) / static_cast<double>(tonn_mzis);
}

}  // namespace tonnsim
