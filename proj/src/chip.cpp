#include "tonnsim/chip.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tonnsim/parallel.hpp"
#include "tonnsim/util.hpp"

namespace tonnsim {

namespace {

int layer_in_dim(const ChipLayer& l) {
  if (const auto* d = std::get_if<DenseSvdLayer>(&l)) return d->prog.cols();
  return static_cast<int>(std::get<TTSvdLayer>(l).shape.in_dim());
}

int layer_out_dim(const ChipLayer& l) {
  if (const auto* d = std::get_if<DenseSvdLayer>(&l)) return d->prog.rows();
  return static_cast<int>(std::get<TTSvdLayer>(l).shape.out_dim());
}

// Visits every SVD program of every layer, in parameter-vector order.
template <typename Layers, typename Fn>
void for_each_program(Layers& layers, Fn&& fn) {
  for (auto& layer : layers) {
    if (auto* d = std::get_if<DenseSvdLayer>(&layer)) {
      fn(d->prog);
    } else {
      for (auto& core : std::get<TTSvdLayer>(layer).cores) fn(core);
    }
  }
}

void validate_layer(const ChipLayer& layer) {
  if (const auto* d = std::get_if<DenseSvdLayer>(&layer)) {
    const int k = std::min(d->prog.rows(), d->prog.cols());
    if (d->prog.rank() != k)
      throw std::invalid_argument("chip layer: sigma length must be min(rows, cols)");
  } else {
    const auto& tt = std::get<TTSvdLayer>(layer);
    if (static_cast<int>(tt.cores.size()) != tt.shape.order())
      throw std::invalid_argument("chip layer: need one core program per factor");
    for (int k = 0; k < tt.shape.order(); ++k) {
      const auto& c = tt.cores[k];
      const int rows = tt.shape.out_factors[k] * tt.shape.ranks[k + 1];
      const int cols = tt.shape.in_factors[k] * tt.shape.ranks[k];
      if (c.rows() != rows || c.cols() != cols)
        throw std::invalid_argument("chip layer: core program size mismatch at core " +
                                    std::to_string(k));
      if (c.rank() != std::min(rows, cols))
        throw std::invalid_argument("chip layer: core sigma length must be min(rows, cols)");
    }
  }
}

// Effective realization of one program given its noisy angle slice.
Eigen::MatrixXd program_matrix(const SvdLayerProgram& prog,
                               const Eigen::Ref<const Eigen::VectorXd>& u_angles,
                               const Eigen::Ref<const Eigen::VectorXd>& v_angles) {
  const int k = prog.rank();
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  PhaseProgram u = prog.u_phases;
  u.angles = u_angles;
  PhaseProgram v = prog.v_phases;
  v.angles = v_angles;
  const Eigen::MatrixXd ucols = compose_cols(u, idx);
  const Eigen::MatrixXd vrows = compose_rows(v, idx);
  Eigen::VectorXd sig = prog.sigma.cwiseMax(0.0);
  return ucols * sig.asDiagonal() * vrows;
}

}  // namespace

ChipInstance::ChipInstance(std::vector<ChipLayer> layers, NoiseModel noise)
    : layers_(std::move(layers)), noise_(std::move(noise)) {
  if (layers_.empty()) throw std::invalid_argument("chip: need at least one layer");
  for (const auto& l : layers_) validate_layer(l);
  for (std::size_t i = 1; i < layers_.size(); ++i)
    if (layer_out_dim(layers_[i - 1]) != layer_in_dim(layers_[i]))
      throw std::invalid_argument("chip: layer " + std::to_string(i) +
                                  " input dim does not match previous output");
  input_dim_ = layer_in_dim(layers_.front());
  output_dim_ = layer_out_dim(layers_.back());
  angle_count_ = 0;
  sigma_count_ = 0;
  for_each_program(layers_, [&](const SvdLayerProgram& p) {
    angle_count_ += p.u_phases.topology.size() + p.v_phases.topology.size();
    sigma_count_ += p.rank();
  });
  if (noise_.size() != angle_count_)
    throw std::invalid_argument("chip: noise model covers " + std::to_string(noise_.size()) +
                                " phases, chip has " + std::to_string(angle_count_));
  rebuild_cache();
}

int ChipInstance::count_angles(const std::vector<ChipLayer>& layers) {
  int n = 0;
  for_each_program(layers, [&](const SvdLayerProgram& p) {
    n += p.u_phases.topology.size() + p.v_phases.topology.size();
  });
  return n;
}

std::vector<std::pair<int, int>> ChipInstance::angle_neighbors(
    const std::vector<ChipLayer>& layers) {
  std::vector<std::pair<int, int>> out;
  int base = 0;
  auto add_mesh = [&](const MeshTopology& topo) {
    for (int t = 0; t + 1 < topo.size(); ++t) {
      const bool same_block = topo.kind == MeshKind::kChain ||
                              topo.pair_order[t].first == topo.pair_order[t + 1].first;
      if (same_block) out.emplace_back(base + t, base + t + 1);
    }
    base += topo.size();
  };
  for_each_program(layers, [&](const SvdLayerProgram& p) {
    add_mesh(p.u_phases.topology);
    add_mesh(p.v_phases.topology);
  });
  return out;
}

Eigen::VectorXd ChipInstance::params() const {
  Eigen::VectorXd p(param_count());
  int a = 0, s = angle_count_;
  for_each_program(layers_, [&](const SvdLayerProgram& prog) {
    p.segment(a, prog.u_phases.angles.size()) = prog.u_phases.angles;
    a += static_cast<int>(prog.u_phases.angles.size());
    p.segment(a, prog.v_phases.angles.size()) = prog.v_phases.angles;
    a += static_cast<int>(prog.v_phases.angles.size());
    p.segment(s, prog.sigma.size()) = prog.sigma;
    s += static_cast<int>(prog.sigma.size());
  });
  return p;
}

void ChipInstance::set_params(const Eigen::Ref<const Eigen::VectorXd>& p) {
  if (p.size() != param_count())
    throw std::invalid_argument("chip: parameter vector has length " + std::to_string(p.size()) +
                                ", expected " + std::to_string(param_count()));
  int a = 0, s = angle_count_;
  for_each_program(layers_, [&](SvdLayerProgram& prog) {
    auto write_angles = [&](PhaseProgram& mesh) {
      for (int i = 0; i < mesh.angles.size(); ++i) mesh.angles[i] = wrap_angle(p[a + i]);
      a += static_cast<int>(mesh.angles.size());
    };
    write_angles(prog.u_phases);
    write_angles(prog.v_phases);
    for (int i = 0; i < prog.sigma.size(); ++i) prog.sigma[i] = std::max(0.0, p[s + i]);
    s += static_cast<int>(prog.sigma.size());
  });
  rebuild_cache();
}

void ChipInstance::rebuild_cache() {
  Eigen::VectorXd commanded(angle_count_);
  int a = 0;
  for_each_program(layers_, [&](const SvdLayerProgram& prog) {
    commanded.segment(a, prog.u_phases.angles.size()) = prog.u_phases.angles;
    a += static_cast<int>(prog.u_phases.angles.size());
    commanded.segment(a, prog.v_phases.angles.size()) = prog.v_phases.angles;
    a += static_cast<int>(prog.v_phases.angles.size());
  });
  const Eigen::VectorXd eff = effective_phases(commanded, noise_);

  cache_.assign(layers_.size(), {});
  int off = 0;
  std::size_t li = 0;
  for (const auto& layer : layers_) {
    auto build = [&](const SvdLayerProgram& prog) {
      const int nu = prog.u_phases.topology.size();
      const int nv = prog.v_phases.topology.size();
      cache_[li].eff.push_back(
          program_matrix(prog, eff.segment(off, nu), eff.segment(off + nu, nv)));
      cache_[li].ideal.push_back(
          program_matrix(prog, commanded.segment(off, nu), commanded.segment(off + nu, nv)));
      off += nu + nv;
    };
    if (const auto* d = std::get_if<DenseSvdLayer>(&layer)) {
      build(d->prog);
    } else {
      for (const auto& core : std::get<TTSvdLayer>(layer).cores) build(core);
    }
    ++li;
  }
}

Eigen::VectorXd ChipInstance::run(const Eigen::Ref<const Eigen::VectorXd>& x, bool ideal) const {
  if (x.size() != input_dim_)
    throw std::invalid_argument("chip forward: input length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(input_dim_));
  Eigen::VectorXd h = x;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& mats = ideal ? cache_[li].ideal : cache_[li].eff;
    if (const auto* tt = std::get_if<TTSvdLayer>(&layers_[li])) {
      h = tt_sweep_apply(tt->shape, mats, h);
    } else {
      h = mats[0] * h;
    }
    if (li + 1 < layers_.size()) h = h.array().sin();
  }
  return h;
}

Eigen::VectorXd ChipInstance::forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return run(x, false);
}

Eigen::VectorXd ChipInstance::ideal_forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return run(x, true);
}

Eigen::MatrixXd ChipInstance::forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs) const {
  Eigen::MatrixXd out(output_dim_, xs.cols());
  parallel_for(static_cast<std::size_t>(xs.cols()), [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c)
      out.col(static_cast<Eigen::Index>(c)) = run(xs.col(static_cast<Eigen::Index>(c)), false);
  });
  return out;
}

namespace {

SvdLayerProgram random_chain_fanin(int n, Rng& rng) {
  SvdLayerProgram prog;
  prog.u_phases = PhaseProgram::identity(1);
  prog.sigma = Eigen::VectorXd::Ones(1);
  prog.v_phases = PhaseProgram::identity(n, MeshKind::kChain);
  std::uniform_real_distribution<double> uni(0.0, kTau);
  for (int i = 0; i < prog.v_phases.angles.size(); ++i) prog.v_phases.angles[i] = uni(rng);
  return prog;
}

ChipInstance assemble(std::vector<ChipLayer> layers, const NoiseConfig& cfg,
                      std::uint64_t noise_seed) {
  const int n_angles = ChipInstance::count_angles(layers);
  const auto neighbors = ChipInstance::angle_neighbors(layers);
  NoiseModel noise = sample_noise(n_angles, neighbors, cfg, noise_seed);
  return ChipInstance(std::move(layers), std::move(noise));
}

}  // namespace

ChipInstance make_tt_chip(const TTShape& layer_shape, int tt_layers, const NoiseConfig& noise_cfg,
                          std::uint64_t noise_seed, std::uint64_t init_seed) {
  if (tt_layers < 1) throw std::invalid_argument("make_tt_chip: need at least one hidden layer");
  if (layer_shape.out_dim() != layer_shape.in_dim())
    throw std::invalid_argument("make_tt_chip: hidden layers must be square");
  std::vector<ChipLayer> layers;
  for (int l = 0; l < tt_layers; ++l) {
    TTSvdLayer layer;
    layer.shape = layer_shape;
    const TTCores tt = tt_init(layer_shape, mix_seed(init_seed, static_cast<std::uint64_t>(l)));
    for (int k = 0; k < layer_shape.order(); ++k)
      layer.cores.push_back(svd_map(tt_core_matrix(tt, k)));
    layers.emplace_back(std::move(layer));
  }
  Rng rng(mix_seed(init_seed, 0xfa11ULL));
  DenseSvdLayer fanin{random_chain_fanin(static_cast<int>(layer_shape.out_dim()), rng)};
  layers.emplace_back(std::move(fanin));
  return assemble(std::move(layers), noise_cfg, noise_seed);
}

ChipInstance make_dense_chip(const std::vector<int>& dims, const NoiseConfig& noise_cfg,
                             std::uint64_t noise_seed, std::uint64_t init_seed) {
  if (dims.size() < 2) throw std::invalid_argument("make_dense_chip: need input and output dims");
  std::vector<ChipLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] < 1 || dims[l + 1] < 1)
      throw std::invalid_argument("make_dense_chip: dims must be positive");
    Rng rng(mix_seed(init_seed, l));
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(dims[l])));
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = gauss(rng);
    layers.emplace_back(DenseSvdLayer{svd_map(w)});
  }
  return assemble(std::move(layers), noise_cfg, noise_seed);
}

ChipInstance chip_from_weights(const std::vector<Eigen::MatrixXd>& weights,
                               const NoiseConfig& noise_cfg, std::uint64_t noise_seed) {
  if (weights.empty()) throw std::invalid_argument("chip_from_weights: no weight matrices");
  std::vector<ChipLayer> layers;
  for (const auto& w : weights) layers.emplace_back(DenseSvdLayer{svd_map(w)});
  return assemble(std::move(layers), noise_cfg, noise_seed);
}

}  // namespace tonnsim
