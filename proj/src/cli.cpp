#include "tonnsim/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

#include <CLI11.hpp>
#include <json.hpp>

#include "tonnsim/baseline_bp.hpp"
#include "tonnsim/checkpoint.hpp"
#include "tonnsim/chip.hpp"
#include "tonnsim/config.hpp"
#include "tonnsim/cost_model.hpp"
#include "tonnsim/parallel.hpp"
#include "tonnsim/pinn.hpp"
#include "tonnsim/trainer.hpp"
#include "tonnsim/util.hpp"

namespace tonnsim {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Shortest round-trip decimal form, independent of locale and stream state.
// Used for every number that lands in metrics.csv so reruns are byte-identical.
std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Scientific form with `sig` significant digits, e.g. 1171.15 -> "1.17E3".
std::string format_sci(double v, int sig) {
  if (v == 0.0) return "0";
  const double rounded = round_sig(v, sig);
  const int exp10 = static_cast<int>(std::floor(std::log10(std::abs(rounded)) + 1e-12));
  const double mantissa = rounded / std::pow(10.0, exp10);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*fE%d", sig - 1, mantissa, exp10);
  return std::string(buf);
}

std::string read_file_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ChipInstance build_chip(const RunConfig& cfg) {
  if (cfg.arch.kind == ArchKind::kTonn) {
    return make_tt_chip(cfg.arch.tt_shape, cfg.arch.tt_layers, cfg.noise,
                        cfg.seeds.noise, cfg.seeds.init);
  }
  std::vector<int> dims;
  dims.push_back(cfg.problem.dim + 1);
  for (int l = 0; l < cfg.arch.hidden_layers; ++l) dims.push_back(cfg.arch.hidden);
  dims.push_back(1);
  return make_dense_chip(dims, cfg.noise, cfg.seeds.noise, cfg.seeds.init);
}

ArchitectureSpec cost_spec(const RunConfig& cfg) {
  switch (cfg.arch.cost_profile) {
    case Architecture::kOnn: return ArchitectureSpec::onn();
    case Architecture::kTonn1: return ArchitectureSpec::tonn1();
    case Architecture::kTonn2: return ArchitectureSpec::tonn2();
  }
  throw std::logic_error("unreachable");
}

TrainingBudget budget_for(const RunConfig& cfg) {
  TrainingBudget b;
  b.inferences_per_loss = 2 * cfg.problem.dim + 2;
  b.loss_evals_per_step = cfg.train.spsa.num_perturbations +
                           (cfg.accounting == Accounting::kTrue ? 1 : 0);
  b.batch = cfg.train.batch;
  b.epochs = cfg.train.epochs;
  b.pipelined = true;
  return b;
}

struct MetricsWriter {
  std::ofstream out;
  EpochCost per_epoch;  // modeled cost of one epoch under the configured profile

  explicit MetricsWriter(const fs::path& path, const EpochCost& epoch_cost)
      : out(path, std::ios::binary), per_epoch(epoch_cost) {
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "epoch,train_loss,val_mse,cum_inferences,cum_energy_J,cum_modeled_time_s\n";
  }

  void row(const EpochRecord& rec) {
    out << rec.epoch << ',' << format_double(rec.train_loss) << ',';
    if (rec.val_mse) out << format_double(*rec.val_mse);
    out << ',' << rec.cum_inferences << ',';
    if (per_epoch.energy_J) out << format_double(static_cast<double>(rec.epoch) * *per_epoch.energy_J);
    out << ',' << format_double(static_cast<double>(rec.epoch) * per_epoch.latency_s) << '\n';
  }
};

}  // namespace

int cmd_train(const std::string& config_path, const std::optional<std::string>& out_dir_override) {
  RunConfig cfg;
  try {
    cfg = parse_run_config(read_file_or_throw(config_path));
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kExitBadConfig;
  }
  if (out_dir_override) cfg.output_dir = *out_dir_override;
  const fs::path out_dir = cfg.output_dir.value_or("tonnsim_run");

  try {
    fs::create_directories(out_dir);

    ChipInstance chip = build_chip(cfg);
    const ArchitectureSpec spec = cost_spec(cfg);
    TrainingBudget budget = budget_for(cfg);
    budget.epochs = 1;
    const EpochCost per_epoch = epoch_cost(budget, spec, cfg.device);

    MetricsWriter metrics(out_dir / "metrics.csv", per_epoch);
    const int ckpt_every = cfg.checkpoint_every;
    const auto t0 = std::chrono::steady_clock::now();

    auto callback = [&](const EpochRecord& rec, const ChipInstance& c) {
      metrics.row(rec);
      if (ckpt_every > 0 && rec.epoch % ckpt_every == 0) {
        ChipCheckpoint ck{c, cfg.problem, {rec.epoch, cfg.train.learning_rate, rec.cum_inferences}};
        write_text_file(out_dir / ("checkpoint_" + std::to_string(rec.epoch) + ".json"),
                        chip_checkpoint_to_json(ck));
      }
    };

    TrainRun run = train(chip, cfg.problem, cfg.train, callback);
    metrics.out.flush();

    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    ChipCheckpoint final_ck{
        chip, cfg.problem,
        {static_cast<int>(run.records.size()), cfg.train.learning_rate, run.total_inferences}};
    write_text_file(out_dir / "checkpoint.json", chip_checkpoint_to_json(final_ck));

    TrainingBudget full = budget_for(cfg);
    const RunCost modeled = run_cost(full, spec, cfg.device);

    json summary;
    summary["config"] = json::parse(run_config_to_json(cfg));
    summary["epochs_run"] = run.records.size();
    summary["aborted"] = run.aborted;
    if (run.aborted) summary["abort_reason"] = run.abort_reason;
    if (!run.records.empty()) summary["final_train_loss"] = run.records.back().train_loss;
    summary["final_val_mse"] = run.final_val_mse;
    summary["true_inferences"] = run.total_inferences;
    summary["modeled"]["architecture"] = architecture_name(spec.kind);
    summary["modeled"]["inferences"] = modeled.inferences;
    if (modeled.energy_J)
      summary["modeled"]["energy_J"] = *modeled.energy_J;
    else
      summary["modeled"]["energy_J"] = nullptr;
    summary["modeled"]["time_s"] = modeled.time_s;
    summary["wall_clock_s"] = wall_s;
    write_text_file(out_dir / "summary.json", summary.dump(1));

    if (run.aborted) {
      std::cerr << "training aborted: " << run.abort_reason << '\n';
      return kExitTrainingAborted;
    }
    std::cout << "trained " << run.records.size() << " epochs, final val MSE "
              << format_double(run.final_val_mse) << ", artifacts in " << out_dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return kExitTrainingAborted;
  }
}

int cmd_eval(const std::string& checkpoint_path, int n_val, std::uint64_t seed) {
  try {
    const std::string text = read_file_or_throw(checkpoint_path);
    const std::string kind = checkpoint_kind(text);

    std::unique_ptr<PointFunction> field;
    PDEProblem prob;
    if (kind == "chip") {
      auto ck = std::make_shared<ChipCheckpoint>(chip_checkpoint_from_json(text));
      prob = ck->problem;
      struct Holder : ChipField {
        std::shared_ptr<ChipCheckpoint> keep;
        Holder(std::shared_ptr<ChipCheckpoint> c)
            : ChipField(c->chip, c->problem.dim), keep(std::move(c)) {}
      };
      field = std::make_unique<Holder>(std::move(ck));
    } else if (kind == "dense_mlp") {
      auto ck = std::make_shared<MlpCheckpoint>(mlp_checkpoint_from_json(text));
      prob = ck->problem;
      struct Holder : MlpField {
        std::shared_ptr<MlpCheckpoint> keep;
        Holder(std::shared_ptr<MlpCheckpoint> c) : MlpField(c->mlp), keep(std::move(c)) {}
      };
      field = std::make_unique<Holder>(std::move(ck));
    } else {
      throw CheckpointError("unknown checkpoint kind: " + kind);
    }

    const double mse = validation_mse(*field, prob, n_val, seed);

    FdConfig fd;
    Rng rng(mix_seed(seed, 0x5eed));
    const CollocationBatch batch = sample_collocation(n_val, prob, fd, rng());
    const LossResult res = residual_loss(*field, prob, batch, fd);

    std::cout << "kind=" << kind << " n_val=" << n_val << " seed=" << seed << '\n';
    std::cout << "validation_mse=" << format_double(mse) << '\n';
    std::cout << "residual_loss=" << format_double(res.loss) << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "cannot evaluate checkpoint: " << e.what() << '\n';
    return kExitBadCheckpoint;
  }
}

int cmd_cost(const std::string& config_path, const std::optional<std::string>& out_dir_override) {
  RunConfig cfg;
  try {
    cfg = parse_run_config(read_file_or_throw(config_path));
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kExitBadConfig;
  }
  if (out_dir_override) cfg.output_dir = *out_dir_override;

  const DeviceConstants& dev = cfg.device;
  const ArchitectureSpec specs[] = {ArchitectureSpec::onn(), ArchitectureSpec::tonn1(),
                                    ArchitectureSpec::tonn2()};

  std::printf("%-8s %12s %16s %16s %16s\n", "arch", "#MZIs", "energy/inf [J]", "latency/inf [ns]",
              "footprint [mm^2]");
  json report;
  for (const auto& s : specs) {
    const long long mzis = mzi_count(s);
    const double lat = latency_per_inference_ns(s, dev);
    const auto energy = dev.energy_J(s.kind);
    const double fp = dev.footprint_mm2(s.kind);
    std::printf("%-8s %12lld %16s %16.1f %16s\n", architecture_name(s.kind).c_str(), mzis,
                energy ? format_sci(*energy, 3).c_str() : "n/a", lat, format_sci(fp, 3).c_str());
    json row;
    row["mzis"] = mzis;
    if (energy)
      row["energy_per_inference_J"] = *energy;
    else
      row["energy_per_inference_J"] = nullptr;
    row["latency_per_inference_ns"] = lat;
    row["footprint_mm2"] = fp;
    report["architectures"][architecture_name(s.kind)] = row;
  }

  const double ratio = reduction_ratio(mzi_count(ArchitectureSpec::onn()),
                                       mzi_count(ArchitectureSpec::tonn1()));
  std::printf("MZI reduction ONN/TONN-1: %s (raw %.2f)\n", format_sci(ratio, 3).c_str(), ratio);
  report["mzi_reduction_onn_over_tonn1"] = ratio;

  const TrainingBudget budget = budget_for(cfg);
  const ArchitectureSpec spec = cost_spec(cfg);
  const EpochCost ep = epoch_cost(budget, spec, dev);
  const RunCost rc = run_cost(budget, spec, dev);
  std::printf("training profile %s: %lld inferences/epoch", architecture_name(spec.kind).c_str(),
              static_cast<long long>(ep.inferences));
  if (ep.energy_J) std::printf(", %s J/epoch", format_sci(*ep.energy_J, 3).c_str());
  std::printf(", %.6f ms/epoch\n", ep.latency_s * 1e3);
  std::printf("run totals (%d epochs): %lld inferences", budget.epochs,
              static_cast<long long>(rc.inferences));
  if (rc.energy_J) std::printf(", %s J", format_sci(*rc.energy_J, 3).c_str());
  std::printf(", %.6f s\n", rc.time_s);

  report["training"]["architecture"] = architecture_name(spec.kind);
  report["training"]["inferences_per_epoch"] = ep.inferences;
  if (ep.energy_J)
    report["training"]["energy_J_per_epoch"] = *ep.energy_J;
  else
    report["training"]["energy_J_per_epoch"] = nullptr;
  report["training"]["latency_s_per_epoch"] = ep.latency_s;
  report["training"]["total_inferences"] = rc.inferences;
  if (rc.energy_J)
    report["training"]["total_energy_J"] = *rc.energy_J;
  else
    report["training"]["total_energy_J"] = nullptr;
  report["training"]["total_time_s"] = rc.time_s;

  if (cfg.output_dir) {
    fs::create_directories(*cfg.output_dir);
    write_text_file(fs::path(*cfg.output_dir) / "cost_report.json", report.dump(1));
  }
  return kExitOk;
}

int cmd_mesh_demo(int n, std::uint64_t seed) {
  if (n < 1) {
    std::cerr << "mesh-demo: n must be >= 1\n";
    return kExitBadConfig;
  }
  Rng rng(seed);
  Eigen::MatrixXd g(n, n);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = nd(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();

  const PhaseProgram prog = clements_decompose(q);
  const Eigen::MatrixXd back = compose_orthogonal(prog);
  const double err = (back - q).cwiseAbs().maxCoeff();

  std::cout << "n=" << n << ": " << full_mesh_cell_count(n)
            << " MZIs, max reconstruction error = " << format_double(err) << '\n';
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"tonnsim: photonic tensor-train PINN training simulator"};
  app.require_subcommand(1);

  int threads = 1;
  std::optional<std::string> out_dir;
  app.add_option("--threads", threads, "worker thread count")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "output directory (overrides config)");

  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "train a model from a JSON config");
  train_cmd->add_option("config", config_path, "path to run config")->required();

  std::string ckpt_path;
  int n_val = 1000;
  std::uint64_t eval_seed = 7;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on fresh points");
  eval_cmd->add_option("checkpoint", ckpt_path, "path to checkpoint JSON")->required();
  eval_cmd->add_option("--n-val", n_val, "number of evaluation points")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_seed, "evaluation sampling seed");

  std::string cost_config_path;
  auto* cost_cmd = app.add_subcommand("cost", "print the hardware cost report");
  cost_cmd->add_option("config", cost_config_path, "path to run config")->required();

  int demo_n = 8;
  std::uint64_t demo_seed = 1;
  auto* demo_cmd = app.add_subcommand("mesh-demo", "decompose and rebuild a random orthogonal");
  demo_cmd->add_option("n", demo_n, "matrix dimension")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--seed", demo_seed, "RNG seed for the random orthogonal");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadConfig;
  }

  set_thread_count(threads);

  if (train_cmd->parsed()) return cmd_train(config_path, out_dir);
  if (eval_cmd->parsed()) return cmd_eval(ckpt_path, n_val, eval_seed);
  if (cost_cmd->parsed()) return cmd_cost(cost_config_path, out_dir);
  if (demo_cmd->parsed()) return cmd_mesh_demo(demo_n, demo_seed);
  return kExitBadConfig;
}

}  // namespace tonnsim
