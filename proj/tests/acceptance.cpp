// Release gate: one self-contained check per acceptance criterion, one
// PASS/FAIL line each, nonzero exit if anything that ran failed.
//
// Usage: acceptance [--nightly] [--only N]
//   --nightly  also run the long full-scale training criterion (hours)
//   --only N   run a single criterion (the full-scale one pulls in its
//              baseline dependency automatically)

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tonnsim/baseline_bp.hpp"
#include "tonnsim/checkpoint.hpp"
#include "tonnsim/chip.hpp"
#include "tonnsim/cli.hpp"
#include "tonnsim/config.hpp"
#include "tonnsim/cost_model.hpp"
#include "tonnsim/mesh.hpp"
#include "tonnsim/parallel.hpp"
#include "tonnsim/pinn.hpp"
#include "tonnsim/tensor_train.hpp"
#include "tonnsim/trainer.hpp"
#include "tonnsim/util.hpp"

using namespace tonnsim;
namespace fs = std::filesystem;

namespace {

std::optional<double> g_noisy_baseline_median;  // produced by criterion 9, used by 11

bool check(bool ok, std::ostringstream& why, const std::string& detail) {
  if (!ok) why << (why.str().empty() ? "" : "; ") << detail;
  return ok;
}

// ---- criterion 1: per-inference latency is exact -------------------------

bool latency_exactness(std::ostringstream& why) {
  const DeviceConstants dev;
  bool ok = true;
  ok &= check(latency_per_inference_ns(ArchitectureSpec::onn(), dev) == 599.3, why,
              "ONN latency != 599.3 ns");
  ok &= check(latency_per_inference_ns(ArchitectureSpec::tonn1(), dev) == 549.7, why,
              "TONN-1 latency != 549.7 ns");
  ok &= check(latency_per_inference_ns(ArchitectureSpec::tonn2(), dev) == 3604.0, why,
              "TONN-2 latency != 3604 ns");
  return ok;
}

// ---- criterion 2: training-efficiency arithmetic -------------------------

bool training_efficiency(std::ostringstream& why) {
  const DeviceConstants dev;
  const ArchitectureSpec arch = ArchitectureSpec::tonn1();
  const TrainingBudget budget;  // 42 x 10 x 100 x 5000, pipelined
  const EpochCost ep = epoch_cost(budget, arch, dev);
  const RunCost rc = run_cost(budget, arch, dev);

  bool ok = true;
  ok &= check(ep.inferences == 42000, why, "inferences/epoch != 42000");
  const double e_ref = 42000 * 6.45e-9;
  ok &= check(ep.energy_J.has_value() && std::abs(*ep.energy_J - e_ref) <= 0.005 * e_ref, why,
              "epoch energy outside 0.5% of 2.709e-4 J");
  ok &= check(round_sig(ep.latency_s * 1e3, 3) == 0.231, why, "epoch latency != 0.231 ms at 3sf");
  ok &= check(rc.energy_J.has_value() && std::abs(*rc.energy_J - 1.355) / 1.355 < 1e-3, why,
              "run energy not within 0.1% of 1.355 J");
  ok &= check(std::abs(rc.time_s - 1.155) / 1.155 < 1e-3, why,
              "run time not within 0.1% of 1.155 s");
  ok &= check(round_sig(*rc.energy_J, 2) == round_sig(1.36, 2), why,
              "run energy != reference 1.36 J at 2sf");
  ok &= check(round_sig(rc.time_s, 2) == round_sig(1.15, 2), why,
              "run time != reference 1.15 s at 2sf");
  return ok;
}

// ---- criterion 3: MZI accounting ------------------------------------------

bool mzi_accounting(std::ostringstream& why) {
  const std::int64_t onn = mzi_count(ArchitectureSpec::onn());
  const std::int64_t tonn1 = mzi_count(ArchitectureSpec::tonn1());
  bool ok = true;
  ok &= check(std::abs(onn - 2.10e6) / 2.10e6 < 0.005, why,
              "ONN MZI count " + std::to_string(onn) + " not within 0.5% of 2.10e6");
  ok &= check(round_sig(reduction_ratio(onn, tonn1), 3) == 1170.0, why,
              "reduction ratio != 1.17e3 at 3sf");
  return ok;
}

// ---- criterion 4: parameter counts ----------------------------------------

bool parameter_counts(std::ostringstream& why) {
  const TTShape shape({4, 8, 4, 8}, {8, 4, 8, 4}, {1, 2, 1, 2, 1});
  const ChipInstance chip = make_tt_chip(shape, 2, NoiseConfig{}, 3, 4);
  bool ok = true;
  ok &= check(chip.param_count() == 1536, why,
              "network total " + std::to_string(chip.param_count()) + " != 1536");
  ok &= check(tt_param_count(shape) == 256, why, "TT layer parameter count != 256");
  ok &= check(shape.out_dim() == 1024 && shape.in_dim() == 1024, why,
              "TT layer does not represent a 1024x1024 matrix");
  return ok;
}

// ---- criterion 5: analytic-residual oracle --------------------------------

bool analytic_residual(std::ostringstream& why) {
  const PDEProblem prob = PDEProblem::hjb20();
  const FdConfig cfg;
  const LambdaField exact([&prob](const Eigen::Ref<const Eigen::VectorXd>& x, double t) {
    return prob.exact_solution(x, t);
  });
  const CollocationBatch batch = sample_collocation(1000, prob, cfg, 20260815);
  const LossResult res = residual_loss_field(exact, prob, batch, cfg);
  bool ok = true;
  ok &= check(res.loss <= 1e-12, why, "residual loss " + std::to_string(res.loss) + " > 1e-12");
  ok &= check(res.inference_count == 1000 * 42, why, "batch did not consume 42 evals per point");
  const DerivativeEstimate d = fd_derivatives(exact, prob, batch.x.col(0), batch.t[0], cfg);
  ok &= check(d.evals == 42, why, "single-point eval counter != 42");
  return ok;
}

// ---- criterion 6: mesh round-trip ------------------------------------------

bool mesh_round_trip(std::ostringstream& why) {
  Rng rng(0x6e5);
  double worst_err = 0.0, worst_defect = 0.0;
  for (int n : {2, 4, 8, 16, 32}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::MatrixXd q = testing::random_orthogonal(n, rng);
      const Eigen::MatrixXd back = compose_orthogonal(clements_decompose(q));
      worst_err = std::max(worst_err, (back - q).cwiseAbs().maxCoeff());
      worst_defect = std::max(
          worst_defect,
          (back.transpose() * back - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
    }
  }
  bool ok = true;
  ok &= check(worst_err <= 1e-10, why, "round-trip error " + std::to_string(worst_err));
  ok &= check(worst_defect <= 1e-12, why, "orthogonality defect " + std::to_string(worst_defect));
  return ok;
}

// ---- criterion 7: tensor-train oracle equivalence ---------------------------

bool tt_oracle(std::ostringstream& why) {
  Rng rng(0x77);
  std::normal_distribution<double> nd;
  const TTShape flagship({4, 8, 4, 8}, {8, 4, 8, 4}, {1, 2, 1, 2, 1});
  const std::vector<TTShape> small = {
      TTShape({2, 3}, {3, 2}, {1, 3, 1}),
      TTShape({4, 4}, {4, 4}, {1, 2, 1}),
      TTShape({2, 2, 2}, {2, 2, 2}, {1, 2, 2, 1}),
      TTShape({4, 4, 4}, {4, 4, 4}, {1, 2, 2, 1}),
  };
  int pairs = 0;
  double worst = 0.0;
  auto visit = [&](const TTShape& s, int draws, int inputs_per_draw) {
    for (int d = 0; d < draws; ++d) {
      const TTCores tt = testing::random_tt(s, rng, 0.4);
      const Eigen::MatrixXd dense = tt_to_dense(tt);
      for (int i = 0; i < inputs_per_draw; ++i) {
        Eigen::VectorXd x(s.in_dim());
        for (int k = 0; k < x.size(); ++k) x[k] = nd(rng);
        const Eigen::VectorXd ref = dense * x;
        const double rel = (tt_matvec(tt, x) - ref).norm() / (ref.norm() + 1e-300);
        worst = std::max(worst, rel);
        ++pairs;
      }
    }
  };
  visit(flagship, 20, 5);  // 100 pairs at the flagship 1024x1024 shape
  for (const TTShape& s : small) visit(s, 45, 5);
  bool ok = true;
  ok &= check(pairs == 1000, why, "expected 1000 pairs, got " + std::to_string(pairs));
  ok &= check(worst <= 1e-12, why, "worst relative error " + std::to_string(worst));
  return ok;
}

// ---- criterion 8: baseline gradient check ----------------------------------

bool gradient_check(std::ostringstream& why) {
  bool ok = true;
  for (int hidden : {2, 4, 8}) {
    for (int dim : {2, 3}) {
      const PDEProblem prob = PDEProblem::hjb_toy(dim);
      const FdConfig cfg;
      const DenseMlp mlp = mlp_init(hidden, dim + 1, 100 + hidden * 10 + dim);
      const CollocationBatch batch = sample_collocation(5, prob, cfg, 55);
      const GradientResult res = loss_param_gradient(mlp, prob, batch, cfg);

      const double h = 1e-5;
      auto slope = [&](DenseMlp m, int which, int r, int c) {
        auto& w = which == 0 ? m.w1 : which == 1 ? m.w2 : m.w3;
        const double orig = w(r, c);
        w(r, c) = orig + h;
        const double lp = residual_loss(MlpField(m), prob, batch, cfg).loss;
        w(r, c) = orig - h;
        const double lm = residual_loss(MlpField(m), prob, batch, cfg).loss;
        return (lp - lm) / (2 * h);
      };
      // relative error in the norm sense per weight matrix (entrywise ratios
      // are dominated by differencing roundoff on near-zero slopes)
      double worst = 0.0;
      auto scan = [&](int which, const Eigen::MatrixXd& g) {
        Eigen::MatrixXd num(g.rows(), g.cols());
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < g.cols(); ++c) num(r, c) = slope(mlp, which, r, c);
        worst = std::max(worst, (g - num).norm() / (num.norm() + 1e-300));
      };
      scan(0, res.grads.g1);
      scan(1, res.grads.g2);
      scan(2, res.grads.g3);
      ok &= check(worst <= 1e-5, why,
                  "hidden=" + std::to_string(hidden) + " dim=" + std::to_string(dim) +
                      " worst rel err " + std::to_string(worst));
    }
  }
  return ok;
}

// ---- criterion 9: off-chip training degrades when mapped --------------------

bool offchip_degradation(std::ostringstream& why) {
  const PDEProblem prob = PDEProblem::hjb_toy(4);
  DenseMlp mlp = mlp_init(16, prob.dim + 1, 1);
  // Shrunken init: at low dimension, residual-only training from a standard
  // init settles near spurious near-solutions a few times above the 1e-2
  // target; starting close to the linear regime avoids those basins.
  mlp.w1 *= 0.0625;
  mlp.w2 *= 0.0625;
  mlp.w3 *= 0.0625;
  bool ok = true;
  BpTrainConfig cfg;
  cfg.batch = 100;
  cfg.train_seed = 7922;  // stage seeds hashed from here
  for (double lr : {1e-3, 1e-3, 3e-4, 1e-4}) {
    cfg.epochs = 8000;
    cfg.learning_rate = lr;
    cfg.train_seed = cfg.train_seed * 2862933555777941757ULL + 3037000493ULL;
    const BpTrainResult res = offchip_train(mlp, prob, cfg);
    ok &= check(!res.diverged, why, "baseline training diverged");
  }

  const MlpField f(mlp);
  const double val = validation_mse(f, prob, 1000, 2);
  ok &= check(val <= 1e-2, why, "trained val MSE " + std::to_string(val) + " > 1e-2");

  const DegradeResult deg = map_and_degrade(mlp, prob, NoiseConfig{}, 10, 1000, 2, 500);
  const double med = testing::median(deg.noisy_mse);
  g_noisy_baseline_median = med;
  ok &= check(med >= 10.0 * deg.clean_mse, why,
              "median noisy MSE " + std::to_string(med) + " < 10x clean " +
                  std::to_string(deg.clean_mse));
  return ok;
}

// ---- criterion 10: on-chip ZO training at desk scale ------------------------

bool zo_training_desk(std::ostringstream& why) {
  const PDEProblem prob = PDEProblem::hjb_toy(2);
  const TTShape shape({4, 4, 4}, {4, 4, 4}, {1, 2, 2, 1});
  int successes = 0;
  std::ostringstream scores;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ChipInstance chip = make_tt_chip(shape, 2, NoiseConfig{}, mix_seed(seed, 0xa01),
                                     mix_seed(seed, 0x1717));
    // Halve the commanded attenuation levels before training: at D=2 the
    // stock Gaussian-core gain puts several inits in basins that settle on
    // spurious near-solutions (same effect, and same fix, as the shrunken
    // dense init in criterion 9).
    Eigen::VectorXd p0 = chip.params();
    p0.tail(chip.sigma_count()) *= 0.5;
    chip.set_params(p0);
    ZoTrainConfig cfg;
    cfg.epochs = 2000;
    cfg.batch = 100;
    cfg.learning_rate = 1.2e-3;
    cfg.train_seed = seed;
    cfg.val_seed = 2;
    cfg.spsa.seed = mix_seed(seed, 0x5b5a);
    cfg.val_every = 500;
    const TrainRun run = train(chip, prob, cfg);
    scores << (seed > 1 ? " " : "") << run.final_val_mse;
    if (!run.aborted && run.final_val_mse <= 5e-2) ++successes;
  }
  return check(successes >= 8, why,
               "only " + std::to_string(successes) + "/10 seeds reached 5e-2 (final MSEs: " +
                   scores.str() + ")");
}

// ---- criterion 11 (nightly): full-scale ZO training -------------------------

bool zo_training_full_scale(std::ostringstream& why) {
  if (!g_noisy_baseline_median) {
    std::ostringstream ignored;
    offchip_degradation(ignored);  // populate the baseline comparison point
  }
  RunConfig cfg = reference_run_config();
  ChipInstance chip = make_tt_chip(cfg.arch.tt_shape, cfg.arch.tt_layers, cfg.noise,
                                   cfg.seeds.noise, cfg.seeds.init);
  const TrainRun run = train(chip, cfg.problem, cfg.train);
  bool ok = check(!run.aborted, why, "full-scale run aborted: " + run.abort_reason);
  ok &= check(run.final_val_mse <= 2e-2, why,
              "final val MSE " + std::to_string(run.final_val_mse) + " > 2e-2");
  if (g_noisy_baseline_median)
    ok &= check(run.final_val_mse < *g_noisy_baseline_median, why,
                "on-chip result does not beat the noisy-mapped baseline");
  return ok;
}

// ---- criterion 12: byte-identical metrics across thread counts -----------------

bool determinism(std::ostringstream& why) {
  const fs::path base = fs::temp_directory_path() / "tonnsim_determinism";
  fs::remove_all(base);
  fs::create_directories(base);

  RunConfig cfg = parse_run_config(R"({
    "schema_version": 1,
    "problem": { "kind": "hjb-toy", "dim": 2 },
    "architecture": { "kind": "tonn", "tt_out_factors": [4, 4, 4],
                      "tt_in_factors": [4, 4, 4], "tt_ranks": [1, 2, 2, 1] },
    "train": { "epochs": 2000, "val_every": 50 },
    "noise": { "sigma_gamma": 0.002, "omega": 0.005, "bias": true },
    "seeds": { "train": 1, "validation": 2, "noise": 3, "init": 4 }
  })");
  const fs::path cfg_path = base / "config.json";
  write_text_file(cfg_path.string(), run_config_to_json(cfg));

  std::vector<std::string> outputs;
  for (int threads : {1, 2, 8}) {
    set_thread_count(threads);
    const fs::path out = base / ("threads_" + std::to_string(threads));
    const int rc = cmd_train(cfg_path.string(), out.string());
    set_thread_count(1);
    if (rc != 0) return check(false, why, "train exited " + std::to_string(rc));
    outputs.push_back(read_text_file((out / "metrics.csv").string()));
  }
  bool ok = true;
  ok &= check(outputs[0] == outputs[1], why, "metrics differ between 1 and 2 threads");
  ok &= check(outputs[0] == outputs[2], why, "metrics differ between 1 and 8 threads");
  ok &= check(!outputs[0].empty(), why, "metrics.csv is empty");
  return ok;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::ostringstream&)> run;
  bool nightly_only = false;
};

}  // namespace

int main(int argc, char** argv) {
  bool nightly = false;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--nightly") == 0) nightly = true;
    else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    else {
      std::cerr << "usage: acceptance [--nightly] [--only N]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "cost-model latency exactness", latency_exactness},
      {2, "training-efficiency arithmetic", training_efficiency},
      {3, "MZI accounting and reduction ratio", mzi_accounting},
      {4, "trainable parameter counts", parameter_counts},
      {5, "analytic-solution residual oracle", analytic_residual},
      {6, "mesh decompose/compose round-trip", mesh_round_trip},
      {7, "tensor-train oracle equivalence", tt_oracle},
      {8, "baseline gradient check", gradient_check},
      {9, "off-chip mapping degradation", offchip_degradation},
      {10, "on-chip ZO training, desk scale", zo_training_desk},
      {11, "on-chip ZO training, full scale", zo_training_full_scale, true},
      {12, "byte-identical metrics across thread counts", determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    if (c.nightly_only && !nightly && only != c.id) {
      std::cout << "SKIP  " << c.id << "  " << c.name << " (nightly only)\n";
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream why;
    bool ok = false;
    try {
      ok = c.run(why);
    } catch (const std::exception& e) {
      why << "exception: " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (ok ? "PASS" : "FAIL") << "  " << c.id << "  " << c.name << "  ["
              << std::fixed << secs << std::defaultfloat << " s]";
    if (!ok) {
      std::cout << "  -- " << why.str();
      ++failures;
    }
    std::cout << '\n' << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
