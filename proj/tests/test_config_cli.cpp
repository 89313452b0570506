#include <doctest.h>

#include <Eigen/Dense>
#include <fstream>

#include "helpers.hpp"
#include "tonnsim/baseline_bp.hpp"
#include "tonnsim/checkpoint.hpp"
#include "tonnsim/chip.hpp"
#include "tonnsim/config.hpp"

using namespace tonnsim;

namespace {

const char* kMinimalToy = R"({
  "schema_version": 1,
  "problem": { "kind": "hjb-toy", "dim": 2 },
  "architecture": {
    "kind": "tonn",
    "tt_out_factors": [4, 4],
    "tt_in_factors": [4, 4],
    "tt_ranks": [1, 2, 1]
  },
  "train": { "epochs": 10 }
})";

}  // namespace

TEST_CASE("minimal config fills documented defaults") {
  const RunConfig cfg = parse_run_config(kMinimalToy);
  CHECK(cfg.problem.dim == 2);
  CHECK(cfg.arch.kind == ArchKind::kTonn);
  CHECK(cfg.arch.tt_layers == 2);
  CHECK(cfg.arch.cost_profile == Architecture::kTonn1);
  CHECK(cfg.train.epochs == 10);
  CHECK(cfg.train.batch == 100);
  CHECK(cfg.train.learning_rate == 1e-3);
  CHECK(cfg.train.spsa.num_perturbations == 10);
  CHECK(cfg.train.spsa.sampling_radius == 0.01);
  CHECK(cfg.train.fd.eps_x == 0.01);
  CHECK(cfg.noise.sigma_gamma == 0.002);
  CHECK(cfg.noise.omega == 0.005);
  CHECK(cfg.noise.bias_on);
  CHECK(cfg.seeds.train == 1);
  CHECK(cfg.seeds.validation == 2);
  CHECK(cfg.accounting == Accounting::kNominal);
  // seeds are propagated into the trainer config
  CHECK(cfg.train.train_seed == 1);
  CHECK(cfg.train.val_seed == 2);
}

TEST_CASE("reference run config pins the full-scale experiment") {
  const RunConfig cfg = reference_run_config();
  CHECK(cfg.problem.dim == 20);
  CHECK(cfg.arch.tt_shape == TTShape({4, 8, 4, 8}, {8, 4, 8, 4}, {1, 2, 1, 2, 1}));
  CHECK(cfg.arch.tt_layers == 2);
  CHECK(cfg.train.epochs == 5000);
  CHECK(cfg.train.batch == 100);
  CHECK(cfg.train.spsa.num_perturbations == 10);
}

TEST_CASE("config serialization round-trips") {
  RunConfig cfg = parse_run_config(kMinimalToy);
  cfg.output_dir = "/tmp/somewhere";
  const std::string text = run_config_to_json(cfg);
  const RunConfig back = parse_run_config(text);
  CHECK(back.problem.dim == cfg.problem.dim);
  CHECK(back.arch.tt_shape == cfg.arch.tt_shape);
  CHECK(back.train.epochs == cfg.train.epochs);
  CHECK(back.train.learning_rate == cfg.train.learning_rate);
  CHECK(back.noise.sigma_gamma == cfg.noise.sigma_gamma);
  CHECK(back.seeds.init == cfg.seeds.init);
  CHECK(back.output_dir == cfg.output_dir);
  CHECK(back.accounting == cfg.accounting);
}

TEST_CASE("config rejections carry field paths") {
  auto expect_reject = [](const std::string& text, const std::string& needle) {
    try {
      parse_run_config(text);
      FAIL_CHECK("expected rejection containing '" << needle << "'");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_reject(R"({"schema_version": 2, "problem": {"kind": "hjb20"},
                    "architecture": {"kind": "onn-dense", "hidden": 4},
                    "train": {"epochs": 1}})",
                "schema_version");
  // unknown key, with its path spelled out
  expect_reject(R"({"schema_version": 1, "problem": {"kind": "hjb20", "extra": 1},
                    "architecture": {"kind": "onn-dense", "hidden": 4},
                    "train": {"epochs": 1}})",
                "problem");
  // missing required key
  expect_reject(R"({"schema_version": 1, "problem": {"kind": "hjb20"},
                    "architecture": {"kind": "onn-dense", "hidden": 4},
                    "train": {}})",
                "epochs");
  // non-square TT hidden layer
  expect_reject(R"({"schema_version": 1, "problem": {"kind": "hjb-toy", "dim": 2},
                    "architecture": {"kind": "tonn", "tt_out_factors": [4, 4],
                                     "tt_in_factors": [2, 4], "tt_ranks": [1, 2, 1]},
                    "train": {"epochs": 1}})",
                "square");
  // chip narrower than the PDE input [x; t]
  expect_reject(R"({"schema_version": 1, "problem": {"kind": "hjb20"},
                    "architecture": {"kind": "tonn", "tt_out_factors": [4, 4],
                                     "tt_in_factors": [4, 4], "tt_ranks": [1, 2, 1]},
                    "train": {"epochs": 1}})",
                "width");
  // type mismatch
  expect_reject(R"({"schema_version": 1, "problem": {"kind": "hjb20"},
                    "architecture": {"kind": "onn-dense", "hidden": 4},
                    "train": {"epochs": "many"}})",
                "epochs");
}

TEST_CASE("chip checkpoints restore bit-identical behavior") {
  ChipInstance chip =
      make_tt_chip(TTShape({4, 4}, {4, 4}, {1, 2, 1}), 2, NoiseConfig{}, 31, 32);
  // move it off the initial point so serialization sees non-trivial state
  Eigen::VectorXd p = chip.params();
  p.array() += 0.123;
  chip.set_params(p);

  const PDEProblem prob = PDEProblem::hjb_toy(2);
  const ChipCheckpoint ck{chip, prob, {17, 5e-4, 123456}};
  const std::string text = chip_checkpoint_to_json(ck);
  CHECK(checkpoint_kind(text) == "chip");

  const ChipCheckpoint back = chip_checkpoint_from_json(text);
  CHECK(back.meta.epoch == 17);
  CHECK(back.meta.learning_rate == 5e-4);
  CHECK(back.meta.cum_inferences == 123456);
  CHECK(back.problem.dim == 2);
  CHECK((back.chip.params() - chip.params()).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd x = Eigen::VectorXd::Constant(chip.input_dim(), 0.17);
  CHECK((back.chip.forward(x) - chip.forward(x)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.chip.ideal_forward(x) - chip.ideal_forward(x)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp checkpoints restore bit-identical weights") {
  const DenseMlp mlp = mlp_init(8, 5, 77);
  const PDEProblem prob = PDEProblem::hjb_toy(4);
  const MlpCheckpoint ck{mlp, prob, {3, 1e-3, 42}};
  const std::string text = mlp_checkpoint_to_json(ck);
  CHECK(checkpoint_kind(text) == "dense_mlp");
  const MlpCheckpoint back = mlp_checkpoint_from_json(text);
  CHECK((back.mlp.w1 - mlp.w1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.mlp.w2 - mlp.w2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.mlp.w3 - mlp.w3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("corrupt checkpoints are rejected loudly") {
  CHECK_THROWS_AS(chip_checkpoint_from_json("not json at all"), CheckpointError);
  CHECK_THROWS_AS(chip_checkpoint_from_json(R"({"schema_version": 1})"), CheckpointError);
  CHECK_THROWS_AS(checkpoint_kind(R"({"no": "kind"})"), CheckpointError);
  // truncated: valid json, wrong kind for the loader
  const MlpCheckpoint mck{mlp_init(2, 3, 1), PDEProblem::hjb_toy(2), {}};
  CHECK_THROWS_AS(chip_checkpoint_from_json(mlp_checkpoint_to_json(mck)), CheckpointError);
}
