#include "tonnsim/config.hpp"

#include <set>

#include <json.hpp>

namespace tonnsim {

using nlohmann::json;

namespace {

// Wraps access so every error message carries the JSON path.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }

  void expect_object() const {
    if (!j_->is_object()) throw ConfigError(path_ + ": expected an object");
  }

  void allow_keys(const std::set<std::string>& keys) const {
    expect_object();
    for (const auto& [k, v] : j_->items())
      if (!keys.count(k)) throw ConfigError(path_ + ": unknown key '" + k + "'");
  }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Node child(const std::string& key) const {
    if (!has(key)) throw ConfigError(path_ + ": missing required key '" + key + "'");
    return Node((*j_)[key], path_ + "." + key);
  }

  template <typename T>
  T get(const std::string& key, const char* type_name) const {
    const Node c = child(key);
    try {
      return c.raw().get<T>();
    } catch (const json::exception&) {
      throw ConfigError(c.path() + ": expected " + type_name);
    }
  }

  template <typename T>
  T get_or(const std::string& key, T fallback, const char* type_name) const {
    if (!has(key)) return fallback;
    return get<T>(key, type_name);
  }

 private:
  const json* j_;
  std::string path_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

PDEProblem parse_problem(const Node& n) {
  n.allow_keys({"kind", "dim"});
  const auto kind = n.get<std::string>("kind", "string");
  if (kind == "hjb20") {
    if (n.has("dim")) throw ConfigError(n.path() + ": hjb20 takes no dim");
    return PDEProblem::hjb20();
  }
  if (kind == "hjb-toy") {
    const int d = n.get<int>("dim", "integer");
    require(d >= 1 && d <= 64, n.path() + ".dim: must be in [1, 64]");
    return PDEProblem::hjb_toy(d);
  }
  throw ConfigError(n.path() + ".kind: unknown problem '" + kind + "'");
}

ArchConfig parse_arch(const Node& n) {
  ArchConfig a;
  const auto kind = n.get<std::string>("kind", "string");
  if (kind == "tonn") {
    n.allow_keys({"kind", "tt_out_factors", "tt_in_factors", "tt_ranks", "tt_layers",
                  "cost_profile"});
    a.kind = ArchKind::kTonn;
    try {
      a.tt_shape = TTShape(n.get<std::vector<int>>("tt_out_factors", "integer array"),
                           n.get<std::vector<int>>("tt_in_factors", "integer array"),
                           n.get<std::vector<int>>("tt_ranks", "integer array"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(n.path() + ": " + e.what());
    }
    require(a.tt_shape.out_dim() == a.tt_shape.in_dim(),
            n.path() + ": hidden TT layers must be square");
    a.tt_layers = n.get_or<int>("tt_layers", 2, "integer");
    require(a.tt_layers >= 1, n.path() + ".tt_layers: must be >= 1");
    const auto prof = n.get_or<std::string>("cost_profile", "tonn1", "string");
    if (prof == "tonn1")
      a.cost_profile = Architecture::kTonn1;
    else if (prof == "tonn2")
      a.cost_profile = Architecture::kTonn2;
    else
      throw ConfigError(n.path() + ".cost_profile: must be 'tonn1' or 'tonn2'");
    return a;
  }
  if (kind == "onn-dense") {
    n.allow_keys({"kind", "hidden", "hidden_layers"});
    a.kind = ArchKind::kOnnDense;
    a.cost_profile = Architecture::kOnn;
    a.hidden = n.get<int>("hidden", "integer");
    require(a.hidden >= 1, n.path() + ".hidden: must be >= 1");
    a.hidden_layers = n.get_or<int>("hidden_layers", 2, "integer");
    require(a.hidden_layers >= 1, n.path() + ".hidden_layers: must be >= 1");
    return a;
  }
  throw ConfigError(n.path() + ".kind: unknown architecture '" + kind + "'");
}

void parse_train(const Node& n, ZoTrainConfig& t, int& checkpoint_every) {
  n.allow_keys({"epochs", "batch", "learning_rate", "spsa", "fd", "val_every", "val_points",
                "max_retry", "lr_step_decay", "checkpoint_every"});
  t.epochs = n.get<int>("epochs", "integer");
  require(t.epochs >= 0, n.path() + ".epochs: must be >= 0");
  t.batch = n.get_or<int>("batch", 100, "integer");
  require(t.batch >= 1, n.path() + ".batch: must be >= 1");
  t.learning_rate = n.get_or<double>("learning_rate", 1e-3, "number");
  require(t.learning_rate > 0.0, n.path() + ".learning_rate: must be > 0");
  if (n.has("spsa")) {
    const Node s = n.child("spsa");
    s.allow_keys({"num_perturbations", "sampling_radius"});
    t.spsa.num_perturbations = s.get_or<int>("num_perturbations", 10, "integer");
    require(t.spsa.num_perturbations >= 1, s.path() + ".num_perturbations: must be >= 1");
    t.spsa.sampling_radius = s.get_or<double>("sampling_radius", 0.01, "number");
    require(t.spsa.sampling_radius > 0.0, s.path() + ".sampling_radius: must be > 0");
  }
  if (n.has("fd")) {
    const Node f = n.child("fd");
    f.allow_keys({"eps_x", "eps_t"});
    t.fd.eps_x = f.get_or<double>("eps_x", 0.01, "number");
    t.fd.eps_t = f.get_or<double>("eps_t", 0.01, "number");
    require(t.fd.eps_x > 0.0 && t.fd.eps_x < 0.5, f.path() + ".eps_x: must be in (0, 0.5)");
    require(t.fd.eps_t > 0.0 && t.fd.eps_t < 1.0, f.path() + ".eps_t: must be in (0, 1)");
  }
  t.val_every = n.get_or<int>("val_every", 50, "integer");
  require(t.val_every >= 1, n.path() + ".val_every: must be >= 1");
  t.val_points = n.get_or<int>("val_points", 1000, "integer");
  require(t.val_points >= 1, n.path() + ".val_points: must be >= 1");
  t.max_retry = n.get_or<int>("max_retry", 3, "integer");
  require(t.max_retry >= 0, n.path() + ".max_retry: must be >= 0");
  t.lr_step_decay = n.get_or<bool>("lr_step_decay", false, "boolean");
  checkpoint_every = n.get_or<int>("checkpoint_every", 0, "integer");
  require(checkpoint_every >= 0, n.path() + ".checkpoint_every: must be >= 0");
}

NoiseConfig parse_noise(const Node& n) {
  n.allow_keys({"sigma_gamma", "omega", "bias"});
  NoiseConfig c;
  c.sigma_gamma = n.get_or<double>("sigma_gamma", 0.002, "number");
  require(c.sigma_gamma >= 0.0, n.path() + ".sigma_gamma: must be >= 0");
  c.omega = n.get_or<double>("omega", 0.005, "number");
  c.bias_on = n.get_or<bool>("bias", true, "boolean");
  return c;
}

SeedConfig parse_seeds(const Node& n) {
  n.allow_keys({"train", "validation", "noise", "init"});
  SeedConfig s;
  s.train = n.get_or<std::uint64_t>("train", 1, "integer");
  s.validation = n.get_or<std::uint64_t>("validation", 2, "integer");
  s.noise = n.get_or<std::uint64_t>("noise", 3, "integer");
  s.init = n.get_or<std::uint64_t>("init", 4, "integer");
  return s;
}

DeviceConstants parse_device(const Node& n) {
  n.allow_keys({"t_dac_ns", "t_adc_ns", "t_tuning_ns", "t_dig_ns", "t_opt_onn_ns",
                "t_opt_tonn1_ns", "t_opt_tonn2_ns", "energy_tonn1_J", "energy_tonn2_J",
                "footprint_onn_mm2", "footprint_tonn1_mm2", "footprint_tonn2_mm2"});
  DeviceConstants d;
  d.t_dac_ns = n.get_or<double>("t_dac_ns", d.t_dac_ns, "number");
  d.t_adc_ns = n.get_or<double>("t_adc_ns", d.t_adc_ns, "number");
  d.t_tuning_ns = n.get_or<double>("t_tuning_ns", d.t_tuning_ns, "number");
  d.t_dig_ns = n.get_or<double>("t_dig_ns", d.t_dig_ns, "number");
  d.t_opt_onn_ns = n.get_or<double>("t_opt_onn_ns", d.t_opt_onn_ns, "number");
  d.t_opt_tonn1_ns = n.get_or<double>("t_opt_tonn1_ns", d.t_opt_tonn1_ns, "number");
  d.t_opt_tonn2_ns = n.get_or<double>("t_opt_tonn2_ns", d.t_opt_tonn2_ns, "number");
  d.energy_tonn1_J = n.get_or<double>("energy_tonn1_J", d.energy_tonn1_J, "number");
  d.energy_tonn2_J = n.get_or<double>("energy_tonn2_J", d.energy_tonn2_J, "number");
  d.footprint_onn_mm2 = n.get_or<double>("footprint_onn_mm2", d.footprint_onn_mm2, "number");
  d.footprint_tonn1_mm2 = n.get_or<double>("footprint_tonn1_mm2", d.footprint_tonn1_mm2, "number");
  d.footprint_tonn2_mm2 = n.get_or<double>("footprint_tonn2_mm2", d.footprint_tonn2_mm2, "number");
  for (double v : {d.t_dac_ns, d.t_adc_ns, d.t_tuning_ns, d.t_dig_ns, d.t_opt_onn_ns,
                   d.t_opt_tonn1_ns, d.t_opt_tonn2_ns})
    require(v >= 0.0, n.path() + ": timings must be >= 0");
  return d;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failed: ") + e.what());
  }
  const Node root(j, "config");
  root.allow_keys({"schema_version", "problem", "architecture", "train", "noise", "seeds",
                   "accounting", "output_dir", "device_constants"});
  const int ver = root.get<int>("schema_version", "integer");
  require(ver == 1, "config.schema_version: unsupported version");

  RunConfig cfg;
  cfg.problem = parse_problem(root.child("problem"));
  cfg.arch = parse_arch(root.child("architecture"));
  parse_train(root.child("train"), cfg.train, cfg.checkpoint_every);
  if (root.has("noise")) cfg.noise = parse_noise(root.child("noise"));
  if (root.has("seeds")) cfg.seeds = parse_seeds(root.child("seeds"));
  if (root.has("accounting")) {
    const auto acc = root.get<std::string>("accounting", "string");
    if (acc == "nominal")
      cfg.accounting = Accounting::kNominal;
    else if (acc == "true")
      cfg.accounting = Accounting::kTrue;
    else
      throw ConfigError("config.accounting: must be 'nominal' or 'true'");
  }
  if (root.has("output_dir")) cfg.output_dir = root.get<std::string>("output_dir", "string");
  if (root.has("device_constants")) cfg.device = parse_device(root.child("device_constants"));

  cfg.train.train_seed = cfg.seeds.train;
  cfg.train.val_seed = cfg.seeds.validation;

  if (cfg.arch.kind == ArchKind::kTonn) {
    require(cfg.arch.tt_shape.in_dim() >= cfg.problem.dim + 1,
            "config.architecture: TT layer width must hold the (x, t) input");
  }
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  if (cfg.problem.dim == 20)
    j["problem"] = {{"kind", "hjb20"}};
  else
    j["problem"] = {{"kind", "hjb-toy"}, {"dim", cfg.problem.dim}};
  if (cfg.arch.kind == ArchKind::kTonn) {
    j["architecture"] = {
        {"kind", "tonn"},
        {"tt_out_factors", cfg.arch.tt_shape.out_factors},
        {"tt_in_factors", cfg.arch.tt_shape.in_factors},
        {"tt_ranks", cfg.arch.tt_shape.ranks},
        {"tt_layers", cfg.arch.tt_layers},
        {"cost_profile", cfg.arch.cost_profile == Architecture::kTonn2 ? "tonn2" : "tonn1"}};
  } else {
    j["architecture"] = {{"kind", "onn-dense"},
                         {"hidden", cfg.arch.hidden},
                         {"hidden_layers", cfg.arch.hidden_layers}};
  }
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch", cfg.train.batch},
                {"learning_rate", cfg.train.learning_rate},
                {"spsa",
                 {{"num_perturbations", cfg.train.spsa.num_perturbations},
                  {"sampling_radius", cfg.train.spsa.sampling_radius}}},
                {"fd", {{"eps_x", cfg.train.fd.eps_x}, {"eps_t", cfg.train.fd.eps_t}}},
                {"val_every", cfg.train.val_every},
                {"val_points", cfg.train.val_points},
                {"max_retry", cfg.train.max_retry},
                {"lr_step_decay", cfg.train.lr_step_decay},
                {"checkpoint_every", cfg.checkpoint_every}};
  j["noise"] = {{"sigma_gamma", cfg.noise.sigma_gamma},
                {"omega", cfg.noise.omega},
                {"bias", cfg.noise.bias_on}};
  j["seeds"] = {{"train", cfg.seeds.train},
                {"validation", cfg.seeds.validation},
                {"noise", cfg.seeds.noise},
                {"init", cfg.seeds.init}};
  j["accounting"] = cfg.accounting == Accounting::kNominal ? "nominal" : "true";
  if (cfg.output_dir) j["output_dir"] = *cfg.output_dir;
  const DeviceConstants def;
  j["device_constants"] = {{"t_dac_ns", cfg.device.t_dac_ns},
                           {"t_adc_ns", cfg.device.t_adc_ns},
                           {"t_tuning_ns", cfg.device.t_tuning_ns},
                           {"t_dig_ns", cfg.device.t_dig_ns},
                           {"t_opt_onn_ns", cfg.device.t_opt_onn_ns},
                           {"t_opt_tonn1_ns", cfg.device.t_opt_tonn1_ns},
                           {"t_opt_tonn2_ns", cfg.device.t_opt_tonn2_ns},
                           {"energy_tonn1_J", cfg.device.energy_tonn1_J},
                           {"energy_tonn2_J", cfg.device.energy_tonn2_J},
                           {"footprint_onn_mm2", cfg.device.footprint_onn_mm2},
                           {"footprint_tonn1_mm2", cfg.device.footprint_tonn1_mm2},
                           {"footprint_tonn2_mm2", cfg.device.footprint_tonn2_mm2}};
  return j.dump(1);
}

RunConfig reference_run_config() {
  RunConfig cfg;
  cfg.problem = PDEProblem::hjb20();
  cfg.arch.kind = ArchKind::kTonn;
  cfg.arch.tt_shape = TTShape({4, 8, 4, 8}, {8, 4, 8, 4}, {1, 2, 1, 2, 1});
  cfg.arch.tt_layers = 2;
  cfg.arch.cost_profile = Architecture::kTonn1;
  cfg.train.epochs = 5000;
  cfg.train.train_seed = cfg.seeds.train;
  cfg.train.val_seed = cfg.seeds.validation;
  return cfg;
}

}  // namespace tonnsim
