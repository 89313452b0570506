#include "tonnsim/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tonnsim {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw CheckpointError(std::string(what) + ": expected array");
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw CheckpointError(std::string(what) + ": expected number");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty())
    throw CheckpointError(std::string(what) + ": expected non-empty 2d array");
  const std::size_t ncols = rows[0].size();
  Eigen::MatrixXd m(rows.size(), ncols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != ncols)
      throw CheckpointError(std::string(what) + ": ragged rows");
    for (std::size_t j = 0; j < ncols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
  }
  return m;
}

json mesh_to_json(const PhaseProgram& p) {
  json j;
  j["n"] = p.topology.n;
  j["kind"] = p.topology.kind == MeshKind::kFull ? "full" : "chain";
  j["angles"] = vec_to_json(p.angles);
  json signs = json::array();
  for (Eigen::Index i = 0; i < p.diag_signs.size(); ++i)
    signs.push_back(static_cast<int>(p.diag_signs[i]));
  j["signs"] = std::move(signs);
  return j;
}

PhaseProgram mesh_from_json(const json& j) {
  if (!j.is_object()) throw CheckpointError("mesh: expected object");
  const int n = j.at("n").get<int>();
  const std::string kind = j.at("kind").get<std::string>();
  PhaseProgram p;
  if (kind == "full")
    p.topology = MeshTopology::full(n);
  else if (kind == "chain")
    p.topology = MeshTopology::chain(n);
  else
    throw CheckpointError("mesh: unknown kind '" + kind + "'");
  p.angles = vec_from_json(j.at("angles"), "mesh angles");
  if (p.angles.size() != p.topology.size()) throw CheckpointError("mesh: wrong angle count");
  const auto& signs = j.at("signs");
  if (!signs.is_array() || static_cast<int>(signs.size()) != n)
    throw CheckpointError("mesh: wrong sign count");
  p.diag_signs.resize(n);
  for (int i = 0; i < n; ++i) {
    const int s = signs[i].get<int>();
    if (s != 1 && s != -1) throw CheckpointError("mesh: signs must be +-1");
    p.diag_signs[i] = s;
  }
  return p;
}

json svd_prog_to_json(const SvdLayerProgram& p) {
  json j;
  j["u"] = mesh_to_json(p.u_phases);
  j["sigma"] = vec_to_json(p.sigma);
  j["v"] = mesh_to_json(p.v_phases);
  return j;
}

SvdLayerProgram svd_prog_from_json(const json& j) {
  SvdLayerProgram p;
  p.u_phases = mesh_from_json(j.at("u"));
  p.sigma = vec_from_json(j.at("sigma"), "sigma");
  p.v_phases = mesh_from_json(j.at("v"));
  return p;
}

json layers_to_json(const std::vector<ChipLayer>& layers) {
  json arr = json::array();
  for (const auto& layer : layers) {
    json j;
    if (const auto* d = std::get_if<DenseSvdLayer>(&layer)) {
      j["type"] = "dense";
      j["prog"] = svd_prog_to_json(d->prog);
    } else {
      const auto& tt = std::get<TTSvdLayer>(layer);
      j["type"] = "tt";
      j["out_factors"] = tt.shape.out_factors;
      j["in_factors"] = tt.shape.in_factors;
      j["ranks"] = tt.shape.ranks;
      json cores = json::array();
      for (const auto& c : tt.cores) cores.push_back(svd_prog_to_json(c));
      j["cores"] = std::move(cores);
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ChipLayer> layers_from_json(const json& arr) {
  if (!arr.is_array() || arr.empty()) throw CheckpointError("chip: no layers");
  std::vector<ChipLayer> layers;
  for (const auto& j : arr) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "dense") {
      layers.emplace_back(DenseSvdLayer{svd_prog_from_json(j.at("prog"))});
    } else if (type == "tt") {
      TTSvdLayer tt;
      tt.shape = TTShape(j.at("out_factors").get<std::vector<int>>(),
                         j.at("in_factors").get<std::vector<int>>(),
                         j.at("ranks").get<std::vector<int>>());
      for (const auto& c : j.at("cores")) tt.cores.push_back(svd_prog_from_json(c));
      layers.emplace_back(std::move(tt));
    } else {
      throw CheckpointError("chip: unknown layer type '" + type + "'");
    }
  }
  return layers;
}

json noise_to_json(const NoiseModel& m) {
  json j;
  j["gamma"] = vec_to_json(m.gamma);
  j["phase_bias"] = vec_to_json(m.phase_bias);
  json ct = json::array();
  for (const auto& t : m.crosstalk) ct.push_back(json::array({t.from, t.to, t.weight}));
  j["crosstalk"] = std::move(ct);
  return j;
}

NoiseModel noise_from_json(const json& j) {
  NoiseModel m;
  m.gamma = vec_from_json(j.at("gamma"), "noise gamma");
  m.phase_bias = vec_from_json(j.at("phase_bias"), "noise bias");
  if (m.phase_bias.size() != m.gamma.size()) throw CheckpointError("noise: size mismatch");
  for (const auto& t : j.at("crosstalk")) {
    if (!t.is_array() || t.size() != 3) throw CheckpointError("noise: bad crosstalk term");
    m.crosstalk.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<double>()});
  }
  return m;
}

json problem_to_json(const PDEProblem& p) {
  return json{{"dim", p.dim},
              {"grad_coeff", p.grad_coeff},
              {"source", p.source},
              {"horizon", p.horizon}};
}

PDEProblem problem_from_json(const json& j) {
  PDEProblem p;
  p.dim = j.at("dim").get<int>();
  p.grad_coeff = j.at("grad_coeff").get<double>();
  p.source = j.at("source").get<double>();
  p.horizon = j.at("horizon").get<double>();
  if (p.dim < 1 || !(p.horizon > 0.0)) throw CheckpointError("problem: invalid fields");
  return p;
}

json meta_to_json(const CheckpointMeta& m) {
  return json{{"epoch", m.epoch},
              {"learning_rate", m.learning_rate},
              {"cum_inferences", m.cum_inferences}};
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta m;
  m.epoch = j.at("epoch").get<int>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.cum_inferences = j.at("cum_inferences").get<std::int64_t>();
  return m;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint parse failed: ") + e.what());
  }
}

}  // namespace

std::string chip_checkpoint_to_json(const ChipCheckpoint& ck) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "chip";
  j["problem"] = problem_to_json(ck.problem);
  j["meta"] = meta_to_json(ck.meta);
  j["layers"] = layers_to_json(ck.chip.layers());
  j["noise"] = noise_to_json(ck.chip.noise());
  return j.dump(1);
}

ChipCheckpoint chip_checkpoint_from_json(const std::string& text) {
  const json j = parse(text);
  try {
    if (j.at("schema_version").get<int>() != 1)
      throw CheckpointError("checkpoint: unsupported schema version");
    if (j.at("kind").get<std::string>() != "chip")
      throw CheckpointError("checkpoint: kind is not 'chip'");
    ChipCheckpoint ck{ChipInstance(layers_from_json(j.at("layers")), noise_from_json(j.at("noise"))),
                      problem_from_json(j.at("problem")), meta_from_json(j.at("meta"))};
    return ck;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

std::string mlp_checkpoint_to_json(const MlpCheckpoint& ck) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "dense_mlp";
  j["problem"] = problem_to_json(ck.problem);
  j["meta"] = meta_to_json(ck.meta);
  j["w1"] = mat_to_json(ck.mlp.w1);
  j["w2"] = mat_to_json(ck.mlp.w2);
  j["w3"] = mat_to_json(ck.mlp.w3);
  return j.dump(1);
}

MlpCheckpoint mlp_checkpoint_from_json(const std::string& text) {
  const json j = parse(text);
  try {
    if (j.at("schema_version").get<int>() != 1)
      throw CheckpointError("checkpoint: unsupported schema version");
    if (j.at("kind").get<std::string>() != "dense_mlp")
      throw CheckpointError("checkpoint: kind is not 'dense_mlp'");
    MlpCheckpoint ck;
    ck.mlp.w1 = mat_from_json(j.at("w1"), "w1");
    ck.mlp.w2 = mat_from_json(j.at("w2"), "w2");
    ck.mlp.w3 = mat_from_json(j.at("w3"), "w3");
    ck.problem = problem_from_json(j.at("problem"));
    ck.meta = meta_from_json(j.at("meta"));
    if (ck.mlp.w3.rows() != 1 || ck.mlp.w2.rows() != ck.mlp.w1.rows() ||
        ck.mlp.w2.cols() != ck.mlp.w1.rows() || ck.mlp.w3.cols() != ck.mlp.w2.rows())
      throw CheckpointError("checkpoint: inconsistent mlp shapes");
    return ck;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string checkpoint_kind(const std::string& text) {
  const json j = parse(text);
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw CheckpointError("checkpoint: missing kind");
  return j["kind"].get<std::string>();
}

}  // namespace tonnsim
