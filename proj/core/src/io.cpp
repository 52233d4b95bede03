#include "blockmix/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "blockmix/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "payload I/O assumes a little-endian host");

namespace blockmix {

using nlohmann::json;

namespace {

const json& field(const json& j, const std::string& parent, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ValidationError("schema error at \"" + (parent.empty() ? key : parent + "." + key) +
                          "\"");
  }
  return *it;
}

template <typename T>
T get_field(const json& j, const std::string& parent, const char* key) {
  try {
    return field(j, parent, key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("schema error at \"" + (parent.empty() ? key : parent + "." + key) +
                          "\": wrong type");
  }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ValidationError("schema error at \"" + path + "\": expected matrix");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw ValidationError("schema error at \"" + path + "\": ragged matrix");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError("schema error at \"" + path + "\": expected array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j[i].get<double>();
  return v;
}

std::string family_name(Family f) {
  return f == Family::continuous ? "continuous" : "binary";
}

Family family_from_name(const std::string& name) {
  if (name == "continuous") return Family::continuous;
  if (name == "binary") return Family::binary;
  throw ValidationError("unknown likelihood family \"" + name + "\"");
}

json config_to_json(const ModelConfig& c) {
  return json{{"n_states", c.n_states},
              {"blocks_per_state", c.blocks_per_state},
              {"truncation", c.truncation},
              {"family", family_name(c.family)},
              {"nig_lambda", c.nig_lambda},
              {"nig_a", c.nig_a},
              {"nig_b", c.nig_b},
              {"beta_a0", c.beta_a0},
              {"beta_b0", c.beta_b0},
              {"dir_phi", c.dir_phi},
              {"gamma_prior_prob", c.gamma_prior_prob},
              {"alpha_mode", c.alpha_mode == AlphaMode::fixed ? "fixed" : "learned"},
              {"alpha_fixed", c.alpha_fixed},
              {"noise_mean", c.noise_mean},
              {"noise_var", c.noise_var},
              {"noise_prob", c.noise_prob},
              {"max_iter", c.max_iter},
              {"tol", c.tol},
              {"n_restarts", c.n_restarts},
              {"seed", c.seed},
              {"threads", c.threads},
              {"check_monotonicity", c.check_monotonicity}};
}

ModelConfig config_from_json(const json& j, const std::string& parent) {
  ModelConfig c;
  c.n_states = get_field<int>(j, parent, "n_states");
  c.blocks_per_state = get_field<std::vector<int>>(j, parent, "blocks_per_state");
  c.truncation = get_field<int>(j, parent, "truncation");
  c.family = family_from_name(get_field<std::string>(j, parent, "family"));
  c.nig_lambda = get_field<double>(j, parent, "nig_lambda");
  c.nig_a = get_field<double>(j, parent, "nig_a");
  c.nig_b = get_field<double>(j, parent, "nig_b");
  c.beta_a0 = get_field<double>(j, parent, "beta_a0");
  c.beta_b0 = get_field<double>(j, parent, "beta_b0");
  c.dir_phi = get_field<std::vector<std::vector<double>>>(j, parent, "dir_phi");
  c.gamma_prior_prob = get_field<double>(j, parent, "gamma_prior_prob");
  c.alpha_mode = get_field<std::string>(j, parent, "alpha_mode") == "fixed"
                     ? AlphaMode::fixed
                     : AlphaMode::learned;
  c.alpha_fixed = get_field<double>(j, parent, "alpha_fixed");
  c.noise_mean = get_field<double>(j, parent, "noise_mean");
  c.noise_var = get_field<double>(j, parent, "noise_var");
  c.noise_prob = get_field<double>(j, parent, "noise_prob");
  c.max_iter = get_field<int>(j, parent, "max_iter");
  c.tol = get_field<double>(j, parent, "tol");
  c.n_restarts = get_field<int>(j, parent, "n_restarts");
  c.seed = get_field<std::uint64_t>(j, parent, "seed");
  c.threads = get_field<int>(j, parent, "threads");
  c.check_monotonicity = get_field<bool>(j, parent, "check_monotonicity");
  return c;
}

json state_to_json(const VariationalState& st) {
  json j;
  j["t"] = json::array();
  for (const auto& v : st.t) j["t"].push_back(vector_to_json(v));
  j["eta"] = json::array();
  for (const auto& m : st.eta) j["eta"].push_back(matrix_to_json(m));
  j["e"] = vector_to_json(st.e);
  j["f"] = vector_to_json(st.f);
  j["b"] = matrix_to_json(st.b);
  j["zeta"] = json::array();
  for (const auto& v : st.zeta) j["zeta"].push_back(vector_to_json(v));
  auto dump = [](const std::vector<Eigen::MatrixXd>& ms) {
    json out = json::array();
    for (const auto& m : ms) out.push_back(matrix_to_json(m));
    return out;
  };
  j["u"] = dump(st.u);
  j["r"] = dump(st.r);
  j["g"] = dump(st.g);
  j["h"] = dump(st.h);
  j["j"] = dump(st.j);
  j["k"] = dump(st.k);
  j["alpha_shape"] = st.alpha_shape;
  j["alpha_rate"] = st.alpha_rate;
  j["elbo_trace"] = st.elbo_trace;
  return j;
}

VariationalState state_from_json(const json& j, const std::string& parent) {
  VariationalState st;
  auto vectors = [&](const char* key, std::vector<Eigen::VectorXd>& out) {
    const json& arr = field(j, parent, key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(vector_from_json(arr[i], parent + "." + key));
    }
  };
  auto matrices = [&](const char* key, std::vector<Eigen::MatrixXd>& out) {
    const json& arr = field(j, parent, key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(matrix_from_json(arr[i], parent + "." + key));
    }
  };
  vectors("t", st.t);
  matrices("eta", st.eta);
  st.e = vector_from_json(field(j, parent, "e"), parent + ".e");
  st.f = vector_from_json(field(j, parent, "f"), parent + ".f");
  st.b = matrix_from_json(field(j, parent, "b"), parent + ".b");
  vectors("zeta", st.zeta);
  auto opt_matrices = [&](const char* key, std::vector<Eigen::MatrixXd>& out) {
    const json& arr = field(j, parent, key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(matrix_from_json(arr[i], parent + "." + key));
    }
  };
  opt_matrices("u", st.u);
  opt_matrices("r", st.r);
  opt_matrices("g", st.g);
  opt_matrices("h", st.h);
  opt_matrices("j", st.j);
  opt_matrices("k", st.k);
  st.alpha_shape = get_field<double>(j, parent, "alpha_shape");
  st.alpha_rate = get_field<double>(j, parent, "alpha_rate");
  st.elbo_trace = get_field<std::vector<double>>(j, parent, "elbo_trace");
  return st;
}

json diagnostics_to_json(const FitDiagnostics& d) {
  return json{{"n_iter", d.n_iter},
              {"final_elbo", d.final_elbo},
              {"converged", d.converged},
              {"wall_time", d.wall_time},
              {"restart_index", d.restart_index},
              {"min_update_delta", d.min_update_delta},
              {"monotonicity_violations", d.monotonicity_violations}};
}

FitDiagnostics diagnostics_from_json(const json& j, const std::string& parent) {
  FitDiagnostics d;
  d.n_iter = get_field<int>(j, parent, "n_iter");
  d.final_elbo = get_field<double>(j, parent, "final_elbo");
  d.converged = get_field<bool>(j, parent, "converged");
  d.wall_time = get_field<double>(j, parent, "wall_time");
  d.restart_index = get_field<int>(j, parent, "restart_index");
  d.min_update_delta = get_field<double>(j, parent, "min_update_delta");
  d.monotonicity_violations = get_field<int>(j, parent, "monotonicity_violations");
  return d;
}

json sim_config_to_json(const SimConfig& s) {
  return json{{"n_subjects", s.n_subjects},
              {"n_states", s.n_states},
              {"n_subtypes", s.n_subtypes},
              {"n_nodes", s.n_nodes},
              {"node_probs", s.node_probs},
              {"n_blocks", s.n_blocks},
              {"informative_fraction", s.informative_fraction},
              {"informative_means", s.informative_means},
              {"informative_vars", s.informative_vars},
              {"noise_mean", s.noise_mean},
              {"noise_var", s.noise_var},
              {"family", family_name(s.family)},
              {"informative_probs", s.informative_probs},
              {"noise_prob", s.noise_prob},
              {"seed", s.seed}};
}

SimConfig sim_config_from_json(const json& j, const std::string& parent) {
  SimConfig s;  // start from defaults; every present key overrides
  auto opt = [&](const char* key, auto& target) {
    if (j.contains(key)) {
      try {
        target = j.at(key).get<std::decay_t<decltype(target)>>();
      } catch (const json::exception&) {
        throw ValidationError("schema error at \"" +
                              (parent.empty() ? key : parent + "." + key) + "\": wrong type");
      }
    }
  };
  opt("n_subjects", s.n_subjects);
  opt("n_states", s.n_states);
  opt("n_subtypes", s.n_subtypes);
  opt("n_nodes", s.n_nodes);
  opt("node_probs", s.node_probs);
  opt("n_blocks", s.n_blocks);
  opt("informative_fraction", s.informative_fraction);
  opt("informative_means", s.informative_means);
  opt("informative_vars", s.informative_vars);
  opt("noise_mean", s.noise_mean);
  opt("noise_var", s.noise_var);
  if (j.contains("family")) s.family = family_from_name(j.at("family").get<std::string>());
  opt("informative_probs", s.informative_probs);
  opt("noise_prob", s.noise_prob);
  opt("seed", s.seed);
  return s;
}

void write_u32le(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

}  // namespace

void atomic_write(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open \"" + tmp + "\" for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw ValidationError("write failed for \"" + tmp + "\"");
  }
  std::filesystem::rename(tmp, path);
}

void write_msfc(const ConnectivityTensor& tensor, const std::string& path,
                const std::vector<std::string>& state_names) {
  std::vector<std::string> names = state_names;
  if (names.empty()) {
    for (int m = 0; m < tensor.n_states(); ++m) names.push_back("state_" + std::to_string(m));
  }
  if (static_cast<int>(names.size()) != tensor.n_states()) {
    throw ValidationError("write_msfc: one state name per state required");
  }
  const json meta{{"format_version", 1},
                  {"n_subjects", tensor.n_subjects()},
                  {"n_states", tensor.n_states()},
                  {"n_nodes", tensor.n_nodes()},
                  {"family", family_name(tensor.family())},
                  {"state_names", names},
                  {"endianness", "little"}};
  const std::string meta_text = meta.dump();

  std::string out;
  out.reserve(8 + meta_text.size() +
              tensor.values().size() * (tensor.family() == Family::continuous ? 8 : 1));
  out.append("MSFC", 4);
  write_u32le(out, static_cast<std::uint32_t>(meta_text.size()));
  out.append(meta_text);
  if (tensor.family() == Family::continuous) {
    const char* raw = reinterpret_cast<const char*>(tensor.values().data());
    out.append(raw, tensor.values().size() * sizeof(double));
  } else {
    for (double v : tensor.values()) out.push_back(v != 0.0 ? '\x01' : '\x00');
  }
  atomic_write(path, out);
}

ConnectivityTensor read_msfc(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();

  if (data.size() < 8 || data.compare(0, 4, "MSFC") != 0) {
    throw ValidationError("\"" + path + "\": bad magic, not an MSFC container");
  }
  std::uint32_t meta_len;
  std::memcpy(&meta_len, data.data() + 4, 4);
  if (data.size() < 8 + static_cast<std::size_t>(meta_len)) {
    throw ValidationError("\"" + path + "\": truncated metadata");
  }
  json meta;
  try {
    meta = json::parse(data.substr(8, meta_len));
  } catch (const json::exception& e) {
    throw ValidationError("\"" + path + "\": bad metadata JSON: " + e.what());
  }
  if (get_field<int>(meta, "meta", "format_version") != 1) {
    throw ValidationError("\"" + path + "\": unsupported format_version");
  }
  const int N = get_field<int>(meta, "meta", "n_subjects");
  const int M = get_field<int>(meta, "meta", "n_states");
  const int V = get_field<int>(meta, "meta", "n_nodes");
  const Family family = family_from_name(get_field<std::string>(meta, "meta", "family"));
  if (N <= 0 || M <= 0 || V <= 0) {
    throw ValidationError("\"" + path + "\": non-positive dimensions in metadata");
  }

  const std::size_t n_values = static_cast<std::size_t>(N) * M * V * static_cast<std::size_t>(V);
  const std::size_t unit = family == Family::continuous ? sizeof(double) : 1;
  const std::size_t expected = n_values * unit;
  const std::size_t actual = data.size() - 8 - meta_len;
  if (actual != expected) {
    std::ostringstream os;
    os << "\"" << path << "\": payload is " << actual << " bytes, expected " << expected;
    throw ValidationError(os.str());
  }

  std::vector<double> values(n_values);
  const char* payload = data.data() + 8 + meta_len;
  if (family == Family::continuous) {
    std::memcpy(values.data(), payload, expected);
  } else {
    for (std::size_t i = 0; i < n_values; ++i) {
      const unsigned char b = static_cast<unsigned char>(payload[i]);
      if (b > 1) {
        std::ostringstream os;
        os << "\"" << path << "\": binary payload byte " << int(b) << " at offset " << i;
        throw ValidationError(os.str());
      }
      values[i] = b;
    }
  }
  return ConnectivityTensor::validate(std::move(values), N, M, V, family);
}

void save_fit(const FitResult& result, const std::string& path) {
  json doc{{"format", "blockmix-fit"},
           {"format_version", 1},
           {"config", config_to_json(result.config)},
           {"diagnostics", diagnostics_to_json(result.diagnostics)},
           {"state", state_to_json(result.state)}};
  atomic_write(path, doc.dump(2) + "\n");
}

FitResult load_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open \"" + path + "\"");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("\"" + path + "\": bad JSON: " + e.what());
  }
  FitResult out;
  out.config = config_from_json(field(doc, "", "config"), "config");
  out.diagnostics = diagnostics_from_json(field(doc, "", "diagnostics"), "diagnostics");
  out.state = state_from_json(field(doc, "", "state"), "state");
  return out;
}

void save_truth(const GroundTruth& truth, const SimConfig& sim, const std::string& path) {
  json doc{{"format", "blockmix-truth"},
           {"format_version", 1},
           {"sim_config", sim_config_to_json(sim)},
           {"subtype_of", truth.subtype_of},
           {"block_of", truth.block_of},
           {"informative", truth.informative},
           {"means", truth.means},
           {"vars", truth.vars}};
  atomic_write(path, doc.dump(2) + "\n");
}

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open \"" + path + "\"");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("\"" + path + "\": bad JSON: " + e.what());
  }
  return doc;
}

}  // namespace

GroundTruth load_truth(const std::string& path) {
  const json doc = parse_file(path);
  GroundTruth t;
  t.subtype_of = get_field<std::vector<int>>(doc, "", "subtype_of");
  t.block_of = get_field<std::vector<std::vector<int>>>(doc, "", "block_of");
  t.informative = get_field<std::vector<std::vector<bool>>>(doc, "", "informative");
  t.means = get_field<std::vector<std::vector<std::vector<double>>>>(doc, "", "means");
  t.vars = get_field<std::vector<std::vector<std::vector<double>>>>(doc, "", "vars");
  return t;
}

SimConfig load_truth_sim_config(const std::string& path) {
  const json doc = parse_file(path);
  return sim_config_from_json(field(doc, "", "sim_config"), "sim_config");
}

SimConfig sim_config_from_json_file(const std::string& path) {
  return sim_config_from_json(parse_file(path), "");
}

std::string sim_config_json(const SimConfig& sim) { return sim_config_to_json(sim).dump(2); }

std::string model_config_json(const ModelConfig& config) {
  return config_to_json(config).dump(2);
}

ConnectivityTensor import_csv(const std::vector<std::string>& paths, int n_subjects,
                              int n_states, Family family) {
  if (static_cast<int>(paths.size()) != n_subjects * n_states) {
    throw ValidationError("import_csv: need one file per (subject, state)");
  }
  std::vector<double> values;
  int V = -1;
  for (int idx = 0; idx < static_cast<int>(paths.size()); ++idx) {
    std::ifstream in(paths[idx]);
    if (!in) throw ValidationError("cannot open \"" + paths[idx] + "\"");
    std::vector<double> matrix;
    int rows = 0, cols = -1;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ls(line);
      std::string cell;
      int c = 0;
      while (std::getline(ls, cell, ',')) {
        try {
          matrix.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ValidationError("\"" + paths[idx] + "\": bad number \"" + cell + "\"");
        }
        ++c;
      }
      if (cols < 0) cols = c;
      if (c != cols) throw ValidationError("\"" + paths[idx] + "\": ragged rows");
      ++rows;
    }
    if (rows != cols) throw ValidationError("\"" + paths[idx] + "\": matrix is not square");
    if (V < 0) V = rows;
    if (rows != V) throw ValidationError("\"" + paths[idx] + "\": node count differs");
    values.insert(values.end(), matrix.begin(), matrix.end());
  }
  return ConnectivityTensor::validate(std::move(values), n_subjects, n_states, V, family);
}

}  // namespace blockmix
