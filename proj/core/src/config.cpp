#include "blockmix/config.hpp"

#include <random>

#include "blockmix/errors.hpp"

namespace blockmix {

void ModelConfig::validate() const {
  if (n_states <= 0) throw ValidationError("config: n_states must be positive");
  if (static_cast<int>(blocks_per_state.size()) != n_states) {
    throw ValidationError("config: blocks_per_state must have one entry per state");
  }
  for (int s : blocks_per_state) {
    if (s < 1) throw ValidationError("config: blocks_per_state entries must be >= 1");
  }
  if (truncation < 2) throw ValidationError("config: truncation must be >= 2");
  if (!(nig_lambda > 0) || !(nig_a > 0) || !(nig_b > 0) || !(beta_a0 > 0) || !(beta_b0 > 0)) {
    throw ValidationError("config: prior hyperparameters must be positive");
  }
  if (!(gamma_prior_prob > 0.0) || !(gamma_prior_prob < 1.0)) {
    throw ValidationError("config: gamma_prior_prob must lie in (0, 1)");
  }
  if (alpha_mode == AlphaMode::fixed && !(alpha_fixed > 0)) {
    throw ValidationError("config: fixed alpha must be positive");
  }
  if (!(noise_prob > 0.0) || !(noise_prob < 1.0)) {
    throw ValidationError("config: noise_prob must lie in (0, 1)");
  }
  if (!(tol > 0)) throw ValidationError("config: tol must be positive");
  if (max_iter < 1) throw ValidationError("config: max_iter must be >= 1");
  if (n_restarts < 1) throw ValidationError("config: n_restarts must be >= 1");
  if (!dir_phi.empty()) {
    if (static_cast<int>(dir_phi.size()) != n_states) {
      throw ValidationError("config: dir_phi must have one vector per state");
    }
    for (int m = 0; m < n_states; ++m) {
      if (static_cast<int>(dir_phi[m].size()) != blocks_per_state[m]) {
        throw ValidationError("config: dir_phi length must match blocks_per_state");
      }
      for (double v : dir_phi[m]) {
        if (!(v > 0)) throw ValidationError("config: dir_phi entries must be positive");
      }
    }
  }
}

std::vector<double> ModelConfig::phi(int m) const {
  if (!dir_phi.empty()) return dir_phi[m];
  return std::vector<double>(blocks_per_state[m], 1.0);
}

ModelConfig resolve_noise_var(ModelConfig config, const ConnectivityTensor& tensor) {
  if (config.noise_var > 0.0 || config.family == Family::binary) return config;
  const int N = tensor.n_subjects();
  const int M = tensor.n_states();
  const int V = tensor.n_nodes();
  double sum = 0.0, sumsq = 0.0;
  double count = 0.0;
  for (int i = 0; i < N; ++i) {
    for (int m = 0; m < M; ++m) {
      const auto a = tensor.slice(i, m);
      for (int v = 0; v < V; ++v) {
        for (int vp = v + 1; vp < V; ++vp) {
          sum += a(v, vp);
          sumsq += a(v, vp) * a(v, vp);
          count += 1.0;
        }
      }
    }
  }
  if (count < 2.0) throw ValidationError("resolve_noise_var: too few edges");
  const double mean = sum / count;
  double var = sumsq / count - mean * mean;
  if (!(var > 0)) var = 1.0;
  config.noise_var = 2.0 * var;
  return config;
}

VariationalState init_state(const ModelConfig& config, const ConnectivityTensor& tensor,
                            std::uint64_t seed) {
  config.validate();
  if (tensor.n_states() != config.n_states) {
    throw ValidationError("init_state: tensor/config state count mismatch");
  }
  const int N = tensor.n_subjects();
  const int M = config.n_states;
  const int V = tensor.n_nodes();
  const int D = config.truncation;

  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma5(5.0, 1.0);
  std::normal_distribution<double> stdnorm(0.0, 1.0);

  VariationalState st;
  st.eta.resize(M);
  st.t.resize(M);
  st.zeta.resize(M);
  if (config.family == Family::continuous) {
    st.u.resize(M);
    st.r.resize(M);
    st.g.resize(M);
    st.h.resize(M);
  } else {
    st.j.resize(M);
    st.k.resize(M);
  }

  for (int m = 0; m < M; ++m) {
    const int S = config.blocks_per_state[m];
    const int P = pair_count(S);
    st.eta[m].resize(V, S);
    for (int v = 0; v < V; ++v) {
      double total = 0.0;
      for (int s = 0; s < S; ++s) {
        const double draw = gamma5(rng);
        st.eta[m](v, s) = draw;
        total += draw;
      }
      st.eta[m].row(v) /= total;
    }
    const std::vector<double> phi = config.phi(m);
    st.t[m].resize(S);
    for (int s = 0; s < S; ++s) {
      st.t[m](s) = phi[s] + st.eta[m].col(s).sum();
    }
    st.zeta[m] = Eigen::VectorXd::Zero(P);
    if (config.family == Family::continuous) {
      st.u[m] = Eigen::MatrixXd::Zero(D, P);
      st.r[m] = Eigen::MatrixXd::Constant(D, P, config.nig_lambda);
      st.g[m] = Eigen::MatrixXd::Constant(D, P, config.nig_a);
      st.h[m] = Eigen::MatrixXd::Constant(D, P, config.nig_b);
    } else {
      st.j[m] = Eigen::MatrixXd::Constant(D, P, config.beta_a0);
      st.k[m] = Eigen::MatrixXd::Constant(D, P, config.beta_b0);
    }
  }

  st.b.resize(N, D);
  for (int i = 0; i < N; ++i) {
    for (int d = 0; d < D; ++d) {
      st.b(i, d) = stdnorm(rng);
    }
  }
  st.e = Eigen::VectorXd::Ones(D - 1);
  st.f = Eigen::VectorXd::Ones(D - 1);
  st.alpha_shape = 1.0;
  st.alpha_rate = 1.0;
  return st;
}

}  // namespace blockmix
