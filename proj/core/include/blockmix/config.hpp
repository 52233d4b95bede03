#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "blockmix/tensor.hpp"

namespace blockmix {

enum class AlphaMode : std::uint8_t { fixed = 0, learned = 1 };

/// Fixed model structure: prior hyperparameters and inference controls.
struct ModelConfig {
  int n_states = 1;
  std::vector<int> blocks_per_state;  // S_m
  int truncation = 20;                // D
  Family family = Family::continuous;

  // Informative-component base measure NIG(0, lambda, a/2, b/2) or Beta(a0, b0).
  double nig_lambda = 1.0;
  double nig_a = 10.0;
  double nig_b = 10.0;
  double beta_a0 = 1.0;
  double beta_b0 = 1.0;

  // Node-allocation Dirichlet concentrations; empty means flat (all ones).
  std::vector<std::vector<double>> dir_phi;

  double gamma_prior_prob = 0.5;

  AlphaMode alpha_mode = AlphaMode::learned;
  double alpha_fixed = 1.0;  // used when alpha_mode == fixed

  // Fixed noise-component parameters. noise_var <= 0 requests the
  // data-adaptive default (2x pooled off-diagonal variance).
  double noise_mean = 0.0;
  double noise_var = -1.0;
  double noise_prob = 0.5;

  int max_iter = 500;
  double tol = 1e-6;
  int n_restarts = 10;
  std::uint64_t seed = 0;
  int threads = 1;
  bool check_monotonicity = true;

  /// Throws ValidationError on inconsistent settings.
  void validate() const;

  /// Dirichlet concentrations for state m (flat when unset).
  std::vector<double> phi(int m) const;
};

/// All variational parameters of one fit. Sizes follow the config and tensor.
struct VariationalState {
  std::vector<Eigen::VectorXd> t;      // m -> S_m, Dirichlet params of q(tau_m)
  std::vector<Eigen::MatrixXd> eta;    // m -> V x S_m, simplex rows
  Eigen::VectorXd e, f;                // D-1, Beta params of q(w'_d); w'_D == 1
  Eigen::MatrixXd b;                   // N x D, unnormalized log cluster weights
  std::vector<Eigen::VectorXd> zeta;   // m -> P_m, logits of q(gamma = 1)
  // Continuous family: NIG params, each m -> D x P_m.
  std::vector<Eigen::MatrixXd> u, r, g, h;
  // Binary family: Beta params, each m -> D x P_m.
  std::vector<Eigen::MatrixXd> j, k;
  double alpha_shape = 1.0;
  double alpha_rate = 1.0;
  std::vector<double> elbo_trace;
};

/// Random initialization: eta rows ~ symmetric Dirichlet(5), b entries
/// standard normal, all conjugate factors at their prior values.
/// Deterministic given seed.
VariationalState init_state(const ModelConfig& config, const ConnectivityTensor& tensor,
                            std::uint64_t seed);

/// Resolves the data-adaptive noise variance default against a tensor.
ModelConfig resolve_noise_var(ModelConfig config, const ConnectivityTensor& tensor);

}  // namespace blockmix
