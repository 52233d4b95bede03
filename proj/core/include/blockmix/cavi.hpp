#pragma once

#include <utility>

#include "blockmix/config.hpp"
#include "blockmix/tensor.hpp"

namespace blockmix {

struct FitDiagnostics {
  int n_iter = 0;
  double final_elbo = 0.0;
  bool converged = false;
  double wall_time = 0.0;  // seconds
  int restart_index = 0;
  // Smallest per-update ELBO change observed (negative means a decrease);
  // tracked when config.check_monotonicity is set.
  double min_update_delta = 0.0;
  int monotonicity_violations = 0;
};

/// Additive pieces of the ELBO: expected joint log density split per factor
/// against the total E_q[log q].
struct ElboComponents {
  double data = 0.0;       // E_q[log p(A | Xi)]
  double z_prior = 0.0;    // E_q[log p(Z | tau)]
  double tau_prior = 0.0;  // E_q[log p(tau)]
  double c_prior = 0.0;    // E_q[log p(C | w)]
  double w_prior = 0.0;    // E_q[log p(w' | alpha)]
  double gamma_prior = 0.0;
  double theta1_prior = 0.0;
  double alpha_prior = 0.0;  // zero when alpha is fixed

  double z_q = 0.0;  // E_q[log q(Z)], and so on
  double tau_q = 0.0;
  double c_q = 0.0;
  double w_q = 0.0;
  double gamma_q = 0.0;
  double theta1_q = 0.0;
  double alpha_q = 0.0;

  double prior_total() const {
    return z_prior + tau_prior + c_prior + w_prior + gamma_prior + theta1_prior + alpha_prior;
  }
  double eq_log_q() const { return z_q + tau_q + c_q + w_q + gamma_q + theta1_q + alpha_q; }
  double elbo() const { return data + prior_total() - eq_log_q(); }
};

/// Row-wise softmax of b with max subtraction.
Eigen::MatrixXd responsibilities(const VariationalState& state);

double expected_alpha(const VariationalState& state, const ModelConfig& config);

/// E[log w_d] under the truncated stick-breaking construction, length D.
Eigen::VectorXd expected_log_stick_weights(const VariationalState& state);

// Each update is the exact coordinate-ascent maximizer of the ELBO over its
// factor, all other factors held fixed.
void update_sticks(VariationalState& state, const ModelConfig& config);
void update_theta1_normal(VariationalState& state, const ModelConfig& config,
                          const BlockSuffStats& stats);
void update_theta1_bernoulli(VariationalState& state, const ModelConfig& config,
                             const BlockSuffStats& stats);
void update_gamma(VariationalState& state, const ModelConfig& config,
                  const BlockSuffStats& stats);
void update_clusters(VariationalState& state, const ModelConfig& config,
                     const BlockSuffStats& stats);
void update_tau(VariationalState& state, const ModelConfig& config);
/// Sequential over nodes in index order; Gauss-Seidel within each state.
void update_nodes(VariationalState& state, const ModelConfig& config,
                  const ConnectivityTensor& tensor);

/// Expected block log-likelihood of subject i's edges in block pair (s, s')
/// of state m under informative component d.
double expected_block_loglik(const VariationalState& state, const ModelConfig& config,
                             const BlockSuffStats& stats, int i, int d, int m, int s, int sp);

/// Same under the fixed noise component.
double expected_noise_loglik(const ModelConfig& config, const BlockSuffStats& stats,
                             int i, int m, int s, int sp);

ElboComponents elbo_components(const VariationalState& state, const ModelConfig& config,
                               const BlockSuffStats& stats);

double compute_elbo(const VariationalState& state, const ModelConfig& config,
                    const ConnectivityTensor& tensor, const BlockSuffStats& stats);

/// One full coordinate-ascent run from the given state to convergence.
/// config.noise_var must already be resolved.
FitDiagnostics run_sweeps(VariationalState& state, const ConnectivityTensor& tensor,
                          const ModelConfig& config);

/// Multi-restart fit; returns the max-ELBO restart. Restart k is initialized
/// with seed config.seed + k. Deterministic given the seed.
std::pair<VariationalState, FitDiagnostics> fit(const ConnectivityTensor& tensor,
                                                const ModelConfig& config);

}  // namespace blockmix
