#pragma once

// Shared test fixtures: random micro-instances and a finite-difference
// stationarity check of the ELBO around each coordinate update.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "blockmix/cavi.hpp"
#include "blockmix/config.hpp"
#include "blockmix/tensor.hpp"

namespace blockmix::testing {

struct Instance {
  ConnectivityTensor tensor;
  ModelConfig config;
  VariationalState state;
};

inline ConnectivityTensor random_micro_tensor(std::mt19937_64& rng, int N, int M, int V,
                                              Family family) {
  std::normal_distribution<double> norm(0.0, 1.5);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> values(static_cast<std::size_t>(N) * M * V * V, 0.0);
  const std::size_t vv = static_cast<std::size_t>(V) * V;
  for (int i = 0; i < N; ++i) {
    for (int m = 0; m < M; ++m) {
      double* s = values.data() + (static_cast<std::size_t>(i) * M + m) * vv;
      for (int v = 0; v < V; ++v) {
        for (int vp = v + 1; vp < V; ++vp) {
          const double a = family == Family::continuous ? norm(rng) : double(coin(rng));
          s[v * V + vp] = a;
          s[vp * V + v] = a;
        }
      }
    }
  }
  return ConnectivityTensor::validate(std::move(values), N, M, V, family);
}

/// Random instance within the micro envelope N<=5, V<=6, M<=2, S<=2, D<=3.
inline Instance random_instance(std::uint64_t seed, Family family,
                                bool learned_alpha = true) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const int N = pick(2, 5), M = pick(1, 2), V = pick(3, 6), D = pick(2, 3);

  ModelConfig config;
  config.n_states = M;
  for (int m = 0; m < M; ++m) config.blocks_per_state.push_back(pick(1, 2));
  config.truncation = D;
  config.family = family;
  config.alpha_mode = learned_alpha ? AlphaMode::learned : AlphaMode::fixed;
  config.alpha_fixed = 1.0;
  config.noise_var = 2.0;
  config.gamma_prior_prob = 0.3;

  Instance inst{random_micro_tensor(rng, N, M, V, family), config, {}};
  inst.state = init_state(config, inst.tensor, seed + 1);
  // Nudge the conjugate factors off their prior values so gradients are
  // checked at a generic point.
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  for (int m = 0; m < M; ++m) {
    for (int p = 0; p < inst.state.zeta[m].size(); ++p) {
      inst.state.zeta[m](p) = unif(rng);
    }
    if (family == Family::continuous) {
      inst.state.u[m].array() += 0.2;
      inst.state.h[m].array() *= 1.1;
    } else {
      inst.state.j[m].array() += 0.5;
    }
  }
  return inst;
}

inline double elbo_at(const Instance& inst) {
  const BlockSuffStats stats = block_suffstats(inst.tensor, inst.state.eta);
  return elbo_components(inst.state, inst.config, stats).elbo();
}

enum class FactorKind { sticks, theta1, gamma, clusters, tau, nodes };

/// Packs the factor's parameters into unconstrained coordinates
/// (log for positives, log-weights for simplex rows, raw otherwise).
inline std::vector<double> pack_factor(const Instance& inst, FactorKind kind) {
  const VariationalState& st = inst.state;
  std::vector<double> x;
  auto push_log_matrix = [&](const Eigen::MatrixXd& m) {
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < m.cols(); ++c) x.push_back(std::log(m(r, c)));
    }
  };
  switch (kind) {
    case FactorKind::sticks:
      for (int d = 0; d < st.e.size(); ++d) x.push_back(std::log(st.e(d)));
      for (int d = 0; d < st.f.size(); ++d) x.push_back(std::log(st.f(d)));
      if (inst.config.alpha_mode == AlphaMode::learned) {
        x.push_back(std::log(st.alpha_shape));
        x.push_back(std::log(st.alpha_rate));
      }
      break;
    case FactorKind::theta1:
      for (std::size_t m = 0; m < st.zeta.size(); ++m) {
        if (inst.config.family == Family::continuous) {
          for (int r = 0; r < st.u[m].rows(); ++r) {
            for (int c = 0; c < st.u[m].cols(); ++c) x.push_back(st.u[m](r, c));
          }
          push_log_matrix(st.r[m]);
          push_log_matrix(st.g[m]);
          push_log_matrix(st.h[m]);
        } else {
          push_log_matrix(st.j[m]);
          push_log_matrix(st.k[m]);
        }
      }
      break;
    case FactorKind::gamma:
      for (const auto& z : st.zeta) {
        for (int p = 0; p < z.size(); ++p) x.push_back(z(p));
      }
      break;
    case FactorKind::clusters:
      for (int i = 0; i < st.b.rows(); ++i) {
        for (int d = 0; d < st.b.cols(); ++d) x.push_back(st.b(i, d));
      }
      break;
    case FactorKind::tau:
      for (const auto& t : st.t) {
        for (int s = 0; s < t.size(); ++s) x.push_back(std::log(t(s)));
      }
      break;
    case FactorKind::nodes:
      for (const auto& eta : st.eta) {
        for (int v = 0; v < eta.rows(); ++v) {
          for (int s = 0; s < eta.cols(); ++s) x.push_back(std::log(eta(v, s)));
        }
      }
      break;
  }
  return x;
}

inline void unpack_factor(Instance& inst, FactorKind kind, const std::vector<double>& x) {
  VariationalState& st = inst.state;
  std::size_t k = 0;
  auto pull_exp_matrix = [&](Eigen::MatrixXd& m) {
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < m.cols(); ++c) m(r, c) = std::exp(x[k++]);
    }
  };
  switch (kind) {
    case FactorKind::sticks:
      for (int d = 0; d < st.e.size(); ++d) st.e(d) = std::exp(x[k++]);
      for (int d = 0; d < st.f.size(); ++d) st.f(d) = std::exp(x[k++]);
      if (inst.config.alpha_mode == AlphaMode::learned) {
        st.alpha_shape = std::exp(x[k++]);
        st.alpha_rate = std::exp(x[k++]);
      }
      break;
    case FactorKind::theta1:
      for (std::size_t m = 0; m < st.zeta.size(); ++m) {
        if (inst.config.family == Family::continuous) {
          for (int r = 0; r < st.u[m].rows(); ++r) {
            for (int c = 0; c < st.u[m].cols(); ++c) st.u[m](r, c) = x[k++];
          }
          pull_exp_matrix(st.r[m]);
          pull_exp_matrix(st.g[m]);
          pull_exp_matrix(st.h[m]);
        } else {
          pull_exp_matrix(st.j[m]);
          pull_exp_matrix(st.k[m]);
        }
      }
      break;
    case FactorKind::gamma:
      for (auto& z : st.zeta) {
        for (int p = 0; p < z.size(); ++p) z(p) = x[k++];
      }
      break;
    case FactorKind::clusters:
      for (int i = 0; i < st.b.rows(); ++i) {
        for (int d = 0; d < st.b.cols(); ++d) st.b(i, d) = x[k++];
      }
      break;
    case FactorKind::tau:
      for (auto& t : st.t) {
        for (int s = 0; s < t.size(); ++s) t(s) = std::exp(x[k++]);
      }
      break;
    case FactorKind::nodes:
      for (auto& eta : st.eta) {
        for (int v = 0; v < eta.rows(); ++v) {
          double total = 0.0;
          for (int s = 0; s < eta.cols(); ++s) {
            eta(v, s) = std::exp(x[k + s]);
            total += eta(v, s);
          }
          for (int s = 0; s < eta.cols(); ++s) eta(v, s) /= total;
          k += eta.cols();
        }
      }
      break;
  }
}

/// Runs the op for `kind` to its (intra-factor) fixed point, then returns the
/// infinity norm of the central-difference ELBO gradient in the factor's
/// unconstrained coordinates.
inline double stationarity_gap(Instance inst, FactorKind kind, double step = 1e-5) {
  BlockSuffStats stats = block_suffstats(inst.tensor, inst.state.eta);
  switch (kind) {
    case FactorKind::sticks:
      update_sticks(inst.state, inst.config);
      break;
    case FactorKind::theta1:
      if (inst.config.family == Family::continuous) {
        update_theta1_normal(inst.state, inst.config, stats);
      } else {
        update_theta1_bernoulli(inst.state, inst.config, stats);
      }
      break;
    case FactorKind::gamma:
      update_gamma(inst.state, inst.config, stats);
      break;
    case FactorKind::clusters:
      update_clusters(inst.state, inst.config, stats);
      break;
    case FactorKind::tau:
      update_tau(inst.state, inst.config);
      break;
    case FactorKind::nodes:
      // Sequential sweeps are coordinate ascent over rows; iterate them to a
      // joint fixed point before asking for a vanishing gradient.
      for (int iter = 0; iter < 500; ++iter) {
        const std::vector<Eigen::MatrixXd> before = inst.state.eta;
        update_nodes(inst.state, inst.config, inst.tensor);
        double delta = 0.0;
        for (std::size_t m = 0; m < before.size(); ++m) {
          delta = std::max(delta, (inst.state.eta[m] - before[m]).cwiseAbs().maxCoeff());
        }
        if (delta < 1e-13) break;
      }
      break;
  }

  std::vector<double> x = pack_factor(inst, kind);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    unpack_factor(inst, kind, x);
    const double hi = elbo_at(inst);
    x[i] = saved - step;
    unpack_factor(inst, kind, x);
    const double lo = elbo_at(inst);
    x[i] = saved;
    worst = std::max(worst, std::abs((hi - lo) / (2.0 * step)));
  }
  unpack_factor(inst, kind, x);
  return worst;
}

}  // namespace blockmix::testing
