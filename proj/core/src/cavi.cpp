#include "blockmix/cavi.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "blockmix/errors.hpp"
#include "blockmix/math.hpp"

namespace blockmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kHFloor = 1e-10;

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p) - std::log1p(-p); }
double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Per-(component, block-pair) moments of q(Theta^1) for one state.
struct NormalMoments {
  Eigen::MatrixXd kterm;  // log(2 pi) + E[log var] + E[mu^2/var], D x P
  Eigen::MatrixXd eiv;    // E[1/var]
  Eigen::MatrixXd emv;    // E[mu/var]
};

NormalMoments normal_moments(const VariationalState& st, int m) {
  const int D = static_cast<int>(st.u[m].rows());
  const int P = static_cast<int>(st.u[m].cols());
  NormalMoments mo;
  mo.kterm.resize(D, P);
  mo.eiv.resize(D, P);
  mo.emv.resize(D, P);
  for (int d = 0; d < D; ++d) {
    for (int p = 0; p < P; ++p) {
      const auto e = math::nig_expectations(st.u[m](d, p), st.r[m](d, p),
                                            st.g[m](d, p), st.h[m](d, p));
      mo.kterm(d, p) = kLog2Pi + e.log_var + e.meansq_over_var;
      mo.eiv(d, p) = e.inv_var;
      mo.emv(d, p) = e.mean_over_var;
    }
  }
  return mo;
}

struct BinaryMoments {
  Eigen::MatrixXd elogp;    // E[log rho]
  Eigen::MatrixXd elog1mp;  // E[log(1 - rho)]
};

BinaryMoments binary_moments(const VariationalState& st, int m) {
  const int D = static_cast<int>(st.j[m].rows());
  const int P = static_cast<int>(st.j[m].cols());
  BinaryMoments mo;
  mo.elogp.resize(D, P);
  mo.elog1mp.resize(D, P);
  for (int d = 0; d < D; ++d) {
    for (int p = 0; p < P; ++p) {
      const auto [lp, l1p] = math::beta_expected_logs(st.j[m](d, p), st.k[m](d, p));
      mo.elogp(d, p) = lp;
      mo.elog1mp(d, p) = l1p;
    }
  }
  return mo;
}

Eigen::VectorXd gamma_probs(const VariationalState& st, int m) {
  return st.zeta[m].unaryExpr([](double z) { return expit(z); });
}

// E[log w'_d] and E[log(1 - w'_d)] for d < D-1; the last stick is one.
void stick_logs(const VariationalState& st, Eigen::VectorXd& elog, Eigen::VectorXd& elog1m) {
  const int K = static_cast<int>(st.e.size());
  elog.resize(K);
  elog1m.resize(K);
  for (int d = 0; d < K; ++d) {
    const auto [a, b] = math::beta_expected_logs(st.e(d), st.f(d));
    elog(d) = a;
    elog1m(d) = b;
  }
}

void check_finite(double x, const char* term) {
  if (!std::isfinite(x)) {
    std::ostringstream os;
    os << "non-finite ELBO term: " << term;
    throw NumericalError(os.str());
  }
}

}  // namespace

Eigen::MatrixXd responsibilities(const VariationalState& state) {
  Eigen::MatrixXd r = state.b;
  for (int i = 0; i < r.rows(); ++i) {
    const double mx = r.row(i).maxCoeff();
    r.row(i) = (r.row(i).array() - mx).exp();
    r.row(i) /= r.row(i).sum();
  }
  return r;
}

double expected_alpha(const VariationalState& state, const ModelConfig& config) {
  if (config.alpha_mode == AlphaMode::fixed) return config.alpha_fixed;
  return state.alpha_shape / state.alpha_rate;
}

Eigen::VectorXd expected_log_stick_weights(const VariationalState& state) {
  const int D = static_cast<int>(state.e.size()) + 1;
  Eigen::VectorXd elog, elog1m;
  stick_logs(state, elog, elog1m);
  Eigen::VectorXd out(D);
  double cum = 0.0;
  for (int d = 0; d < D; ++d) {
    out(d) = (d < D - 1 ? elog(d) : 0.0) + cum;
    if (d < D - 1) cum += elog1m(d);
  }
  return out;
}

void update_sticks(VariationalState& state, const ModelConfig& config) {
  const Eigen::MatrixXd r = responsibilities(state);
  const int D = static_cast<int>(r.cols());
  const Eigen::VectorXd counts = r.colwise().sum();
  Eigen::VectorXd tail(D);  // sum of counts strictly above d
  tail(D - 1) = 0.0;
  for (int d = D - 2; d >= 0; --d) tail(d) = tail(d + 1) + counts(d + 1);

  for (int d = 0; d < D - 1; ++d) state.e(d) = 1.0 + counts(d);

  if (config.alpha_mode == AlphaMode::fixed) {
    for (int d = 0; d < D - 1; ++d) state.f(d) = config.alpha_fixed + tail(d);
    return;
  }
  // e does not depend on alpha; f and the alpha factor are mutually coupled,
  // so iterate that pair to its joint fixed point.
  state.alpha_shape = static_cast<double>(D);  // 1 + (D - 1)
  for (int iter = 0; iter < 200; ++iter) {
    const double ealpha = state.alpha_shape / state.alpha_rate;
    for (int d = 0; d < D - 1; ++d) state.f(d) = ealpha + tail(d);
    double t = 0.0;
    for (int d = 0; d < D - 1; ++d) {
      t += math::digamma(state.f(d)) - math::digamma(state.e(d) + state.f(d));
    }
    const double new_rate = 1.0 - t;
    if (std::abs(new_rate - state.alpha_rate) < 1e-13 * std::abs(new_rate)) {
      state.alpha_rate = new_rate;
      break;
    }
    state.alpha_rate = new_rate;
  }
}

void update_theta1_normal(VariationalState& state, const ModelConfig& config,
                          const BlockSuffStats& stats) {
  const Eigen::MatrixXd r = responsibilities(state);
  const Eigen::VectorXd counts = r.colwise().sum();
  for (int m = 0; m < config.n_states; ++m) {
    const Eigen::VectorXd qg = gamma_probs(state, m);
    const Eigen::MatrixXd sa = r.transpose() * stats.weighted_sum[m];     // D x P
    const Eigen::MatrixXd sq = r.transpose() * stats.weighted_sq_sum[m];  // D x P
    const int D = static_cast<int>(sa.rows());
    const int P = static_cast<int>(sa.cols());
    for (int d = 0; d < D; ++d) {
      for (int p = 0; p < P; ++p) {
        const double w = counts(d) * qg(p) * stats.edge_count[m](p);
        const double wsa = qg(p) * sa(d, p);
        const double wsq = qg(p) * sq(d, p);
        const double rr = config.nig_lambda + w;
        const double uu = wsa / rr;
        state.r[m](d, p) = rr;
        state.u[m](d, p) = uu;
        state.g[m](d, p) = config.nig_a + w;
        state.h[m](d, p) = std::max(config.nig_b + wsq - rr * uu * uu, kHFloor);
      }
    }
  }
}

void update_theta1_bernoulli(VariationalState& state, const ModelConfig& config,
                             const BlockSuffStats& stats) {
  const Eigen::MatrixXd r = responsibilities(state);
  const Eigen::VectorXd counts = r.colwise().sum();
  for (int m = 0; m < config.n_states; ++m) {
    const Eigen::VectorXd qg = gamma_probs(state, m);
    const Eigen::MatrixXd sa = r.transpose() * stats.weighted_sum[m];  // D x P
    const int D = static_cast<int>(sa.rows());
    const int P = static_cast<int>(sa.cols());
    for (int d = 0; d < D; ++d) {
      for (int p = 0; p < P; ++p) {
        const double ones = qg(p) * sa(d, p);
        const double total = counts(d) * qg(p) * stats.edge_count[m](p);
        state.j[m](d, p) = config.beta_a0 + ones;
        state.k[m](d, p) = config.beta_b0 + (total - ones);
      }
    }
  }
}

double expected_block_loglik(const VariationalState& state, const ModelConfig& config,
                             const BlockSuffStats& stats, int i, int d, int m, int s, int sp) {
  const int S = config.blocks_per_state[m];
  const int p = pair_index(S, std::min(s, sp), std::max(s, sp));
  const double nh = stats.edge_count[m](p);
  const double ah = stats.weighted_sum[m](i, p);
  const double qh = stats.weighted_sq_sum[m](i, p);
  if (config.family == Family::binary) {
    const auto [lp, l1p] = math::beta_expected_logs(state.j[m](d, p), state.k[m](d, p));
    return ah * lp + (nh - ah) * l1p;
  }
  const auto e = math::nig_expectations(state.u[m](d, p), state.r[m](d, p),
                                        state.g[m](d, p), state.h[m](d, p));
  return -0.5 * (nh * (kLog2Pi + e.log_var + e.meansq_over_var) + e.inv_var * qh -
                 2.0 * e.mean_over_var * ah);
}

double expected_noise_loglik(const ModelConfig& config, const BlockSuffStats& stats,
                             int i, int m, int s, int sp) {
  const int S = config.blocks_per_state[m];
  const int p = pair_index(S, std::min(s, sp), std::max(s, sp));
  const double nh = stats.edge_count[m](p);
  const double ah = stats.weighted_sum[m](i, p);
  const double qh = stats.weighted_sq_sum[m](i, p);
  if (config.family == Family::binary) {
    return ah * std::log(config.noise_prob) + (nh - ah) * std::log1p(-config.noise_prob);
  }
  const double v0 = config.noise_var;
  const double mu0 = config.noise_mean;
  return -0.5 * (nh * (kLog2Pi + std::log(v0) + mu0 * mu0 / v0) + qh / v0 -
                 2.0 * mu0 * ah / v0);
}

void update_gamma(VariationalState& state, const ModelConfig& config,
                  const BlockSuffStats& stats) {
  const Eigen::MatrixXd r = responsibilities(state);
  const Eigen::VectorXd counts = r.colwise().sum();
  const double prior_logit = logit(config.gamma_prior_prob);
  const int N = static_cast<int>(r.rows());
  for (int m = 0; m < config.n_states; ++m) {
    const Eigen::VectorXd& nh = stats.edge_count[m];
    const Eigen::MatrixXd sa = r.transpose() * stats.weighted_sum[m];
    const Eigen::MatrixXd sq = r.transpose() * stats.weighted_sq_sum[m];
    const Eigen::VectorXd asum = stats.weighted_sum[m].colwise().sum();
    const Eigen::VectorXd qsum = stats.weighted_sq_sum[m].colwise().sum();
    const int P = static_cast<int>(sa.cols());
    const int D = static_cast<int>(sa.rows());
    std::optional<BinaryMoments> bmo;
    std::optional<NormalMoments> nmo;
    if (config.family == Family::binary) bmo.emplace(binary_moments(state, m));
    else nmo.emplace(normal_moments(state, m));
    double x0;
    for (int p = 0; p < P; ++p) {
      double x1 = 0.0;
      if (config.family == Family::binary) {
        for (int d = 0; d < D; ++d) {
          x1 += sa(d, p) * bmo->elogp(d, p) +
                (counts(d) * nh(p) - sa(d, p)) * bmo->elog1mp(d, p);
        }
        x0 = asum(p) * std::log(config.noise_prob) +
             (N * nh(p) - asum(p)) * std::log1p(-config.noise_prob);
      } else {
        for (int d = 0; d < D; ++d) {
          x1 += -0.5 * (counts(d) * nh(p) * nmo->kterm(d, p) + nmo->eiv(d, p) * sq(d, p) -
                        2.0 * nmo->emv(d, p) * sa(d, p));
        }
        const double v0 = config.noise_var;
        const double mu0 = config.noise_mean;
        x0 = -0.5 * (N * nh(p) * (kLog2Pi + std::log(v0) + mu0 * mu0 / v0) +
                     qsum(p) / v0 - 2.0 * mu0 * asum(p) / v0);
      }
      state.zeta[m](p) = prior_logit + x1 - x0;
    }
  }
}

void update_clusters(VariationalState& state, const ModelConfig& config,
                     const BlockSuffStats& stats) {
  const Eigen::VectorXd elogw = expected_log_stick_weights(state);
  const int N = static_cast<int>(state.b.rows());
  const int D = static_cast<int>(state.b.cols());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(N, D);
  b.rowwise() += elogw.transpose();
  for (int m = 0; m < config.n_states; ++m) {
    const Eigen::VectorXd qg = gamma_probs(state, m);
    const Eigen::VectorXd& nh = stats.edge_count[m];
    if (config.family == Family::binary) {
      const BinaryMoments mo = binary_moments(state, m);
      // sum_p qg_p [ Ahat_ip elogp_dp + (nhat_p - Ahat_ip) elog1mp_dp ]
      const Eigen::MatrixXd aq = stats.weighted_sum[m] * qg.asDiagonal();  // N x P
      b += aq * (mo.elogp - mo.elog1mp).transpose();
      b.rowwise() += (mo.elog1mp * qg.cwiseProduct(nh)).transpose();
    } else {
      const NormalMoments mo = normal_moments(state, m);
      const Eigen::MatrixXd aq = stats.weighted_sum[m] * qg.asDiagonal();
      const Eigen::MatrixXd qq = stats.weighted_sq_sum[m] * qg.asDiagonal();
      b += aq * mo.emv.transpose() - 0.5 * qq * mo.eiv.transpose();
      b.rowwise() += (-0.5 * mo.kterm * qg.cwiseProduct(nh)).transpose();
    }
  }
  state.b = b;
}

void update_tau(VariationalState& state, const ModelConfig& config) {
  for (int m = 0; m < config.n_states; ++m) {
    const std::vector<double> phi = config.phi(m);
    for (int s = 0; s < config.blocks_per_state[m]; ++s) {
      state.t[m](s) = phi[s] + state.eta[m].col(s).sum();
    }
  }
}

void update_nodes(VariationalState& state, const ModelConfig& config,
                  const ConnectivityTensor& tensor) {
  const Eigen::MatrixXd r = responsibilities(state);
  const int N = tensor.n_subjects();
  const int V = tensor.n_nodes();

  for (int m = 0; m < config.n_states; ++m) {
    const int S = config.blocks_per_state[m];
    const int P = pair_count(S);
    const Eigen::VectorXd qg = gamma_probs(state, m);

    // Per-edge expected mixture log-density is affine in (1, a, a^2) with
    // subject-specific coefficients; fold it into one V x V matrix per pair.
    Eigen::VectorXd base = Eigen::VectorXd::Zero(P);
    Eigen::MatrixXd w1(N, P);
    Eigen::MatrixXd w2 = Eigen::MatrixXd::Zero(N, P);
    bool need_sq = false;
    if (config.family == Family::binary) {
      const BinaryMoments mo = binary_moments(state, m);
      const Eigen::MatrixXd r0 = r * mo.elog1mp;                 // N x P
      const Eigen::MatrixXd rdiff = r * (mo.elogp - mo.elog1mp);  // N x P
      const double l0 = std::log1p(-config.noise_prob);
      const double ldiff = std::log(config.noise_prob) - l0;
      for (int p = 0; p < P; ++p) {
        base(p) = qg(p) * r0.col(p).sum() + (1.0 - qg(p)) * N * l0;
        w1.col(p) = qg(p) * rdiff.col(p).array() + (1.0 - qg(p)) * ldiff;
      }
    } else {
      need_sq = true;
      const NormalMoments mo = normal_moments(state, m);
      const Eigen::MatrixXd rk = r * mo.kterm;   // N x P
      const Eigen::MatrixXd riv = r * mo.eiv;    // N x P
      const Eigen::MatrixXd rmv = r * mo.emv;    // N x P
      const double v0 = config.noise_var;
      const double mu0 = config.noise_mean;
      const double k0 = kLog2Pi + std::log(v0) + mu0 * mu0 / v0;
      for (int p = 0; p < P; ++p) {
        base(p) = -0.5 * (qg(p) * rk.col(p).sum() + (1.0 - qg(p)) * N * k0);
        w1.col(p) = qg(p) * rmv.col(p).array() + (1.0 - qg(p)) * mu0 / v0;
        w2.col(p) = -0.5 * (qg(p) * riv.col(p).array() + (1.0 - qg(p)) / v0);
      }
    }

    std::vector<Eigen::MatrixXd> L(P, Eigen::MatrixXd::Zero(V, V));
    Eigen::MatrixXd sq;
    for (int i = 0; i < N; ++i) {
      const auto a = tensor.slice(i, m);
      if (need_sq) sq = a.cwiseProduct(a);
      for (int p = 0; p < P; ++p) {
        L[p].noalias() += w1(i, p) * a;
        if (need_sq) L[p].noalias() += w2(i, p) * sq;
      }
    }
    for (int p = 0; p < P; ++p) L[p].array() += base(p);

    std::vector<double> tvec(state.t[m].data(), state.t[m].data() + S);
    const std::vector<double> elogtau = math::dirichlet_expected_log(tvec);

    Eigen::MatrixXd& eta = state.eta[m];
    Eigen::VectorXd score(S);
    for (int v = 0; v < V; ++v) {
      for (int s = 0; s < S; ++s) {
        double acc = elogtau[s];
        for (int sp = 0; sp < S; ++sp) {
          const int p = pair_index(S, std::min(s, sp), std::max(s, sp));
          acc += eta.col(sp).dot(L[p].col(v)) - eta(v, sp) * L[p](v, v);
        }
        score(s) = acc;
      }
      const double mx = score.maxCoeff();
      score = (score.array() - mx).exp();
      eta.row(v) = score.transpose() / score.sum();
    }
  }
}

ElboComponents elbo_components(const VariationalState& state, const ModelConfig& config,
                               const BlockSuffStats& stats) {
  ElboComponents c;
  const Eigen::MatrixXd r = responsibilities(state);
  const Eigen::VectorXd counts = r.colwise().sum();
  const int N = static_cast<int>(r.rows());
  const int D = static_cast<int>(r.cols());

  // Data term and spike-slab terms.
  for (int m = 0; m < config.n_states; ++m) {
    const Eigen::VectorXd qg = gamma_probs(state, m);
    const int P = static_cast<int>(qg.size());
    const Eigen::VectorXd& nh = stats.edge_count[m];
    const Eigen::MatrixXd sa = r.transpose() * stats.weighted_sum[m];
    const Eigen::MatrixXd sq = r.transpose() * stats.weighted_sq_sum[m];
    const Eigen::VectorXd asum = stats.weighted_sum[m].colwise().sum();
    const Eigen::VectorXd qsum = stats.weighted_sq_sum[m].colwise().sum();
    std::optional<BinaryMoments> bmo;
    std::optional<NormalMoments> nmo;
    if (config.family == Family::binary) bmo.emplace(binary_moments(state, m));
    else nmo.emplace(normal_moments(state, m));
    for (int p = 0; p < P; ++p) {
      double x1 = 0.0, x0 = 0.0;
      if (config.family == Family::binary) {
        for (int d = 0; d < D; ++d) {
          x1 += sa(d, p) * bmo->elogp(d, p) +
                (counts(d) * nh(p) - sa(d, p)) * bmo->elog1mp(d, p);
        }
        x0 = asum(p) * std::log(config.noise_prob) +
             (N * nh(p) - asum(p)) * std::log1p(-config.noise_prob);
      } else {
        for (int d = 0; d < D; ++d) {
          x1 += -0.5 * (counts(d) * nh(p) * nmo->kterm(d, p) + nmo->eiv(d, p) * sq(d, p) -
                        2.0 * nmo->emv(d, p) * sa(d, p));
        }
        const double v0 = config.noise_var;
        const double mu0 = config.noise_mean;
        x0 = -0.5 * (N * nh(p) * (kLog2Pi + std::log(v0) + mu0 * mu0 / v0) +
                     qsum(p) / v0 - 2.0 * mu0 * asum(p) / v0);
      }
      const double pi = qg(p);
      c.data += pi * x1 + (1.0 - pi) * x0;
      c.gamma_prior += pi * std::log(config.gamma_prior_prob) +
                       (1.0 - pi) * std::log1p(-config.gamma_prior_prob);
      c.gamma_q += xlogx(pi) + xlogx(1.0 - pi);
    }
  }
  check_finite(c.data, "data");

  // Node allocations and their Dirichlet probabilities.
  for (int m = 0; m < config.n_states; ++m) {
    const int S = config.blocks_per_state[m];
    std::vector<double> tvec(state.t[m].data(), state.t[m].data() + S);
    const std::vector<double> elogtau = math::dirichlet_expected_log(tvec);
    for (int s = 0; s < S; ++s) {
      c.z_prior += state.eta[m].col(s).sum() * elogtau[s];
      c.z_q += state.eta[m].col(s).unaryExpr([](double x) { return xlogx(x); }).sum();
    }
    const std::vector<double> phi = config.phi(m);
    double phi_sum = 0.0, t_sum = 0.0;
    for (int s = 0; s < S; ++s) {
      c.tau_prior += (phi[s] - 1.0) * elogtau[s] - math::log_gamma(phi[s]);
      c.tau_q += (tvec[s] - 1.0) * elogtau[s] - math::log_gamma(tvec[s]);
      phi_sum += phi[s];
      t_sum += tvec[s];
    }
    c.tau_prior += math::log_gamma(phi_sum);
    c.tau_q += math::log_gamma(t_sum);
  }
  check_finite(c.z_prior, "z_prior");
  check_finite(c.tau_prior, "tau_prior");

  // Cluster allocations.
  const Eigen::VectorXd elogw = expected_log_stick_weights(state);
  c.c_prior = counts.dot(elogw);
  for (int i = 0; i < N; ++i) {
    const double mx = state.b.row(i).maxCoeff();
    const double lse = mx + std::log((state.b.row(i).array() - mx).exp().sum());
    for (int d = 0; d < D; ++d) {
      c.c_q += r(i, d) * (state.b(i, d) - lse);
    }
  }
  check_finite(c.c_prior, "c_prior");
  check_finite(c.c_q, "c_q");

  // Stick proportions and the concentration parameter.
  Eigen::VectorXd elog, elog1m;
  stick_logs(state, elog, elog1m);
  const double ealpha = expected_alpha(state, config);
  double elog_alpha;
  if (config.alpha_mode == AlphaMode::fixed) {
    elog_alpha = std::log(config.alpha_fixed);
  } else {
    elog_alpha = math::digamma(state.alpha_shape) - std::log(state.alpha_rate);
    // Gamma(1, 1) prior on alpha.
    c.alpha_prior = -ealpha;
    c.alpha_q = state.alpha_shape * std::log(state.alpha_rate) -
                math::log_gamma(state.alpha_shape) +
                (state.alpha_shape - 1.0) * elog_alpha - state.alpha_shape;
  }
  for (int d = 0; d < D - 1; ++d) {
    c.w_prior += elog_alpha + (ealpha - 1.0) * elog1m(d);
    c.w_q += math::log_gamma(state.e(d) + state.f(d)) - math::log_gamma(state.e(d)) -
             math::log_gamma(state.f(d)) + (state.e(d) - 1.0) * elog(d) +
             (state.f(d) - 1.0) * elog1m(d);
  }
  check_finite(c.w_prior, "w_prior");
  check_finite(c.w_q, "w_q");

  // Informative component parameters.
  for (int m = 0; m < config.n_states; ++m) {
    const int P = pair_count(config.blocks_per_state[m]);
    for (int d = 0; d < D; ++d) {
      for (int p = 0; p < P; ++p) {
        if (config.family == Family::binary) {
          const auto [lp, l1p] = math::beta_expected_logs(state.j[m](d, p), state.k[m](d, p));
          const double lbeta0 = math::log_gamma(config.beta_a0) + math::log_gamma(config.beta_b0) -
                                math::log_gamma(config.beta_a0 + config.beta_b0);
          c.theta1_prior += (config.beta_a0 - 1.0) * lp + (config.beta_b0 - 1.0) * l1p - lbeta0;
          const double lbetaq = math::log_gamma(state.j[m](d, p)) + math::log_gamma(state.k[m](d, p)) -
                                math::log_gamma(state.j[m](d, p) + state.k[m](d, p));
          c.theta1_q += (state.j[m](d, p) - 1.0) * lp + (state.k[m](d, p) - 1.0) * l1p - lbetaq;
        } else {
          const auto e = math::nig_expectations(state.u[m](d, p), state.r[m](d, p),
                                                state.g[m](d, p), state.h[m](d, p));
          const double a1 = config.nig_a, b1 = config.nig_b, lam = config.nig_lambda;
          c.theta1_prior += 0.5 * std::log(lam) - 0.5 * kLog2Pi -
                            (0.5 * a1 + 1.5) * e.log_var - 0.5 * lam * e.meansq_over_var +
                            0.5 * a1 * std::log(0.5 * b1) - math::log_gamma(0.5 * a1) -
                            0.5 * b1 * e.inv_var;
          const double gq = state.g[m](d, p), hq = state.h[m](d, p), rq = state.r[m](d, p);
          c.theta1_q += 0.5 * std::log(rq) - 0.5 * kLog2Pi -
                        (0.5 * gq + 1.5) * e.log_var - 0.5 +
                        0.5 * gq * std::log(0.5 * hq) - math::log_gamma(0.5 * gq) -
                        0.5 * gq;
        }
      }
    }
  }
  check_finite(c.theta1_prior, "theta1_prior");
  check_finite(c.theta1_q, "theta1_q");
  check_finite(c.elbo(), "elbo");
  return c;
}

double compute_elbo(const VariationalState& state, const ModelConfig& config,
                    const ConnectivityTensor& tensor, const BlockSuffStats& stats) {
  (void)tensor;
  return elbo_components(state, config, stats).elbo();
}

FitDiagnostics run_sweeps(VariationalState& state, const ConnectivityTensor& tensor,
                          const ModelConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  FitDiagnostics diag;
  diag.min_update_delta = std::numeric_limits<double>::infinity();

  BlockSuffStats stats = block_suffstats(tensor, state.eta);
  double elbo = compute_elbo(state, config, tensor, stats);

  auto check = [&](double& prev) {
    if (!config.check_monotonicity) return;
    const double now = compute_elbo(state, config, tensor, stats);
    const double delta = now - prev;
    if (delta < diag.min_update_delta) diag.min_update_delta = delta;
    if (delta < -1e-8 * std::max(std::abs(prev), 1.0)) {
      ++diag.monotonicity_violations;
    }
    prev = now;
  };

  for (int iter = 0; iter < config.max_iter; ++iter) {
    double prev = elbo;
    update_sticks(state, config);
    check(prev);
    if (config.family == Family::continuous) {
      update_theta1_normal(state, config, stats);
    } else {
      update_theta1_bernoulli(state, config, stats);
    }
    check(prev);
    update_gamma(state, config, stats);
    check(prev);
    update_clusters(state, config, stats);
    check(prev);
    update_tau(state, config);
    check(prev);
    update_nodes(state, config, tensor);
    stats = block_suffstats(tensor, state.eta);
    check(prev);

    const double new_elbo = config.check_monotonicity
                                ? prev
                                : compute_elbo(state, config, tensor, stats);
    state.elbo_trace.push_back(new_elbo);
    diag.n_iter = iter + 1;
    const double change = std::abs(new_elbo - elbo);
    elbo = new_elbo;
    if (change < config.tol * std::abs(new_elbo) || change < 1e-8) {
      diag.converged = true;
      break;
    }
  }
  diag.final_elbo = elbo;
  if (!std::isfinite(diag.min_update_delta)) diag.min_update_delta = 0.0;
  diag.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return diag;
}

std::pair<VariationalState, FitDiagnostics> fit(const ConnectivityTensor& tensor,
                                                const ModelConfig& config) {
  ModelConfig cfg = resolve_noise_var(config, tensor);
  cfg.validate();
  if (tensor.family() != cfg.family) {
    throw ValidationError("fit: tensor/config likelihood family mismatch");
  }
  const auto start = std::chrono::steady_clock::now();

  auto one_restart = [&](int k) {
    VariationalState st = init_state(cfg, tensor, cfg.seed + static_cast<std::uint64_t>(k));
    FitDiagnostics d = run_sweeps(st, tensor, cfg);
    d.restart_index = k;
    return std::make_pair(std::move(st), d);
  };

  std::vector<std::pair<VariationalState, FitDiagnostics>> results;
  results.reserve(cfg.n_restarts);
  if (cfg.threads > 1) {
    for (int k = 0; k < cfg.n_restarts; k += cfg.threads) {
      std::vector<std::future<std::pair<VariationalState, FitDiagnostics>>> batch;
      for (int j = k; j < std::min(k + cfg.threads, cfg.n_restarts); ++j) {
        batch.push_back(std::async(std::launch::async, one_restart, j));
      }
      for (auto& fut : batch) results.push_back(fut.get());
    }
  } else {
    for (int k = 0; k < cfg.n_restarts; ++k) results.push_back(one_restart(k));
  }

  int best = 0;
  double best_min_delta = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int k = 0; k < static_cast<int>(results.size()); ++k) {
    if (results[k].second.final_elbo > results[best].second.final_elbo) best = k;
    best_min_delta = std::min(best_min_delta, results[k].second.min_update_delta);
    violations += results[k].second.monotonicity_violations;
  }
  auto [state, diag] = std::move(results[best]);
  diag.min_update_delta = best_min_delta;
  diag.monotonicity_violations = violations;
  diag.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(state), diag};
}

}  // namespace blockmix
