#include "blockmix/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blockmix/errors.hpp"
#include "blockmix/math.hpp"

namespace blockmix {

double vbic(const ElboComponents& components) {
  const double v = -2.0 * components.data + 2.0 * components.eq_log_q();
  if (!std::isfinite(v)) throw NumericalError("vbic: non-finite value");
  return v;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// E_q[log q] of single factors, matching the terms in elbo_components.
double nig_eq_log_q(double u, double r, double g, double h) {
  const auto e = math::nig_expectations(u, r, g, h);
  return 0.5 * std::log(r) - 0.5 * kLog2Pi - (0.5 * g + 1.5) * e.log_var - 0.5 +
         0.5 * g * std::log(0.5 * h) - math::log_gamma(0.5 * g) - 0.5 * g;
}

double beta_eq_log_q(double j, double k) {
  const auto [lp, l1p] = math::beta_expected_logs(j, k);
  const double lbeta = math::log_gamma(j) + math::log_gamma(k) - math::log_gamma(j + k);
  return (j - 1.0) * lp + (k - 1.0) * l1p - lbeta;
}

double bernoulli_eq_log_q(double zeta) {
  const double pi = 1.0 / (1.0 + std::exp(-zeta));
  auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  return xlogx(pi) + xlogx(1.0 - pi);
}

bool near(double x, double y, double scale) { return std::abs(x - y) <= 1e-6 * scale; }

// Total E_q[log q] of the edge-parameter and selection factors that never
// left their prior; subtracted from the VBIC penalty as unused capacity.
double at_prior_eq_log_q(const VariationalState& state, const ModelConfig& config) {
  double total = 0.0;
  const double prior_zeta =
      std::log(config.gamma_prior_prob) - std::log1p(-config.gamma_prior_prob);
  for (int m = 0; m < config.n_states; ++m) {
    const int P = pair_count(config.blocks_per_state[m]);
    for (int p = 0; p < P; ++p) {
      if (near(state.zeta[m](p), prior_zeta, std::max(1.0, std::abs(prior_zeta)))) {
        total += bernoulli_eq_log_q(state.zeta[m](p));
      }
      for (int d = 0; d < config.truncation; ++d) {
        if (config.family == Family::continuous) {
          if (near(state.u[m](d, p), 0.0, 1.0) &&
              near(state.r[m](d, p), config.nig_lambda, config.nig_lambda) &&
              near(state.g[m](d, p), config.nig_a, config.nig_a) &&
              near(state.h[m](d, p), config.nig_b, config.nig_b)) {
            total += nig_eq_log_q(state.u[m](d, p), state.r[m](d, p), state.g[m](d, p),
                                  state.h[m](d, p));
          }
        } else {
          if (near(state.j[m](d, p), config.beta_a0, config.beta_a0) &&
              near(state.k[m](d, p), config.beta_b0, config.beta_b0)) {
            total += beta_eq_log_q(state.j[m](d, p), state.k[m](d, p));
          }
        }
      }
    }
  }
  return total;
}

}  // namespace

double vbic(const VariationalState& state, const ModelConfig& config,
            const BlockSuffStats& stats) {
  const ElboComponents components = elbo_components(state, config, stats);
  const double penalty = components.eq_log_q() - at_prior_eq_log_q(state, config);
  const double v = -2.0 * components.data + 2.0 * penalty;
  if (!std::isfinite(v)) throw NumericalError("vbic: non-finite value");
  return v;
}

namespace {

CandidateResult fit_candidate(const ConnectivityTensor& tensor, ModelConfig config,
                              const std::vector<int>& blocks) {
  CandidateResult out;
  out.blocks = blocks;
  config.blocks_per_state = blocks;
  try {
    auto [state, diag] = fit(tensor, config);
    const BlockSuffStats stats = block_suffstats(tensor, state.eta);
    const ModelConfig resolved = resolve_noise_var(config, tensor);
    out.vbic = vbic(state, resolved, stats);
    out.final_elbo = diag.final_elbo;
    out.diagnostics = diag;
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

}  // namespace

SelectionReport select(const ConnectivityTensor& tensor, const ModelConfig& base_config,
                       const std::vector<std::vector<int>>& grid, int budget) {
  const int M = tensor.n_states();
  if (static_cast<int>(grid.size()) != M) {
    throw ValidationError("select: grid must have one value list per state");
  }
  for (const auto& values : grid) {
    if (values.empty()) throw ValidationError("select: empty grid for a state");
  }

  long factorial = 1;
  for (const auto& values : grid) factorial *= static_cast<long>(values.size());

  SelectionReport report;
  std::vector<std::vector<int>> candidates;
  if (factorial <= budget) {
    std::vector<int> idx(M, 0);
    while (true) {
      std::vector<int> cand(M);
      for (int m = 0; m < M; ++m) cand[m] = grid[m][idx[m]];
      candidates.push_back(cand);
      int m = M - 1;
      while (m >= 0 && ++idx[m] == static_cast<int>(grid[m].size())) idx[m--] = 0;
      if (m < 0) break;
    }
    for (const auto& cand : candidates) {
      report.candidates.push_back(fit_candidate(tensor, base_config, cand));
    }
  } else {
    // One coordinate-wise pass: optimize each state's count in turn with the
    // others held at their grid medians (then at their chosen values).
    report.coordinate_wise = true;
    std::vector<int> current(M);
    for (int m = 0; m < M; ++m) {
      std::vector<int> sorted = grid[m];
      std::sort(sorted.begin(), sorted.end());
      current[m] = sorted[(sorted.size() - 1) / 2];
    }
    for (int m = 0; m < M; ++m) {
      double best_vbic = std::numeric_limits<double>::infinity();
      int best_value = current[m];
      for (int value : grid[m]) {
        std::vector<int> cand = current;
        cand[m] = value;
        bool seen = false;
        for (const auto& prev : report.candidates) {
          if (prev.blocks == cand) {
            seen = true;
            if (!prev.failed && prev.vbic < best_vbic) {
              best_vbic = prev.vbic;
              best_value = value;
            }
          }
        }
        if (seen) continue;
        CandidateResult res = fit_candidate(tensor, base_config, cand);
        if (!res.failed && res.vbic < best_vbic) {
          best_vbic = res.vbic;
          best_value = value;
        }
        report.candidates.push_back(std::move(res));
      }
      current[m] = best_value;
    }
  }

  const CandidateResult* best = nullptr;
  for (const auto& cand : report.candidates) {
    if (cand.failed) continue;
    if (best == nullptr || cand.vbic < best->vbic ||
        (cand.vbic == best->vbic && cand.blocks < best->blocks)) {
      best = &cand;
    }
  }
  if (best == nullptr) throw NumericalError("select: every candidate fit failed");
  report.chosen = best->blocks;
  return report;
}

}  // namespace blockmix
