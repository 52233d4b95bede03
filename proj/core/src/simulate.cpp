#include "blockmix/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "blockmix/errors.hpp"

namespace blockmix {

std::vector<double> SimConfig::probs_for_state(int m) const {
  if (!node_probs.empty()) return node_probs[m];
  const int S = blocks_for_state(m);
  if (S == 3 && m == 0) return {0.25, 0.40, 0.35};
  if (S == 3 && m == 1) return {0.30, 0.30, 0.40};
  return std::vector<double>(S, 1.0 / S);
}

int SimConfig::blocks_for_state(int m) const {
  return n_blocks.empty() ? 3 : n_blocks[m];
}

void SimConfig::validate() const {
  if (n_subjects < 1 || n_states < 1 || n_subtypes < 1 || n_nodes < 2) {
    throw ValidationError("sim: dimensions out of range");
  }
  if (!n_blocks.empty() && static_cast<int>(n_blocks.size()) != n_states) {
    throw ValidationError("sim: n_blocks must have one entry per state");
  }
  for (int m = 0; m < n_states; ++m) {
    const int S = blocks_for_state(m);
    if (S < 1 || S > n_nodes) throw ValidationError("sim: block count out of range");
    if (!node_probs.empty()) {
      if (static_cast<int>(node_probs.size()) != n_states ||
          static_cast<int>(node_probs[m].size()) != S) {
        throw ValidationError("sim: node_probs shape mismatch");
      }
      double total = 0.0;
      for (double p : node_probs[m]) {
        if (!(p > 0)) throw ValidationError("sim: node_probs entries must be positive");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-8) {
        throw ValidationError("sim: node_probs rows must sum to one");
      }
    }
  }
  if (!(informative_fraction >= 0.0) || !(informative_fraction <= 1.0)) {
    throw ValidationError("sim: informative_fraction must lie in [0, 1]");
  }
  if (family == Family::continuous) {
    if (static_cast<int>(informative_means.size()) != n_subtypes ||
        static_cast<int>(informative_vars.size()) != n_subtypes) {
      throw ValidationError("sim: means/vars lists must have one entry per subtype");
    }
    for (double v : informative_vars) {
      if (!(v > 0)) throw ValidationError("sim: informative_vars must be positive");
    }
    if (!(noise_var > 0)) throw ValidationError("sim: noise_var must be positive");
  } else {
    if (static_cast<int>(informative_probs.size()) != n_subtypes) {
      throw ValidationError("sim: informative_probs must have one entry per subtype");
    }
    for (double p : informative_probs) {
      if (!(p > 0.0) || !(p < 1.0)) throw ValidationError("sim: probabilities must lie in (0, 1)");
    }
    if (!(noise_prob > 0.0) || !(noise_prob < 1.0)) {
      throw ValidationError("sim: noise_prob must lie in (0, 1)");
    }
  }
}

std::pair<ConnectivityTensor, GroundTruth> generate(const SimConfig& sim) {
  sim.validate();
  std::mt19937_64 rng(sim.seed);
  const int N = sim.n_subjects;
  const int M = sim.n_states;
  const int V = sim.n_nodes;

  GroundTruth truth;
  truth.subtype_of.resize(N);
  std::uniform_int_distribution<int> subtype_dist(0, sim.n_subtypes - 1);
  for (int i = 0; i < N; ++i) truth.subtype_of[i] = subtype_dist(rng);

  truth.block_of.resize(M);
  truth.informative.resize(M);
  truth.means.resize(M);
  truth.vars.resize(M);

  for (int m = 0; m < M; ++m) {
    const int S = sim.blocks_for_state(m);
    const std::vector<double> probs = sim.probs_for_state(m);
    std::discrete_distribution<int> block_dist(probs.begin(), probs.end());

    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      truth.block_of[m].assign(V, 0);
      std::vector<int> counts(S, 0);
      for (int v = 0; v < V; ++v) {
        const int s = block_dist(rng);
        truth.block_of[m][v] = s;
        ++counts[s];
      }
      ok = *std::min_element(counts.begin(), counts.end()) > 0;
      // A within-block pair needs two members to be observable.
      for (int s = 0; s < S && ok; ++s) ok = counts[s] >= 2;
    }
    if (!ok) throw ValidationError("sim: could not draw non-degenerate node blocks");

    const int P = pair_count(S);
    const int K = static_cast<int>(std::ceil(sim.informative_fraction * P));
    std::vector<int> order(P);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    truth.informative[m].assign(P, false);
    for (int k = 0; k < K; ++k) truth.informative[m][order[k]] = true;

    truth.means[m].resize(P);
    truth.vars[m].resize(P);
    for (int p = 0; p < P; ++p) {
      if (!truth.informative[m][p]) continue;
      if (sim.family == Family::continuous) {
        truth.means[m][p] = sim.informative_means;
        truth.vars[m][p] = sim.informative_vars;
        std::shuffle(truth.means[m][p].begin(), truth.means[m][p].end(), rng);
        std::shuffle(truth.vars[m][p].begin(), truth.vars[m][p].end(), rng);
      } else {
        truth.means[m][p] = sim.informative_probs;
        std::shuffle(truth.means[m][p].begin(), truth.means[m][p].end(), rng);
      }
    }
  }

  std::vector<double> values(static_cast<std::size_t>(N) * M * V * V, 0.0);
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t vv = static_cast<std::size_t>(V) * V;
  for (int i = 0; i < N; ++i) {
    const int d = truth.subtype_of[i];
    for (int m = 0; m < M; ++m) {
      const int S = sim.blocks_for_state(m);
      double* slab = values.data() + (static_cast<std::size_t>(i) * M + m) * vv;
      for (int v = 0; v < V; ++v) {
        for (int vp = v + 1; vp < V; ++vp) {
          const int s = std::min(truth.block_of[m][v], truth.block_of[m][vp]);
          const int sp = std::max(truth.block_of[m][v], truth.block_of[m][vp]);
          const int p = pair_index(S, s, sp);
          double a;
          if (sim.family == Family::continuous) {
            const double mu = truth.informative[m][p] ? truth.means[m][p][d] : sim.noise_mean;
            const double var = truth.informative[m][p] ? truth.vars[m][p][d] : sim.noise_var;
            a = mu + std::sqrt(var) * stdnorm(rng);
          } else {
            const double rho = truth.informative[m][p] ? truth.means[m][p][d] : sim.noise_prob;
            a = unif(rng) < rho ? 1.0 : 0.0;
          }
          slab[static_cast<std::size_t>(v) * V + vp] = a;
          slab[static_cast<std::size_t>(vp) * V + v] = a;
        }
      }
    }
  }

  ConnectivityTensor tensor =
      ConnectivityTensor::validate(std::move(values), N, M, V, sim.family);
  return {std::move(tensor), std::move(truth)};
}

}  // namespace blockmix
