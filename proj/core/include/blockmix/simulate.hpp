#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "blockmix/tensor.hpp"

namespace blockmix {

/// Synthetic multi-state connectivity generator: subjects fall into latent
/// subtypes, nodes into per-state blocks; a random subset of block pairs is
/// informative (subtype-specific edge distribution), the rest is shared noise.
struct SimConfig {
  int n_subjects = 100;
  int n_states = 2;
  int n_subtypes = 3;
  int n_nodes = 60;
  std::vector<std::vector<double>> node_probs;  // per state; default below
  std::vector<int> n_blocks;                    // per state; default all 3
  double informative_fraction = 0.5;
  std::vector<double> informative_means{-3.0, 2.0, 7.0};
  std::vector<double> informative_vars{3.0, 5.0, 7.0};
  double noise_mean = 0.0;
  double noise_var = 6.0;
  Family family = Family::continuous;
  // Binary family: per-subtype edge probabilities on informative pairs.
  std::vector<double> informative_probs{0.2, 0.5, 0.8};
  double noise_prob = 0.1;
  std::uint64_t seed = 0;

  std::vector<double> probs_for_state(int m) const;
  int blocks_for_state(int m) const;
  void validate() const;
};

struct GroundTruth {
  std::vector<int> subtype_of;                 // subject -> 0-based label
  std::vector<std::vector<int>> block_of;      // state -> node -> 0-based label
  std::vector<std::vector<bool>> informative;  // state -> block pair
  // means[m][p] / vars[m][p]: per-subtype values; empty for noise pairs.
  // (For the binary family, means holds the edge probabilities.)
  std::vector<std::vector<std::vector<double>>> means;
  std::vector<std::vector<std::vector<double>>> vars;
};

/// Deterministic given config.seed. Node labels are redrawn (up to 100
/// attempts) whenever a state has an empty block; then a ValidationError.
std::pair<ConnectivityTensor, GroundTruth> generate(const SimConfig& sim);

}  // namespace blockmix
