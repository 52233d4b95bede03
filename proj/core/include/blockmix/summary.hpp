#pragma once

#include <vector>

#include "blockmix/config.hpp"

namespace blockmix {

/// Hard posterior decisions read off a fitted state. Labels are 1-based.
struct FitSummary {
  std::vector<int> cluster_of;               // subject -> cluster in [1, D]
  int occupied_clusters = 0;                 // number of distinct labels
  std::vector<int> occupied;                 // sorted distinct cluster labels
  std::vector<std::vector<int>> block_of;    // state -> node -> block in [1, S_m]
  std::vector<std::vector<bool>> selected;   // state -> block pair
  // profile[c][m](p): posterior mean connectivity for occupied[c] in state m,
  // block pair p (E[mu] for continuous, E[rho] for binary).
  std::vector<std::vector<Eigen::VectorXd>> profile;
};

/// Argmax decisions; ties break to the lowest index. A block pair is selected
/// iff expit(zeta) > 1/2 strictly, i.e. zeta > 0.
FitSummary summarize(const VariationalState& state, const ModelConfig& config);

}  // namespace blockmix
