#pragma once

#include <string>
#include <vector>

#include "blockmix/cavi.hpp"

namespace blockmix {

/// Variational Bayesian information criterion; lower is better.
/// vbic = -2 E_q[log p(A | Xi)] + 2 E_q[log q(Xi)].
double vbic(const ElboComponents& components);

/// VBIC of a fitted state. The penalty counts only factors the data actually
/// moved: edge-parameter and selection factors still sitting exactly at their
/// prior (block pairs of an unoccupied block, unoccupied truncation clusters)
/// are unused capacity, and their constant prior negentropy would otherwise
/// bias the comparison toward larger block counts.
double vbic(const VariationalState& state, const ModelConfig& config,
            const BlockSuffStats& stats);

struct CandidateResult {
  std::vector<int> blocks;  // S_m per state
  double vbic = 0.0;
  double final_elbo = 0.0;
  FitDiagnostics diagnostics;
  bool failed = false;
  std::string error;
};

struct SelectionReport {
  std::vector<CandidateResult> candidates;
  std::vector<int> chosen;
  bool coordinate_wise = false;
};

/// Fits every combination of per-state block counts and picks the VBIC
/// minimizer; ties break to the lexicographically smallest vector. When the
/// factorial grid exceeds `budget` fits, falls back to one coordinate-wise
/// pass with the other states held at their grid medians. Failed candidates
/// are recorded and skipped; throws only if every candidate fails.
SelectionReport select(const ConnectivityTensor& tensor, const ModelConfig& base_config,
                       const std::vector<std::vector<int>>& grid, int budget = 64);

}  // namespace blockmix
