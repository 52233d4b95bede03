#pragma once

#include <cstdint>
#include <vector>

#include "blockmix/simulate.hpp"
#include "blockmix/summary.hpp"

namespace blockmix {

struct EdgeConfusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
};

struct SelectionMetrics {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double youden = 0.0;
  EdgeConfusion confusion;
};

struct MetricsReport {
  double subtyping_ari = 0.0;
  std::vector<double> modular_ari;  // per state
  double sensitivity = 0.0;
  double specificity = 0.0;
  double youden = 0.0;
  EdgeConfusion edge_confusion;
  double runtime_seconds = 0.0;
};

/// Hubert-Arabie adjusted Rand index. Degenerate case (both partitions
/// trivially agree so the chance correction vanishes) returns 1.
double adjusted_rand_index(const std::vector<int>& x, const std::vector<int>& y);

/// Edge-scale selection accuracy: each unique edge (m, v < v') is truly
/// positive iff its true block pair is informative, predicted positive iff
/// its estimated block pair is selected. Empty denominators yield 1.
SelectionMetrics selection_metrics(const std::vector<std::vector<bool>>& selected,
                                   const std::vector<std::vector<int>>& est_block_of,
                                   const GroundTruth& truth);

MetricsReport evaluate(const FitSummary& summary, const GroundTruth& truth,
                       double runtime_seconds = 0.0);

}  // namespace blockmix
