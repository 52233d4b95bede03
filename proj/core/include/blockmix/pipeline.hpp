#pragma once

#include <string>
#include <vector>

#include "blockmix/cavi.hpp"
#include "blockmix/metrics.hpp"
#include "blockmix/simulate.hpp"

namespace blockmix {

/// Canned simulation/fit settings: v{60,200,500}-{high,low}. "high"/"low"
/// refer to the signal-to-noise ratio (noise variance 6 vs 10).
struct ReplicateSettings {
  std::string name;
  SimConfig sim;
  ModelConfig model;
};

/// Throws ValidationError on an unknown setting name.
ReplicateSettings replicate_setting(const std::string& name, std::uint64_t seed);

struct ReplicateOutcome {
  MetricsReport metrics;
  // Selected block pairs match the informative ones exactly at edge scale.
  bool exact_selection = false;
  FitDiagnostics diagnostics;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

struct ReplicateTable {
  std::string setting;
  std::uint64_t seed = 0;
  std::vector<ReplicateOutcome> replicates;
  MeanSd ari, sensitivity, specificity, youden, modular_ari, runtime_seconds;
  std::vector<MeanSd> modular_ari_per_state;
};

/// One full replicate: simulate with seed sim.seed, fit, evaluate.
ReplicateOutcome run_replicate(const ReplicateSettings& settings);

/// Replicate r uses seed + r; aggregates mean and (sample) sd per metric.
ReplicateTable run_replicates(const std::string& setting, int replicates,
                              std::uint64_t seed);

/// Table rendered as a JSON document with mean, sd and "mean (sd)" strings.
std::string replicate_table_json(const ReplicateTable& table);

}  // namespace blockmix
