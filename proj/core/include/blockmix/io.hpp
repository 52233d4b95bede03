#pragma once

#include <string>
#include <vector>

#include "blockmix/cavi.hpp"
#include "blockmix/simulate.hpp"

namespace blockmix {

/// Binary multi-state connectivity container: "MSFC" magic, little-endian
/// u32 JSON-metadata length, metadata, then the raw payload (float64 for
/// continuous data, one byte per entry for binary), subject-major, then
/// state, then the full row-major V x V matrix.
void write_msfc(const ConnectivityTensor& tensor, const std::string& path,
                const std::vector<std::string>& state_names = {});
ConnectivityTensor read_msfc(const std::string& path);

struct FitResult {
  ModelConfig config;
  VariationalState state;
  FitDiagnostics diagnostics;
};

/// JSON persistence of a complete fit; numeric values round-trip exactly.
void save_fit(const FitResult& result, const std::string& path);
FitResult load_fit(const std::string& path);

void save_truth(const GroundTruth& truth, const SimConfig& sim, const std::string& path);
GroundTruth load_truth(const std::string& path);
SimConfig load_truth_sim_config(const std::string& path);

SimConfig sim_config_from_json_file(const std::string& path);

/// JSON renderings of resolved configs (for echoing/reproducibility).
std::string sim_config_json(const SimConfig& sim);
std::string model_config_json(const ModelConfig& config);

/// Assembles a tensor from per-(subject, state) CSV matrices, ordered
/// subject-major. Each file holds one V x V matrix, comma separated.
ConnectivityTensor import_csv(const std::vector<std::string>& paths, int n_subjects,
                              int n_states, Family family);

/// Writes `text` to `path` via a temp file + rename so readers never observe
/// a partial file.
void atomic_write(const std::string& path, const std::string& text);

}  // namespace blockmix
