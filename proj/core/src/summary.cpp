#include "blockmix/summary.hpp"

#include <algorithm>

namespace blockmix {

namespace {

int argmax_row(const Eigen::MatrixXd& m, int row) {
  int best = 0;
  for (int c = 1; c < m.cols(); ++c) {
    if (m(row, c) > m(row, best)) best = c;
  }
  return best;
}

}  // namespace

FitSummary summarize(const VariationalState& state, const ModelConfig& config) {
  FitSummary out;
  const int N = static_cast<int>(state.b.rows());
  out.cluster_of.resize(N);
  for (int i = 0; i < N; ++i) out.cluster_of[i] = argmax_row(state.b, i) + 1;

  out.occupied = out.cluster_of;
  std::sort(out.occupied.begin(), out.occupied.end());
  out.occupied.erase(std::unique(out.occupied.begin(), out.occupied.end()),
                     out.occupied.end());
  out.occupied_clusters = static_cast<int>(out.occupied.size());

  out.block_of.resize(config.n_states);
  out.selected.resize(config.n_states);
  for (int m = 0; m < config.n_states; ++m) {
    const int V = static_cast<int>(state.eta[m].rows());
    out.block_of[m].resize(V);
    for (int v = 0; v < V; ++v) out.block_of[m][v] = argmax_row(state.eta[m], v) + 1;
    const int P = static_cast<int>(state.zeta[m].size());
    out.selected[m].resize(P);
    for (int p = 0; p < P; ++p) out.selected[m][p] = state.zeta[m](p) > 0.0;
  }

  out.profile.resize(out.occupied_clusters);
  for (int c = 0; c < out.occupied_clusters; ++c) {
    const int d = out.occupied[c] - 1;
    out.profile[c].resize(config.n_states);
    for (int m = 0; m < config.n_states; ++m) {
      if (config.family == Family::continuous) {
        out.profile[c][m] = state.u[m].row(d).transpose();
      } else {
        out.profile[c][m] =
            (state.j[m].row(d).array() / (state.j[m].row(d).array() + state.k[m].row(d).array()))
                .transpose();
      }
    }
  }
  return out;
}

}  // namespace blockmix
