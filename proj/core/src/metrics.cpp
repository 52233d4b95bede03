#include "blockmix/metrics.hpp"

#include <cmath>
#include <map>

#include "blockmix/errors.hpp"

namespace blockmix {

namespace {

double choose2(double n) { return 0.5 * n * (n - 1.0); }

int block_count(const std::vector<bool>& selected) {
  // invert P = S(S+1)/2
  const int P = static_cast<int>(selected.size());
  const int S = static_cast<int>(std::lround((std::sqrt(8.0 * P + 1.0) - 1.0) / 2.0));
  if (pair_count(S) != P) throw ValidationError("selection_metrics: bad pair-flag length");
  return S;
}

}  // namespace

double adjusted_rand_index(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw ValidationError("ari: label vectors differ in length");
  if (x.size() < 2) throw ValidationError("ari: need at least two items");
  std::map<int, double> rows, cols;
  std::map<std::pair<int, int>, double> cells;
  for (std::size_t i = 0; i < x.size(); ++i) {
    rows[x[i]] += 1.0;
    cols[y[i]] += 1.0;
    cells[{x[i], y[i]}] += 1.0;
  }
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [k, n] : cells) sum_cells += choose2(n);
  for (const auto& [k, n] : rows) sum_rows += choose2(n);
  for (const auto& [k, n] : cols) sum_cols += choose2(n);
  const double total = choose2(static_cast<double>(x.size()));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_cells - expected) / (max_index - expected);
}

SelectionMetrics selection_metrics(const std::vector<std::vector<bool>>& selected,
                                   const std::vector<std::vector<int>>& est_block_of,
                                   const GroundTruth& truth) {
  const int M = static_cast<int>(truth.informative.size());
  if (static_cast<int>(selected.size()) != M ||
      static_cast<int>(est_block_of.size()) != M) {
    throw ValidationError("selection_metrics: state count mismatch");
  }
  SelectionMetrics out;
  for (int m = 0; m < M; ++m) {
    const int V = static_cast<int>(truth.block_of[m].size());
    if (static_cast<int>(est_block_of[m].size()) != V) {
      throw ValidationError("selection_metrics: node count mismatch");
    }
    const int S_true = block_count(truth.informative[m]);
    const int S_est = block_count(selected[m]);
    for (int v = 0; v < V; ++v) {
      for (int vp = v + 1; vp < V; ++vp) {
        const int ts = std::min(truth.block_of[m][v], truth.block_of[m][vp]);
        const int tsp = std::max(truth.block_of[m][v], truth.block_of[m][vp]);
        const bool truly = truth.informative[m][pair_index(S_true, ts, tsp)];
        const int es = std::min(est_block_of[m][v], est_block_of[m][vp]);
        const int esp = std::max(est_block_of[m][v], est_block_of[m][vp]);
        if (es < 0 || esp >= S_est) {
          throw ValidationError("selection_metrics: estimated block label out of range");
        }
        const bool pred = selected[m][pair_index(S_est, es, esp)];
        if (truly && pred) ++out.confusion.tp;
        else if (truly) ++out.confusion.fn;
        else if (pred) ++out.confusion.fp;
        else ++out.confusion.tn;
      }
    }
  }
  const auto& c = out.confusion;
  out.sensitivity = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 1.0;
  out.specificity = (c.tn + c.fp) > 0 ? static_cast<double>(c.tn) / (c.tn + c.fp) : 1.0;
  out.youden = out.sensitivity + out.specificity - 1.0;
  return out;
}

MetricsReport evaluate(const FitSummary& summary, const GroundTruth& truth,
                       double runtime_seconds) {
  MetricsReport rep;
  rep.subtyping_ari = adjusted_rand_index(summary.cluster_of, truth.subtype_of);
  const int M = static_cast<int>(truth.block_of.size());
  rep.modular_ari.resize(M);
  std::vector<std::vector<int>> est_blocks(M);
  for (int m = 0; m < M; ++m) {
    rep.modular_ari[m] = adjusted_rand_index(summary.block_of[m], truth.block_of[m]);
    est_blocks[m].resize(summary.block_of[m].size());
    for (std::size_t v = 0; v < est_blocks[m].size(); ++v) {
      est_blocks[m][v] = summary.block_of[m][v] - 1;  // summary labels are 1-based
    }
  }
  const SelectionMetrics sel = selection_metrics(summary.selected, est_blocks, truth);
  rep.sensitivity = sel.sensitivity;
  rep.specificity = sel.specificity;
  rep.youden = sel.youden;
  rep.edge_confusion = sel.confusion;
  rep.runtime_seconds = runtime_seconds;
  return rep;
}

}  // namespace blockmix
