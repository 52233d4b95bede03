#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace blockmix {

enum class Family : std::uint8_t { continuous = 0, binary = 1 };

/// Unordered block pairs (s, s') with s <= s', enumerated s-major:
/// (0,0),(0,1),...,(0,S-1),(1,1),...
inline int pair_count(int n_blocks) { return n_blocks * (n_blocks + 1) / 2; }

inline int pair_index(int n_blocks, int s, int sp) {
  // requires s <= sp
  return s * n_blocks - s * (s - 1) / 2 + (sp - s);
}

/// Per-subject, per-state symmetric connectivity matrices. Diagonal entries
/// are carried through I/O untouched but excluded from every computation.
class ConnectivityTensor {
public:
  ConnectivityTensor() = default;

  int n_subjects() const { return n_subjects_; }
  int n_states() const { return n_states_; }
  int n_nodes() const { return n_nodes_; }
  Family family() const { return family_; }

  const std::vector<double>& values() const { return values_; }

  double at(int i, int m, int v, int vp) const {
    return values_[slice_offset(i, m) + static_cast<std::size_t>(v) * n_nodes_ + vp];
  }

  /// V x V view of the (subject, state) slice.
  Eigen::Map<const Eigen::MatrixXd> slice(int i, int m) const {
    return {values_.data() + slice_offset(i, m), n_nodes_, n_nodes_};
  }

  /// Validates dimensions, finiteness, symmetry (tolerance 1e-9, then
  /// symmetrized by averaging) and, for the binary family, exact {0,1} values.
  static ConnectivityTensor validate(std::vector<double> raw, int n_subjects,
                                     int n_states, int n_nodes, Family family);

private:
  std::size_t slice_offset(int i, int m) const {
    return (static_cast<std::size_t>(i) * n_states_ + m) *
           static_cast<std::size_t>(n_nodes_) * n_nodes_;
  }

  int n_subjects_ = 0;
  int n_states_ = 0;
  int n_nodes_ = 0;
  Family family_ = Family::continuous;
  std::vector<double> values_;
};

/// Expected per-block-pair reductions under soft node memberships. All sums
/// run over strictly-upper-triangle node pairs only.
struct BlockSuffStats {
  // edge_count[m](p): nhat, subject independent.
  std::vector<Eigen::VectorXd> edge_count;
  // weighted_sum[m](i, p): Ahat; weighted_sq_sum[m](i, p): Qhat.
  std::vector<Eigen::MatrixXd> weighted_sum;
  std::vector<Eigen::MatrixXd> weighted_sq_sum;
};

/// node_resp[m] is V x S_m with simplex rows (checked to 1e-8).
BlockSuffStats block_suffstats(const ConnectivityTensor& tensor,
                               const std::vector<Eigen::MatrixXd>& node_resp);

}  // namespace blockmix
