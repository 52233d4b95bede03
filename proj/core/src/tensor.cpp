#include "blockmix/tensor.hpp"

#include <cmath>
#include <sstream>

#include "blockmix/errors.hpp"

namespace blockmix {

namespace {

[[noreturn]] void fail_entry(const char* what, int i, int m, int v, int vp) {
  std::ostringstream os;
  os << what << " at (subject=" << i << ", state=" << m << ", node=" << v
     << ", node'=" << vp << ")";
  throw ValidationError(os.str());
}

}  // namespace

ConnectivityTensor ConnectivityTensor::validate(std::vector<double> raw, int n_subjects,
                                                int n_states, int n_nodes, Family family) {
  if (n_subjects <= 0 || n_states <= 0 || n_nodes <= 0) {
    throw ValidationError("tensor dimensions must be positive");
  }
  const std::size_t expected = static_cast<std::size_t>(n_subjects) * n_states *
                               n_nodes * static_cast<std::size_t>(n_nodes);
  if (raw.size() != expected) {
    std::ostringstream os;
    os << "tensor payload has " << raw.size() << " values, expected " << expected;
    throw ValidationError(os.str());
  }

  const std::size_t vv = static_cast<std::size_t>(n_nodes) * n_nodes;
  for (int i = 0; i < n_subjects; ++i) {
    for (int m = 0; m < n_states; ++m) {
      double* s = raw.data() + (static_cast<std::size_t>(i) * n_states + m) * vv;
      for (int v = 0; v < n_nodes; ++v) {
        for (int vp = v; vp < n_nodes; ++vp) {
          double& a = s[static_cast<std::size_t>(v) * n_nodes + vp];
          double& b = s[static_cast<std::size_t>(vp) * n_nodes + v];
          if (!std::isfinite(a) || !std::isfinite(b)) {
            fail_entry("non-finite value", i, m, v, vp);
          }
          if (std::abs(a - b) > 1e-9) {
            fail_entry("symmetry violation", i, m, v, vp);
          }
          const double avg = 0.5 * (a + b);
          if (family == Family::binary && v != vp && avg != 0.0 && avg != 1.0) {
            fail_entry("non-binary value", i, m, v, vp);
          }
          a = avg;
          b = avg;
        }
      }
    }
  }

  ConnectivityTensor t;
  t.n_subjects_ = n_subjects;
  t.n_states_ = n_states;
  t.n_nodes_ = n_nodes;
  t.family_ = family;
  t.values_ = std::move(raw);
  return t;
}

BlockSuffStats block_suffstats(const ConnectivityTensor& tensor,
                               const std::vector<Eigen::MatrixXd>& node_resp) {
  const int N = tensor.n_subjects();
  const int M = tensor.n_states();
  const int V = tensor.n_nodes();
  if (static_cast<int>(node_resp.size()) != M) {
    throw ValidationError("block_suffstats: one responsibility matrix per state required");
  }
  for (int m = 0; m < M; ++m) {
    if (node_resp[m].rows() != V) {
      throw ValidationError("block_suffstats: responsibility rows must match node count");
    }
    for (int v = 0; v < V; ++v) {
      if (std::abs(node_resp[m].row(v).sum() - 1.0) > 1e-8) {
        throw ValidationError("block_suffstats: responsibility row off the simplex");
      }
    }
  }

  BlockSuffStats stats;
  stats.edge_count.resize(M);
  stats.weighted_sum.resize(M);
  stats.weighted_sq_sum.resize(M);

  Eigen::MatrixXd sq(V, V);
  for (int m = 0; m < M; ++m) {
    const Eigen::MatrixXd& eta = node_resp[m];
    const int S = static_cast<int>(eta.cols());
    const int P = pair_count(S);

    // nhat from the all-ones adjacency with zero diagonal.
    const Eigen::VectorXd colsum = eta.colwise().sum();
    const Eigen::MatrixXd gram = eta.transpose() * eta;  // S x S
    stats.edge_count[m].resize(P);
    for (int s = 0; s < S; ++s) {
      for (int sp = s; sp < S; ++sp) {
        double d1 = colsum(s) * colsum(sp) - gram(s, sp);
        stats.edge_count[m](pair_index(S, s, sp)) = (s == sp) ? 0.5 * d1 : d1;
      }
    }

    stats.weighted_sum[m].resize(N, P);
    stats.weighted_sq_sum[m].resize(N, P);
    for (int i = 0; i < N; ++i) {
      const auto a = tensor.slice(i, m);
      sq = a.cwiseProduct(a);
      const Eigen::MatrixXd ha = eta.transpose() * (a * eta);     // S x S
      const Eigen::MatrixXd hq = eta.transpose() * (sq * eta);    // S x S
      // Diagonal entries of the slice must not contribute.
      const Eigen::VectorXd adiag = a.diagonal();
      const Eigen::VectorXd qdiag = sq.diagonal();
      for (int s = 0; s < S; ++s) {
        for (int sp = s; sp < S; ++sp) {
          double ca = 0.0, cq = 0.0;
          for (int v = 0; v < V; ++v) {
            const double w = eta(v, s) * eta(v, sp);
            ca += w * adiag(v);
            cq += w * qdiag(v);
          }
          double da = ha(s, sp) - ca;
          double dq = hq(s, sp) - cq;
          const int p = pair_index(S, s, sp);
          stats.weighted_sum[m](i, p) = (s == sp) ? 0.5 * da : da;
          stats.weighted_sq_sum[m](i, p) = (s == sp) ? 0.5 * dq : dq;
        }
      }
    }
  }
  return stats;
}

}  // namespace blockmix
