#include <random>
#include <vector>

#include <doctest.h>

#include "blockmix/errors.hpp"
#include "blockmix/tensor.hpp"

using namespace blockmix;

namespace {

ConnectivityTensor random_tensor(int N, int M, int V, std::uint64_t seed,
                                 Family family = Family::continuous) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm(0.0, 2.0);
  std::bernoulli_distribution coin(0.4);
  std::vector<double> values(static_cast<std::size_t>(N) * M * V * V, 0.0);
  const std::size_t vv = static_cast<std::size_t>(V) * V;
  for (int i = 0; i < N; ++i) {
    for (int m = 0; m < M; ++m) {
      double* s = values.data() + (static_cast<std::size_t>(i) * M + m) * vv;
      for (int v = 0; v < V; ++v) {
        for (int vp = v; vp < V; ++vp) {
          const double a = family == Family::continuous ? norm(rng) : double(coin(rng));
          s[v * V + vp] = a;
          s[vp * V + v] = a;
        }
      }
    }
  }
  return ConnectivityTensor::validate(std::move(values), N, M, V, family);
}

std::vector<Eigen::MatrixXd> random_memberships(int M, int V, int S, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gam(1.0, 1.0);
  std::vector<Eigen::MatrixXd> eta(M, Eigen::MatrixXd(V, S));
  for (int m = 0; m < M; ++m) {
    for (int v = 0; v < V; ++v) {
      double total = 0.0;
      for (int s = 0; s < S; ++s) {
        eta[m](v, s) = gam(rng) + 1e-3;
        total += eta[m](v, s);
      }
      eta[m].row(v) /= total;
    }
  }
  return eta;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("pair enumeration") {
  CHECK(pair_count(1) == 1);
  CHECK(pair_count(3) == 6);
  // s-major order: (0,0),(0,1),(0,2),(1,1),(1,2),(2,2)
  int expect = 0;
  for (int s = 0; s < 3; ++s) {
    for (int sp = s; sp < 3; ++sp) CHECK(pair_index(3, s, sp) == expect++);
  }
  CHECK(expect == pair_count(3));
}

TEST_CASE("validate symmetrizes and rejects") {
  std::vector<double> vals{0.5, 1.0, 1.0 + 5e-10, 0.25};
  const auto t = ConnectivityTensor::validate(vals, 1, 1, 2, Family::continuous);
  CHECK(t.at(0, 0, 0, 1) == doctest::Approx(1.0 + 2.5e-10));
  CHECK(t.at(0, 0, 0, 1) == t.at(0, 0, 1, 0));
  CHECK(t.at(0, 0, 0, 0) == 0.5);  // diagonal preserved

  std::vector<double> bad{0.0, 1.0, 2.0, 0.0};
  CHECK_THROWS_WITH_AS(
      (void)ConnectivityTensor::validate(bad, 1, 1, 2, Family::continuous),
      doctest::Contains("symmetry violation"), ValidationError);

  std::vector<double> nonbin{0.0, 2.0, 2.0, 0.0};
  CHECK_THROWS_WITH_AS((void)ConnectivityTensor::validate(nonbin, 1, 1, 2, Family::binary),
                       doctest::Contains("non-binary"), ValidationError);

  std::vector<double> nan{0.0, std::nan(""), std::nan(""), 0.0};
  CHECK_THROWS_WITH_AS((void)ConnectivityTensor::validate(nan, 1, 1, 2, Family::continuous),
                       doctest::Contains("non-finite"), ValidationError);

  CHECK_THROWS_WITH_AS((void)ConnectivityTensor::validate({1.0}, 1, 1, 2, Family::continuous),
                       doctest::Contains("expected"), ValidationError);
}

TEST_CASE("block suffstats match the brute-force double loop") {
  const int N = 3, M = 2, V = 7, S = 3;
  const auto tensor = random_tensor(N, M, V, 21);
  const auto eta = random_memberships(M, V, S, 22);
  const auto stats = block_suffstats(tensor, eta);

  for (int m = 0; m < M; ++m) {
    Eigen::VectorXd nhat = Eigen::VectorXd::Zero(pair_count(S));
    Eigen::MatrixXd ahat = Eigen::MatrixXd::Zero(N, pair_count(S));
    Eigen::MatrixXd qhat = Eigen::MatrixXd::Zero(N, pair_count(S));
    for (int v = 0; v < V; ++v) {
      for (int vp = v + 1; vp < V; ++vp) {
        for (int s = 0; s < S; ++s) {
          for (int sp = 0; sp < S; ++sp) {
            const double w = eta[m](v, s) * eta[m](vp, sp);
            const int p = pair_index(S, std::min(s, sp), std::max(s, sp));
            nhat(p) += w;
            for (int i = 0; i < N; ++i) {
              const double a = tensor.at(i, m, v, vp);
              ahat(i, p) += w * a;
              qhat(i, p) += w * a * a;
            }
          }
        }
      }
    }
    for (int p = 0; p < pair_count(S); ++p) {
      CHECK(stats.edge_count[m](p) == doctest::Approx(nhat(p)).epsilon(1e-10));
      for (int i = 0; i < N; ++i) {
        CHECK(stats.weighted_sum[m](i, p) == doctest::Approx(ahat(i, p)).epsilon(1e-10));
        CHECK(stats.weighted_sq_sum[m](i, p) == doctest::Approx(qhat(i, p)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("diagonal entries never contribute") {
  const int N = 2, M = 1, V = 5, S = 2;
  auto base = random_tensor(N, M, V, 31);
  std::vector<double> bumped = base.values();
  // rebuild with arbitrary diagonals
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int i = 0; i < N; ++i) {
    for (int m = 0; m < M; ++m) {
      for (int v = 0; v < V; ++v) {
        bumped[((static_cast<std::size_t>(i) * M + m) * V + v) * V + v] = unif(rng);
      }
    }
  }
  const auto other = ConnectivityTensor::validate(bumped, N, M, V, Family::continuous);
  const auto eta = random_memberships(M, V, S, 34);
  const auto s1 = block_suffstats(base, eta);
  const auto s2 = block_suffstats(other, eta);
  for (int p = 0; p < pair_count(S); ++p) {
    CHECK(s1.edge_count[0](p) == doctest::Approx(s2.edge_count[0](p)).epsilon(1e-12));
    for (int i = 0; i < N; ++i) {
      CHECK(s1.weighted_sum[0](i, p) ==
            doctest::Approx(s2.weighted_sum[0](i, p)).epsilon(1e-12));
      CHECK(s1.weighted_sq_sum[0](i, p) ==
            doctest::Approx(s2.weighted_sq_sum[0](i, p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("suffstats reject off-simplex memberships") {
  const auto tensor = random_tensor(1, 1, 4, 41);
  std::vector<Eigen::MatrixXd> eta(1, Eigen::MatrixXd::Constant(4, 2, 0.6));
  CHECK_THROWS_AS((void)block_suffstats(tensor, eta), ValidationError);
}

}  // TEST_SUITE
