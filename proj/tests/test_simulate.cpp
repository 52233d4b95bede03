#include <cmath>

#include <doctest.h>

#include "blockmix/errors.hpp"
#include "blockmix/simulate.hpp"

using namespace blockmix;

TEST_SUITE("simulate") {

TEST_CASE("defaults: dimensions and informative pair count") {
  SimConfig sim;
  sim.seed = 1;
  auto [tensor, truth] = generate(sim);
  CHECK(tensor.n_subjects() == 100);
  CHECK(tensor.n_states() == 2);
  CHECK(tensor.n_nodes() == 60);
  for (int m = 0; m < 2; ++m) {
    int informative = 0;
    for (bool f : truth.informative[m]) informative += f;
    CHECK(informative == 3);  // ceil(0.5 * 6)
    for (int p = 0; p < 6; ++p) {
      if (truth.informative[m][p]) {
        CHECK(truth.means[m][p].size() == 3);
        // permutations of the configured triples
        auto ms = truth.means[m][p];
        std::sort(ms.begin(), ms.end());
        CHECK(ms == std::vector<double>{-3.0, 2.0, 7.0});
      } else {
        CHECK(truth.means[m][p].empty());
      }
    }
  }
  for (int label : truth.subtype_of) CHECK((label >= 0 && label < 3));
}

TEST_CASE("seeds: reproducible and distinct") {
  SimConfig sim;
  sim.n_subjects = 5;
  sim.n_nodes = 12;
  sim.seed = 7;
  auto [t1, g1] = generate(sim);
  auto [t2, g2] = generate(sim);
  CHECK(t1.values() == t2.values());
  CHECK(g1.subtype_of == g2.subtype_of);
  sim.seed = 8;
  auto [t3, g3] = generate(sim);
  CHECK(t1.values() != t3.values());
}

TEST_CASE("empirical moments within three standard errors") {
  SimConfig sim;
  sim.seed = 11;
  auto [tensor, truth] = generate(sim);
  const int V = sim.n_nodes;
  for (int m = 0; m < sim.n_states; ++m) {
    const int S = sim.blocks_for_state(m);
    for (int p = 0; p < pair_count(S); ++p) {
      for (int d = 0; d < (truth.informative[m][p] ? sim.n_subtypes : 1); ++d) {
        double sum = 0.0;
        int n = 0;
        for (int i = 0; i < sim.n_subjects; ++i) {
          const bool want = truth.informative[m][p] ? truth.subtype_of[i] == d : true;
          if (!want) continue;
          for (int v = 0; v < V; ++v) {
            for (int vp = v + 1; vp < V; ++vp) {
              const int s = std::min(truth.block_of[m][v], truth.block_of[m][vp]);
              const int sp = std::max(truth.block_of[m][v], truth.block_of[m][vp]);
              if (pair_index(S, s, sp) != p) continue;
              sum += tensor.at(i, m, v, vp);
              ++n;
            }
          }
        }
        REQUIRE(n > 0);
        const double mu = truth.informative[m][p] ? truth.means[m][p][d] : sim.noise_mean;
        const double var = truth.informative[m][p] ? truth.vars[m][p][d] : sim.noise_var;
        const double se = std::sqrt(var / n);
        CHECK(std::abs(sum / n - mu) < 3.0 * se);
      }
    }
  }
}

TEST_CASE("single subtype still emits informative pairs") {
  SimConfig sim;
  sim.n_subjects = 10;
  sim.n_nodes = 15;
  sim.n_subtypes = 1;
  sim.informative_means = {4.0};
  sim.informative_vars = {2.0};
  sim.seed = 3;
  auto [tensor, truth] = generate(sim);
  int informative = 0;
  for (bool f : truth.informative[0]) informative += f;
  CHECK(informative == 3);
}

TEST_CASE("binary extension generates valid tensors") {
  SimConfig sim;
  sim.family = Family::binary;
  sim.n_subjects = 6;
  sim.n_nodes = 12;
  sim.seed = 5;
  auto [tensor, truth] = generate(sim);
  CHECK(tensor.family() == Family::binary);
  for (int v = 0; v < 12; ++v) {
    for (int vp = v + 1; vp < 12; ++vp) {
      const double a = tensor.at(0, 0, v, vp);
      CHECK((a == 0.0 || a == 1.0));
    }
  }
}

TEST_CASE("degenerate configs error out") {
  SimConfig sim;
  sim.n_nodes = 2;
  sim.n_blocks = {3, 3};  // three blocks cannot all be nonempty on two nodes
  sim.seed = 1;
  CHECK_THROWS_AS((void)generate(sim), ValidationError);
  sim = SimConfig{};
  sim.informative_means = {1.0};  // wrong length
  CHECK_THROWS_AS((void)generate(sim), ValidationError);
  sim = SimConfig{};
  sim.n_nodes = 5;  // three blocks of >= 2 nodes never fit: exhausts retries
  CHECK_THROWS_WITH_AS((void)generate(sim), doctest::Contains("non-degenerate"),
                       ValidationError);
}

}  // TEST_SUITE
