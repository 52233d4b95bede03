#include <doctest.h>

#include "blockmix/summary.hpp"
#include "harness.hpp"

using namespace blockmix;

TEST_SUITE("summary") {

TEST_CASE("argmax decision rules with lowest-index ties") {
  auto inst = testing::random_instance(5, Family::continuous);
  auto& st = inst.state;
  st.b.setZero();
  st.b.conservativeResize(3, st.b.cols());
  st.b.row(0).setZero();
  st.b(0, 0) = 0.1;
  st.b(0, 1) = 2.3;  // cluster 2 wins
  st.b.row(1).setConstant(-1.0);  // tie -> cluster 1
  st.b.row(2).setZero();
  st.b(2, 0) = 5.0;
  const auto s = summarize(st, inst.config);
  CHECK(s.cluster_of[0] == 2);
  CHECK(s.cluster_of[1] == 1);
  CHECK(s.cluster_of[2] == 1);
  CHECK(s.occupied_clusters == 2);

  // eta row (0.5, 0.5) -> block 1
  if (inst.config.blocks_per_state[0] == 2) {
    auto st2 = inst.state;
    st2.eta[0].row(0).setConstant(0.5);
    CHECK(summarize(st2, inst.config).block_of[0][0] == 1);
  }
}

TEST_CASE("zeta = 0 is not selected (strict inequality)") {
  auto inst = testing::random_instance(6, Family::continuous);
  inst.state.zeta[0](0) = 0.0;
  if (inst.state.zeta[0].size() > 1) inst.state.zeta[0](1) = 1e-12;
  const auto s = summarize(inst.state, inst.config);
  CHECK_FALSE(s.selected[0][0]);
  if (inst.state.zeta[0].size() > 1) CHECK(s.selected[0][1]);
}

TEST_CASE("adding a constant to a b row leaves clusters unchanged") {
  auto inst = testing::random_instance(7, Family::continuous);
  const auto before = summarize(inst.state, inst.config);
  inst.state.b.row(0).array() += 37.5;
  const auto after = summarize(inst.state, inst.config);
  CHECK(before.cluster_of == after.cluster_of);
}

TEST_CASE("profiles cover occupied clusters with posterior means") {
  auto inst = testing::random_instance(8, Family::continuous);
  inst.state.b.setConstant(-1.0);
  inst.state.b.col(1).setConstant(1.0);  // everyone in cluster 2
  const auto s = summarize(inst.state, inst.config);
  REQUIRE(s.occupied == std::vector<int>{2});
  REQUIRE(s.profile.size() == 1);
  for (int m = 0; m < inst.config.n_states; ++m) {
    for (int p = 0; p < s.profile[0][m].size(); ++p) {
      CHECK(s.profile[0][m](p) == inst.state.u[m](1, p));
    }
  }

  auto binst = testing::random_instance(9, Family::binary);
  const auto bs = summarize(binst.state, binst.config);
  const int d = bs.occupied[0] - 1;
  CHECK(bs.profile[0][0](0) ==
        doctest::Approx(binst.state.j[0](d, 0) /
                        (binst.state.j[0](d, 0) + binst.state.k[0](d, 0))));
}

}  // TEST_SUITE
