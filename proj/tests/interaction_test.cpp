#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "instance.hpp"
#include "oracles.hpp"
#include "protojoint/interaction.hpp"
#include "protojoint/rng.hpp"

using namespace protojoint;
using diff::Graph;
using diff::NodeRef;
using diff::Tensor;

TEST_CASE("a single label row is repeated and concatenated with H") {
  Graph g;
  NodeRef H = g.input(Tensor(3, 2, {1, 2, 3, 4, 5, 6}));
  NodeRef E = g.input(Tensor(1, 2, {7, 8}));
  const Tensor& y = g.value(intent_representation(g, H, E));
  CHECK(y.rows == 3);
  CHECK(y.cols == 4);
  for (int t = 0; t < 3; ++t) {
    CHECK(y.at(t, 0) == 7);
    CHECK(y.at(t, 1) == 8);
    CHECK(y.at(t, 2) == g.value(H).at(t, 0));
    CHECK(y.at(t, 3) == g.value(H).at(t, 1));
  }
}

TEST_CASE("zero logits attend uniformly, yielding the label mean") {
  Graph g;
  NodeRef H = g.input(Tensor(2, 2));  // zeros: H E^T = 0
  NodeRef E = g.input(Tensor(3, 2, {3, 0, 0, 6, 3, 3}));
  const Tensor& y = g.value(intent_representation(g, H, E));
  for (int t = 0; t < 2; ++t) {
    CHECK(y.at(t, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(y.at(t, 1) == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("two-by-two case matches the nested-loop oracle") {
  Rng rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    Tensor H(2, 2), E(2, 2);
    for (double& x : H.v) x = rng.uniform_range(-2.0, 2.0);
    for (double& x : E.v) x = rng.uniform_range(-2.0, 2.0);
    Graph g;
    const Tensor& y =
        g.value(slot_representation(g, g.input(H), g.input(E)));
    oracle::Mat expect =
        oracle::attend_concat(testutil::to_mat(H), testutil::to_mat(E));
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 4; ++j) {
        CHECK(y.at(i, j) ==
              doctest::Approx(
                  expect[static_cast<size_t>(i)][static_cast<size_t>(j)])
                  .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("attention rows are positive and sum to one") {
  Rng rng(4);
  Graph g;
  Tensor H(4, 3), E(5, 3);
  for (double& x : H.v) x = rng.uniform_range(-3.0, 3.0);
  for (double& x : E.v) x = rng.uniform_range(-3.0, 3.0);
  NodeRef att = g.row_softmax(
      g.matmul(g.input(H), g.transpose(g.input(E))));
  const Tensor& a = g.value(att);
  for (int i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols; ++j) {
      CHECK(a.at(i, j) > 0.0);
      s += a.at(i, j);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("permuting label rows leaves the representation unchanged") {
  Rng rng(8);
  Tensor H(3, 4), E(4, 4);
  for (double& x : H.v) x = rng.uniform_range(-1.0, 1.0);
  for (double& x : E.v) x = rng.uniform_range(-1.0, 1.0);
  Tensor Ep(4, 4);
  int perm[4] = {2, 0, 3, 1};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) Ep.at(i, j) = E.at(perm[i], j);
  }
  Graph g1, g2;
  const Tensor& a =
      g1.value(intent_representation(g1, g1.input(H), g1.input(E)));
  const Tensor& b =
      g2.value(intent_representation(g2, g2.input(H), g2.input(Ep)));
  for (int k = 0; k < a.size(); ++k) {
    CHECK(a.v[static_cast<size_t>(k)] ==
          doctest::Approx(b.v[static_cast<size_t>(k)]).epsilon(1e-12));
  }
}

TEST_CASE("the last d columns recover H exactly") {
  Rng rng(13);
  Tensor H(5, 6), E(3, 6);
  for (double& x : H.v) x = rng.uniform_range(-1.0, 1.0);
  for (double& x : E.v) x = rng.uniform_range(-1.0, 1.0);
  Graph g;
  const Tensor& y =
      g.value(slot_representation(g, g.input(H), g.input(E)));
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 6; ++j) CHECK(y.at(i, 6 + j) == H.at(i, j));
  }
}

TEST_CASE("sentence embedding of one row is that row") {
  Graph g;
  NodeRef H = g.input(Tensor(1, 3, {4, 5, 6}));
  CHECK(g.value(sentence_embedding(g, H)).v == std::vector<double>{4, 5, 6});
}

TEST_CASE("opposite rows cancel") {
  Graph g;
  NodeRef H = g.input(Tensor(2, 2, {1.5, -2.0, -1.5, 2.0}));
  for (double x : g.value(sentence_embedding(g, H)).v) CHECK(x == 0.0);
}

TEST_CASE("mean of three fixed rows") {
  Graph g;
  NodeRef H = g.input(Tensor(3, 2, {1, 0, 0, 1, 1, 1}));
  const Tensor& c = g.value(sentence_embedding(g, H));
  CHECK(c.v[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(c.v[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}
