#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "instance.hpp"
#include "oracles.hpp"
#include "protojoint/corpus.hpp"
#include "protojoint/protonet.hpp"

using namespace protojoint;
using diff::Graph;
using diff::NodeRef;
using diff::Tensor;

namespace {

NodeRef row(Graph& g, std::vector<double> v) {
  int n = static_cast<int>(v.size());
  return g.input(Tensor(1, n, std::move(v)));
}

}  // namespace

TEST_CASE("a singleton class keeps its support as prototype") {
  Graph g;
  auto protos = intent_prototypes(g, {{"a", row(g, {1, 2, 3})}}, {"a"});
  CHECK(g.value(protos[0].second).v == std::vector<double>{1, 2, 3});
}

TEST_CASE("two supports average") {
  Graph g;
  auto protos = intent_prototypes(
      g, {{"a", row(g, {1, 0})}, {"a", row(g, {0, 1})}}, {"a"});
  CHECK(g.value(protos[0].second).v == std::vector<double>{0.5, 0.5});
}

TEST_CASE("prototypes match a brute-force mean") {
  Rng rng(3);
  Graph g;
  std::vector<LabeledNode> supports;
  std::vector<double> sum(4, 0.0);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> v;
    for (int j = 0; j < 4; ++j) v.push_back(rng.uniform_range(-1.0, 1.0));
    for (int j = 0; j < 4; ++j) sum[static_cast<size_t>(j)] += v[
        static_cast<size_t>(j)];
    supports.emplace_back("a", row(g, v));
  }
  auto protos = intent_prototypes(g, supports, {"a"});
  for (int j = 0; j < 4; ++j) {
    CHECK(g.value(protos[0].second).v[static_cast<size_t>(j)] ==
          doctest::Approx(sum[static_cast<size_t>(j)] / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("an empty class is an error") {
  Graph g;
  CHECK_THROWS_AS(intent_prototypes(g, {{"a", row(g, {1})}}, {"a", "b"}),
                  ValidationError);
}

TEST_CASE("window of half-width zero is the plain row") {
  Graph g;
  NodeRef m = g.input(Tensor(3, 2, {1, 2, 3, 4, 5, 6}));
  CHECK(g.value(windowed_token_repr(g, m, 1, 0, WindowNorm::kActual)).v ==
        std::vector<double>{3, 4});
}

TEST_CASE("centered window of half-width one averages all three rows") {
  Graph g;
  NodeRef m = g.input(Tensor(3, 2, {1, 2, 3, 4, 5, 6}));
  const Tensor& y =
      g.value(windowed_token_repr(g, m, 1, 1, WindowNorm::kActual));
  CHECK(y.v[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(y.v[1] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("truncated windows divide by the actual count or the fixed size") {
  Graph g;
  NodeRef m = g.input(Tensor(3, 2, {1, 2, 3, 4, 5, 6}));
  const Tensor& actual =
      g.value(windowed_token_repr(g, m, 0, 1, WindowNorm::kActual));
  CHECK(actual.v[0] == doctest::Approx(2.0).epsilon(1e-12));  // (1+3)/2
  const Tensor& fixed =
      g.value(windowed_token_repr(g, m, 0, 1, WindowNorm::kFixed));
  CHECK(fixed.v[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));  // (1+3)/3
}

TEST_CASE("slot prototypes follow slot order and skip unsupported labels") {
  Graph g;
  NodeRef m = g.input(Tensor(2, 2, {1, 2, 3, 4}));
  std::vector<SlotTokenRef> toks = {{m, 0, "B-x"}, {m, 1, "O"}};
  auto protos =
      slot_prototypes(g, toks, 0, WindowNorm::kActual, {"O", "B-x", "B-y"});
  REQUIRE(protos.size() == 2);
  CHECK(protos[0].first == "O");
  CHECK(protos[1].first == "B-x");
}

TEST_CASE("posterior picks the matching prototype") {
  Graph g;
  std::vector<LabeledNode> protos = {{"a", row(g, {0, 0})},
                                     {"b", row(g, {50, 0})}};
  auto p = intent_posterior(g, row(g, {0.1, 0.0}), protos);
  CHECK(p.at("a") > 0.999);
}

TEST_CASE("equidistant prototypes split the posterior evenly") {
  Graph g;
  std::vector<LabeledNode> protos = {{"a", row(g, {1, 0})},
                                     {"b", row(g, {-1, 0})}};
  auto p = intent_posterior(g, row(g, {0, 5}), protos);
  CHECK(p.at("a") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.at("b") == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("the worked numeric posterior reproduces") {
  Graph g;
  std::vector<LabeledNode> protos = {{"a", row(g, {1, 0})},
                                     {"b", row(g, {0, 2})}};
  auto p = slot_posterior(g, row(g, {0, 0}), protos);
  // exp(-1) / (exp(-1) + exp(-4))
  CHECK(std::abs(p.at("a") - 0.9525741268224331) < 1e-6);
}

TEST_CASE("posteriors sum to one and stay positive") {
  Rng rng(10);
  for (int rep = 0; rep < 20; ++rep) {
    Graph g;
    std::vector<LabeledNode> protos;
    int n = rng.uniform_int(2, 6);
    for (int i = 0; i < n; ++i) {
      std::vector<double> v;
      for (int j = 0; j < 3; ++j) v.push_back(rng.uniform_range(-5.0, 5.0));
      protos.emplace_back("p" + std::to_string(i), row(g, v));
    }
    std::vector<double> x;
    for (int j = 0; j < 3; ++j) x.push_back(rng.uniform_range(-5.0, 5.0));
    auto p = intent_posterior(g, row(g, x), protos);
    double s = 0.0;
    for (auto& [label, prob] : p) {
      CHECK(prob > 0.0);
      s += prob;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("posteriors are translation invariant") {
  Rng rng(11);
  Graph g;
  std::vector<double> shift = {3.7, -1.2};
  std::vector<LabeledNode> protos, shifted;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> v = {rng.uniform_range(-2.0, 2.0),
                             rng.uniform_range(-2.0, 2.0)};
    protos.emplace_back("p" + std::to_string(i), row(g, v));
    shifted.emplace_back("p" + std::to_string(i),
                         row(g, {v[0] + shift[0], v[1] + shift[1]}));
  }
  std::vector<double> x = {0.4, 0.9};
  auto p1 = intent_posterior(g, row(g, x), protos);
  auto p2 = intent_posterior(
      g, row(g, {x[0] + shift[0], x[1] + shift[1]}), shifted);
  for (auto& [label, prob] : p1) {
    CHECK(std::abs(prob - p2.at(label)) < 1e-9);
  }
}

TEST_CASE("an empty prototype map is an error") {
  Graph g;
  CHECK_THROWS_AS(neg_distance_logits(g, row(g, {1}), {}), ValidationError);
}

TEST_CASE("duplicating every support leaves prototypes unchanged") {
  Rng rng(12);
  std::vector<std::vector<double>> vs;
  for (int i = 0; i < 3; ++i) {
    vs.push_back({rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)});
  }
  Graph g;
  std::vector<LabeledNode> once, twice;
  for (auto& v : vs) once.emplace_back("a", row(g, v));
  for (auto& v : vs) {
    twice.emplace_back("a", row(g, v));
    twice.emplace_back("a", row(g, v));
  }
  auto p1 = intent_prototypes(g, once, {"a"});
  auto p2 = intent_prototypes(g, twice, {"a"});
  for (size_t j = 0; j < 2; ++j) {
    CHECK(g.value(p1[0].second).v[j] ==
          doctest::Approx(g.value(p2[0].second).v[j]).epsilon(1e-12));
  }
}

TEST_CASE("uniform posteriors give log N loss") {
  Graph g;
  // All prototypes identical: every query distance ties.
  std::vector<LabeledNode> protos;
  for (int i = 0; i < 4; ++i) {
    protos.emplace_back("c" + std::to_string(i), row(g, {1.0, 1.0}));
  }
  std::vector<PnQuery> queries = {
      {row(g, {0.3, -0.2}), "c1", g.input(Tensor(1, 2, {0.1, 0.2})), {"O"}}};
  std::vector<LabeledNode> slot_protos = {{"O", row(g, {0.0, 0.0})}};
  PnLosses pn =
      pn_losses(g, queries, protos, slot_protos, 0, WindowNorm::kActual);
  CHECK(g.scalar_value(pn.ic) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("well-separated clusters drive the loss toward zero") {
  Graph g;
  std::vector<LabeledNode> protos = {{"a", row(g, {0, 0})},
                                     {"b", row(g, {10, 0})},
                                     {"c", row(g, {0, 10})}};
  std::vector<PnQuery> queries = {
      {row(g, {0.05, 0.0}), "a", g.input(Tensor(1, 2)), {"O"}}};
  std::vector<LabeledNode> slot_protos = {{"O", row(g, {0.0, 0.0})}};
  PnLosses pn =
      pn_losses(g, queries, protos, slot_protos, 0, WindowNorm::kActual);
  CHECK(g.scalar_value(pn.ic) < 1e-3);
}

TEST_CASE("unscorable gold tokens are skipped and counted") {
  Graph g;
  std::vector<LabeledNode> protos = {{"a", row(g, {0, 0})}};
  NodeRef tokens = g.input(Tensor(2, 2, {1, 2, 3, 4}));
  std::vector<PnQuery> queries = {
      {row(g, {0, 0}), "a", tokens, {"B-ghost", "O"}}};
  std::vector<LabeledNode> slot_protos = {{"O", row(g, {0.0, 0.0})}};
  PnLosses pn =
      pn_losses(g, queries, protos, slot_protos, 0, WindowNorm::kActual);
  CHECK(pn.unscorable_tokens == 1);
  CHECK(g.scalar_value(pn.sf) >= 0.0);
}

TEST_CASE("graph losses match the nested-loop oracle on random episodes") {
  Rng rng(51);
  for (int rep = 0; rep < 30; ++rep) {
    testutil::Instance inst = testutil::random_instance(rng);
    diff::ParamMap params = testutil::make_params(inst, rng);
    Graph g;
    auto built = testutil::build_losses(g, inst, params, false);
    oracle::PnValues expect = oracle::pn_losses(
        testutil::to_oracle(inst, params));
    CHECK(std::abs(g.scalar_value(built.ic_pn) - expect.ic) < 1e-9);
    CHECK(std::abs(g.scalar_value(built.sf_pn) - expect.sf) < 1e-9);
    CHECK(g.scalar_value(built.ic_pn) >= 0.0);
    CHECK(g.scalar_value(built.sf_pn) >= 0.0);
  }
}
