#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "protojoint/encoder.hpp"

using namespace protojoint;
using diff::Graph;
using diff::NodeRef;
using diff::ParamMap;
using diff::Tensor;

namespace {

Vocab tiny_vocab() {
  Vocab v;
  v.add(Vocab::kUnk);
  for (const char* t : {"book", "a", "flight", "to", "paris"}) v.add(t);
  return v;
}

ParamStore tiny_store(const Vocab& v, const EncoderConfig& cfg,
                      uint64_t seed) {
  ParamStore store;
  Rng rng(seed);
  init_encoder_params(store, v, cfg, rng);
  return store;
}

}  // namespace

TEST_CASE("vocab maps unknown tokens to UNK") {
  Vocab v = tiny_vocab();
  CHECK(v.id("book") != 0);
  CHECK(v.id("zeppelin") == 0);
  CHECK(v.tokens[0] == Vocab::kUnk);
}

TEST_CASE("single-token utterances encode to one row") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  Graph g;
  NodeRef H = encode_ids(g, store, cfg, {1});
  CHECK(g.value(H).rows == 1);
  CHECK(g.value(H).cols == 6);
}

TEST_CASE("H is always T by 2*d_h") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 5, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  for (int t_len : {1, 2, 5, 9}) {
    Graph g;
    std::vector<int> ids;
    for (int t = 0; t < t_len; ++t) ids.push_back(1 + t % 4);
    const Tensor& H = g.value(encode_ids(g, store, cfg, ids));
    CHECK(H.rows == t_len);
    CHECK(H.cols == 10);
  }
}

TEST_CASE("empty utterances are rejected") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  Graph g;
  CHECK_THROWS_AS(encode_ids(g, store, cfg, {}), ValidationError);
}

TEST_CASE("swapping cells on reversed input mirrors the states") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);

  ParamStore swapped;
  for (const auto& [name, t] : store.all()) {
    std::string renamed = name;
    size_t fw = renamed.find(".fw.");
    size_t bw = renamed.find(".bw.");
    if (fw != std::string::npos) renamed.replace(fw, 4, ".bw.");
    if (bw != std::string::npos) renamed.replace(bw, 4, ".fw.");
    swapped.create(renamed, t);
  }

  std::vector<int> ids = {1, 3, 2, 5, 4};
  std::vector<int> reversed(ids.rbegin(), ids.rend());

  Graph g1, g2;
  const Tensor& H = g1.value(encode_ids(g1, store, cfg, ids));
  const Tensor& Hr = g2.value(encode_ids(g2, swapped, cfg, reversed));

  int t_len = H.rows, d_h = cfg.d_h;
  for (int t = 0; t < t_len; ++t) {
    for (int j = 0; j < d_h; ++j) {
      // Row t of the mirrored run is [bw, fw] of row T-1-t of the original.
      CHECK(Hr.at(t, j) ==
            doctest::Approx(H.at(t_len - 1 - t, d_h + j)).epsilon(1e-12));
      CHECK(Hr.at(t, d_h + j) ==
            doctest::Approx(H.at(t_len - 1 - t, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero embeddings and zero biases give identical rows") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  for (auto& [name, t] : store.all_mutable()) {
    if (name == "encoder.embedding" || name.ends_with(".b")) {
      for (double& x : t.v) x = 0.0;
    }
  }
  Graph g;
  const Tensor& H = g.value(encode_ids(g, store, cfg, {1, 2, 3}));
  for (int t = 1; t < H.rows; ++t) {
    for (int j = 0; j < H.cols; ++j) CHECK(H.at(t, j) == H.at(0, j));
  }
}

TEST_CASE("encoding is deterministic without dropout") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  Graph g1, g2;
  CHECK(g1.value(encode_ids(g1, store, cfg, {1, 2})).v ==
        g2.value(encode_ids(g2, store, cfg, {1, 2})).v);
}

TEST_CASE("dropout masks rows only during training") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.5};
  ParamStore store = tiny_store(v, cfg, 5);
  Graph g1, g2;
  Rng dr(3);
  const Tensor& train_h =
      g1.value(encode_ids(g1, store, cfg, {1, 2, 3}, true, &dr));
  const Tensor& eval_h = g2.value(encode_ids(g2, store, cfg, {1, 2, 3}));
  CHECK(train_h.v != eval_h.v);
  int zeros = 0;
  for (double x : train_h.v) zeros += x == 0.0;
  CHECK(zeros > 0);
}

TEST_CASE("gradients reach the embedding table and both cells") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  Graph g;
  NodeRef H = encode_ids(g, store, cfg, {1, 2, 4});
  NodeRef loss = g.dot(g.mean_rows(H),
                       g.input(Tensor::full(1, 6, 1.0)));
  auto grads = g.gradients(loss);
  auto norm = [&](const std::string& name) {
    double s = 0.0;
    for (double x : grads.at(name).v) s += x * x;
    return std::sqrt(s);
  };
  CHECK(norm("encoder.embedding") > 0.0);
  CHECK(norm("encoder.fw.i.w") > 0.0);
  CHECK(norm("encoder.bw.g.u") > 0.0);
}

TEST_CASE("finite differences validate the recurrence gradients") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{3, 2, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  ParamMap params;
  for (const auto& [name, t] : store.all()) params[name] = t;

  auto build = [&](Graph& g, const ParamMap& p) {
    ParamStore s;
    for (const auto& [name, t] : p) s.create(name, t);
    NodeRef H = encode_ids(g, s, cfg, {1, 2, 3});
    return g.dot(g.mean_rows(H), g.input(Tensor::full(1, 4, 1.0)));
  };
  CHECK(diff::check_gradients(build, params, 1e-5) < 1e-4);
}

TEST_CASE("identical descriptions give identical label rows") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  Tensor a = encode_description(store, cfg, v, {"book", "flight"});
  Tensor b = encode_description(store, cfg, v, {"book", "flight"});
  CHECK(a.v == b.v);
}

TEST_CASE("single-token descriptions equal the token's H row") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  Tensor row = encode_description(store, cfg, v, {"paris"});
  Graph g;
  const Tensor& H = g.value(encode_ids(g, store, cfg, {v.id("paris")}));
  CHECK(row.v == H.v);
}

TEST_CASE("empty descriptions are rejected") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  CHECK_THROWS_AS(encode_description(store, cfg, v, {}), ValidationError);
}

TEST_CASE("label embeddings initialize once and then stay put") {
  Vocab v = tiny_vocab();
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  ensure_label_embedding(store, cfg, v, intent_label_param("Greet"),
                         {"book"});
  Tensor first = store.value(intent_label_param("Greet"));
  first.v[0] += 100.0;  // simulate a training update
  store.value(intent_label_param("Greet")) = first;
  ensure_label_embedding(store, cfg, v, intent_label_param("Greet"),
                         {"book"});
  CHECK(store.value(intent_label_param("Greet")).v == first.v);
}

TEST_CASE("the default O description row exists after label_matrix") {
  Vocab v = tiny_vocab();
  v.add("outside");
  EncoderConfig cfg{4, 3, 0.0};
  ParamStore store = tiny_store(v, cfg, 5);
  Graph g;
  std::map<std::string, std::vector<std::string>> desc;  // empty: defaults
  NodeRef m = label_matrix(g, store, cfg, v, {"O", "B-x"}, desc, false);
  CHECK(g.value(m).rows == 2);
  CHECK(store.has(slot_label_param("O")));
  Tensor direct = encode_description(store, cfg, v, {"outside"});
  CHECK(store.value(slot_label_param("O")).v == direct.v);
}
