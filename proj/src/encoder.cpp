#include "protojoint/encoder.hpp"

#include <array>

namespace protojoint {

using diff::Graph;
using diff::NodeRef;
using diff::Tensor;

int Vocab::id(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? 0 : it->second;
}

int Vocab::add(const std::string& token) {
  auto it = index.find(token);
  if (it != index.end()) return it->second;
  int id = static_cast<int>(tokens.size());
  tokens.push_back(token);
  index[token] = id;
  return id;
}

Vocab Vocab::build(const Corpus& corpus) {
  Vocab v;
  v.add(kUnk);
  for (const Utterance& u : corpus.utterances) {
    for (const std::string& t : u.tokens) v.add(t);
  }
  for (const auto& [label, desc] : corpus.descriptions) {
    for (const std::string& t : desc) v.add(t);
  }
  return v;
}

namespace {

const std::array<const char*, 4> kGates = {"i", "f", "o", "g"};

Tensor uniform_tensor(int rows, int cols, Rng& rng) {
  Tensor t(rows, cols);
  for (double& x : t.v) x = rng.uniform_range(-0.1, 0.1);
  return t;
}

}  // namespace

void init_encoder_params(ParamStore& store, const Vocab& vocab,
                         const EncoderConfig& cfg, Rng& rng) {
  store.create("encoder.embedding",
               uniform_tensor(static_cast<int>(vocab.tokens.size()), cfg.d_w,
                              rng));
  for (const char* dir : {"fw", "bw"}) {
    for (const char* gate : kGates) {
      std::string base = std::string("encoder.") + dir + "." + gate;
      store.create(base + ".w", uniform_tensor(cfg.d_w, cfg.d_h, rng));
      store.create(base + ".u", uniform_tensor(cfg.d_h, cfg.d_h, rng));
      store.create(base + ".b", uniform_tensor(1, cfg.d_h, rng));
    }
  }
}

NodeRef use_param(Graph& g, const ParamStore& store, const std::string& name) {
  if (g.has_parameter(name)) return g.parameter_node(name);
  return g.parameter(name, store.value(name));
}

namespace {

struct CellNodes {
  NodeRef w[4], u[4], b[4];
};

CellNodes cell_nodes(Graph& g, const ParamStore& store, const char* dir) {
  CellNodes c;
  for (int k = 0; k < 4; ++k) {
    std::string base = std::string("encoder.") + dir + "." + kGates[
        static_cast<size_t>(k)];
    c.w[k] = use_param(g, store, base + ".w");
    c.u[k] = use_param(g, store, base + ".u");
    c.b[k] = use_param(g, store, base + ".b");
  }
  return c;
}

// One gated step: returns (h', c').
std::pair<NodeRef, NodeRef> cell_step(Graph& g, const CellNodes& cell,
                                      NodeRef x, NodeRef h, NodeRef c) {
  auto gate = [&](int k) {
    std::array<NodeRef, 3> parts = {g.matmul(x, cell.w[k]),
                                    g.matmul(h, cell.u[k]), cell.b[k]};
    return g.add_n(parts);
  };
  NodeRef in_gate = g.sigmoid(gate(0));
  NodeRef forget = g.sigmoid(gate(1));
  NodeRef out_gate = g.sigmoid(gate(2));
  NodeRef cand = g.tanh(gate(3));
  NodeRef c_next = g.add(g.mul(forget, c), g.mul(in_gate, cand));
  NodeRef h_next = g.mul(out_gate, g.tanh(c_next));
  return {h_next, c_next};
}

}  // namespace

NodeRef encode_ids(Graph& g, const ParamStore& store, const EncoderConfig& cfg,
                   const std::vector<int>& ids, bool training,
                   Rng* dropout_rng) {
  if (ids.empty()) throw ValidationError("cannot encode an empty utterance");
  int t_len = static_cast<int>(ids.size());

  NodeRef emb = use_param(g, store, "encoder.embedding");
  std::vector<NodeRef> x(static_cast<size_t>(t_len));
  for (int t = 0; t < t_len; ++t) {
    x[static_cast<size_t>(t)] = g.gather_rows(emb, {ids[static_cast<size_t>(t)]});
  }

  CellNodes fw = cell_nodes(g, store, "fw");
  CellNodes bw = cell_nodes(g, store, "bw");
  NodeRef zero = g.input(Tensor(1, cfg.d_h));

  std::vector<NodeRef> fwd(static_cast<size_t>(t_len));
  NodeRef h = zero, c = zero;
  for (int t = 0; t < t_len; ++t) {
    std::tie(h, c) = cell_step(g, fw, x[static_cast<size_t>(t)], h, c);
    fwd[static_cast<size_t>(t)] = h;
  }

  std::vector<NodeRef> bwd(static_cast<size_t>(t_len));
  h = zero, c = zero;
  for (int t = t_len - 1; t >= 0; --t) {
    std::tie(h, c) = cell_step(g, bw, x[static_cast<size_t>(t)], h, c);
    bwd[static_cast<size_t>(t)] = h;
  }

  std::vector<NodeRef> rows(static_cast<size_t>(t_len));
  for (int t = 0; t < t_len; ++t) {
    std::array<NodeRef, 2> halves = {fwd[static_cast<size_t>(t)],
                                     bwd[static_cast<size_t>(t)]};
    rows[static_cast<size_t>(t)] = g.concat_cols(halves);
  }
  NodeRef H = g.concat_rows(rows);

  if (training && cfg.dropout > 0.0 && dropout_rng != nullptr) {
    Tensor mask(t_len, 2 * cfg.d_h);
    double keep_scale = 1.0 / (1.0 - cfg.dropout);
    for (double& m : mask.v) {
      m = dropout_rng->uniform() >= cfg.dropout ? keep_scale : 0.0;
    }
    H = g.mul(H, g.input(std::move(mask)));
  }
  return H;
}

NodeRef encode(Graph& g, const ParamStore& store, const EncoderConfig& cfg,
               const Vocab& vocab, const Utterance& utterance, bool training,
               Rng* dropout_rng) {
  std::vector<int> ids;
  ids.reserve(utterance.tokens.size());
  for (const std::string& t : utterance.tokens) ids.push_back(vocab.id(t));
  return encode_ids(g, store, cfg, ids, training, dropout_rng);
}

Tensor encode_description(const ParamStore& store, const EncoderConfig& cfg,
                          const Vocab& vocab,
                          const std::vector<std::string>& description) {
  if (description.empty()) {
    throw ValidationError("cannot encode an empty label description");
  }
  std::vector<int> ids;
  ids.reserve(description.size());
  for (const std::string& t : description) ids.push_back(vocab.id(t));
  Graph g;
  NodeRef H = encode_ids(g, store, cfg, ids, /*training=*/false, nullptr);
  return g.value(g.mean_rows(H));
}

std::string intent_label_param(const std::string& label) {
  return "label.intent." + label;
}

std::string slot_label_param(const std::string& label) {
  return "label.slot." + label;
}

void ensure_label_embedding(ParamStore& store, const EncoderConfig& cfg,
                            const Vocab& vocab, const std::string& param_name,
                            const std::vector<std::string>& description) {
  if (store.has(param_name)) return;
  store.create(param_name, encode_description(store, cfg, vocab, description));
}

NodeRef label_matrix(
    Graph& g, ParamStore& store, const EncoderConfig& cfg, const Vocab& vocab,
    const std::vector<std::string>& labels,
    const std::map<std::string, std::vector<std::string>>& descriptions,
    bool intent_kind) {
  if (labels.empty()) throw ValidationError("empty label list");
  std::vector<NodeRef> rows;
  rows.reserve(labels.size());
  for (const std::string& label : labels) {
    std::string name =
        intent_kind ? intent_label_param(label) : slot_label_param(label);
    auto it = descriptions.find(label);
    std::vector<std::string> desc =
        it != descriptions.end() ? it->second : tokenize_label(label);
    ensure_label_embedding(store, cfg, vocab, name, desc);
    rows.push_back(use_param(g, store, name));
  }
  return g.concat_rows(rows);
}

}  // namespace protojoint
