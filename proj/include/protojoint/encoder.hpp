#pragma once

#include <map>
#include <string>
#include <vector>

#include "protojoint/corpus.hpp"
#include "protojoint/graph.hpp"
#include "protojoint/params.hpp"
#include "protojoint/rng.hpp"

namespace protojoint {

struct EncoderConfig {
  int d_w = 32;          // token embedding width
  int d_h = 32;          // per-direction hidden size; H has 2*d_h columns
  double dropout = 0.1;  // applied to H entries during training only
};

struct Vocab {
  static constexpr const char* kUnk = "<unk>";

  std::vector<std::string> tokens;  // index -> token; index 0 is UNK
  std::map<std::string, int> index;

  int id(const std::string& token) const;
  int add(const std::string& token);  // returns existing id if present

  // Vocabulary over corpus tokens plus all description tokens.
  static Vocab build(const Corpus& corpus);
};

// Creates "encoder.embedding" and both recurrent cells, all uniform(-.1,.1).
void init_encoder_params(ParamStore& store, const Vocab& vocab,
                         const EncoderConfig& cfg, Rng& rng);

// Registers a stored parameter in the graph (once per graph), or returns
// the existing node.
diff::NodeRef use_param(diff::Graph& g, const ParamStore& store,
                        const std::string& name);

// Bidirectional gated recurrence over token ids; returns H (T x 2*d_h).
// Dropout is drawn from `dropout_rng` in row-major order when training.
diff::NodeRef encode_ids(diff::Graph& g, const ParamStore& store,
                         const EncoderConfig& cfg, const std::vector<int>& ids,
                         bool training = false, Rng* dropout_rng = nullptr);

diff::NodeRef encode(diff::Graph& g, const ParamStore& store,
                     const EncoderConfig& cfg, const Vocab& vocab,
                     const Utterance& utterance, bool training = false,
                     Rng* dropout_rng = nullptr);

// Mean-pooled encoder output over a description's tokens (a 1 x 2*d_h row),
// computed with the store's current weights and no dropout.
diff::Tensor encode_description(const ParamStore& store,
                                const EncoderConfig& cfg, const Vocab& vocab,
                                const std::vector<std::string>& description);

std::string intent_label_param(const std::string& label);
std::string slot_label_param(const std::string& label);

// Creates the label's embedding row from its description if it does not
// exist yet; initialization happens at most once per store.
void ensure_label_embedding(
    ParamStore& store, const EncoderConfig& cfg, const Vocab& vocab,
    const std::string& param_name,
    const std::vector<std::string>& description);

// Episode-local label matrix: rows gathered from the per-label parameters
// in the given label order (|labels| x 2*d_h). Missing rows are initialized
// from `descriptions` (falling back to the default label tokenization).
diff::NodeRef label_matrix(
    diff::Graph& g, ParamStore& store, const EncoderConfig& cfg,
    const Vocab& vocab, const std::vector<std::string>& labels,
    const std::map<std::string, std::vector<std::string>>& descriptions,
    bool intent_kind);

}  // namespace protojoint
