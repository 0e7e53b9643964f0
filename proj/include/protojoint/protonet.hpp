#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "protojoint/graph.hpp"

namespace protojoint {

// How windowed token means are normalized at sequence edges: by the count
// of valid positions (default) or by the full 2l+1 window size.
enum class WindowNorm { kActual, kFixed };

using LabeledNode = std::pair<std::string, diff::NodeRef>;

// Per-class mean of support sentence embeddings, in class_order.
std::vector<LabeledNode> intent_prototypes(
    diff::Graph& g, const std::vector<LabeledNode>& support_sentences,
    const std::vector<std::string>& class_order);

// Mean over rows max(0, pos-l)..min(T-1, pos+l) of a token matrix.
diff::NodeRef windowed_token_repr(diff::Graph& g, diff::NodeRef matrix,
                                  int pos, int half_width, WindowNorm norm);

struct SlotTokenRef {
  diff::NodeRef matrix;  // the utterance's H_S (or H)
  int pos = 0;           // token position within the matrix
  std::string label;
};

// Mean of windowed contributions per slot label, ordered by slot_order;
// labels with no support tokens are omitted.
std::vector<LabeledNode> slot_prototypes(
    diff::Graph& g, const std::vector<SlotTokenRef>& support_tokens,
    int half_width, WindowNorm norm,
    const std::vector<std::string>& slot_order);

// 1 x N row of -||x - p_c||^2 in prototype order.
diff::NodeRef neg_distance_logits(diff::Graph& g, diff::NodeRef x,
                                  const std::vector<LabeledNode>& protos);

// Euclidean-softmax posterior values (log-sum-exp stabilized; sums to 1).
std::map<std::string, double> intent_posterior(
    diff::Graph& g, diff::NodeRef c_star,
    const std::vector<LabeledNode>& protos);

std::map<std::string, double> slot_posterior(
    diff::Graph& g, diff::NodeRef token_repr,
    const std::vector<LabeledNode>& protos);

struct PnQuery {
  diff::NodeRef sentence;           // c* (1 x 2d)
  std::string intent;               // gold intent
  diff::NodeRef tokens;             // H_S (T x 2d)
  std::vector<std::string> slots;   // gold slot labels, length T
};

struct PnLosses {
  diff::NodeRef ic;  // mean over queries of -log p(y = y*)
  diff::NodeRef sf;  // mean over queries of the token sum of -log p(t_j)
  int unscorable_tokens = 0;  // gold slot label had no prototype
};

PnLosses pn_losses(diff::Graph& g, const std::vector<PnQuery>& queries,
                   const std::vector<LabeledNode>& intent_protos,
                   const std::vector<LabeledNode>& slot_protos,
                   int half_width, WindowNorm norm);

}  // namespace protojoint
