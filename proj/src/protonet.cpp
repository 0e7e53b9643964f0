#include "protojoint/protonet.hpp"

#include <algorithm>
#include <set>

#include "protojoint/corpus.hpp"

namespace protojoint {

using diff::Graph;
using diff::NodeRef;
using diff::Tensor;

std::vector<LabeledNode> intent_prototypes(
    Graph& g, const std::vector<LabeledNode>& support_sentences,
    const std::vector<std::string>& class_order) {
  std::map<std::string, std::vector<NodeRef>> per_class;
  for (const auto& [label, node] : support_sentences) {
    per_class[label].push_back(node);
  }
  std::vector<LabeledNode> protos;
  protos.reserve(class_order.size());
  for (const std::string& c : class_order) {
    auto it = per_class.find(c);
    if (it == per_class.end() || it->second.empty()) {
      throw ValidationError("intent class '" + c + "' has no support");
    }
    protos.emplace_back(c, g.mean_rows(g.concat_rows(it->second)));
  }
  return protos;
}

NodeRef windowed_token_repr(Graph& g, NodeRef matrix, int pos, int half_width,
                            WindowNorm norm) {
  int t_len = g.value(matrix).rows;
  int lo = std::max(0, pos - half_width);
  int hi = std::min(t_len - 1, pos + half_width);
  std::vector<int> rows;
  for (int k = lo; k <= hi; ++k) rows.push_back(k);
  NodeRef mean = g.mean_rows(g.gather_rows(matrix, rows));
  if (norm == WindowNorm::kFixed) {
    // Rescale so the divisor is the full window size even when truncated.
    double count = static_cast<double>(rows.size());
    double window = static_cast<double>(2 * half_width + 1);
    if (count != window) mean = g.scale(mean, count / window);
  }
  return mean;
}

std::vector<LabeledNode> slot_prototypes(
    Graph& g, const std::vector<SlotTokenRef>& support_tokens, int half_width,
    WindowNorm norm, const std::vector<std::string>& slot_order) {
  std::map<std::string, std::vector<NodeRef>> contributions;
  for (const SlotTokenRef& tok : support_tokens) {
    contributions[tok.label].push_back(
        windowed_token_repr(g, tok.matrix, tok.pos, half_width, norm));
  }
  std::vector<LabeledNode> protos;
  for (const std::string& label : slot_order) {
    auto it = contributions.find(label);
    if (it == contributions.end()) continue;  // no support tokens
    protos.emplace_back(label, g.mean_rows(g.concat_rows(it->second)));
  }
  return protos;
}

NodeRef neg_distance_logits(Graph& g, NodeRef x,
                            const std::vector<LabeledNode>& protos) {
  if (protos.empty()) throw ValidationError("empty prototype map");
  std::vector<NodeRef> cells;
  cells.reserve(protos.size());
  for (const auto& [label, p] : protos) {
    cells.push_back(g.scale(g.squared_distance(x, p), -1.0));
  }
  return g.concat_cols(cells);
}

namespace {

std::map<std::string, double> posterior_values(
    Graph& g, NodeRef x, const std::vector<LabeledNode>& protos) {
  NodeRef probs = g.row_softmax(neg_distance_logits(g, x, protos));
  const Tensor& row = g.value(probs);
  std::map<std::string, double> out;
  for (size_t i = 0; i < protos.size(); ++i) {
    out[protos[i].first] = row.v[i];
  }
  return out;
}

}  // namespace

std::map<std::string, double> intent_posterior(
    Graph& g, NodeRef c_star, const std::vector<LabeledNode>& protos) {
  return posterior_values(g, c_star, protos);
}

std::map<std::string, double> slot_posterior(
    Graph& g, NodeRef token_repr, const std::vector<LabeledNode>& protos) {
  return posterior_values(g, token_repr, protos);
}

PnLosses pn_losses(Graph& g, const std::vector<PnQuery>& queries,
                   const std::vector<LabeledNode>& intent_protos,
                   const std::vector<LabeledNode>& slot_protos,
                   int half_width, WindowNorm norm) {
  if (queries.empty()) throw ValidationError("no query utterances");

  std::map<std::string, int> intent_index;
  for (size_t i = 0; i < intent_protos.size(); ++i) {
    intent_index[intent_protos[i].first] = static_cast<int>(i);
  }
  std::map<std::string, int> slot_index;
  for (size_t i = 0; i < slot_protos.size(); ++i) {
    slot_index[slot_protos[i].first] = static_cast<int>(i);
  }

  auto picked_neg_log = [&](NodeRef log_probs, int gold, int n) {
    Tensor onehot(1, n);
    onehot.v[static_cast<size_t>(gold)] = 1.0;
    return g.scale(g.dot(log_probs, g.input(std::move(onehot))), -1.0);
  };

  PnLosses out;
  std::vector<NodeRef> ic_terms;
  std::vector<NodeRef> sf_terms;

  for (const PnQuery& q : queries) {
    auto it = intent_index.find(q.intent);
    if (it == intent_index.end()) {
      throw ValidationError("query intent '" + q.intent +
                            "' has no prototype");
    }
    NodeRef ic_logp =
        g.row_log_softmax(neg_distance_logits(g, q.sentence, intent_protos));
    ic_terms.push_back(picked_neg_log(
        ic_logp, it->second, static_cast<int>(intent_protos.size())));

    std::vector<NodeRef> token_terms;
    for (size_t j = 0; j < q.slots.size(); ++j) {
      auto sit = slot_index.find(q.slots[j]);
      if (sit == slot_index.end()) {
        ++out.unscorable_tokens;
        continue;
      }
      NodeRef repr = windowed_token_repr(g, q.tokens, static_cast<int>(j),
                                         half_width, norm);
      NodeRef logp =
          g.row_log_softmax(neg_distance_logits(g, repr, slot_protos));
      token_terms.push_back(picked_neg_log(
          logp, sit->second, static_cast<int>(slot_protos.size())));
    }
    if (!token_terms.empty()) sf_terms.push_back(g.add_n(token_terms));
  }

  double inv_q = 1.0 / static_cast<double>(queries.size());
  out.ic = g.scale(g.add_n(ic_terms), inv_q);
  out.sf = sf_terms.empty() ? g.input(Tensor::scalar(0.0))
                            : g.scale(g.add_n(sf_terms), inv_q);
  return out;
}

}  // namespace protojoint
