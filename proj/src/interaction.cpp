#include "protojoint/interaction.hpp"

#include <array>

namespace protojoint {

using diff::Graph;
using diff::NodeRef;

namespace {

NodeRef attended_concat(Graph& g, NodeRef H, NodeRef labels) {
  NodeRef attention = g.row_softmax(g.matmul(H, g.transpose(labels)));
  NodeRef attended = g.matmul(attention, labels);
  std::array<NodeRef, 2> parts = {attended, H};
  return g.concat_cols(parts);
}

}  // namespace

NodeRef intent_representation(Graph& g, NodeRef H, NodeRef E_S) {
  return attended_concat(g, H, E_S);
}

NodeRef slot_representation(Graph& g, NodeRef H, NodeRef E_I) {
  return attended_concat(g, H, E_I);
}

NodeRef sentence_embedding(Graph& g, NodeRef H_I) {
  return g.mean_rows(H_I);
}

}  // namespace protojoint
