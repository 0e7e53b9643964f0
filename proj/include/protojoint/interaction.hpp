#pragma once

#include "protojoint/graph.hpp"

namespace protojoint {

// Slot-attention-based intent representation:
//   [row_softmax(H E_S^T) E_S || H], a T x 2d matrix.
diff::NodeRef intent_representation(diff::Graph& g, diff::NodeRef H,
                                    diff::NodeRef E_S);

// Intent-attention-based slot representation, the mirror over E_I.
diff::NodeRef slot_representation(diff::Graph& g, diff::NodeRef H,
                                  diff::NodeRef E_I);

// Column-wise mean over tokens of H_I (the utterance embedding c).
diff::NodeRef sentence_embedding(diff::Graph& g, diff::NodeRef H_I);

}  // namespace protojoint
