#pragma once

#include <map>
#include <string>
#include <vector>

#include "protojoint/graph.hpp"

namespace protojoint {

struct ContrastiveItem {
  diff::NodeRef vec;  // 1 x dim row
  std::string label;
};

struct ContrastiveBatch {
  std::vector<ContrastiveItem> queries;
  std::vector<ContrastiveItem> supports;
  double tau = 0.1;
  bool normalize = false;  // optional unit-normalization, off by default
  std::map<std::string, int> counts;  // support label -> N_label
};

ContrastiveBatch make_batch(std::vector<ContrastiveItem> queries,
                            std::vector<ContrastiveItem> supports, double tau,
                            bool normalize = false);

struct SclLoss {
  diff::NodeRef node;  // scalar; a constant 0 when nothing is scorable
  int skipped = 0;     // items that contributed nothing to the loss
  int eligible = 0;    // the |Q| denominator actually used
};

// L = (1/|Q|) sum_i -(1/N_{y_i}) sum_{j: y_j = y_i}
//       log softmax_j(z_i . z_k / tau); log-sum-exp stabilized.
SclLoss scl_loss(diff::Graph& g, const ContrastiveBatch& batch);

// Utterance-level wrapper (vectors are per-utterance z = mean(H)).
SclLoss ic_scl_loss(diff::Graph& g, const ContrastiveBatch& batch);

struct TokenVec {
  diff::NodeRef matrix;  // utterance token matrix (H by default)
  int pos = 0;
  std::string label;
};

// Token-level batch; "O" tokens are removed from both sides and counted
// into the returned loss's skipped statistic.
SclLoss sf_scl_loss(diff::Graph& g, const std::vector<TokenVec>& query_tokens,
                    const std::vector<TokenVec>& support_tokens, double tau,
                    bool normalize = false);

struct SclDecomposition {
  double positive_term = 0.0;   // (1/|Q|) sum_i POS_i / N_i
  double logz_term = 0.0;       // (1/|Q|) sum_i logsumexp_i
  double reconstructed = 0.0;   // logz_term - positive_term
  double direct = 0.0;          // the loss evaluated straight from Eq. form
};

// Value-level check of the two-term split of the SCL loss.
SclDecomposition scl_decomposition_check(const diff::Graph& g,
                                         const ContrastiveBatch& batch);

}  // namespace protojoint
