#include "protojoint/scl.hpp"

#include <algorithm>
#include <cmath>

#include "protojoint/corpus.hpp"

namespace protojoint {

using diff::Graph;
using diff::NodeRef;
using diff::Tensor;

ContrastiveBatch make_batch(std::vector<ContrastiveItem> queries,
                            std::vector<ContrastiveItem> supports, double tau,
                            bool normalize) {
  if (tau <= 0.0) throw ValidationError("tau must be positive");
  ContrastiveBatch b;
  b.queries = std::move(queries);
  b.supports = std::move(supports);
  b.tau = tau;
  b.normalize = normalize;
  for (const ContrastiveItem& s : b.supports) ++b.counts[s.label];
  return b;
}

namespace {

NodeRef unit_row(Graph& g, NodeRef v) {
  NodeRef inv_norm = g.exp(g.scale(g.log(g.dot(v, v)), -0.5));
  return g.matmul(inv_norm, v);  // 1x1 by 1xd broadcast
}

}  // namespace

SclLoss scl_loss(Graph& g, const ContrastiveBatch& batch) {
  if (batch.tau <= 0.0) throw ValidationError("tau must be positive");
  SclLoss out;
  out.eligible = static_cast<int>(batch.queries.size());
  if (batch.queries.empty() || batch.supports.empty()) {
    out.skipped = out.eligible;
    out.node = g.input(Tensor::scalar(0.0));
    return out;
  }

  std::vector<NodeRef> support_rows;
  support_rows.reserve(batch.supports.size());
  for (const ContrastiveItem& s : batch.supports) {
    support_rows.push_back(batch.normalize ? unit_row(g, s.vec) : s.vec);
  }
  NodeRef z_t = g.transpose(g.concat_rows(support_rows));

  std::vector<NodeRef> terms;
  for (const ContrastiveItem& q : batch.queries) {
    auto it = batch.counts.find(q.label);
    int n_pos = it == batch.counts.end() ? 0 : it->second;
    if (n_pos == 0) {
      ++out.skipped;
      continue;
    }
    NodeRef qv = batch.normalize ? unit_row(g, q.vec) : q.vec;
    NodeRef log_probs =
        g.row_log_softmax(g.scale(g.matmul(qv, z_t), 1.0 / batch.tau));
    Tensor mask(1, static_cast<int>(batch.supports.size()));
    for (size_t j = 0; j < batch.supports.size(); ++j) {
      if (batch.supports[j].label == q.label) mask.v[j] = 1.0;
    }
    terms.push_back(g.scale(g.dot(log_probs, g.input(std::move(mask))),
                            -1.0 / n_pos));
  }

  if (terms.empty()) {
    out.node = g.input(Tensor::scalar(0.0));
  } else {
    out.node = g.scale(g.add_n(terms),
                       1.0 / static_cast<double>(batch.queries.size()));
  }
  return out;
}

SclLoss ic_scl_loss(Graph& g, const ContrastiveBatch& batch) {
  return scl_loss(g, batch);
}

SclLoss sf_scl_loss(Graph& g, const std::vector<TokenVec>& query_tokens,
                    const std::vector<TokenVec>& support_tokens, double tau,
                    bool normalize) {
  int excluded = 0;
  std::vector<ContrastiveItem> queries;
  for (const TokenVec& t : query_tokens) {
    if (t.label == "O") {
      ++excluded;
      continue;
    }
    queries.push_back({g.gather_rows(t.matrix, {t.pos}), t.label});
  }
  std::vector<ContrastiveItem> supports;
  for (const TokenVec& t : support_tokens) {
    if (t.label == "O") continue;
    supports.push_back({g.gather_rows(t.matrix, {t.pos}), t.label});
  }
  SclLoss out = scl_loss(
      g, make_batch(std::move(queries), std::move(supports), tau, normalize));
  out.skipped += excluded;
  return out;
}

SclDecomposition scl_decomposition_check(const Graph& g,
                                         const ContrastiveBatch& batch) {
  SclDecomposition out;
  if (batch.queries.empty() || batch.supports.empty()) return out;

  auto values = [&](const ContrastiveItem& item) {
    std::vector<double> v = g.value(item.vec).v;
    if (batch.normalize) {
      double n = 0.0;
      for (double x : v) n += x * x;
      n = std::sqrt(n);
      for (double& x : v) x /= n;
    }
    return v;
  };

  std::vector<std::vector<double>> s_vecs;
  for (const ContrastiveItem& s : batch.supports) s_vecs.push_back(values(s));

  double q_total = static_cast<double>(batch.queries.size());
  for (const ContrastiveItem& q : batch.queries) {
    auto it = batch.counts.find(q.label);
    int n_pos = it == batch.counts.end() ? 0 : it->second;
    if (n_pos == 0) continue;
    std::vector<double> qv = values(q);

    std::vector<double> logits(batch.supports.size());
    for (size_t j = 0; j < batch.supports.size(); ++j) {
      double dot = 0.0;
      for (size_t k = 0; k < qv.size(); ++k) dot += qv[k] * s_vecs[j][k];
      logits[j] = dot / batch.tau;
    }
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    double lse = m + std::log(z);

    double pos = 0.0, direct_i = 0.0;
    for (size_t j = 0; j < batch.supports.size(); ++j) {
      if (batch.supports[j].label != q.label) continue;
      pos += logits[j];
      direct_i -= (logits[j] - lse) / n_pos;
    }
    out.positive_term += pos / n_pos / q_total;
    out.logz_term += lse / q_total;
    out.direct += direct_i / q_total;
  }
  out.reconstructed = out.logz_term - out.positive_term;
  return out;
}

}  // namespace protojoint
