#pragma once

// Independent nested-loop reimplementations of the model math, used as
// oracles against the graph-built losses. Deliberately naive: plain
// double loops, no shared code with the library beyond std::.

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat y(a.size(), Vec(b[0].size(), 0.0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t k = 0; k < b.size(); ++k)
      for (size_t j = 0; j < b[0].size(); ++j) y[i][j] += a[i][k] * b[k][j];
  return y;
}

inline Mat transpose(const Mat& a) {
  Mat y(a[0].size(), Vec(a.size()));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[0].size(); ++j) y[j][i] = a[i][j];
  return y;
}

inline Vec softmax_row(const Vec& x) {
  double m = x[0];
  for (double v : x) m = std::max(m, v);
  double z = 0.0;
  Vec y(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - m);
    z += y[i];
  }
  for (double& v : y) v /= z;
  return y;
}

inline Mat row_softmax(const Mat& a) {
  Mat y;
  for (const Vec& r : a) y.push_back(softmax_row(r));
  return y;
}

inline Vec mean_rows(const Mat& a) {
  Vec y(a[0].size(), 0.0);
  for (const Vec& r : a)
    for (size_t j = 0; j < r.size(); ++j) y[j] += r[j];
  for (double& v : y) v /= static_cast<double>(a.size());
  return y;
}

// [softmax(H E^T) E || H]
inline Mat attend_concat(const Mat& H, const Mat& E) {
  Mat att = row_softmax(matmul(H, transpose(E)));
  Mat mixed = matmul(att, E);
  Mat y;
  for (size_t i = 0; i < H.size(); ++i) {
    Vec row = mixed[i];
    row.insert(row.end(), H[i].begin(), H[i].end());
    y.push_back(row);
  }
  return y;
}

inline Vec windowed_mean(const Mat& m, int pos, int half_width,
                         bool actual_norm) {
  int t_len = static_cast<int>(m.size());
  int lo = std::max(0, pos - half_width);
  int hi = std::min(t_len - 1, pos + half_width);
  Vec y(m[0].size(), 0.0);
  for (int k = lo; k <= hi; ++k)
    for (size_t j = 0; j < y.size(); ++j) y[j] += m[static_cast<size_t>(k)][j];
  double denom = actual_norm ? static_cast<double>(hi - lo + 1)
                             : static_cast<double>(2 * half_width + 1);
  for (double& v : y) v /= denom;
  return y;
}

inline double sqdist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// p(label) = exp(-||x-p||^2) / sum, in prototype order.
inline Vec euclid_posterior(const Vec& x, const std::vector<Vec>& protos) {
  Vec logits;
  for (const Vec& p : protos) logits.push_back(-sqdist(x, p));
  return softmax_row(logits);
}

struct UttValues {
  Mat H;
  std::string intent;
  std::vector<std::string> slots;
};

struct EpisodeValues {
  std::vector<UttValues> support;
  std::vector<UttValues> query;
  Mat e_intent;  // rows follow intent_order
  Mat e_slot;    // rows follow slot_order
  std::vector<std::string> intent_order;
  std::vector<std::string> slot_order;
  int half_width = 1;
  bool actual_norm = true;
  double tau = 0.1;
};

struct PnValues {
  double ic = 0.0;
  double sf = 0.0;
  int unscorable = 0;
};

// Recomputes Eqs. of the prototypical path end to end from raw H values.
inline PnValues pn_losses(const EpisodeValues& ep) {
  auto sentence = [&](const UttValues& u) {
    return mean_rows(attend_concat(u.H, ep.e_slot));
  };
  auto slot_matrix = [&](const UttValues& u) {
    return attend_concat(u.H, ep.e_intent);
  };

  std::map<std::string, std::vector<Vec>> intent_members;
  for (const UttValues& u : ep.support) {
    intent_members[u.intent].push_back(sentence(u));
  }
  std::vector<Vec> intent_protos;
  std::map<std::string, int> intent_idx;
  for (const std::string& c : ep.intent_order) {
    intent_idx[c] = static_cast<int>(intent_protos.size());
    Mat rows = intent_members.at(c);
    intent_protos.push_back(mean_rows(rows));
  }

  std::map<std::string, std::vector<Vec>> slot_members;
  for (const UttValues& u : ep.support) {
    Mat hs = slot_matrix(u);
    for (size_t j = 0; j < u.slots.size(); ++j) {
      slot_members[u.slots[j]].push_back(windowed_mean(
          hs, static_cast<int>(j), ep.half_width, ep.actual_norm));
    }
  }
  std::vector<Vec> slot_protos;
  std::map<std::string, int> slot_idx;
  for (const std::string& o : ep.slot_order) {
    auto it = slot_members.find(o);
    if (it == slot_members.end()) continue;
    slot_idx[o] = static_cast<int>(slot_protos.size());
    slot_protos.push_back(mean_rows(it->second));
  }

  PnValues out;
  for (const UttValues& u : ep.query) {
    Vec probs = euclid_posterior(sentence(u), intent_protos);
    out.ic -= std::log(probs[static_cast<size_t>(intent_idx.at(u.intent))]);
    Mat hs = slot_matrix(u);
    for (size_t j = 0; j < u.slots.size(); ++j) {
      auto it = slot_idx.find(u.slots[j]);
      if (it == slot_idx.end()) {
        ++out.unscorable;
        continue;
      }
      Vec token = windowed_mean(hs, static_cast<int>(j), ep.half_width,
                                ep.actual_norm);
      Vec probs_t = euclid_posterior(token, slot_protos);
      out.sf -= std::log(probs_t[static_cast<size_t>(it->second)]);
    }
  }
  out.ic /= static_cast<double>(ep.query.size());
  out.sf /= static_cast<double>(ep.query.size());
  return out;
}

struct SclItemValues {
  Vec vec;
  std::string label;
};

// Eq. form of the supervised contrastive loss; naive exp/sum arithmetic.
inline double scl_loss(const std::vector<SclItemValues>& queries,
                       const std::vector<SclItemValues>& supports,
                       double tau) {
  if (queries.empty() || supports.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const SclItemValues& s : supports) ++counts[s.label];
  double total = 0.0;
  for (const SclItemValues& q : queries) {
    auto it = counts.find(q.label);
    if (it == counts.end() || it->second == 0) continue;
    double denom = 0.0;
    for (const SclItemValues& s : supports)
      denom += std::exp(dot(q.vec, s.vec) / tau);
    double inner = 0.0;
    for (const SclItemValues& s : supports) {
      if (s.label != q.label) continue;
      inner += std::log(std::exp(dot(q.vec, s.vec) / tau) / denom);
    }
    total += -inner / it->second;
  }
  return total / static_cast<double>(queries.size());
}

// IC-SCL over z = mean(H) of each utterance.
inline double ic_scl(const EpisodeValues& ep) {
  std::vector<SclItemValues> qs, ss;
  for (const UttValues& u : ep.query) qs.push_back({mean_rows(u.H), u.intent});
  for (const UttValues& u : ep.support)
    ss.push_back({mean_rows(u.H), u.intent});
  return scl_loss(qs, ss, ep.tau);
}

// SF-SCL over rows of H with "O" words removed on both sides.
inline double sf_scl(const EpisodeValues& ep) {
  std::vector<SclItemValues> qs, ss;
  for (const UttValues& u : ep.query) {
    for (size_t j = 0; j < u.slots.size(); ++j) {
      if (u.slots[j] != "O") qs.push_back({u.H[j], u.slots[j]});
    }
  }
  for (const UttValues& u : ep.support) {
    for (size_t j = 0; j < u.slots.size(); ++j) {
      if (u.slots[j] != "O") ss.push_back({u.H[j], u.slots[j]});
    }
  }
  return scl_loss(qs, ss, ep.tau);
}

// Micro F1 by per-label tallies; an independent route to the same number.
inline double micro_f1_by_label(
    const std::vector<std::vector<std::string>>& pred,
    const std::vector<std::vector<std::string>>& gold) {
  std::map<std::string, long long> tp, fp, fn;
  for (size_t i = 0; i < gold.size(); ++i) {
    for (size_t j = 0; j < gold[i].size(); ++j) {
      const std::string& g = gold[i][j];
      const std::string& p = pred[i][j];
      if (g != "O" && p == g) {
        ++tp[g];
      } else {
        if (p != "O") ++fp[p];
        if (g != "O") ++fn[g];
      }
    }
  }
  long long tps = 0, fps = 0, fns = 0;
  for (auto& [k, v] : tp) tps += v;
  for (auto& [k, v] : fp) fps += v;
  for (auto& [k, v] : fn) fns += v;
  long long denom = 2 * tps + fps + fns;
  return denom == 0 ? 1.0
                    : 2.0 * static_cast<double>(tps) /
                          static_cast<double>(denom);
}

}  // namespace oracle
