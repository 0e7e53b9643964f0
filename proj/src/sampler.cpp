#include "protojoint/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace protojoint {

using nlohmann::json;

namespace {

constexpr int kMaxRetries = 20;

std::map<std::string, std::vector<int>> group_checked(const Corpus& split) {
  auto groups = split.by_intent();
  if (groups.size() < 3) {
    throw ValidationError("sampler needs at least 3 intent classes, found " +
                          std::to_string(groups.size()));
  }
  for (const auto& [label, idxs] : groups) {
    if (idxs.size() < 2) {
      throw ValidationError("intent class '" + label +
                            "' has fewer than 2 utterances");
    }
  }
  return groups;
}

}  // namespace

int Episode::support_total() const {
  int n = 0;
  for (const auto& [c, utts] : support) n += static_cast<int>(utts.size());
  return n;
}

int Episode::query_total() const {
  int n = 0;
  for (const auto& [c, utts] : query) n += static_cast<int>(utts.size());
  return n;
}

std::vector<std::string> sample_class_set(const Corpus& split, Rng& rng) {
  auto groups = group_checked(split);
  std::vector<std::string> classes;
  for (const auto& [label, idxs] : groups) classes.push_back(label);

  int count = static_cast<int>(classes.size());
  int n = rng.uniform_int(3, count);
  // Partial Fisher-Yates: first n entries are a uniform draw w/o replacement.
  for (int i = 0; i < n; ++i) {
    int j = rng.uniform_int(i, count - 1);
    std::swap(classes[static_cast<size_t>(i)], classes[static_cast<size_t>(j)]);
  }
  classes.resize(static_cast<size_t>(n));
  return classes;
}

int compute_query_size(const std::vector<std::string>& class_set,
                       const Corpus& split) {
  auto groups = split.by_intent();
  int k_q = 10;
  for (const std::string& c : class_set) {
    int size = static_cast<int>(groups.at(c).size());
    k_q = std::min(k_q, size / 2);
  }
  return k_q;
}

int compute_support_budget(const std::vector<std::string>& class_set,
                           const Corpus& split, int k_q, int u_max, Rng& rng,
                           const SamplerHooks& hooks, double* beta_out) {
  double beta =
      hooks.beta.has_value() ? *hooks.beta : rng.uniform_open_closed();
  if (beta_out) *beta_out = beta;
  auto groups = split.by_intent();
  long long sum = 0;
  for (const std::string& c : class_set) {
    int size = static_cast<int>(groups.at(c).size());
    int per_class = std::min(20, size - k_q);
    sum += static_cast<long long>(std::ceil(beta * per_class));
  }
  return static_cast<int>(std::min<long long>(u_max, sum));
}

std::map<std::string, int> compute_shots(
    const std::vector<std::string>& class_set, const Corpus& split, int budget,
    int k_q, Rng& rng, const SamplerHooks& hooks, SeedTrace* trace) {
  auto groups = split.by_intent();
  const double lo = std::log(0.5), hi = std::log(2.0);

  std::map<std::string, double> weight;
  double weight_sum = 0.0;
  for (const std::string& c : class_set) {
    double alpha =
        hooks.alpha.has_value() ? *hooks.alpha : rng.uniform_range(lo, hi);
    if (trace) trace->alpha[c] = alpha;
    double w = std::exp(alpha) * static_cast<double>(groups.at(c).size());
    weight[c] = w;
    weight_sum += w;
  }

  int slack = budget - static_cast<int>(class_set.size());
  std::map<std::string, int> shots;
  for (const std::string& c : class_set) {
    double ratio = weight.at(c) / weight_sum;
    if (trace) trace->ratio[c] = ratio;
    int size = static_cast<int>(groups.at(c).size());
    int k = static_cast<int>(std::floor(ratio * slack)) + 1;
    k = std::min(k, size - k_q);
    shots[c] = std::max(1, k);
  }
  return shots;
}

Episode sample_episode(const Corpus& split, const SamplerConfig& config,
                       Rng& rng, const SamplerHooks& hooks) {
  auto groups = group_checked(split);

  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    std::vector<std::string> class_set = sample_class_set(split, rng);
    if (static_cast<int>(class_set.size()) > config.u_max) {
      throw ValidationError(
          "u_max=" + std::to_string(config.u_max) +
          " is smaller than the drawn class count N=" +
          std::to_string(class_set.size()) +
          "; u_max must be at least the split's class count");
    }

    int k_q = compute_query_size(class_set, split);
    if (k_q == 0) continue;  // some class too small for a query set; redraw

    Episode ep;
    ep.class_set = class_set;
    ep.k_q = k_q;
    ep.seed_trace.n = static_cast<int>(class_set.size());
    ep.seed_trace.class_draw = class_set;
    ep.seed_trace.retries = attempt;

    int budget = compute_support_budget(class_set, split, k_q, config.u_max,
                                        rng, hooks, &ep.seed_trace.beta);
    ep.seed_trace.budget = budget;
    ep.shots = compute_shots(class_set, split, budget, k_q, rng, hooks,
                             &ep.seed_trace);

    std::set<std::string> slot_labels;
    for (const std::string& c : class_set) {
      std::vector<int> pool = groups.at(c);
      rng.shuffle(pool);
      int k_c = ep.shots.at(c);
      for (int i = 0; i < k_c; ++i) {
        const Utterance& u = split.utterances[static_cast<size_t>(
            pool[static_cast<size_t>(i)])];
        ep.support[c].push_back(u);
        for (const std::string& s : u.slots) slot_labels.insert(s);
      }
      for (int i = k_c; i < k_c + k_q; ++i) {
        ep.query[c].push_back(split.utterances[static_cast<size_t>(
            pool[static_cast<size_t>(i)])]);
      }
    }

    slot_labels.erase("O");
    ep.slot_label_set.push_back("O");
    ep.slot_label_set.insert(ep.slot_label_set.end(), slot_labels.begin(),
                             slot_labels.end());
    return ep;
  }
  throw ValidationError("episode rejected " + std::to_string(kMaxRetries + 1) +
                        " times (a drawn class has too few utterances for "
                        "any query set)");
}

Episode sample_episode_indexed(const Corpus& split,
                               const SamplerConfig& config, uint64_t index) {
  Rng rng = Rng::derive(config.seed, "sampler", index);
  return sample_episode(split, config, rng);
}

namespace {

json utterance_to_json(const Utterance& u) {
  return json{{"tokens", u.tokens}, {"intent", u.intent}, {"slots", u.slots}};
}

Utterance utterance_from_json(const json& j) {
  Utterance u;
  u.tokens = j.at("tokens").get<std::vector<std::string>>();
  u.intent = j.at("intent").get<std::string>();
  u.slots = j.at("slots").get<std::vector<std::string>>();
  return u;
}

}  // namespace

std::string episode_to_json(const Episode& ep) {
  json j;
  j["class_set"] = ep.class_set;
  j["k_q"] = ep.k_q;
  j["shots"] = ep.shots;
  j["slot_label_set"] = ep.slot_label_set;
  json support = json::object();
  for (const auto& [c, utts] : ep.support) {
    json arr = json::array();
    for (const Utterance& u : utts) arr.push_back(utterance_to_json(u));
    support[c] = arr;
  }
  j["support"] = support;
  json query = json::object();
  for (const auto& [c, utts] : ep.query) {
    json arr = json::array();
    for (const Utterance& u : utts) arr.push_back(utterance_to_json(u));
    query[c] = arr;
  }
  j["query"] = query;
  j["seed_trace"] = {{"n", ep.seed_trace.n},
                     {"class_draw", ep.seed_trace.class_draw},
                     {"beta", ep.seed_trace.beta},
                     {"alpha", ep.seed_trace.alpha},
                     {"ratio", ep.seed_trace.ratio},
                     {"budget", ep.seed_trace.budget},
                     {"retries", ep.seed_trace.retries}};
  return j.dump();
}

Episode episode_from_json(const std::string& line) {
  json j = json::parse(line);
  Episode ep;
  ep.class_set = j.at("class_set").get<std::vector<std::string>>();
  ep.k_q = j.at("k_q").get<int>();
  ep.shots = j.at("shots").get<std::map<std::string, int>>();
  ep.slot_label_set =
      j.at("slot_label_set").get<std::vector<std::string>>();
  for (auto& [c, arr] : j.at("support").items()) {
    for (const json& u : arr) ep.support[c].push_back(utterance_from_json(u));
  }
  for (auto& [c, arr] : j.at("query").items()) {
    for (const json& u : arr) ep.query[c].push_back(utterance_from_json(u));
  }
  const json& t = j.at("seed_trace");
  ep.seed_trace.n = t.at("n").get<int>();
  ep.seed_trace.class_draw =
      t.at("class_draw").get<std::vector<std::string>>();
  ep.seed_trace.beta = t.at("beta").get<double>();
  ep.seed_trace.alpha = t.at("alpha").get<std::map<std::string, double>>();
  ep.seed_trace.ratio = t.at("ratio").get<std::map<std::string, double>>();
  ep.seed_trace.budget = t.at("budget").get<int>();
  ep.seed_trace.retries = t.at("retries").get<int>();
  return ep;
}

}  // namespace protojoint
