#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>

#include "doctest.h"
#include "protojoint/sampler.hpp"

using namespace protojoint;

namespace {

Corpus classes_of_sizes(const std::vector<int>& sizes) {
  Corpus c;
  for (size_t k = 0; k < sizes.size(); ++k) {
    std::string intent = "c" + std::to_string(k);
    for (int i = 0; i < sizes[k]; ++i) {
      Utterance u;
      // Unique token makes utterances distinguishable by value.
      u.tokens = {"u" + std::to_string(k) + "_" + std::to_string(i), "x"};
      u.slots = {"O", i % 2 ? "B-t" : "O"};
      u.intent = intent;
      c.utterances.push_back(std::move(u));
    }
    c.intent_inventory.push_back(intent);
    c.descriptions[intent] = {"class", std::to_string(k)};
  }
  c.slot_inventory = {"B-t", "O"};
  c.descriptions["O"] = {"outside"};
  c.descriptions["B-t"] = {"b", "t"};
  return c;
}

std::vector<std::string> class_names(int n) {
  std::vector<std::string> out;
  for (int k = 0; k < n; ++k) out.push_back("c" + std::to_string(k));
  return out;
}

}  // namespace

TEST_CASE("three classes force N = 3 with the full set") {
  Corpus split = classes_of_sizes({4, 4, 4});
  Rng rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    auto cs = sample_class_set(split, rng);
    CHECK(cs.size() == 3);
    CHECK(std::set<std::string>(cs.begin(), cs.end()).size() == 3);
  }
}

TEST_CASE("class draw is deterministic for a fixed seed") {
  Corpus split = classes_of_sizes({4, 4, 4, 4, 4, 4, 4});
  Rng a(77), b(77);
  CHECK(sample_class_set(split, a) == sample_class_set(split, b));
}

TEST_CASE("fewer than three classes is an error") {
  Corpus split = classes_of_sizes({4, 4});
  Rng rng(1);
  CHECK_THROWS_WITH_AS(sample_class_set(split, rng),
                       doctest::Contains("at least 3"), ValidationError);
}

TEST_CASE("class number is empirically uniform over its range") {
  Corpus split = classes_of_sizes({4, 4, 4, 4, 4, 4, 4});
  Rng rng(2024);
  std::vector<int> counts(8, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    ++counts[sample_class_set(split, rng).size()];
  }
  double expected = draws / 5.0;
  double chi2 = 0.0;
  for (int n = 3; n <= 7; ++n) {
    double d = counts[static_cast<size_t>(n)] - expected;
    chi2 += d * d / expected;
  }
  CHECK(chi2 < 13.2767);  // chi^2 critical value, df = 4, alpha = 0.01
}

TEST_CASE("query size follows the min-half rule") {
  CHECK(compute_query_size(class_names(3), classes_of_sizes({30, 40, 50})) ==
        10);
  CHECK(compute_query_size(class_names(2), classes_of_sizes({4, 40})) == 2);
  CHECK(compute_query_size(class_names(3), classes_of_sizes({2, 2, 2})) == 1);
}

TEST_CASE("support budget at beta = 1") {
  Corpus split = classes_of_sizes({30, 40, 50});
  SamplerHooks hooks;
  hooks.beta = 1.0;
  Rng rng(1);
  CHECK(compute_support_budget(class_names(3), split, 10, 20, rng, hooks) ==
        20);
  CHECK(compute_support_budget(class_names(3), split, 10, 100, rng, hooks) ==
        60);
}

TEST_CASE("support budget as beta approaches zero is the class count") {
  Corpus split = classes_of_sizes({30, 40, 50});
  SamplerHooks hooks;
  hooks.beta = 1e-12;
  Rng rng(1);
  CHECK(compute_support_budget(class_names(3), split, 10, 100, rng, hooks) ==
        3);
}

TEST_CASE("shots reproduce the worked example at alpha = 0") {
  Corpus split = classes_of_sizes({30, 40, 50});
  SamplerHooks hooks;
  hooks.alpha = 0.0;
  Rng rng(1);
  SeedTrace trace;
  auto shots = compute_shots(class_names(3), split, 20, 10, rng, hooks,
                             &trace);
  CHECK(shots.at("c0") == 5);
  CHECK(shots.at("c1") == 6);
  CHECK(shots.at("c2") == 8);
  int total = 0;
  for (auto& [c, k] : shots) total += k;
  CHECK(total <= 20);

  double ratio_sum = 0.0;
  for (auto& [c, r] : trace.ratio) ratio_sum += r;
  CHECK(ratio_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero slack gives one shot per class") {
  Corpus split = classes_of_sizes({30, 40, 50});
  Rng rng(9);
  auto shots = compute_shots(class_names(3), split, 3, 10, rng);
  for (auto& [c, k] : shots) CHECK(k == 1);
}

TEST_CASE("single class normalizes to the full budget") {
  Corpus split = classes_of_sizes({30, 40, 50});
  Rng rng(9);
  auto shots = compute_shots({"c0"}, split, 12, 10, rng);
  CHECK(shots.at("c0") == 12);  // min(floor(1*(12-1))+1, 30-10)
}

TEST_CASE("floor-sum bound keeps shot totals within budget") {
  Corpus split = classes_of_sizes({7, 13, 29, 61, 101});
  Rng rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    int budget = rng.uniform_int(5, 40);
    auto shots = compute_shots(class_names(5), split, budget, 3, rng);
    int total = 0;
    for (auto& [c, k] : shots) total += k;
    if (budget >= 5) CHECK(total <= std::max(budget, 5));
  }
}

TEST_CASE("episodes are byte-identical for a fixed seed") {
  Corpus split = classes_of_sizes({8, 12, 5, 9});
  SamplerConfig cfg{20, 1234, 1};
  Episode a = sample_episode_indexed(split, cfg, 3);
  Episode b = sample_episode_indexed(split, cfg, 3);
  CHECK(episode_to_json(a) == episode_to_json(b));
  Episode c = sample_episode_indexed(split, cfg, 4);
  CHECK(episode_to_json(a) != episode_to_json(c));
}

TEST_CASE("episode json round trips") {
  Corpus split = classes_of_sizes({8, 12, 5, 9});
  SamplerConfig cfg{20, 55, 1};
  Episode a = sample_episode_indexed(split, cfg, 0);
  Episode b = episode_from_json(episode_to_json(a));
  CHECK(episode_to_json(b) == episode_to_json(a));
}

TEST_CASE("two-utterance classes force one-shot one-query episodes") {
  Corpus split = classes_of_sizes({2, 2, 2, 2});
  SamplerConfig cfg{20, 7, 1};
  for (uint64_t i = 0; i < 20; ++i) {
    Episode ep = sample_episode_indexed(split, cfg, i);
    CHECK(ep.k_q == 1);
    for (auto& [c, k] : ep.shots) CHECK(k == 1);
  }
}

TEST_CASE("u_max below the drawn class count is rejected") {
  Corpus split = classes_of_sizes({4, 4, 4});
  SamplerConfig cfg{2, 7, 1};
  CHECK_THROWS_WITH_AS(sample_episode_indexed(split, cfg, 0),
                       doctest::Contains("u_max"), ValidationError);
}

TEST_CASE("episode invariants hold across an unbalanced sweep") {
  Corpus split = classes_of_sizes({2, 5, 9, 20, 37, 120, 400});
  auto groups = split.by_intent();
  SamplerConfig cfg{20, 99, 1};
  for (uint64_t i = 0; i < 1000; ++i) {
    Episode ep = sample_episode_indexed(split, cfg, i);
    int n = static_cast<int>(ep.class_set.size());
    CHECK(n >= 3);
    CHECK(n <= 7);
    CHECK(ep.k_q >= 1);
    CHECK(ep.k_q <= 10);
    int total_shots = 0;
    for (const std::string& c : ep.class_set) {
      int size = static_cast<int>(groups.at(c).size());
      int k = ep.shots.at(c);
      CHECK(k >= 1);
      CHECK(k <= size - ep.k_q);
      CHECK(static_cast<int>(ep.support.at(c).size()) == k);
      CHECK(static_cast<int>(ep.query.at(c).size()) == ep.k_q);
      total_shots += k;

      std::set<std::string> support_ids;
      for (const Utterance& u : ep.support.at(c)) {
        CHECK(support_ids.insert(u.tokens[0]).second);  // no duplicates
      }
      for (const Utterance& u : ep.query.at(c)) {
        CHECK(!support_ids.count(u.tokens[0]));  // disjoint from support
      }
    }
    CHECK(total_shots <= ep.seed_trace.budget);
    CHECK(ep.seed_trace.budget <= cfg.u_max);
    CHECK(ep.slot_label_set.front() == "O");
  }
}
