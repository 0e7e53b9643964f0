#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "protojoint/corpus.hpp"
#include "protojoint/rng.hpp"

namespace protojoint {

// Record of every random draw behind an episode, kept for replay.
struct SeedTrace {
  int n = 0;
  std::vector<std::string> class_draw;
  double beta = 0.0;
  std::map<std::string, double> alpha;
  std::map<std::string, double> ratio;  // normalized R_c
  int budget = 0;
  int retries = 0;
};

struct Episode {
  std::vector<std::string> class_set;  // draw order; ties resolve first-wins
  std::map<std::string, std::vector<Utterance>> support;
  std::map<std::string, std::vector<Utterance>> query;
  std::vector<std::string> slot_label_set;  // "O" first, then sorted
  int k_q = 0;
  std::map<std::string, int> shots;
  SeedTrace seed_trace;

  int support_total() const;
  int query_total() const;
};

struct SamplerConfig {
  int u_max = 20;
  uint64_t seed = 0;
  int episodes = 1;
};

// Test-only overrides for the stochastic pieces of episode construction.
struct SamplerHooks {
  std::optional<double> beta;
  std::optional<double> alpha;
};

// Step 1: N uniform on [3, |C_split|], then N distinct classes.
std::vector<std::string> sample_class_set(const Corpus& split, Rng& rng);

// Step 2(i): k_q = min{10, min_c floor(0.5 |U(c)|)}.
int compute_query_size(const std::vector<std::string>& class_set,
                       const Corpus& split);

// Step 2(ii): |S| = min{u_max, sum_c ceil(beta * min{20, |U(c)| - k_q})},
// beta uniform on (0, 1].
int compute_support_budget(const std::vector<std::string>& class_set,
                           const Corpus& split, int k_q, int u_max, Rng& rng,
                           const SamplerHooks& hooks = {},
                           double* beta_out = nullptr);

// Step 2(iii): k_c = min{floor(R_c (|S| - |C|)) + 1, |U(c)| - k_q},
// clamped to >= 1; R_c from alpha_c uniform on [log 0.5, log 2).
std::map<std::string, int> compute_shots(
    const std::vector<std::string>& class_set, const Corpus& split, int budget,
    int k_q, Rng& rng, const SamplerHooks& hooks = {},
    SeedTrace* trace = nullptr);

// Full construction; rejects k_q = 0 draws with bounded retries.
Episode sample_episode(const Corpus& split, const SamplerConfig& config,
                       Rng& rng, const SamplerHooks& hooks = {});

// Pure function of (split, config.seed, index).
Episode sample_episode_indexed(const Corpus& split,
                               const SamplerConfig& config, uint64_t index);

std::string episode_to_json(const Episode& episode);
Episode episode_from_json(const std::string& line);

}  // namespace protojoint
