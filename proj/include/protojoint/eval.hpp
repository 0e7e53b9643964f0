#pragma once

#include <string>
#include <utility>
#include <vector>

#include "protojoint/trainer.hpp"

namespace protojoint {

// Typed span over token positions, half-open [start, end).
struct Span {
  std::string type;
  int start = 0;
  int end = 0;
  bool operator==(const Span&) const = default;
};

// BIO decoding with standard repair: an I-X without a preceding B-X/I-X
// opens a new span.
std::vector<Span> decode_bio(const std::vector<std::string>& labels);
std::vector<std::string> encode_bio(const std::vector<Span>& spans,
                                    int length);

double ic_accuracy(const std::vector<std::string>& predicted,
                   const std::vector<std::string>& gold);

struct F1Counts {
  long long tp = 0, fp = 0, fn = 0;
  double f1() const {
    long long denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) /
                                  static_cast<double>(denom);
  }
};

void count_span_matches(const std::vector<std::string>& predicted,
                        const std::vector<std::string>& gold, F1Counts& out);
void count_token_matches(const std::vector<std::string>& predicted,
                         const std::vector<std::string>& gold, F1Counts& out);

// Micro F1 over a set of utterances: (span_f1, token_f1).
std::pair<double, double> sf_f1(
    const std::vector<std::vector<std::string>>& predicted,
    const std::vector<std::vector<std::string>>& gold);

struct EvalReport {
  int episodes = 0;
  double ic_accuracy_mean = 0.0, ic_accuracy_std = 0.0;
  double sf_f1_span_mean = 0.0, sf_f1_span_std = 0.0;
  double sf_f1_token_mean = 0.0, sf_f1_token_std = 0.0;
  long long unscorable_tokens = 0;
};

std::string eval_report_to_json(const EvalReport& report);

// Samples n episodes from the test split (seeded independently of
// training), predicts, and aggregates per-episode metrics.
EvalReport run_test_episodes(Model& model, const Corpus& test_split,
                             int n_episodes, int u_max, uint64_t seed);

struct AblationResult {
  Mode mode;
  EvalReport report;
  TrainReport train_report;
};

// Trains and evaluates modes oo, wo, ww with a shared master seed so all
// three consume identical episode streams. When out_dir is nonempty each
// mode's artifacts land in a subdirectory plus a comparison table.
std::vector<AblationResult> ablate(const SplitSet& splits,
                                   const TrainConfig& base, int eval_episodes,
                                   uint64_t eval_seed,
                                   const std::string& out_dir = "");

std::string ablation_table(const std::vector<AblationResult>& results);

// One JSON line per utterance: id, intent, z (1 x d) and c (1 x 2d).
void export_embeddings(
    Model& model, const std::vector<Episode>& episodes,
    const std::map<std::string, std::vector<std::string>>& descriptions,
    const std::string& out_path);

}  // namespace protojoint
