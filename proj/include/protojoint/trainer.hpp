#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "protojoint/corpus.hpp"
#include "protojoint/encoder.hpp"
#include "protojoint/protonet.hpp"
#include "protojoint/sampler.hpp"
#include "protojoint/scl.hpp"

namespace protojoint {

enum class Mode { kOO, kWO, kWW };
enum class OptimizerKind { kAdamW, kSgd };

Mode mode_from_string(const std::string& s);
std::string mode_to_string(Mode m);

struct TrainConfig {
  // Loss weights from the built-in {0.1, 0.5, 1.0} sweep on the bundled
  // synthetic corpus.
  double lambda = 1.0;   // slot-filling prototypical loss
  double gamma = 0.5;    // intent contrastive loss
  double delta = 0.1;    // slot contrastive loss
  double tau = 0.1;
  int l = 1;             // window half-width for slot prototypes
  int d_h = 32;
  int d_w = 32;
  double learning_rate = 3e-3;
  int epochs = 30;
  int episodes_per_epoch = 60;
  int u_max = 20;
  uint64_t seed = 42;
  Mode mode = Mode::kWW;
  OptimizerKind optimizer = OptimizerKind::kAdamW;
  double weight_decay = 0.0;
  double dropout = 0.1;
  WindowNorm window_norm = WindowNorm::kActual;
  bool scl_normalize = false;
  bool sf_scl_from_hs = false;  // contrast H_S rows instead of H rows
  int dev_episodes = 20;
};

// Throws ValidationError on out-of-range fields.
void validate_config(const TrainConfig& cfg);

// Disabled-term weights are forced to zero (oo: gamma=delta=0; wo: delta=0).
TrainConfig normalized(TrainConfig cfg);

// Weighted sum of the enabled loss parts, in order
// (ic_pn, sf_pn, ic_scl, sf_scl). Disabled parts are ignored entirely.
double total_loss(const std::array<double, 4>& parts, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double ic_pn = 0.0;
  double sf_pn = 0.0;
  std::optional<double> ic_scl;
  std::optional<double> sf_scl;
  double total = 0.0;
  std::optional<double> dev_ic_accuracy;
  std::optional<double> dev_sf_f1;
  long long skipped_queries = 0;    // IC-SCL queries with no positives
  long long skipped_tokens = 0;     // SF-SCL tokens excluded or unmatched
  long long unscorable_tokens = 0;  // gold slot label without a prototype
  double wall_time_ms = 0.0;        // not serialized; reports stay replayable
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
};

struct Model {
  ParamStore store;
  Vocab vocab;
  EncoderConfig enc;
  int window_half_width = 1;
  WindowNorm window_norm = WindowNorm::kActual;
};

Model init_model(const Corpus& train_split, const TrainConfig& cfg);

// Per-episode forward pass shared by training, prediction and export.
struct EpisodeForward {
  std::vector<LabeledNode> support_sentences;     // (intent, c node)
  std::vector<SlotTokenRef> support_slot_tokens;  // over H_S, for prototypes
  std::vector<PnQuery> queries;                   // gold-labeled query nodes
  std::vector<ContrastiveItem> support_z;         // (z node, intent)
  std::vector<ContrastiveItem> query_z;
  std::vector<TokenVec> support_scl_tokens;       // token-level SCL items
  std::vector<TokenVec> query_scl_tokens;
  std::vector<LabeledNode> intent_protos;
  std::vector<LabeledNode> slot_protos;
  int window_half_width = 1;  // copied from the model
  WindowNorm window_norm = WindowNorm::kActual;
};

EpisodeForward episode_forward(
    diff::Graph& g, Model& model, const Episode& episode,
    const std::map<std::string, std::vector<std::string>>& descriptions,
    const TrainConfig& cfg, bool training, Rng* dropout_rng, bool want_scl);

struct EpisodeLoss {
  diff::NodeRef node;
  std::array<double, 4> parts{};  // ic_pn, sf_pn, ic_scl, sf_scl values
  bool has_ic_scl = false;
  bool has_sf_scl = false;
  long long skipped_queries = 0;
  long long skipped_tokens = 0;
  long long unscorable_tokens = 0;
};

EpisodeLoss episode_loss(diff::Graph& g, const EpisodeForward& fwd,
                         const TrainConfig& cfg);

// Adaptive per-parameter steps with bias-corrected moments and decoupled
// weight decay, or plain SGD. Parameters with all-zero gradients are left
// untouched. Gradients are clipped to global norm 5 before the step.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, double weight_decay);
  void step(ParamStore& store, std::map<std::string, diff::Tensor> grads);

 private:
  struct Moments {
    diff::Tensor m, v;
    long long t = 0;
  };
  OptimizerKind kind_;
  double lr_, wd_;
  std::map<std::string, Moments> state_;
};

struct QueryExample {
  std::string gold_intent;
  const Utterance* utterance;
};

// Queries flattened in class_set order, then by index within the class.
std::vector<QueryExample> flatten_queries(const Episode& episode);

struct Prediction {
  std::string intent;
  std::vector<std::string> slots;
};

// Prototype argmax prediction; ties go to the earlier label in episode
// order. Contrastive terms are never evaluated here.
std::vector<Prediction> predict(
    Model& model, const Episode& episode,
    const std::map<std::string, std::vector<std::string>>& descriptions);

// Runs the episodic loop over the train split. When out_dir is nonempty,
// writes checkpoint_last.json each epoch, checkpoint_final.json at the end
// and checkpoint_best.json whenever the dev IC accuracy improves.
std::pair<Model, TrainReport> train(const SplitSet& splits,
                                    const TrainConfig& cfg,
                                    const std::string& out_dir = "");

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

// FNV-1a hash of the serialized parameter store; for determinism checks.
uint64_t model_checksum(const Model& model);

std::string train_report_to_jsonl(const TrainReport& report);

}  // namespace protojoint
