#include "protojoint/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "protojoint/eval.hpp"
#include "protojoint/interaction.hpp"
#include "protojoint/scl.hpp"

namespace protojoint {

namespace fs = std::filesystem;
using diff::Graph;
using diff::NodeRef;
using diff::Tensor;
using nlohmann::json;

Mode mode_from_string(const std::string& s) {
  if (s == "oo") return Mode::kOO;
  if (s == "wo") return Mode::kWO;
  if (s == "ww") return Mode::kWW;
  throw ValidationError("unknown mode '" + s + "' (expected oo, wo or ww)");
}

std::string mode_to_string(Mode m) {
  switch (m) {
    case Mode::kOO: return "oo";
    case Mode::kWO: return "wo";
    case Mode::kWW: return "ww";
  }
  return "?";
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.tau <= 0.0) throw ValidationError("tau must be positive");
  if (cfg.lambda < 0.0 || cfg.gamma < 0.0 || cfg.delta < 0.0) {
    throw ValidationError("loss weights must be nonnegative");
  }
  if (cfg.l < 0) throw ValidationError("window half-width l must be >= 0");
  if (cfg.d_h < 1 || cfg.d_w < 1) {
    throw ValidationError("d_h and d_w must be positive");
  }
  if (cfg.learning_rate < 0.0) {
    throw ValidationError("learning_rate must be nonnegative");
  }
  if (cfg.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (cfg.episodes_per_epoch < 1) {
    throw ValidationError("episodes_per_epoch must be >= 1");
  }
  if (cfg.u_max < 1) throw ValidationError("u_max must be >= 1");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
    throw ValidationError("dropout must be in [0, 1)");
  }
  if (cfg.dev_episodes < 0) {
    throw ValidationError("dev_episodes must be >= 0");
  }
}

TrainConfig normalized(TrainConfig cfg) {
  if (cfg.mode == Mode::kOO) {
    cfg.gamma = 0.0;
    cfg.delta = 0.0;
  } else if (cfg.mode == Mode::kWO) {
    cfg.delta = 0.0;
  }
  return cfg;
}

double total_loss(const std::array<double, 4>& parts, const TrainConfig& cfg) {
  double total = parts[0] + cfg.lambda * parts[1];
  if (cfg.mode != Mode::kOO) total += cfg.gamma * parts[2];
  if (cfg.mode == Mode::kWW) total += cfg.delta * parts[3];
  return total;
}

Model init_model(const Corpus& train_split, const TrainConfig& cfg) {
  Model model;
  model.vocab = Vocab::build(train_split);
  model.enc = EncoderConfig{cfg.d_w, cfg.d_h, cfg.dropout};
  model.window_half_width = cfg.l;
  model.window_norm = cfg.window_norm;
  Rng init_rng = Rng::derive(cfg.seed, "init");
  init_encoder_params(model.store, model.vocab, model.enc, init_rng);
  return model;
}

EpisodeForward episode_forward(
    Graph& g, Model& model, const Episode& episode,
    const std::map<std::string, std::vector<std::string>>& descriptions,
    const TrainConfig& cfg, bool training, Rng* dropout_rng, bool want_scl) {
  EpisodeForward fwd;
  fwd.window_half_width = model.window_half_width;
  fwd.window_norm = model.window_norm;

  NodeRef e_intent = label_matrix(g, model.store, model.enc, model.vocab,
                                  episode.class_set, descriptions, true);
  NodeRef e_slot = label_matrix(g, model.store, model.enc, model.vocab,
                                episode.slot_label_set, descriptions, false);

  bool want_ic_scl = want_scl && cfg.mode != Mode::kOO;
  bool want_sf_scl = want_scl && cfg.mode == Mode::kWW;

  auto process = [&](const Utterance& u, bool is_support,
                     const std::string& intent) {
    NodeRef H = encode(g, model.store, model.enc, model.vocab, u, training,
                       dropout_rng);
    NodeRef h_intent = intent_representation(g, H, e_slot);
    NodeRef h_slot = slot_representation(g, H, e_intent);
    NodeRef c = sentence_embedding(g, h_intent);

    if (is_support) {
      fwd.support_sentences.emplace_back(intent, c);
      for (size_t j = 0; j < u.slots.size(); ++j) {
        fwd.support_slot_tokens.push_back(
            {h_slot, static_cast<int>(j), u.slots[j]});
      }
    } else {
      fwd.queries.push_back({c, intent, h_slot, u.slots});
    }

    if (want_ic_scl) {
      NodeRef z = g.mean_rows(H);
      (is_support ? fwd.support_z : fwd.query_z).push_back({z, intent});
    }
    if (want_sf_scl) {
      NodeRef token_matrix = cfg.sf_scl_from_hs ? h_slot : H;
      auto& sink = is_support ? fwd.support_scl_tokens : fwd.query_scl_tokens;
      for (size_t j = 0; j < u.slots.size(); ++j) {
        sink.push_back({token_matrix, static_cast<int>(j), u.slots[j]});
      }
    }
  };

  for (const std::string& c : episode.class_set) {
    for (const Utterance& u : episode.support.at(c)) process(u, true, c);
  }
  for (const std::string& c : episode.class_set) {
    auto it = episode.query.find(c);
    if (it == episode.query.end()) continue;
    for (const Utterance& u : it->second) process(u, false, c);
  }

  fwd.intent_protos =
      intent_prototypes(g, fwd.support_sentences, episode.class_set);
  fwd.slot_protos =
      slot_prototypes(g, fwd.support_slot_tokens, fwd.window_half_width,
                      fwd.window_norm, episode.slot_label_set);
  return fwd;
}

EpisodeLoss episode_loss(Graph& g, const EpisodeForward& fwd,
                         const TrainConfig& cfg) {
  EpisodeLoss out;

  PnLosses pn = pn_losses(g, fwd.queries, fwd.intent_protos, fwd.slot_protos,
                          fwd.window_half_width, fwd.window_norm);
  out.unscorable_tokens = pn.unscorable_tokens;
  out.parts[0] = g.scalar_value(pn.ic);
  out.parts[1] = g.scalar_value(pn.sf);

  std::vector<NodeRef> terms = {pn.ic, g.scale(pn.sf, cfg.lambda)};

  if (cfg.mode != Mode::kOO) {
    SclLoss ic_scl = scl_loss(
        g, make_batch(fwd.query_z, fwd.support_z, cfg.tau, cfg.scl_normalize));
    out.has_ic_scl = true;
    out.parts[2] = g.scalar_value(ic_scl.node);
    out.skipped_queries = ic_scl.skipped;
    terms.push_back(g.scale(ic_scl.node, cfg.gamma));
  }
  if (cfg.mode == Mode::kWW) {
    SclLoss sf_scl = sf_scl_loss(g, fwd.query_scl_tokens,
                                 fwd.support_scl_tokens, cfg.tau,
                                 cfg.scl_normalize);
    out.has_sf_scl = true;
    out.parts[3] = g.scalar_value(sf_scl.node);
    out.skipped_tokens = sf_scl.skipped;
    terms.push_back(g.scale(sf_scl.node, cfg.delta));
  }

  out.node = g.add_n(terms);
  return out;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate,
                     double weight_decay)
    : kind_(kind), lr_(learning_rate), wd_(weight_decay) {}

void Optimizer::step(ParamStore& store,
                     std::map<std::string, Tensor> grads) {
  constexpr double kClipNorm = 5.0;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (double x : g.v) sq += x * x;
  }
  double norm = std::sqrt(sq);
  double clip = norm > kClipNorm ? kClipNorm / norm : 1.0;

  for (auto& [name, g] : grads) {
    bool all_zero = true;
    for (double x : g.v) {
      if (x != 0.0) {
        all_zero = false;
        break;
      }
    }
    if (all_zero) continue;

    Tensor& theta = store.value(name);
    if (kind_ == OptimizerKind::kSgd) {
      for (size_t k = 0; k < theta.v.size(); ++k) {
        theta.v[k] -= lr_ * (clip * g.v[k] + wd_ * theta.v[k]);
      }
      continue;
    }

    Moments& st = state_[name];
    if (st.m.v.empty()) {
      st.m = Tensor(theta.rows, theta.cols);
      st.v = Tensor(theta.rows, theta.cols);
    }
    ++st.t;
    double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(st.t));
    double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(st.t));
    for (size_t k = 0; k < theta.v.size(); ++k) {
      double gk = clip * g.v[k];
      st.m.v[k] = kBeta1 * st.m.v[k] + (1.0 - kBeta1) * gk;
      st.v.v[k] = kBeta2 * st.v.v[k] + (1.0 - kBeta2) * gk * gk;
      double m_hat = st.m.v[k] / bc1;
      double v_hat = st.v.v[k] / bc2;
      theta.v[k] -=
          lr_ * (m_hat / (std::sqrt(v_hat) + kEps) + wd_ * theta.v[k]);
    }
  }
}

std::vector<QueryExample> flatten_queries(const Episode& episode) {
  std::vector<QueryExample> out;
  for (const std::string& c : episode.class_set) {
    auto it = episode.query.find(c);
    if (it == episode.query.end()) continue;
    for (const Utterance& u : it->second) out.push_back({c, &u});
  }
  return out;
}

std::vector<Prediction> predict(
    Model& model, const Episode& episode,
    const std::map<std::string, std::vector<std::string>>& descriptions) {
  Graph g;
  EpisodeForward fwd = episode_forward(g, model, episode, descriptions,
                                       TrainConfig{}, /*training=*/false,
                                       nullptr, /*want_scl=*/false);

  auto argmax_first = [](const std::vector<LabeledNode>& order,
                         const std::map<std::string, double>& probs) {
    std::string best;
    double best_p = -1.0;
    for (const auto& [label, node] : order) {
      double p = probs.at(label);
      if (p > best_p) {
        best_p = p;
        best = label;
      }
    }
    return best;
  };

  std::vector<Prediction> out;
  for (const PnQuery& q : fwd.queries) {
    Prediction pred;
    pred.intent = argmax_first(
        fwd.intent_protos, intent_posterior(g, q.sentence, fwd.intent_protos));
    int t_len = static_cast<int>(q.slots.size());
    for (int j = 0; j < t_len; ++j) {
      NodeRef repr = windowed_token_repr(g, q.tokens, j, fwd.window_half_width,
                                         fwd.window_norm);
      pred.slots.push_back(argmax_first(
          fwd.slot_protos, slot_posterior(g, repr, fwd.slot_protos)));
    }
    out.push_back(std::move(pred));
  }
  return out;
}

namespace {

json tensor_to_json(const Tensor& t) {
  return json{{"rows", t.rows}, {"cols", t.cols}, {"values", t.v}};
}

Tensor tensor_from_json(const json& j) {
  Tensor t(j.at("rows").get<int>(), j.at("cols").get<int>());
  t.v = j.at("values").get<std::vector<double>>();
  if (static_cast<int>(t.v.size()) != t.size()) {
    throw ValidationError("checkpoint tensor has wrong value count");
  }
  return t;
}

std::string checkpoint_json(const Model& model) {
  json j;
  j["format"] = "protojoint-checkpoint";
  j["version"] = 1;
  j["d_w"] = model.enc.d_w;
  j["d_h"] = model.enc.d_h;
  j["dropout"] = model.enc.dropout;
  j["window_half_width"] = model.window_half_width;
  j["window_norm"] =
      model.window_norm == WindowNorm::kActual ? "actual" : "fixed";
  j["vocab"] = model.vocab.tokens;
  json params = json::object();
  for (const auto& [name, t] : model.store.all()) {
    params[name] = tensor_to_json(t);
  }
  j["params"] = params;
  return j.dump();
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << checkpoint_json(model) << "\n";
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint '" + path + "'");
  json j = json::parse(in);
  if (j.value("format", "") != "protojoint-checkpoint") {
    throw ValidationError("'" + path + "' is not a protojoint checkpoint");
  }
  Model model;
  model.enc.d_w = j.at("d_w").get<int>();
  model.enc.d_h = j.at("d_h").get<int>();
  model.enc.dropout = j.at("dropout").get<double>();
  model.window_half_width = j.at("window_half_width").get<int>();
  model.window_norm = j.at("window_norm").get<std::string>() == "fixed"
                          ? WindowNorm::kFixed
                          : WindowNorm::kActual;
  for (const auto& tok : j.at("vocab")) {
    model.vocab.add(tok.get<std::string>());
  }
  for (auto& [name, tj] : j.at("params").items()) {
    model.store.create(name, tensor_from_json(tj));
  }
  return model;
}

uint64_t model_checksum(const Model& model) {
  std::string s = checkpoint_json(model);
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string train_report_to_jsonl(const TrainReport& report) {
  std::string out;
  for (const EpochRecord& r : report.epochs) {
    json j;
    j["epoch"] = r.epoch;
    j["ic_pn"] = r.ic_pn;
    j["sf_pn"] = r.sf_pn;
    if (r.ic_scl) j["ic_scl"] = *r.ic_scl;
    if (r.sf_scl) j["sf_scl"] = *r.sf_scl;
    j["total"] = r.total;
    if (r.dev_ic_accuracy) j["dev_ic_accuracy"] = *r.dev_ic_accuracy;
    if (r.dev_sf_f1) j["dev_sf_f1"] = *r.dev_sf_f1;
    j["skipped_queries"] = r.skipped_queries;
    j["skipped_tokens"] = r.skipped_tokens;
    j["unscorable_tokens"] = r.unscorable_tokens;
    out += j.dump();
    out += "\n";
  }
  return out;
}

std::pair<Model, TrainReport> train(const SplitSet& splits,
                                    const TrainConfig& raw_cfg,
                                    const std::string& out_dir) {
  TrainConfig cfg = normalized(raw_cfg);
  validate_config(cfg);

  Model model = init_model(splits.train, cfg);
  Optimizer opt(cfg.optimizer, cfg.learning_rate, cfg.weight_decay);
  SamplerConfig sampler_cfg{cfg.u_max, cfg.seed, 1};
  bool have_dev = !splits.dev.utterances.empty() && cfg.dev_episodes > 0;

  TrainReport report;
  double best_dev = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    double ic_scl_sum = 0.0, sf_scl_sum = 0.0;
    bool saw_ic_scl = false, saw_sf_scl = false;

    for (int i = 0; i < cfg.episodes_per_epoch; ++i) {
      uint64_t global = static_cast<uint64_t>(epoch - 1) *
                            static_cast<uint64_t>(cfg.episodes_per_epoch) +
                        static_cast<uint64_t>(i);
      Episode episode = sample_episode_indexed(splits.train, sampler_cfg,
                                               global);
      Rng dropout_rng = Rng::derive(cfg.seed, "dropout", global);

      Graph g;
      EpisodeForward fwd =
          episode_forward(g, model, episode, splits.train.descriptions, cfg,
                          /*training=*/true, &dropout_rng, /*want_scl=*/true);
      EpisodeLoss loss = episode_loss(g, fwd, cfg);

      double value = g.scalar_value(loss.node);
      if (!std::isfinite(value)) {
        throw std::runtime_error(
            "non-finite loss at epoch " + std::to_string(epoch) +
            ", episode " + std::to_string(i) +
            "; seed_trace for replay: " + episode_to_json(episode));
      }

      opt.step(model.store, g.gradients(loss.node));

      rec.ic_pn += loss.parts[0];
      rec.sf_pn += loss.parts[1];
      if (loss.has_ic_scl) {
        ic_scl_sum += loss.parts[2];
        saw_ic_scl = true;
      }
      if (loss.has_sf_scl) {
        sf_scl_sum += loss.parts[3];
        saw_sf_scl = true;
      }
      rec.total += value;
      rec.skipped_queries += loss.skipped_queries;
      rec.skipped_tokens += loss.skipped_tokens;
      rec.unscorable_tokens += loss.unscorable_tokens;
    }

    double n = static_cast<double>(cfg.episodes_per_epoch);
    rec.ic_pn /= n;
    rec.sf_pn /= n;
    rec.total /= n;
    if (saw_ic_scl) rec.ic_scl = ic_scl_sum / n;
    if (saw_sf_scl) rec.sf_scl = sf_scl_sum / n;

    if (have_dev) {
      // Evaluate on a throwaway copy so dev label rows stay out of the
      // trained store and are re-derived from fresh encoder weights.
      Model probe = model;
      EvalReport dev = run_test_episodes(
          probe, splits.dev, cfg.dev_episodes, cfg.u_max,
          Rng::derive(cfg.seed, "dev", static_cast<uint64_t>(epoch)).next());
      rec.dev_ic_accuracy = dev.ic_accuracy_mean;
      rec.dev_sf_f1 = dev.sf_f1_span_mean;
      if (!out_dir.empty() && dev.ic_accuracy_mean > best_dev) {
        best_dev = dev.ic_accuracy_mean;
        save_checkpoint(model, (fs::path(out_dir) / "checkpoint_best.json")
                                   .string());
      }
    }

    rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    report.epochs.push_back(std::move(rec));

    if (!out_dir.empty()) {
      save_checkpoint(model,
                      (fs::path(out_dir) / "checkpoint_last.json").string());
    }
  }

  if (!out_dir.empty()) {
    save_checkpoint(model,
                    (fs::path(out_dir) / "checkpoint_final.json").string());
    std::ofstream rout(fs::path(out_dir) / "report.jsonl");
    rout << train_report_to_jsonl(report);
  }
  return {std::move(model), std::move(report)};
}

}  // namespace protojoint
