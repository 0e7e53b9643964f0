#include "protojoint/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "protojoint/interaction.hpp"

namespace protojoint {

namespace fs = std::filesystem;
using diff::Graph;
using diff::NodeRef;
using nlohmann::json;

std::vector<Span> decode_bio(const std::vector<std::string>& labels) {
  std::vector<Span> spans;
  Span cur;
  bool open = false;
  auto close = [&] {
    if (open) spans.push_back(cur);
    open = false;
  };
  for (int j = 0; j < static_cast<int>(labels.size()); ++j) {
    const std::string& s = labels[static_cast<size_t>(j)];
    if (s == "O" || s.size() < 3) {
      close();
      continue;
    }
    std::string type = s.substr(2);
    if (s[0] == 'B') {
      close();
      cur = {type, j, j + 1};
      open = true;
    } else {  // I-
      if (open && cur.type == type) {
        cur.end = j + 1;
      } else {
        close();
        cur = {type, j, j + 1};  // repair: treat as a new span
        open = true;
      }
    }
  }
  close();
  return spans;
}

std::vector<std::string> encode_bio(const std::vector<Span>& spans,
                                    int length) {
  std::vector<std::string> out(static_cast<size_t>(length), "O");
  for (const Span& sp : spans) {
    for (int j = sp.start; j < sp.end; ++j) {
      out[static_cast<size_t>(j)] =
          (j == sp.start ? "B-" : "I-") + sp.type;
    }
  }
  return out;
}

double ic_accuracy(const std::vector<std::string>& predicted,
                   const std::vector<std::string>& gold) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("prediction/gold count mismatch");
  }
  if (gold.empty()) return 0.0;
  int hit = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] == gold[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

void count_span_matches(const std::vector<std::string>& predicted,
                        const std::vector<std::string>& gold, F1Counts& out) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("prediction/gold length mismatch");
  }
  std::vector<Span> pred_spans = decode_bio(predicted);
  std::vector<Span> gold_spans = decode_bio(gold);
  for (const Span& p : pred_spans) {
    if (std::find(gold_spans.begin(), gold_spans.end(), p) !=
        gold_spans.end()) {
      ++out.tp;
    } else {
      ++out.fp;
    }
  }
  for (const Span& g : gold_spans) {
    if (std::find(pred_spans.begin(), pred_spans.end(), g) ==
        pred_spans.end()) {
      ++out.fn;
    }
  }
}

void count_token_matches(const std::vector<std::string>& predicted,
                         const std::vector<std::string>& gold, F1Counts& out) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("prediction/gold length mismatch");
  }
  for (size_t j = 0; j < gold.size(); ++j) {
    bool gold_entity = gold[j] != "O";
    bool pred_entity = predicted[j] != "O";
    if (gold_entity && predicted[j] == gold[j]) {
      ++out.tp;
    } else {
      if (pred_entity) ++out.fp;
      if (gold_entity) ++out.fn;
    }
  }
}

std::pair<double, double> sf_f1(
    const std::vector<std::vector<std::string>>& predicted,
    const std::vector<std::vector<std::string>>& gold) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("prediction/gold count mismatch");
  }
  F1Counts spans, tokens;
  for (size_t i = 0; i < gold.size(); ++i) {
    count_span_matches(predicted[i], gold[i], spans);
    count_token_matches(predicted[i], gold[i], tokens);
  }
  return {spans.f1(), tokens.f1()};
}

std::string eval_report_to_json(const EvalReport& r) {
  json j;
  j["episodes"] = r.episodes;
  j["ic_accuracy"] = {{"mean", r.ic_accuracy_mean}, {"std", r.ic_accuracy_std}};
  j["sf_f1_span"] = {{"mean", r.sf_f1_span_mean}, {"std", r.sf_f1_span_std}};
  j["sf_f1_token"] = {{"mean", r.sf_f1_token_mean},
                      {"std", r.sf_f1_token_std}};
  j["unscorable_tokens"] = r.unscorable_tokens;
  return j.dump(2);
}

namespace {

struct MeanStd {
  double mean = 0.0, sd = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - out.mean) * (x - out.mean);
  var /= static_cast<double>(xs.size());
  out.sd = std::sqrt(std::max(0.0, var));
  return out;
}

}  // namespace

EvalReport run_test_episodes(Model& model, const Corpus& test_split,
                             int n_episodes, int u_max, uint64_t seed) {
  if (n_episodes < 1) throw ValidationError("episodes must be >= 1");
  SamplerConfig sampler_cfg{u_max, seed, n_episodes};

  std::vector<double> accs, span_f1s, token_f1s;
  long long unscorable = 0;

  for (int e = 0; e < n_episodes; ++e) {
    Episode episode = sample_episode_indexed(test_split, sampler_cfg,
                                             static_cast<uint64_t>(e));
    std::vector<QueryExample> golds = flatten_queries(episode);
    std::vector<Prediction> preds =
        predict(model, episode, test_split.descriptions);

    std::set<std::string> support_slot_labels;
    for (const auto& [c, utts] : episode.support) {
      for (const Utterance& u : utts) {
        support_slot_labels.insert(u.slots.begin(), u.slots.end());
      }
    }

    std::vector<std::string> gold_intents, pred_intents;
    std::vector<std::vector<std::string>> gold_slots, pred_slots;
    for (size_t i = 0; i < golds.size(); ++i) {
      gold_intents.push_back(golds[i].gold_intent);
      pred_intents.push_back(preds[i].intent);
      gold_slots.push_back(golds[i].utterance->slots);
      pred_slots.push_back(preds[i].slots);
      for (const std::string& s : golds[i].utterance->slots) {
        if (!support_slot_labels.count(s)) ++unscorable;
      }
    }

    accs.push_back(ic_accuracy(pred_intents, gold_intents));
    auto [span, token] = sf_f1(pred_slots, gold_slots);
    span_f1s.push_back(span);
    token_f1s.push_back(token);
  }

  EvalReport report;
  report.episodes = n_episodes;
  MeanStd a = mean_std(accs);
  report.ic_accuracy_mean = a.mean;
  report.ic_accuracy_std = a.sd;
  MeanStd s = mean_std(span_f1s);
  report.sf_f1_span_mean = s.mean;
  report.sf_f1_span_std = s.sd;
  MeanStd t = mean_std(token_f1s);
  report.sf_f1_token_mean = t.mean;
  report.sf_f1_token_std = t.sd;
  report.unscorable_tokens = unscorable;
  return report;
}

std::vector<AblationResult> ablate(const SplitSet& splits,
                                   const TrainConfig& base, int eval_episodes,
                                   uint64_t eval_seed,
                                   const std::string& out_dir) {
  std::vector<AblationResult> results;
  for (Mode mode : {Mode::kOO, Mode::kWO, Mode::kWW}) {
    TrainConfig cfg = base;
    cfg.mode = mode;
    std::string mode_dir;
    if (!out_dir.empty()) {
      mode_dir = (fs::path(out_dir) / mode_to_string(mode)).string();
      fs::create_directories(mode_dir);
    }
    auto [model, train_report] = train(splits, cfg, mode_dir);
    EvalReport report = run_test_episodes(model, splits.test, eval_episodes,
                                          cfg.u_max, eval_seed);
    if (!mode_dir.empty()) {
      std::ofstream out(fs::path(mode_dir) / "eval_report.json");
      out << eval_report_to_json(report) << "\n";
    }
    results.push_back({mode, report, train_report});
  }

  if (!out_dir.empty()) {
    json j = json::array();
    for (const AblationResult& r : results) {
      j.push_back({{"mode", mode_to_string(r.mode)},
                   {"ic_accuracy_mean", r.report.ic_accuracy_mean},
                   {"ic_accuracy_std", r.report.ic_accuracy_std},
                   {"sf_f1_span_mean", r.report.sf_f1_span_mean},
                   {"sf_f1_span_std", r.report.sf_f1_span_std}});
    }
    std::ofstream out(fs::path(out_dir) / "ablation.json");
    out << j.dump(2) << "\n";
  }
  return results;
}

std::string ablation_table(const std::vector<AblationResult>& results) {
  std::ostringstream out;
  out << "mode  ic_acc(mean+/-std)   sf_span_f1(mean+/-std)\n";
  for (const AblationResult& r : results) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-4s  %.4f +/- %.4f    %.4f +/- %.4f\n",
                  mode_to_string(r.mode).c_str(), r.report.ic_accuracy_mean,
                  r.report.ic_accuracy_std, r.report.sf_f1_span_mean,
                  r.report.sf_f1_span_std);
    out << line;
  }
  return out.str();
}

void export_embeddings(
    Model& model, const std::vector<Episode>& episodes,
    const std::map<std::string, std::vector<std::string>>& descriptions,
    const std::string& out_path) {
  std::ofstream out(out_path);
  if (!out) {
    throw std::runtime_error("cannot write embeddings file '" + out_path +
                             "'");
  }
  for (size_t e = 0; e < episodes.size(); ++e) {
    const Episode& episode = episodes[e];
    Graph g;
    NodeRef e_slot = label_matrix(g, model.store, model.enc, model.vocab,
                                  episode.slot_label_set, descriptions, false);

    auto emit = [&](const Utterance& u, const std::string& intent,
                    const std::string& role, int idx) {
      NodeRef H = encode(g, model.store, model.enc, model.vocab, u);
      NodeRef z = g.mean_rows(H);
      NodeRef c = sentence_embedding(g, intent_representation(g, H, e_slot));
      json j;
      j["id"] = "ep" + std::to_string(e) + ":" + role + ":" + intent + ":" +
                std::to_string(idx);
      j["intent"] = intent;
      j["z"] = g.value(z).v;
      j["c"] = g.value(c).v;
      out << j.dump() << "\n";
    };

    for (const std::string& c : episode.class_set) {
      auto sit = episode.support.find(c);
      if (sit != episode.support.end()) {
        for (size_t i = 0; i < sit->second.size(); ++i) {
          emit(sit->second[i], c, "s", static_cast<int>(i));
        }
      }
      auto qit = episode.query.find(c);
      if (qit != episode.query.end()) {
        for (size_t i = 0; i < qit->second.size(); ++i) {
          emit(qit->second[i], c, "q", static_cast<int>(i));
        }
      }
    }
  }
}

}  // namespace protojoint
