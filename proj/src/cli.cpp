#include "protojoint/cli.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "protojoint/config.hpp"
#include "protojoint/demo.hpp"
#include "protojoint/eval.hpp"

namespace protojoint {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Every run leaves exactly one manifest next to its outputs.
struct Manifest {
  std::string command;
  json config = json::object();
  json seeds = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started_at = iso_now();

  void write(const std::string& path) const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["seeds"] = seeds;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["version"] = kVersion;
    j["started_at"] = started_at;
    j["finished_at"] = iso_now();
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("cannot write manifest '" + path + "'");
    }
    out << j.dump(2) << "\n";
  }
};

std::string sibling_manifest(const std::string& file_path) {
  return file_path + ".manifest.json";
}

std::array<double, 3> parse_fractions(const std::string& text) {
  std::array<double, 3> out{};
  std::istringstream ss(text);
  std::string part;
  int i = 0;
  while (std::getline(ss, part, ',')) {
    if (i >= 3) throw ValidationError("--split expects three fractions");
    try {
      out[static_cast<size_t>(i)] = std::stod(part);
    } catch (const std::exception&) {
      throw ValidationError("bad split fraction '" + part + "'");
    }
    ++i;
  }
  if (i != 3) throw ValidationError("--split expects three fractions");
  return out;
}

const Corpus& pick_subset(const SplitSet& splits, const std::string& name) {
  if (name == "train") return splits.train;
  if (name == "dev") return splits.dev;
  if (name == "test") return splits.test;
  throw ValidationError("unknown subset '" + name +
                        "' (expected train, dev or test)");
}

std::string resolve_checkpoint(const std::string& model_dir) {
  for (const char* name : {"checkpoint_best.json", "checkpoint_final.json",
                           "checkpoint_last.json"}) {
    fs::path p = fs::path(model_dir) / name;
    if (fs::exists(p)) return p.string();
  }
  throw ValidationError("no checkpoint found in '" + model_dir + "'");
}

// Options shared by train and ablate; collected as string overrides so
// file < flag precedence stays in one place (parse_train_config).
struct TrainFlags {
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    static const std::vector<std::pair<std::string, std::string>> kFlags = {
        {"--lambda", "lambda"},
        {"--gamma", "gamma"},
        {"--delta", "delta"},
        {"--tau", "tau"},
        {"--l", "l"},
        {"--d-h", "d_h"},
        {"--d-w", "d_w"},
        {"--learning-rate", "learning_rate"},
        {"--epochs", "epochs"},
        {"--episodes-per-epoch", "episodes_per_epoch"},
        {"--u-max", "u_max"},
        {"--seed", "seed"},
        {"--mode", "mode"},
        {"--optimizer", "optimizer"},
        {"--weight-decay", "weight_decay"},
        {"--dropout", "dropout"},
        {"--window-norm", "window_norm"},
        {"--scl-normalize", "scl_normalize"},
        {"--sf-scl-source", "sf_scl_source"},
        {"--dev-episodes", "dev_episodes"},
    };
    for (const auto& [flag, key] : kFlags) {
      std::string k = key;
      cmd->add_option_function<std::string>(
          flag, [this, k](const std::string& v) { values[k] = v; });
    }
  }
};

json config_json(const TrainConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : config_to_map(cfg)) j[k] = v;
  return j;
}

int run_ingest(const std::string& corpus_path, const std::string& desc_path,
               bool prefix, const std::string& split_text, uint64_t seed,
               const std::string& out_dir) {
  Manifest manifest;
  manifest.command = "ingest";

  Corpus corpus = load_corpus(corpus_path);
  manifest.inputs.push_back(corpus_path);
  if (!desc_path.empty()) {
    std::ifstream din(desc_path);
    if (!din) {
      throw ValidationError("cannot open descriptions file '" + desc_path +
                            "'");
    }
    json d = json::parse(din);
    std::map<std::string, std::string> overrides;
    for (auto& [label, text] : d.items()) {
      overrides[label] = text.get<std::string>();
    }
    apply_descriptions(corpus, overrides);
    manifest.inputs.push_back(desc_path);
  }
  if (prefix) corpus = prefix_slot_labels(corpus);

  std::array<double, 3> fractions = parse_fractions(split_text);
  SplitSet splits = split_by_intent(corpus, fractions, seed);
  fs::create_directories(out_dir);
  save_splitset(splits, out_dir);

  manifest.config = {{"corpus", corpus_path},
                     {"descriptions", desc_path},
                     {"prefix_slots", prefix},
                     {"split", split_text}};
  manifest.seeds = {{"split", seed}};
  for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl",
                        "descriptions.json", "meta.json"}) {
    manifest.outputs.push_back((fs::path(out_dir) / f).string());
  }
  manifest.write((fs::path(out_dir) / "manifest.json").string());

  std::cout << "ingested " << corpus.utterances.size() << " utterances; "
            << "train/dev/test intents: " << splits.train.intent_inventory.size()
            << "/" << splits.dev.intent_inventory.size() << "/"
            << splits.test.intent_inventory.size() << "\n";
  return 0;
}

int run_sample(const std::string& split_dir, const std::string& subset,
               int u_max, int episodes, uint64_t seed,
               const std::string& out_file) {
  Manifest manifest;
  manifest.command = "sample";
  manifest.inputs.push_back(split_dir);

  SplitSet splits = load_splitset(split_dir);
  const Corpus& corpus = pick_subset(splits, subset);
  SamplerConfig cfg{u_max, seed, episodes};

  std::ofstream out(out_file);
  if (!out) throw std::runtime_error("cannot write '" + out_file + "'");
  for (int i = 0; i < episodes; ++i) {
    Episode ep = sample_episode_indexed(corpus, cfg,
                                        static_cast<uint64_t>(i));
    out << episode_to_json(ep) << "\n";
  }

  manifest.config = {{"subset", subset},
                     {"u_max", u_max},
                     {"episodes", episodes},
                     {"retry_policy", "redraw up to 20 times on k_q=0"}};
  manifest.seeds = {{"sampler", seed}};
  manifest.outputs.push_back(out_file);
  manifest.write(sibling_manifest(out_file));

  std::cout << "wrote " << episodes << " episodes to " << out_file << "\n";
  return 0;
}

int run_train(const std::string& split_dir, const std::string& config_path,
              const TrainFlags& flags, const std::string& out_dir) {
  TrainConfig cfg = parse_train_config(config_path, flags.values);
  SplitSet splits = load_splitset(split_dir);
  fs::create_directories(out_dir);

  Manifest manifest;
  manifest.command = "train";
  manifest.inputs.push_back(split_dir);
  if (!config_path.empty()) manifest.inputs.push_back(config_path);
  manifest.config = config_json(cfg);
  manifest.seeds = {{"master", cfg.seed}};

  auto [model, report] = train(splits, cfg, out_dir);

  for (const EpochRecord& r : report.epochs) {
    std::cout << "epoch " << r.epoch << ": total " << r.total << " (ic_pn "
              << r.ic_pn << ", sf_pn " << r.sf_pn;
    if (r.ic_scl) std::cout << ", ic_scl " << *r.ic_scl;
    if (r.sf_scl) std::cout << ", sf_scl " << *r.sf_scl;
    std::cout << ")";
    if (r.dev_ic_accuracy) {
      std::cout << " dev_acc " << *r.dev_ic_accuracy << " dev_f1 "
                << *r.dev_sf_f1;
    }
    std::cout << " [" << r.wall_time_ms << " ms]\n";
  }

  manifest.outputs.push_back(
      (fs::path(out_dir) / "checkpoint_final.json").string());
  manifest.outputs.push_back((fs::path(out_dir) / "report.jsonl").string());
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  return 0;
}

int run_evaluate(const std::string& model_dir, const std::string& split_dir,
                 const std::string& subset, int episodes, int u_max,
                 uint64_t seed, std::string out_file) {
  std::string ckpt = resolve_checkpoint(model_dir);
  Model model = load_checkpoint(ckpt);
  SplitSet splits = load_splitset(split_dir);
  const Corpus& corpus = pick_subset(splits, subset);
  if (corpus.utterances.empty()) {
    throw ValidationError("subset '" + subset + "' of '" + split_dir +
                          "' is empty");
  }

  EvalReport report = run_test_episodes(model, corpus, episodes, u_max, seed);
  std::string text = eval_report_to_json(report);
  std::cout << text << "\n";

  if (out_file.empty()) {
    out_file = (fs::path(model_dir) / "eval_report.json").string();
  }
  std::ofstream out(out_file);
  out << text << "\n";

  Manifest manifest;
  manifest.command = "evaluate";
  manifest.inputs = {ckpt, split_dir};
  manifest.config = {{"subset", subset},
                     {"episodes", episodes},
                     {"u_max", u_max}};
  manifest.seeds = {{"eval", seed}};
  manifest.outputs.push_back(out_file);
  manifest.write(sibling_manifest(out_file));
  return 0;
}

int run_ablate(const std::string& split_dir, const std::string& config_path,
               const TrainFlags& flags, int eval_episodes, uint64_t eval_seed,
               const std::string& out_dir) {
  TrainConfig base = parse_train_config(config_path, flags.values);
  SplitSet splits = load_splitset(split_dir);
  fs::create_directories(out_dir);

  Manifest manifest;
  manifest.command = "ablate";
  manifest.inputs.push_back(split_dir);
  manifest.config = config_json(base);
  manifest.config["eval_episodes"] = eval_episodes;
  manifest.seeds = {{"master", base.seed}, {"eval", eval_seed}};

  auto results = ablate(splits, base, eval_episodes, eval_seed, out_dir);
  std::cout << ablation_table(results);

  manifest.outputs.push_back((fs::path(out_dir) / "ablation.json").string());
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  return 0;
}

int run_export(const std::string& model_dir, const std::string& split_dir,
               const std::string& subset, int episodes, int u_max,
               uint64_t seed, const std::string& out_file) {
  std::string ckpt = resolve_checkpoint(model_dir);
  Model model = load_checkpoint(ckpt);
  SplitSet splits = load_splitset(split_dir);
  const Corpus& corpus = pick_subset(splits, subset);

  SamplerConfig cfg{u_max, seed, episodes};
  std::vector<Episode> eps;
  for (int i = 0; i < episodes; ++i) {
    eps.push_back(sample_episode_indexed(corpus, cfg,
                                         static_cast<uint64_t>(i)));
  }
  export_embeddings(model, eps, corpus.descriptions, out_file);

  Manifest manifest;
  manifest.command = "export-embeddings";
  manifest.inputs = {ckpt, split_dir};
  manifest.config = {{"subset", subset},
                     {"episodes", episodes},
                     {"u_max", u_max}};
  manifest.seeds = {{"sampler", seed}};
  manifest.outputs.push_back(out_file);
  manifest.write(sibling_manifest(out_file));

  std::cout << "exported embeddings for " << episodes << " episodes to "
            << out_file << "\n";
  return 0;
}

int run_demo(uint64_t seed, const std::string& out_dir) {
  Corpus corpus = generate_demo_corpus(seed);
  fs::create_directories(out_dir);
  std::string path = (fs::path(out_dir) / "corpus.jsonl").string();
  save_corpus(corpus, path);

  Manifest manifest;
  manifest.command = "demo";
  manifest.config = {{"intents", corpus.intent_inventory.size()},
                     {"utterances", corpus.utterances.size()}};
  manifest.seeds = {{"demo", seed}};
  manifest.outputs.push_back(path);
  manifest.write((fs::path(out_dir) / "manifest.json").string());

  std::cout << "wrote " << corpus.utterances.size() << " utterances ("
            << corpus.intent_inventory.size() << " intents) to " << path
            << "\n";
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"protojoint: episodic joint intent/slot few-shot learner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // ingest
  auto* ingest = app.add_subcommand("ingest", "load, prefix and split a corpus");
  std::string in_corpus, in_desc, in_split = "0.7,0.15,0.15", in_out;
  bool in_prefix = false;
  uint64_t in_seed = 42;
  ingest->add_option("--corpus", in_corpus)->required();
  ingest->add_option("--descriptions", in_desc);
  ingest->add_flag("--prefix-slots", in_prefix);
  ingest->add_option("--split", in_split);
  ingest->add_option("--seed", in_seed);
  ingest->add_option("--out", in_out)->required();

  // sample
  auto* sample = app.add_subcommand("sample", "write episodes as JSON lines");
  std::string sa_split, sa_subset = "train", sa_out;
  int sa_umax = 20, sa_episodes = 100;
  uint64_t sa_seed = 42;
  sample->add_option("--split", sa_split)->required();
  sample->add_option("--subset", sa_subset);
  sample->add_option("--u-max", sa_umax);
  sample->add_option("--episodes", sa_episodes);
  sample->add_option("--seed", sa_seed);
  sample->add_option("--out", sa_out)->required();

  // train
  auto* tr = app.add_subcommand("train", "episodic training");
  std::string tr_split, tr_config, tr_out;
  TrainFlags tr_flags;
  tr->add_option("--split", tr_split)->required();
  tr->add_option("--config", tr_config);
  tr->add_option("--out", tr_out)->required();
  tr_flags.attach(tr);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "IC accuracy and SF F1 over test episodes");
  std::string ev_model, ev_split, ev_subset = "test", ev_out;
  int ev_episodes = 100, ev_umax = 20;
  uint64_t ev_seed = 7;
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--split", ev_split)->required();
  ev->add_option("--subset", ev_subset);
  ev->add_option("--episodes", ev_episodes);
  ev->add_option("--u-max", ev_umax);
  ev->add_option("--seed", ev_seed);
  ev->add_option("--out", ev_out);

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and evaluate modes oo, wo, ww");
  std::string ab_split, ab_config, ab_out;
  TrainFlags ab_flags;
  int ab_eval_episodes = 50;
  uint64_t ab_eval_seed = 7;
  ab->add_option("--split", ab_split)->required();
  ab->add_option("--config", ab_config);
  ab->add_option("--out", ab_out)->required();
  ab->add_option("--eval-episodes", ab_eval_episodes);
  ab->add_option("--eval-seed", ab_eval_seed);
  ab_flags.attach(ab);

  // export-embeddings
  auto* ex = app.add_subcommand("export-embeddings",
                                "write sentence embeddings as JSON lines");
  std::string ex_model, ex_split, ex_subset = "test", ex_out;
  int ex_episodes = 10, ex_umax = 20;
  uint64_t ex_seed = 7;
  ex->add_option("--model", ex_model)->required();
  ex->add_option("--split", ex_split)->required();
  ex->add_option("--subset", ex_subset);
  ex->add_option("--episodes", ex_episodes);
  ex->add_option("--u-max", ex_umax);
  ex->add_option("--seed", ex_seed);
  ex->add_option("--out", ex_out)->required();

  // demo
  auto* demo = app.add_subcommand("demo", "emit the bundled synthetic corpus");
  std::string demo_out;
  uint64_t demo_seed = 13;
  demo->add_option("--out", demo_out)->required();
  demo->add_option("--seed", demo_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (ingest->parsed()) {
      return run_ingest(in_corpus, in_desc, in_prefix, in_split, in_seed,
                        in_out);
    }
    if (sample->parsed()) {
      return run_sample(sa_split, sa_subset, sa_umax, sa_episodes, sa_seed,
                        sa_out);
    }
    if (tr->parsed()) return run_train(tr_split, tr_config, tr_flags, tr_out);
    if (ev->parsed()) {
      return run_evaluate(ev_model, ev_split, ev_subset, ev_episodes, ev_umax,
                          ev_seed, ev_out);
    }
    if (ab->parsed()) {
      return run_ablate(ab_split, ab_config, ab_flags, ab_eval_episodes,
                        ab_eval_seed, ab_out);
    }
    if (ex->parsed()) {
      return run_export(ex_model, ex_split, ex_subset, ex_episodes, ex_umax,
                        ex_seed, ex_out);
    }
    if (demo->parsed()) return run_demo(demo_seed, demo_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace protojoint
