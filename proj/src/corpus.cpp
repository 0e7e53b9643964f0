#include "protojoint/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "protojoint/rng.hpp"

namespace protojoint {

namespace fs = std::filesystem;
using nlohmann::json;

std::map<std::string, std::vector<int>> Corpus::by_intent() const {
  std::map<std::string, std::vector<int>> out;
  for (size_t i = 0; i < utterances.size(); ++i) {
    out[utterances[i].intent].push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<std::string> tokenize_label(const std::string& label) {
  if (label == "O") return {"outside"};
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (size_t i = 0; i < label.size(); ++i) {
    char c = label[i];
    if (c == '-' || c == '_' || c == '.') {
      flush();
      continue;
    }
    if (std::isupper(static_cast<unsigned char>(c)) && i > 0 &&
        std::islower(static_cast<unsigned char>(label[i - 1]))) {
      flush();
    }
    cur.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(c))));
  }
  flush();
  if (out.empty()) out.push_back("label");
  return out;
}

namespace {

bool is_bio(const std::string& label, char marker) {
  return label.size() > 2 && label[0] == marker && label[1] == '-';
}

std::string bio_type(const std::string& label) { return label.substr(2); }

void fill_default_descriptions(Corpus& corpus) {
  for (const std::string& label : corpus.intent_inventory) {
    if (corpus.descriptions.find(label) == corpus.descriptions.end()) {
      corpus.descriptions[label] = tokenize_label(label);
    }
  }
  for (const std::string& label : corpus.slot_inventory) {
    if (corpus.descriptions.find(label) == corpus.descriptions.end()) {
      corpus.descriptions[label] = tokenize_label(label);
    }
  }
}

void rebuild_inventories(Corpus& corpus) {
  std::set<std::string> intents;
  std::set<std::string> slots;
  for (const Utterance& u : corpus.utterances) {
    intents.insert(u.intent);
    for (const std::string& s : u.slots) slots.insert(s);
  }
  corpus.intent_inventory.assign(intents.begin(), intents.end());
  corpus.slot_inventory.assign(slots.begin(), slots.end());
}

}  // namespace

void validate_bio(const std::vector<std::string>& slots, int line_no) {
  std::string where = " at line " + std::to_string(line_no);
  for (size_t j = 0; j < slots.size(); ++j) {
    const std::string& s = slots[j];
    if (s == "O") continue;
    if (!is_bio(s, 'B') && !is_bio(s, 'I')) {
      throw ValidationError("invalid slot label '" + s + "' at position " +
                            std::to_string(j) + where);
    }
    if (s[0] == 'I') {
      if (j == 0) {
        throw ValidationError("I- without preceding B- at position 0" + where);
      }
      const std::string& prev = slots[j - 1];
      bool ok = (is_bio(prev, 'B') || is_bio(prev, 'I')) &&
                bio_type(prev) == bio_type(s);
      if (!ok) {
        throw ValidationError("I- without preceding B- at position " +
                              std::to_string(j) + where);
      }
    }
  }
}

Corpus load_corpus(std::istream& in, const std::string& origin) {
  Corpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError("malformed record at line " +
                            std::to_string(line_no) + " of " + origin + ": " +
                            e.what());
    }
    if (!rec.is_object() || !rec.contains("tokens") ||
        !rec.contains("intent") || !rec.contains("slots") ||
        !rec["tokens"].is_array() || !rec["intent"].is_string() ||
        !rec["slots"].is_array()) {
      throw ValidationError("malformed record at line " +
                            std::to_string(line_no) + " of " + origin +
                            ": expected keys tokens/intent/slots");
    }
    Utterance u;
    for (const auto& t : rec["tokens"]) {
      if (!t.is_string()) {
        throw ValidationError("malformed record at line " +
                              std::to_string(line_no) +
                              ": tokens must be strings");
      }
      u.tokens.push_back(t.get<std::string>());
    }
    for (const auto& s : rec["slots"]) {
      if (!s.is_string()) {
        throw ValidationError("malformed record at line " +
                              std::to_string(line_no) +
                              ": slots must be strings");
      }
      u.slots.push_back(s.get<std::string>());
    }
    u.intent = rec["intent"].get<std::string>();
    if (u.tokens.empty()) {
      throw ValidationError("empty utterance at line " +
                            std::to_string(line_no));
    }
    if (u.intent.empty()) {
      throw ValidationError("empty intent label at line " +
                            std::to_string(line_no));
    }
    if (u.tokens.size() != u.slots.size()) {
      throw ValidationError("slots/tokens length mismatch at line " +
                            std::to_string(line_no));
    }
    validate_bio(u.slots, line_no);
    corpus.utterances.push_back(std::move(u));
  }
  rebuild_inventories(corpus);
  fill_default_descriptions(corpus);
  return corpus;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file '" + path + "'");
  return load_corpus(in, path);
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file '" + path + "'");
  for (const Utterance& u : corpus.utterances) {
    json rec;
    rec["tokens"] = u.tokens;
    rec["intent"] = u.intent;
    rec["slots"] = u.slots;
    out << rec.dump() << "\n";
  }
}

void apply_descriptions(Corpus& corpus,
                        const std::map<std::string, std::string>& overrides) {
  for (const auto& [label, text] : overrides) {
    std::istringstream ss(text);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) toks.push_back(t);
    if (toks.empty()) {
      throw ValidationError("empty description for label '" + label + "'");
    }
    corpus.descriptions[label] = std::move(toks);
  }
}

Corpus prefix_slot_labels(const Corpus& corpus) {
  if (corpus.prefixed) {
    throw ValidationError(
        "slot labels are already intent-prefixed; refusing to prefix twice");
  }
  Corpus out = corpus;
  out.prefixed = true;
  std::map<std::string, std::vector<std::string>> new_descriptions;
  for (Utterance& u : out.utterances) {
    for (std::string& s : u.slots) {
      if (s == "O") continue;
      std::string marker = s.substr(0, 2);  // "B-" or "I-"
      std::string type = bio_type(s);
      std::string renamed = marker + u.intent + "." + type;
      if (new_descriptions.find(renamed) == new_descriptions.end()) {
        std::vector<std::string> desc = corpus.descriptions.at(u.intent);
        const auto& slot_desc = corpus.descriptions.at(s);
        desc.insert(desc.end(), slot_desc.begin(), slot_desc.end());
        new_descriptions[renamed] = std::move(desc);
      }
      s = std::move(renamed);
    }
  }
  rebuild_inventories(out);
  out.descriptions.clear();
  for (const std::string& label : out.intent_inventory) {
    out.descriptions[label] = corpus.descriptions.at(label);
  }
  for (const std::string& label : out.slot_inventory) {
    auto it = new_descriptions.find(label);
    if (it != new_descriptions.end()) {
      out.descriptions[label] = it->second;
    } else {
      out.descriptions[label] = corpus.descriptions.at(label);  // "O"
    }
  }
  return out;
}

SplitSet split_by_intent(const Corpus& corpus,
                         const std::array<double, 3>& fractions,
                         uint64_t seed) {
  double total_frac = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total_frac - 1.0) > 1e-9 || fractions[0] < 0 ||
      fractions[1] < 0 || fractions[2] < 0) {
    throw ValidationError("split fractions must be nonnegative and sum to 1");
  }

  auto groups = corpus.by_intent();
  for (const auto& [label, idxs] : groups) {
    if (idxs.size() < 2) {
      throw ValidationError("intent class '" + label +
                            "' has fewer than 2 utterances");
    }
  }

  std::vector<int> active;  // split slots with positive fraction
  for (int i = 0; i < 3; ++i) {
    if (fractions[static_cast<size_t>(i)] > 0.0) active.push_back(i);
  }
  if (active.empty()) throw ValidationError("all split fractions are zero");

  size_t min_required = 3 * active.size();
  if (groups.size() < min_required) {
    throw ValidationError(
        "infeasible split: " + std::to_string(groups.size()) +
        " intent classes but each of " + std::to_string(active.size()) +
        " nonempty splits needs at least 3");
  }

  std::vector<std::string> order;
  for (const auto& [label, idxs] : groups) order.push_back(label);
  Rng rng = Rng::derive(seed, "split");
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) {
                     return groups.at(a).size() > groups.at(b).size();
                   });

  double total_mass = static_cast<double>(corpus.utterances.size());
  std::array<double, 3> deficit{};
  for (int i = 0; i < 3; ++i)
    deficit[static_cast<size_t>(i)] = fractions[static_cast<size_t>(i)] *
                                      total_mass;

  std::array<std::vector<std::string>, 3> assigned;
  for (const std::string& label : order) {
    int best = active[0];
    for (int i : active) {
      if (deficit[static_cast<size_t>(i)] > deficit[static_cast<size_t>(best)])
        best = i;
    }
    assigned[static_cast<size_t>(best)].push_back(label);
    deficit[static_cast<size_t>(best)] -=
        static_cast<double>(groups.at(label).size());
  }

  // Repair pass: every nonempty split must end up with >= 3 classes.
  auto needs_repair = [&]() -> int {
    for (int i : active) {
      if (assigned[static_cast<size_t>(i)].size() < 3) return i;
    }
    return -1;
  };
  for (int target = needs_repair(); target >= 0; target = needs_repair()) {
    int donor = -1;
    for (int i : active) {
      if (assigned[static_cast<size_t>(i)].size() > 3 &&
          (donor < 0 || assigned[static_cast<size_t>(i)].size() >
                            assigned[static_cast<size_t>(donor)].size())) {
        donor = i;
      }
    }
    if (donor < 0) throw ValidationError("infeasible split: repair failed");
    auto& pool = assigned[static_cast<size_t>(donor)];
    auto smallest = std::min_element(
        pool.begin(), pool.end(),
        [&](const std::string& a, const std::string& b) {
          size_t na = groups.at(a).size(), nb = groups.at(b).size();
          return na != nb ? na < nb : a < b;
        });
    assigned[static_cast<size_t>(target)].push_back(*smallest);
    pool.erase(smallest);
  }

  auto subset = [&](const std::vector<std::string>& classes) {
    Corpus c;
    c.prefixed = corpus.prefixed;
    std::set<std::string> chosen(classes.begin(), classes.end());
    for (const Utterance& u : corpus.utterances) {
      if (chosen.count(u.intent)) c.utterances.push_back(u);
    }
    rebuild_inventories(c);
    for (const std::string& label : c.intent_inventory)
      c.descriptions[label] = corpus.descriptions.at(label);
    for (const std::string& label : c.slot_inventory)
      c.descriptions[label] = corpus.descriptions.at(label);
    return c;
  };

  SplitSet out;
  out.train = subset(assigned[0]);
  out.dev = subset(assigned[1]);
  out.test = subset(assigned[2]);
  return out;
}

void save_splitset(const SplitSet& splits, const std::string& dir) {
  fs::create_directories(dir);
  save_corpus(splits.train, (fs::path(dir) / "train.jsonl").string());
  save_corpus(splits.dev, (fs::path(dir) / "dev.jsonl").string());
  save_corpus(splits.test, (fs::path(dir) / "test.jsonl").string());

  json desc = json::object();
  auto add_all = [&](const Corpus& c) {
    for (const auto& [label, toks] : c.descriptions) {
      std::string text;
      for (size_t i = 0; i < toks.size(); ++i) {
        if (i) text += " ";
        text += toks[i];
      }
      desc[label] = text;
    }
  };
  add_all(splits.train);
  add_all(splits.dev);
  add_all(splits.test);

  json meta;
  meta["version"] = 1;
  meta["prefixed"] = splits.train.prefixed;

  std::ofstream dout(fs::path(dir) / "descriptions.json");
  dout << desc.dump(2) << "\n";
  std::ofstream mout(fs::path(dir) / "meta.json");
  mout << meta.dump(2) << "\n";
}

SplitSet load_splitset(const std::string& dir) {
  auto load_part = [&](const std::string& name) {
    fs::path p = fs::path(dir) / name;
    if (!fs::exists(p)) return Corpus{};
    return load_corpus(p.string());
  };
  SplitSet out;
  out.train = load_part("train.jsonl");
  out.dev = load_part("dev.jsonl");
  out.test = load_part("test.jsonl");

  fs::path dpath = fs::path(dir) / "descriptions.json";
  if (fs::exists(dpath)) {
    std::ifstream din(dpath);
    json desc = json::parse(din);
    std::map<std::string, std::string> overrides;
    for (auto& [label, text] : desc.items()) {
      overrides[label] = text.get<std::string>();
    }
    // Only labels known to a split are kept by apply; restrict per corpus.
    auto apply_known = [&](Corpus& c) {
      std::map<std::string, std::string> mine;
      for (const auto& [label, text] : overrides) {
        if (c.descriptions.count(label)) mine[label] = text;
      }
      apply_descriptions(c, mine);
    };
    apply_known(out.train);
    apply_known(out.dev);
    apply_known(out.test);
  }

  fs::path mpath = fs::path(dir) / "meta.json";
  if (fs::exists(mpath)) {
    std::ifstream min(mpath);
    json meta = json::parse(min);
    bool prefixed = meta.value("prefixed", false);
    out.train.prefixed = prefixed;
    out.dev.prefixed = prefixed;
    out.test.prefixed = prefixed;
  }
  return out;
}

}  // namespace protojoint
