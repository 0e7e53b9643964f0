#include "protojoint/demo.hpp"

#include <array>
#include <set>
#include <sstream>

#include "protojoint/rng.hpp"

namespace protojoint {

namespace {

const std::array<const char*, 3> kVerbs = {"book", "find", "play"};
const std::array<const char*, 3> kDomains = {"flight", "hotel", "song"};

struct SlotType {
  const char* name;
  std::array<const char*, 6> values;  // spaces mark multi-token values
};

// Spans are three tokens with per-type, per-position word sets (modifier,
// head, tail all exclusive to the type), so any +/-1 window around a span
// token is dominated by same-type words and the window position is
// recoverable from the center word alone.
const std::array<SlotType, 10> kSlotTypes = {{
    {"color", {"dark toned crimson", "pale toned azure", "deep toned jade",
               "dusty toned violet", "bright toned amber",
               "faded toned coral"}},
    {"city", {"san francisco bay", "new york city", "los angeles area",
              "hong kong island", "rio janeiro coast", "buenos aires port"}},
    {"day", {"next monday morning", "last tuesday evening", "this friday noon",
             "coming saturday night", "past sunday dawn",
             "mid wednesday dusk"}},
    {"number", {"one hundred twenty", "two hundred thirty",
                "four hundred fifty", "five hundred sixty",
                "seven hundred eighty", "nine hundred forty"}},
    {"food", {"extra cheese pizza", "fresh tuna sushi", "classic pesto pasta",
              "simple greek salad", "spicy miso ramen",
              "crunchy bean tacos"}},
    {"animal", {"wild arctic fox", "huge brown bear", "quiet snowy owl",
                "lone grey wolf", "young giant panda", "old mountain goat"}},
    {"genre", {"smooth acid jazz", "loud hard rock", "retro synth pop",
               "slow delta blues", "grim doom metal", "modern indie folk"}},
    {"weather", {"sudden heavy rain", "harsh strong wind", "silent thick fog",
                 "soft light snow", "chilly dense mist", "wet gusty storm"}},
    {"sport", {"pro table tennis", "fast ice hockey", "fun beach volley",
               "slick speed skating", "tough arm wrestling",
               "casual disc golf"}},
    {"drink", {"hot green tea", "cold iced coffee", "sweet apple juice",
               "fizzy ginger soda", "plain lemon water", "craft malt beer"}},
}};

const std::array<const char*, 5> kFillers = {"please", "for", "with", "the",
                                             "now"};

}  // namespace

Corpus generate_demo_corpus(uint64_t seed) {
  Rng rng = Rng::derive(seed, "demo");

  Corpus corpus;
  int intent_idx = 0;
  for (const char* verb : kVerbs) {
    for (const char* domain : kDomains) {
      std::string intent = std::string(verb) + "_" + domain;
      // Each intent carries a fixed pair of slot types and every utterance
      // realizes both, so any support utterance covers all of the intent's
      // slot labels and every query span stays scorable.
      std::array<int, 2> types = {
          intent_idx % static_cast<int>(kSlotTypes.size()),
          (intent_idx + 1) % static_cast<int>(kSlotTypes.size())};
      ++intent_idx;

      for (int i = 0; i < 40; ++i) {
        Utterance u;
        u.intent = intent;

        auto filler = [&] {
          u.tokens.push_back(
              kFillers[static_cast<size_t>(rng.uniform_int(
                  0, static_cast<int>(kFillers.size()) - 1))]);
          u.slots.push_back("O");
        };
        auto span = [&](int type_id) {
          const SlotType& st = kSlotTypes[static_cast<size_t>(type_id)];
          std::string value =
              st.values[static_cast<size_t>(rng.uniform_int(0, 5))];
          std::istringstream words(value);
          std::string w;
          bool first = true;
          while (words >> w) {
            u.tokens.push_back(w);
            u.slots.push_back((first ? "B-" : "I-") + std::string(st.name));
            first = false;
          }
        };
        auto keyword = [&](const char* word) {
          u.tokens.push_back(word);
          u.slots.push_back("O");
        };

        std::array<int, 2> order = types;
        if (rng.uniform() < 0.5) std::swap(order[0], order[1]);

        // Spans always follow the verb+domain prefix so recurrent states at
        // span tokens carry the intent. Two filler words separate
        // neighboring spans, so every O window is at least two-thirds O
        // content and never bridges two slot types.
        if (rng.uniform() < 0.3) filler();
        keyword(verb);
        if (rng.uniform() < 0.3) filler();
        keyword(domain);
        filler();
        if (rng.uniform() < 0.5) filler();
        span(order[0]);
        filler();
        filler();
        if (rng.uniform() < 0.5) filler();
        span(order[1]);
        if (rng.uniform() < 0.3) {
          filler();
          keyword("today");
        }

        corpus.utterances.push_back(std::move(u));
      }
    }
  }

  // Round through serialization-free inventory/description setup.
  std::set<std::string> intents, slots;
  for (const Utterance& u : corpus.utterances) {
    intents.insert(u.intent);
    for (const std::string& s : u.slots) slots.insert(s);
  }
  corpus.intent_inventory.assign(intents.begin(), intents.end());
  corpus.slot_inventory.assign(slots.begin(), slots.end());
  for (const std::string& label : corpus.intent_inventory) {
    corpus.descriptions[label] = tokenize_label(label);
  }
  for (const std::string& label : corpus.slot_inventory) {
    corpus.descriptions[label] = tokenize_label(label);
  }
  return corpus;
}

}  // namespace protojoint
