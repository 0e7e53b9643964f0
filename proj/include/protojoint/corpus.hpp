#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace protojoint {

// Raised for bad input data, bad configuration, or bad CLI usage.
// The CLI maps this to exit code 1; anything else is a runtime failure.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Utterance {
  std::vector<std::string> tokens;
  std::string intent;
  std::vector<std::string> slots;  // BIO labels, len == tokens.size()

  bool operator==(const Utterance&) const = default;
};

struct Corpus {
  std::vector<Utterance> utterances;
  std::vector<std::string> intent_inventory;  // sorted, observed labels
  std::vector<std::string> slot_inventory;    // sorted, observed labels
  // Label (intent or slot) -> description token sequence.
  std::map<std::string, std::vector<std::string>> descriptions;
  bool prefixed = false;  // guard: slot-label prefixing applied

  bool operator==(const Corpus&) const = default;

  // Intent label -> indices into `utterances`, in file order.
  std::map<std::string, std::vector<int>> by_intent() const;
};

struct SplitSet {
  Corpus train;
  Corpus dev;  // possibly empty
  Corpus test;
};

// Default description: label name split on "-", "_", "." and camel-case
// boundaries, lowercased. "O" maps to {"outside"}.
std::vector<std::string> tokenize_label(const std::string& label);

// Throws ValidationError on bad slot-label grammar or BIO transitions.
void validate_bio(const std::vector<std::string>& slots, int line_no);

Corpus load_corpus(const std::string& path);
Corpus load_corpus(std::istream& in, const std::string& origin);
void save_corpus(const Corpus& corpus, const std::string& path);

// Sidecar overrides: label -> description text (tokenized on whitespace).
void apply_descriptions(Corpus& corpus,
                        const std::map<std::string, std::string>& overrides);

// "B-X"/"I-X" under intent y become "B-y.X"/"I-y.X"; "O" unchanged.
// Rejects a corpus that is already prefixed.
Corpus prefix_slot_labels(const Corpus& corpus);

// Partitions intent classes (not utterances) so each split's utterance
// mass approximates the fractions; greedy largest-class-first with a
// repair pass guaranteeing >= 3 classes per nonempty split.
SplitSet split_by_intent(const Corpus& corpus,
                         const std::array<double, 3>& fractions,
                         uint64_t seed);

void save_splitset(const SplitSet& splits, const std::string& dir);
SplitSet load_splitset(const std::string& dir);

}  // namespace protojoint
