#pragma once

#include <cstdint>

#include "protojoint/corpus.hpp"

namespace protojoint {

// Synthetic 9-intent corpus (40 utterances per intent, 10 slot types)
// built for offline runs. Intents are verb+domain pairs whose keyword
// tokens are shared across classes, so embeddings learned on one class
// partition transfer to held-out classes.
Corpus generate_demo_corpus(uint64_t seed);

}  // namespace protojoint
