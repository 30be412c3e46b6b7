#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "prefdetect/types.hpp"

namespace prefdetect {

// Synthetic corpus with a planted signal: "machine" responses oversample a
// preferred subset of the vocabulary by factor gamma, "human" responses sample
// uniformly, and "mixed" responses are human responses with a fraction mix_p of
// their sentences swapped for machine-distribution sentences. The fraction of
// preferred words in a text is then a known-good reference score.
struct SyntheticConfig {
    uint32_t vocab_size = 1000;     // V
    uint32_t preferred_size = 100;  // |P|, preferred subset = first P words
    double gamma = 5.0;             // preference boost for the preferred subset
    uint32_t min_words = 80;
    uint32_t max_words = 200;
    uint32_t docs_per_class = 200;
    double mix_p = 0.5;             // sentence replacement ratio for mixed texts
    uint32_t n_replay = 64;
};

struct SyntheticData {
    Dataset documents; // docs_per_class each of human / machine / mixed
    std::vector<PreferenceTriplet> triplets;
    std::vector<ReplayExample> replay;
};

// The i-th vocabulary word (deterministic pseudo-word, unique for i < 9025).
std::string synthetic_word(uint32_t i);

// Lowercased, terminator-stripped membership test set for the preferred words.
std::unordered_set<std::string> synthetic_preferred_set(const SyntheticConfig& cfg);

// Fraction of tokens (lowercased, terminal punctuation stripped) that are
// preferred words. The planted reference score: higher means more machine-like.
double oracle_fraction(const std::string& text,
                       const std::unordered_set<std::string>& preferred);

SyntheticData gen_synthetic(const SyntheticConfig& cfg, uint64_t seed);

} // namespace prefdetect
