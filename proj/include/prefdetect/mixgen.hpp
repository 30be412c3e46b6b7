#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "prefdetect/types.hpp"

namespace prefdetect {

// Pluggable sentence rephraser. The seed makes deterministic implementations
// reproducible per call; remote implementations may ignore it.
class Rephraser {
public:
    virtual ~Rephraser() = default;
    virtual std::string rephrase(const std::string& prompt, uint64_t seed) const = 0;
    virtual bool concurrent_safe() const { return false; }
};

// Rule-based offline paraphraser: synonym substitution plus a seeded leading
// connective. Output always differs from the input.
class LocalRephraser : public Rephraser {
public:
    std::string rephrase(const std::string& prompt, uint64_t seed) const override;
    bool concurrent_safe() const override { return true; }
};

std::string local_rephrase(const std::string& sentence, uint64_t seed);

// k = 0 when p = 0, else max(1, round-half-up(p * n_sentences)) distinct
// indices drawn uniformly without replacement, sorted ascending.
std::vector<size_t> select_indices(size_t n_sentences, double p, uint64_t seed);

// Header "Please paraphrase sentence numbers [i1,i2,...] in given written
// texts." followed by one "<{i}th> sentence: {text}" line per sentence.
std::string build_prompt(const std::vector<std::string>& sentences,
                         const std::vector<size_t>& indices);

struct MixResult {
    std::string mixed;
    std::vector<size_t> selected_indices;
    std::vector<std::string> original_sentences;
    std::vector<std::string> replaced_sentences;
};

// Rephrases the selected sentences and reassembles in original order joined
// with single spaces; non-selected sentences stay byte-identical.
MixResult mix(const std::string& response, double p, const Rephraser& rephraser,
              uint64_t seed);

struct MixDatasetResult {
    std::vector<PreferenceTriplet> triplets;
    std::vector<std::pair<size_t, std::string>> failures; // (record index, message)
};

// Fills y_mix = mix(y_hu, p, ...).mixed for each triplet with per-record seeds
// derived from (seed, index). Failed records keep y_mix absent and are
// reported, not fatal.
MixDatasetResult mix_dataset(const std::vector<PreferenceTriplet>& triplets, double p,
                             const Rephraser& rephraser, uint64_t seed);

const std::vector<std::string>& builtin_connectives();
const std::vector<std::pair<std::string, std::string>>& builtin_synonyms();

} // namespace prefdetect
