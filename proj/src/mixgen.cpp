#include "prefdetect/mixgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "prefdetect/assets_data.hpp"
#include "prefdetect/errors.hpp"
#include "prefdetect/rng.hpp"
#include "prefdetect/text.hpp"

namespace prefdetect {

const std::vector<std::string>& builtin_connectives() {
    static const std::vector<std::string> list = [] {
        std::vector<std::string> out;
        std::istringstream in(assets::kConnectives);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) out.push_back(line);
        return out;
    }();
    return list;
}

const std::vector<std::pair<std::string, std::string>>& builtin_synonyms() {
    static const std::vector<std::pair<std::string, std::string>> list = [] {
        std::vector<std::pair<std::string, std::string>> out;
        std::istringstream in(assets::kSynonyms);
        std::string line;
        while (std::getline(in, line)) {
            const size_t tab = line.find('\t');
            if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) continue;
            out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
        }
        return out;
    }();
    return list;
}

namespace {

const std::unordered_map<std::string, std::string>& synonym_map() {
    static const std::unordered_map<std::string, std::string> map = [] {
        std::unordered_map<std::string, std::string> out;
        for (const auto& [k, v] : builtin_synonyms()) out.emplace(k, v);
        return out;
    }();
    return map;
}

bool is_word_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

} // namespace

std::string local_rephrase(const std::string& sentence, uint64_t seed) {
    const auto words = split_words(sentence);
    std::vector<std::string> out_words;
    out_words.reserve(words.size());
    for (const auto& w : words) {
        size_t lead = 0, trail = 0;
        while (lead < w.size() && is_word_punct(w[lead])) ++lead;
        while (trail < w.size() - lead && is_word_punct(w[w.size() - 1 - trail])) ++trail;
        const std::string core = w.substr(lead, w.size() - lead - trail);
        std::string lower;
        lower.reserve(core.size());
        for (char c : core)
            lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        auto it = synonym_map().find(lower);
        if (it == synonym_map().end() || core.empty()) {
            out_words.push_back(w);
            continue;
        }
        std::string repl = it->second;
        if (std::isupper(static_cast<unsigned char>(core[0])))
            repl[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(repl[0])));
        out_words.push_back(w.substr(0, lead) + repl + w.substr(w.size() - trail));
    }

    std::string body = join_words(out_words);
    // Lower the original opening letter unless it looks like an acronym.
    if (body.size() > 0 && std::isupper(static_cast<unsigned char>(body[0])) &&
        (body.size() < 2 || !std::isupper(static_cast<unsigned char>(body[1])))) {
        body[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(body[0])));
    }
    const auto& connectives = builtin_connectives();
    const std::string& lead_in = connectives[splitmix64(seed) % connectives.size()];
    if (body.empty()) return lead_in;
    return lead_in + " " + body;
}

std::string LocalRephraser::rephrase(const std::string& prompt, uint64_t seed) const {
    return local_rephrase(prompt, seed);
}

std::vector<size_t> select_indices(size_t n_sentences, double p, uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw config_error("p must be in [0, 1]");
    if (n_sentences == 0) throw config_error("need at least one sentence");
    if (p == 0.0) return {};
    size_t k = static_cast<size_t>(
        std::floor(p * static_cast<double>(n_sentences) + 0.5 + 1e-9));
    k = std::max<size_t>(1, std::min(k, n_sentences));
    Rng rng(seed);
    std::vector<size_t> idx(n_sentences);
    for (size_t i = 0; i < n_sentences; ++i) idx[i] = i;
    rng.shuffle(idx);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::string build_prompt(const std::vector<std::string>& sentences,
                         const std::vector<size_t>& indices) {
    for (size_t i : indices)
        if (i >= sentences.size())
            throw config_error("prompt index " + std::to_string(i) + " out of range");
    std::string out = "Please paraphrase sentence numbers [";
    for (size_t k = 0; k < indices.size(); ++k) {
        if (k) out += ",";
        out += std::to_string(indices[k]);
    }
    out += "] in given written texts.";
    for (size_t i = 0; i < sentences.size(); ++i)
        out += "\n<" + std::to_string(i) + "th> sentence: " + sentences[i];
    return out;
}

MixResult mix(const std::string& response, double p, const Rephraser& rephraser,
              uint64_t seed) {
    if (response.empty()) throw data_error("cannot mix an empty response");
    MixResult res;
    res.original_sentences = split_sentences(response);
    if (res.original_sentences.empty()) throw data_error("response has no sentences");
    res.selected_indices = select_indices(res.original_sentences.size(), p, seed);

    std::vector<std::string> assembled = res.original_sentences;
    for (size_t i : res.selected_indices) {
        std::string repl;
        try {
            repl = rephraser.rephrase(res.original_sentences[i], derive_seed(seed, i));
        } catch (const std::exception& e) {
            throw data_error("rephraser failed on sentence " + std::to_string(i) + ": " +
                             e.what());
        }
        if (repl.empty())
            throw data_error("rephraser returned empty output for sentence " +
                             std::to_string(i));
        res.replaced_sentences.push_back(repl);
        assembled[i] = std::move(repl);
    }
    res.mixed = join_words(assembled);
    return res;
}

MixDatasetResult mix_dataset(const std::vector<PreferenceTriplet>& triplets, double p,
                             const Rephraser& rephraser, uint64_t seed) {
    MixDatasetResult out;
    out.triplets = triplets;
    for (size_t i = 0; i < out.triplets.size(); ++i) {
        try {
            out.triplets[i].y_mix =
                mix(out.triplets[i].y_hu, p, rephraser, derive_seed(seed, i)).mixed;
        } catch (const std::exception& e) {
            out.triplets[i].y_mix.reset();
            out.failures.emplace_back(i, e.what());
        }
    }
    return out;
}

} // namespace prefdetect
