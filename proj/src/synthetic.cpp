#include "prefdetect/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "prefdetect/errors.hpp"
#include "prefdetect/rng.hpp"
#include "prefdetect/text.hpp"

namespace prefdetect {

namespace {

const char* kConsonants = "bcdfghjklmnpqrstvwz";
const char* kVowels = "aeiou";

void validate(const SyntheticConfig& cfg) {
    if (cfg.vocab_size < 2 * cfg.preferred_size || cfg.preferred_size == 0)
        throw config_error("vocab_size must be at least twice preferred_size (both > 0)");
    if (cfg.vocab_size > 9025)
        throw config_error("vocab_size must be <= 9025");
    if (cfg.gamma <= 0.0)
        throw config_error("gamma must be positive");
    if (cfg.min_words == 0 || cfg.max_words < cfg.min_words)
        throw config_error("invalid word-count range");
    if (cfg.docs_per_class == 0)
        throw config_error("docs_per_class must be >= 1");
    if (cfg.mix_p < 0.0 || cfg.mix_p > 1.0)
        throw config_error("mix_p must be in [0, 1]");
}

struct Sampler {
    const SyntheticConfig& cfg;
    Rng& rng;

    // One vocabulary index; gamma-boosted mass on the preferred subset.
    uint32_t word_index(bool machine) {
        const double P = cfg.preferred_size;
        const double V = cfg.vocab_size;
        if (!machine) return static_cast<uint32_t>(rng.bounded(cfg.vocab_size));
        const double q = cfg.gamma * P / (cfg.gamma * P + (V - P));
        if (rng.uniform() < q)
            return static_cast<uint32_t>(rng.bounded(cfg.preferred_size));
        return cfg.preferred_size +
               static_cast<uint32_t>(rng.bounded(cfg.vocab_size - cfg.preferred_size));
    }

    std::string sentence(bool machine, uint32_t n_words) {
        std::string s;
        for (uint32_t i = 0; i < n_words; ++i) {
            std::string w = synthetic_word(word_index(machine));
            if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
            if (!s.empty()) s += ' ';
            s += w;
        }
        s += '.';
        return s;
    }

    std::vector<std::string> sentences_for_doc(bool machine) {
        const uint32_t target =
            static_cast<uint32_t>(rng.range(cfg.min_words, cfg.max_words));
        std::vector<std::string> out;
        uint32_t total = 0;
        while (total < target) {
            uint32_t len = static_cast<uint32_t>(rng.range(8, 14));
            out.push_back(sentence(machine, len));
            total += len;
        }
        return out;
    }

    std::string response(bool machine) {
        std::string s;
        for (const auto& sent : sentences_for_doc(machine)) {
            if (!s.empty()) s += ' ';
            s += sent;
        }
        return s;
    }

    std::string context() {
        std::string s;
        const uint32_t n = static_cast<uint32_t>(rng.range(6, 12));
        for (uint32_t i = 0; i < n; ++i) {
            std::string w = synthetic_word(static_cast<uint32_t>(rng.bounded(cfg.vocab_size)));
            if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
            if (!s.empty()) s += ' ';
            s += w;
        }
        s += '?';
        return s;
    }

    // Replace round-half-up(mix_p * n) sentences (at least one when mix_p > 0)
    // with machine-distribution sentences of the same word count.
    std::string mixed_from(const std::vector<std::string>& human_sentences) {
        const size_t n = human_sentences.size();
        size_t k = 0;
        if (cfg.mix_p > 0.0)
            k = std::max<size_t>(
                1, static_cast<size_t>(std::floor(cfg.mix_p * static_cast<double>(n) + 0.5 + 1e-9)));
        k = std::min(k, n);
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        rng.shuffle(idx);
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        std::vector<std::string> out = human_sentences;
        for (size_t i : idx) {
            uint32_t len = static_cast<uint32_t>(split_words(human_sentences[i]).size());
            out[i] = sentence(true, len);
        }
        std::string s;
        for (const auto& sent : out) {
            if (!s.empty()) s += ' ';
            s += sent;
        }
        return s;
    }
};

std::string doc_id(const char* prefix, uint32_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s-%04u", prefix, i);
    return buf;
}

} // namespace

std::string synthetic_word(uint32_t i) {
    auto syl = [](uint32_t k) {
        std::string s;
        s += kConsonants[k % 19];
        s += kVowels[(k / 19) % 5];
        return s;
    };
    return syl(i % 95) + syl((i / 95) % 95);
}

std::unordered_set<std::string> synthetic_preferred_set(const SyntheticConfig& cfg) {
    std::unordered_set<std::string> out;
    out.reserve(cfg.preferred_size * 2);
    for (uint32_t i = 0; i < cfg.preferred_size; ++i) out.insert(synthetic_word(i));
    return out;
}

double oracle_fraction(const std::string& text,
                       const std::unordered_set<std::string>& preferred) {
    const auto words = split_words(text);
    if (words.empty()) return 0.0;
    size_t hits = 0;
    for (const auto& w : words) {
        std::string core;
        core.reserve(w.size());
        for (char c : w) core += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        while (!core.empty() &&
               (core.back() == '.' || core.back() == '!' || core.back() == '?'))
            core.pop_back();
        if (preferred.count(core)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(words.size());
}

SyntheticData gen_synthetic(const SyntheticConfig& cfg, uint64_t seed) {
    validate(cfg);
    SyntheticData out;
    Rng rng(seed);
    Sampler sampler{cfg, rng};
    const auto preferred = synthetic_preferred_set(cfg);
    const char* domains[] = {"news", "qa", "essay"};

    for (uint32_t i = 0; i < cfg.docs_per_class; ++i) {
        const std::string domain = domains[i % 3];
        Document hu{doc_id("hu", i), sampler.context(), sampler.response(false),
                    Label::human, "human", domain};
        Document lm{doc_id("lm", i), sampler.context(), sampler.response(true),
                    Label::machine, "synthetic-v1", domain};
        Document mx{doc_id("mx", i), sampler.context(), "", Label::mixed,
                    "synthetic-v1-mix", domain};
        mx.response = sampler.mixed_from(sampler.sentences_for_doc(false));
        out.documents.documents.push_back(std::move(hu));
        out.documents.documents.push_back(std::move(lm));
        out.documents.documents.push_back(std::move(mx));
    }

    for (uint32_t i = 0; i < cfg.docs_per_class; ++i) {
        PreferenceTriplet t;
        t.context = sampler.context();
        auto human_sentences = sampler.sentences_for_doc(false);
        std::string y_hu;
        for (const auto& s : human_sentences) {
            if (!y_hu.empty()) y_hu += ' ';
            y_hu += s;
        }
        t.y_hu = y_hu;
        t.y_mix = sampler.mixed_from(human_sentences);
        t.y_lm = sampler.response(true);
        out.triplets.push_back(std::move(t));
    }

    for (uint32_t i = 0; i < cfg.n_replay; ++i) {
        std::string ctx = sampler.context();
        std::string a = sampler.response(false);
        std::string b = sampler.response(false);
        while (b == a) b = sampler.response(false);
        if (oracle_fraction(a, preferred) >= oracle_fraction(b, preferred))
            out.replay.push_back({std::move(ctx), std::move(a), std::move(b)});
        else
            out.replay.push_back({std::move(ctx), std::move(b), std::move(a)});
    }

    auto& meta = out.documents.meta;
    meta["seed"] = std::to_string(seed);
    meta["vocab_size"] = std::to_string(cfg.vocab_size);
    meta["preferred_size"] = std::to_string(cfg.preferred_size);
    meta["gamma"] = std::to_string(cfg.gamma);
    meta["generator"] = "synthetic-v1";
    return out;
}

} // namespace prefdetect
