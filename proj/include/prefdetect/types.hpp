#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prefdetect/errors.hpp"

namespace prefdetect {

enum class Label { human, machine, mixed };

inline const char* label_to_string(Label l) {
    switch (l) {
        case Label::human: return "human";
        case Label::machine: return "machine";
        default: return "mixed";
    }
}

inline Label label_from_string(const std::string& s) {
    if (s == "human") return Label::human;
    if (s == "machine") return Label::machine;
    if (s == "mixed") return Label::mixed;
    throw data_error("unknown label value: \"" + s + "\"");
}

// One (context, response) pair. context is the prompt x and may be empty;
// response is the text y under test.
struct Document {
    std::string id;
    std::string context;
    std::string response;
    Label label = Label::human;
    std::string source_model;
    std::string domain;
};

struct Dataset {
    std::vector<Document> documents;
    std::map<std::string, std::string> meta; // seed, generator config, provenance
};

// Preference-ordered responses for one context: y_lm > y_mix > y_hu.
struct PreferenceTriplet {
    std::string context;
    std::string y_hu;
    std::optional<std::string> y_mix;
    std::string y_lm;
};

// Buffer pair anchoring the scorer to its pre-training behavior.
struct ReplayExample {
    std::string context;
    std::string chosen;
    std::string rejected;
};

} // namespace prefdetect
