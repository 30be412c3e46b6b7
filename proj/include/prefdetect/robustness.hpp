#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "prefdetect/metrics.hpp"
#include "prefdetect/types.hpp"

namespace prefdetect {

// First min(k, word count) tokens joined with single spaces.
std::string truncate_words(const std::string& text, size_t k);

inline const std::vector<size_t>& default_sweep_lengths() {
    static const std::vector<size_t> lengths{30, 60, 90, 120, 150, 180, 210};
    return lengths;
}

struct LengthSweepReport {
    std::vector<size_t> lengths;
    std::map<size_t, double> auroc_by_length;
    std::string detector_id;
    std::string dataset_id;
};

// AUROC after truncating every response to each target length; contexts are
// left untouched.
LengthSweepReport length_sweep(const Detector& detector, const Dataset& dataset,
                               const std::vector<size_t>& lengths = default_sweep_lengths(),
                               const std::string& detector_id = "",
                               const std::string& dataset_id = "");

struct AttackReport {
    double original_auroc = 0.0;
    double attacked_auroc = 0.0;
    double relative_drop_pct = 0.0; // (original - attacked) / original * 100
};

using AttackTransform = std::function<std::string(const std::string&)>;

// Re-evaluates with every machine response passed through the attacker; human
// responses are untouched (the attacker launders machine text).
AttackReport attack_eval(const Detector& detector, const Dataset& dataset,
                         const AttackTransform& attacker);

void save_sweep_json(const LengthSweepReport& report, const std::string& path);
void save_sweep_csv(const LengthSweepReport& report, const std::string& path);  // length,auroc
void save_attack_json(const AttackReport& report, const std::string& path);
void save_attack_csv(const AttackReport& report, const std::string& path);      // stage,auroc

} // namespace prefdetect
