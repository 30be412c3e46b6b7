#pragma once

#include <string>
#include <vector>

#include "prefdetect/types.hpp"

namespace prefdetect {

// JSONL readers/writers. One record per line, UTF-8, LF endings.
// Document schema: {"id","context","response","label","source_model","domain"}
// Triplet schema:  {"context","y_hu","y_mix":string|null,"y_lm"}
// Replay schema:   {"context","chosen","rejected"}
// Loaders validate the schema and the record invariants; errors name the
// offending 1-based line number.

Dataset load_dataset(const std::string& path);
std::vector<PreferenceTriplet> load_triplets(const std::string& path);
std::vector<ReplayExample> load_replay(const std::string& path);

void save_dataset(const Dataset& data, const std::string& path);
void save_triplets(const std::vector<PreferenceTriplet>& triplets, const std::string& path);
void save_replay(const std::vector<ReplayExample>& replay, const std::string& path);

} // namespace prefdetect
