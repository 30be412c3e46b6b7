#include "prefdetect/robustness.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "prefdetect/errors.hpp"
#include "prefdetect/text.hpp"

namespace prefdetect {

using ordered_json = nlohmann::ordered_json;

std::string truncate_words(const std::string& text, size_t k) {
    auto words = split_words(text);
    if (words.size() > k) words.resize(k);
    return join_words(words);
}

LengthSweepReport length_sweep(const Detector& detector, const Dataset& dataset,
                               const std::vector<size_t>& lengths,
                               const std::string& detector_id,
                               const std::string& dataset_id) {
    LengthSweepReport rep;
    rep.lengths = lengths;
    rep.detector_id = detector_id;
    rep.dataset_id = dataset_id;
    for (size_t len : lengths) {
        if (len == 0) throw config_error("sweep lengths must be >= 1");
        Dataset truncated = dataset;
        for (auto& doc : truncated.documents)
            doc.response = truncate_words(doc.response, len);
        rep.auroc_by_length[len] = evaluate(detector, truncated).auroc;
    }
    return rep;
}

AttackReport attack_eval(const Detector& detector, const Dataset& dataset,
                         const AttackTransform& attacker) {
    AttackReport rep;
    rep.original_auroc = evaluate(detector, dataset).auroc;
    Dataset attacked = dataset;
    for (auto& doc : attacked.documents) {
        if (doc.label != Label::machine) continue;
        try {
            doc.response = attacker(doc.response);
        } catch (const std::exception& e) {
            throw data_error("attacker failed on document \"" + doc.id + "\": " + e.what());
        }
    }
    rep.attacked_auroc = evaluate(detector, attacked).auroc;
    rep.relative_drop_pct =
        rep.original_auroc > 0.0
            ? (rep.original_auroc - rep.attacked_auroc) / rep.original_auroc * 100.0
            : 0.0;
    return rep;
}

namespace {

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write file: " + path);
    out << content;
    if (!out) throw data_error("write failed: " + path);
}

} // namespace

void save_sweep_json(const LengthSweepReport& report, const std::string& path) {
    ordered_json obj;
    obj["detector_id"] = report.detector_id;
    obj["dataset_id"] = report.dataset_id;
    obj["lengths"] = report.lengths;
    ordered_json by_len = ordered_json::object();
    for (size_t len : report.lengths)
        by_len[std::to_string(len)] = report.auroc_by_length.at(len);
    obj["auroc_by_length"] = by_len;
    write_text(path, obj.dump(2) + "\n");
}

void save_sweep_csv(const LengthSweepReport& report, const std::string& path) {
    std::string out = "length,auroc\n";
    char buf[64];
    for (size_t len : report.lengths) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", len, report.auroc_by_length.at(len));
        out += buf;
    }
    write_text(path, out);
}

void save_attack_json(const AttackReport& report, const std::string& path) {
    ordered_json obj;
    obj["original_auroc"] = report.original_auroc;
    obj["attacked_auroc"] = report.attacked_auroc;
    obj["relative_drop_pct"] = report.relative_drop_pct;
    write_text(path, obj.dump(2) + "\n");
}

void save_attack_csv(const AttackReport& report, const std::string& path) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "stage,auroc\noriginal,%.17g\nattacked,%.17g\n",
                  report.original_auroc, report.attacked_auroc);
    write_text(path, buf);
}

} // namespace prefdetect
