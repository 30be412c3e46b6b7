#include "prefdetect/jsonl.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "prefdetect/errors.hpp"
#include "prefdetect/text.hpp"

namespace prefdetect {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string loc(const std::string& path, size_t lineno) {
    return path + ":" + std::to_string(lineno) + ": ";
}

const ordered_json& field(const ordered_json& obj, const char* key,
                          const std::string& path, size_t lineno) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw data_error(loc(path, lineno) + "missing field \"" + key + "\"");
    return *it;
}

std::string str_field(const ordered_json& obj, const char* key,
                      const std::string& path, size_t lineno) {
    const ordered_json& v = field(obj, key, path, lineno);
    if (!v.is_string())
        throw data_error(loc(path, lineno) + "field \"" + key + "\" must be a string");
    return v.get<std::string>();
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ordered_json obj;
        try {
            obj = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw data_error(loc(path, lineno) + "malformed JSON: " + e.what());
        }
        if (!obj.is_object())
            throw data_error(loc(path, lineno) + "record must be a JSON object");
        fn(obj, lineno);
    }
}

void write_lines(const std::string& path, const std::vector<ordered_json>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write file: " + path);
    for (const auto& row : rows) out << row.dump() << '\n';
    if (!out) throw data_error("write failed: " + path);
}

} // namespace

Dataset load_dataset(const std::string& path) {
    Dataset ds;
    std::unordered_set<std::string> seen_ids;
    for_each_line(path, [&](const ordered_json& obj, size_t lineno) {
        Document d;
        d.id = str_field(obj, "id", path, lineno);
        d.context = str_field(obj, "context", path, lineno);
        d.response = str_field(obj, "response", path, lineno);
        try {
            d.label = label_from_string(str_field(obj, "label", path, lineno));
        } catch (const data_error& e) {
            throw data_error(loc(path, lineno) + e.what());
        }
        d.source_model = str_field(obj, "source_model", path, lineno);
        d.domain = str_field(obj, "domain", path, lineno);
        if (split_words(d.response).empty())
            throw data_error(loc(path, lineno) + "response is empty after trimming");
        if (!seen_ids.insert(d.id).second)
            throw data_error(loc(path, lineno) + "duplicate id \"" + d.id + "\"");
        ds.documents.push_back(std::move(d));
    });
    return ds;
}

std::vector<PreferenceTriplet> load_triplets(const std::string& path) {
    std::vector<PreferenceTriplet> out;
    for_each_line(path, [&](const ordered_json& obj, size_t lineno) {
        PreferenceTriplet t;
        t.context = str_field(obj, "context", path, lineno);
        t.y_hu = str_field(obj, "y_hu", path, lineno);
        const ordered_json& mix = field(obj, "y_mix", path, lineno);
        if (mix.is_string()) {
            t.y_mix = mix.get<std::string>();
        } else if (!mix.is_null()) {
            throw data_error(loc(path, lineno) + "field \"y_mix\" must be a string or null");
        }
        t.y_lm = str_field(obj, "y_lm", path, lineno);
        if (t.y_hu.empty() || t.y_lm.empty())
            throw data_error(loc(path, lineno) + "y_hu and y_lm must be non-empty");
        if (t.y_mix && t.y_mix->empty())
            throw data_error(loc(path, lineno) + "y_mix must be non-empty when present");
        out.push_back(std::move(t));
    });
    return out;
}

std::vector<ReplayExample> load_replay(const std::string& path) {
    std::vector<ReplayExample> out;
    for_each_line(path, [&](const ordered_json& obj, size_t lineno) {
        ReplayExample r;
        r.context = str_field(obj, "context", path, lineno);
        r.chosen = str_field(obj, "chosen", path, lineno);
        r.rejected = str_field(obj, "rejected", path, lineno);
        if (r.chosen == r.rejected)
            throw data_error(loc(path, lineno) + "chosen and rejected must differ");
        out.push_back(std::move(r));
    });
    return out;
}

void save_dataset(const Dataset& data, const std::string& path) {
    std::vector<ordered_json> rows;
    rows.reserve(data.documents.size());
    for (const auto& d : data.documents) {
        rows.push_back(ordered_json{{"id", d.id},
                                    {"context", d.context},
                                    {"response", d.response},
                                    {"label", label_to_string(d.label)},
                                    {"source_model", d.source_model},
                                    {"domain", d.domain}});
    }
    write_lines(path, rows);
}

void save_triplets(const std::vector<PreferenceTriplet>& triplets, const std::string& path) {
    std::vector<ordered_json> rows;
    rows.reserve(triplets.size());
    for (const auto& t : triplets) {
        ordered_json row{{"context", t.context}, {"y_hu", t.y_hu}};
        row["y_mix"] = t.y_mix ? ordered_json(*t.y_mix) : ordered_json(nullptr);
        row["y_lm"] = t.y_lm;
        rows.push_back(std::move(row));
    }
    write_lines(path, rows);
}

void save_replay(const std::vector<ReplayExample>& replay, const std::string& path) {
    std::vector<ordered_json> rows;
    rows.reserve(replay.size());
    for (const auto& r : replay) {
        rows.push_back(ordered_json{
            {"context", r.context}, {"chosen", r.chosen}, {"rejected", r.rejected}});
    }
    write_lines(path, rows);
}

} // namespace prefdetect
