#include "prefdetect/scorer.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "prefdetect/assets_data.hpp"
#include "prefdetect/errors.hpp"
#include "prefdetect/rng.hpp"
#include "prefdetect/text.hpp"

namespace prefdetect {

using ordered_json = nlohmann::ordered_json;

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

const std::vector<std::string>& builtin_stopwords() {
    static const std::vector<std::string> words = [] {
        std::vector<std::string> out;
        std::istringstream in(assets::kStopwords);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) out.push_back(line);
        }
        return out;
    }();
    return words;
}

namespace {

const std::unordered_set<std::string>& stopword_set() {
    static const std::unordered_set<std::string> set(builtin_stopwords().begin(),
                                                     builtin_stopwords().end());
    return set;
}

void check_dim(const ScorerParams& params, const FeatureVector& fv) {
    if (params.D != fv.dim)
        throw config_error("feature dimension " + std::to_string(fv.dim) +
                           " does not match scorer dimension " + std::to_string(params.D));
}

} // namespace

FeatureVector extract_features(const std::string& context, const std::string& response,
                               uint32_t dim) {
    FeatureVector fv;
    fv.dim = dim;
    const auto resp_words = split_words(response);
    if (resp_words.empty()) return fv; // all-zero by contract, context ignored

    std::map<uint32_t, double> tf;
    auto add = [&](const std::string& tagged) { tf[fnv1a64(tagged) % dim] += 1.0; };

    for (const auto& w : resp_words) add("R:" + w);
    for (size_t i = 0; i + 1 < resp_words.size(); ++i)
        add("R:" + resp_words[i] + " " + resp_words[i + 1]);
    for (const auto& w : split_words(context)) add("C:" + w);

    double sq = 0.0;
    for (const auto& [idx, v] : tf) sq += v * v;
    const double inv = 1.0 / std::sqrt(sq);
    fv.sparse.reserve(tf.size());
    for (const auto& [idx, v] : tf) fv.sparse.emplace_back(idx, v * inv);

    const double n = static_cast<double>(resp_words.size());
    double len_sum = 0.0;
    size_t stop = 0;
    std::unordered_set<std::string> distinct;
    for (const auto& w : resp_words) {
        len_sum += static_cast<double>(w.size());
        distinct.insert(w);
        std::string lower;
        lower.reserve(w.size());
        for (char c : w)
            lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (stopword_set().count(lower)) ++stop;
    }
    size_t punct = 0;
    for (char c : response)
        if (std::ispunct(static_cast<unsigned char>(c))) ++punct;

    fv.dense[0] = std::log1p(n);
    fv.dense[1] = len_sum / n;
    fv.dense[2] = static_cast<double>(punct) / static_cast<double>(response.size());
    fv.dense[3] = static_cast<double>(distinct.size()) / n;
    fv.dense[4] = static_cast<double>(stop) / n;
    return fv;
}

size_t ScorerParams::n_params() const {
    size_t n = static_cast<size_t>(D) + 5 + 1;
    if (hidden)
        n += static_cast<size_t>(D) * hidden->H + 2 * static_cast<size_t>(hidden->H);
    return n;
}

ScorerParams make_linear_scorer(uint32_t dim) {
    ScorerParams p;
    p.D = dim;
    p.sparse_weights.assign(dim, 0.0);
    return p;
}

ScorerParams make_mlp_scorer(uint32_t dim, uint32_t hidden_units, uint64_t seed) {
    ScorerParams p;
    p.D = dim;
    p.sparse_weights.assign(dim, 0.0);
    HiddenParams h;
    h.H = hidden_units;
    Rng rng(seed);
    h.W1.resize(static_cast<size_t>(dim) * hidden_units);
    for (auto& w : h.W1) w = rng.uniform(-0.05, 0.05);
    h.b1.resize(hidden_units);
    for (auto& w : h.b1) w = rng.uniform(-0.05, 0.05);
    h.w2.resize(hidden_units);
    for (auto& w : h.w2) w = rng.uniform(-0.05, 0.05);
    p.hidden = std::move(h);
    return p;
}

double score(const ScorerParams& params, const FeatureVector& fv) {
    check_dim(params, fv);
    double s = params.bias;
    for (int k = 0; k < 5; ++k) s += params.dense_weights[k] * fv.dense[k];
    if (!params.hidden) {
        for (const auto& [idx, v] : fv.sparse) s += params.sparse_weights[idx] * v;
        return s;
    }
    const HiddenParams& h = *params.hidden;
    for (uint32_t j = 0; j < h.H; ++j) {
        double pre = h.b1[j];
        for (const auto& [idx, v] : fv.sparse)
            pre += h.W1[static_cast<size_t>(idx) * h.H + j] * v;
        s += h.w2[j] * std::tanh(pre);
    }
    return s;
}

ScoreGrad grad_score(const ScorerParams& params, const FeatureVector& fv) {
    check_dim(params, fv);
    ScoreGrad g;
    g.d_dense = fv.dense;
    g.d_bias = 1.0;
    if (!params.hidden) {
        g.d_sparse = fv.sparse;
        return g;
    }
    const HiddenParams& h = *params.hidden;
    std::vector<double> act(h.H);
    for (uint32_t j = 0; j < h.H; ++j) {
        double pre = h.b1[j];
        for (const auto& [idx, v] : fv.sparse)
            pre += h.W1[static_cast<size_t>(idx) * h.H + j] * v;
        act[j] = std::tanh(pre);
    }
    g.d_w2 = act;
    g.d_b1.resize(h.H);
    for (uint32_t j = 0; j < h.H; ++j)
        g.d_b1[j] = h.w2[j] * (1.0 - act[j] * act[j]);
    g.d_w1.reserve(fv.sparse.size() * h.H);
    for (const auto& [idx, v] : fv.sparse)
        for (uint32_t j = 0; j < h.H; ++j)
            g.d_w1.emplace_back(static_cast<size_t>(idx) * h.H + j, v * g.d_b1[j]);
    return g;
}

void save_checkpoint(const ScorerParams& params, const std::string& path) {
    ordered_json obj;
    obj["version"] = 1;
    obj["D"] = params.D;
    obj["variant"] = params.hidden ? "mlp" : "linear";
    obj["sparse_weights"] = params.sparse_weights;
    obj["dense_weights"] = params.dense_weights;
    obj["bias"] = params.bias;
    if (params.hidden) {
        const HiddenParams& h = *params.hidden;
        obj["hidden"] =
            ordered_json{{"H", h.H}, {"W1", h.W1}, {"b1", h.b1}, {"w2", h.w2}};
    } else {
        obj["hidden"] = nullptr;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write checkpoint: " + path);
    out << obj.dump() << '\n';
    if (!out) throw data_error("write failed: " + path);
}

ScorerParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open checkpoint: " + path);
    ordered_json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("malformed checkpoint " + path + ": " + e.what());
    }
    try {
        if (obj.at("version").get<int>() != 1)
            throw config_error("unsupported checkpoint version in " + path);
        ScorerParams p;
        p.D = obj.at("D").get<uint32_t>();
        const std::string variant = obj.at("variant").get<std::string>();
        p.sparse_weights = obj.at("sparse_weights").get<std::vector<double>>();
        auto dense = obj.at("dense_weights").get<std::vector<double>>();
        if (p.sparse_weights.size() != p.D || dense.size() != 5)
            throw config_error("checkpoint weight sizes do not match D in " + path);
        std::copy(dense.begin(), dense.end(), p.dense_weights.begin());
        p.bias = obj.at("bias").get<double>();
        const auto& hid = obj.at("hidden");
        if (variant == "mlp") {
            if (hid.is_null())
                throw config_error("mlp checkpoint missing hidden block in " + path);
            HiddenParams h;
            h.H = hid.at("H").get<uint32_t>();
            h.W1 = hid.at("W1").get<std::vector<double>>();
            h.b1 = hid.at("b1").get<std::vector<double>>();
            h.w2 = hid.at("w2").get<std::vector<double>>();
            if (h.W1.size() != static_cast<size_t>(p.D) * h.H || h.b1.size() != h.H ||
                h.w2.size() != h.H)
                throw config_error("hidden block sizes inconsistent in " + path);
            p.hidden = std::move(h);
        } else if (variant != "linear") {
            throw config_error("unknown checkpoint variant \"" + variant + "\" in " + path);
        } else if (!hid.is_null()) {
            throw config_error("linear checkpoint must have hidden=null in " + path);
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("invalid checkpoint " + path + ": " + e.what());
    }
}

} // namespace prefdetect
