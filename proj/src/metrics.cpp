#include "prefdetect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "prefdetect/errors.hpp"
#include "prefdetect/text.hpp"

namespace prefdetect {

using ordered_json = nlohmann::ordered_json;

double auroc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
    if (pos_scores.empty() || neg_scores.empty())
        throw data_error("auroc requires scores from both classes");
    std::vector<std::pair<double, int>> all;
    all.reserve(pos_scores.size() + neg_scores.size());
    for (double s : pos_scores) all.emplace_back(s, 1);
    for (double s : neg_scores) all.emplace_back(s, 0);
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // num = 2*#{pos>neg} + #{pos==neg}, den = 2*|pos|*|neg|, both exact ints.
    uint64_t num = 0, neg_below = 0;
    size_t i = 0;
    while (i < all.size()) {
        size_t j = i;
        uint64_t cp = 0, cn = 0;
        while (j < all.size() && all[j].first == all[i].first) {
            if (all[j].second) ++cp; else ++cn;
            ++j;
        }
        num += 2 * cp * neg_below + cp * cn;
        neg_below += cn;
        i = j;
    }
    const uint64_t den = 2 * static_cast<uint64_t>(pos_scores.size()) *
                         static_cast<uint64_t>(neg_scores.size());
    // Complement form keeps auroc(p,n) + auroc(n,p) == 1 exact.
    if (2 * num <= den)
        return static_cast<double>(num) / static_cast<double>(den);
    return 1.0 - static_cast<double>(den - num) / static_cast<double>(den);
}

namespace {

struct SweepCounts {
    std::vector<double> thresholds; // distinct, descending
    std::vector<uint64_t> tp, fp;   // cumulative at score >= threshold
    uint64_t n_pos = 0, n_neg = 0;
};

SweepCounts sweep(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw data_error("scores and labels must have equal length");
    SweepCounts sw;
    std::vector<std::pair<double, int>> all;
    all.reserve(scores.size());
    for (size_t k = 0; k < scores.size(); ++k) {
        if (!std::isfinite(scores[k])) throw data_error("non-finite score");
        all.emplace_back(scores[k], labels[k]);
        if (labels[k]) ++sw.n_pos; else ++sw.n_neg;
    }
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    uint64_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < all.size()) {
        size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) {
            if (all[j].second) ++tp; else ++fp;
            ++j;
        }
        sw.thresholds.push_back(all[i].first);
        sw.tp.push_back(tp);
        sw.fp.push_back(fp);
        i = j;
    }
    return sw;
}

} // namespace

std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
    SweepCounts sw = sweep(scores, labels);
    if (sw.n_pos == 0 || sw.n_neg == 0)
        throw data_error("roc_points requires both classes");
    std::vector<RocPoint> out;
    out.reserve(sw.thresholds.size() + 1);
    out.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    for (size_t k = 0; k < sw.thresholds.size(); ++k) {
        out.push_back({sw.thresholds[k],
                       static_cast<double>(sw.fp[k]) / static_cast<double>(sw.n_neg),
                       static_cast<double>(sw.tp[k]) / static_cast<double>(sw.n_pos)});
    }
    return out;
}

double aupr(const std::vector<double>& scores, const std::vector<int>& labels) {
    SweepCounts sw = sweep(scores, labels);
    if (sw.n_pos == 0) throw data_error("aupr requires at least one positive");
    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t k = 0; k < sw.thresholds.size(); ++k) {
        const double recall = static_cast<double>(sw.tp[k]) / static_cast<double>(sw.n_pos);
        const double precision =
            static_cast<double>(sw.tp[k]) / static_cast<double>(sw.tp[k] + sw.fp[k]);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

std::pair<double, double> tpr_at_fpr(const std::vector<double>& scores,
                                     const std::vector<int>& labels, double target) {
    auto points = roc_points(scores, labels);
    double best_tpr = 0.0;
    double best_thr = std::numeric_limits<double>::infinity();
    for (const auto& pt : points) {
        if (pt.fpr <= target && pt.tpr > best_tpr) {
            best_tpr = pt.tpr;
            best_thr = pt.threshold;
        }
    }
    return {best_tpr, best_thr};
}

MetricsReport evaluate(const Detector& detector, const Dataset& dataset) {
    MetricsReport rep;
    for (const auto& doc : dataset.documents) {
        if (doc.label == Label::mixed) continue;
        double s;
        try {
            s = detector.detect(doc.context, doc.response);
        } catch (const remote_error& e) {
            throw remote_error("document \"" + doc.id + "\": " + e.what());
        } catch (const std::exception& e) {
            throw data_error("detector failed on document \"" + doc.id + "\": " + e.what());
        }
        rep.per_document_scores.emplace_back(doc.id, s, doc.label);
    }
    std::sort(rep.per_document_scores.begin(), rep.per_document_scores.end(),
              [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });

    std::vector<double> scores, pos, neg;
    std::vector<int> labels;
    for (const auto& [id, s, label] : rep.per_document_scores) {
        scores.push_back(s);
        labels.push_back(label == Label::machine ? 1 : 0);
        (label == Label::machine ? pos : neg).push_back(s);
    }
    if (pos.empty() || neg.empty())
        throw data_error("evaluation needs at least one machine and one human document");
    rep.n_pos = pos.size();
    rep.n_neg = neg.size();
    rep.auroc = auroc(pos, neg);
    rep.aupr = aupr(scores, labels);
    std::tie(rep.tpr_at_fpr1, rep.threshold) = tpr_at_fpr(scores, labels, 0.01);
    return rep;
}

double calibrate_threshold(const Detector& detector, const Dataset& calibration,
                           double target_fpr) {
    if (target_fpr < 0.0 || target_fpr > 1.0)
        throw config_error("target_fpr must be in [0, 1]");
    std::vector<double> human, all;
    for (const auto& doc : calibration.documents) {
        if (doc.label == Label::mixed) continue;
        const double s = detector.detect(doc.context, doc.response);
        all.push_back(s);
        if (doc.label == Label::human) human.push_back(s);
    }
    if (human.empty())
        throw data_error("calibration set needs at least one human document");
    std::sort(human.begin(), human.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    const double n_h = static_cast<double>(human.size());
    for (double t : all) {
        const auto at = std::lower_bound(human.begin(), human.end(), t);
        const double fp = static_cast<double>(human.end() - at);
        if (fp / n_h <= target_fpr) return t;
    }
    return std::numeric_limits<double>::infinity();
}

void CharTrigramModel::fit(const std::vector<std::string>& corpus) {
    tri_.clear();
    bi_.clear();
    alphabet_.clear();
    size_t total = 0;
    for (const auto& text : corpus) {
        total += text.size();
        for (char c : text) alphabet_.insert(static_cast<unsigned char>(c));
    }
    if (total == 0) throw data_error("trigram model needs a non-empty corpus");
    alpha_size_ = static_cast<double>(alphabet_.size()) + 1.0; // +1 unseen bucket

    constexpr uint32_t BOS = 256;
    for (const auto& text : corpus) {
        if (text.empty()) continue;
        uint32_t a = BOS, b = BOS;
        for (char ch : text) {
            const uint32_t c = static_cast<unsigned char>(ch);
            tri_[(static_cast<uint64_t>(a) << 18 | b << 9 | c)]++;
            bi_[(static_cast<uint64_t>(a) << 9 | b)]++;
            a = b;
            b = c;
        }
    }
    fitted_ = true;
}

double CharTrigramModel::mean_logprob(const std::string& response) const {
    if (!fitted_) throw data_error("trigram model is not fitted");
    if (response.empty()) throw data_error("cannot score an empty response");
    constexpr uint32_t BOS = 256, OOV = 257;
    auto map_byte = [&](char ch) {
        const unsigned char c = static_cast<unsigned char>(ch);
        return alphabet_.count(c) ? static_cast<uint32_t>(c) : OOV;
    };
    double sum = 0.0;
    uint32_t a = BOS, b = BOS;
    for (char ch : response) {
        const uint32_t c = map_byte(ch);
        auto t3 = tri_.find(static_cast<uint64_t>(a) << 18 | b << 9 | c);
        auto t2 = bi_.find(static_cast<uint64_t>(a) << 9 | b);
        const double cnt3 = t3 == tri_.end() ? 0.0 : t3->second;
        const double cnt2 = t2 == bi_.end() ? 0.0 : t2->second;
        sum += std::log((cnt3 + 1.0) / (cnt2 + alpha_size_));
        a = b;
        b = c;
    }
    return sum / static_cast<double>(response.size());
}

double ngram_loglik_score(const CharTrigramModel& lm, const std::string& response) {
    return lm.mean_logprob(response);
}

double NgramLoglikDetector::detect(const std::string& context,
                                   const std::string& response) const {
    (void)context;
    return sign_ * lm_.mean_logprob(response);
}

double OracleDetector::detect(const std::string& context,
                              const std::string& response) const {
    (void)context;
    return oracle_fraction(response, preferred_);
}

double RewardDetector::detect(const std::string& context,
                              const std::string& response) const {
    return score(params_, extract_features(context, response, params_.D));
}

namespace {

ordered_json report_json(const MetricsReport& report) {
    ordered_json obj;
    obj["auroc"] = report.auroc;
    obj["aupr"] = report.aupr;
    obj["tpr_at_fpr1"] = report.tpr_at_fpr1;
    if (std::isfinite(report.threshold))
        obj["threshold"] = report.threshold;
    else
        obj["threshold"] = nullptr;
    obj["n_pos"] = report.n_pos;
    obj["n_neg"] = report.n_neg;
    return obj;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

} // namespace

std::string report_to_json(const MetricsReport& report) {
    return report_json(report).dump();
}

void save_report_json(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write report: " + path);
    out << report_json(report).dump(2) << '\n';
    if (!out) throw data_error("write failed: " + path);
}

void save_scores_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write scores: " + path);
    out << "id,score,label\n";
    char buf[64];
    for (const auto& [id, s, label] : report.per_document_scores) {
        std::snprintf(buf, sizeof(buf), "%.17g", s);
        out << csv_escape(id) << ',' << buf << ',' << label_to_string(label) << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

} // namespace prefdetect
