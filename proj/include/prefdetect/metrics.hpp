#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "prefdetect/scorer.hpp"
#include "prefdetect/synthetic.hpp"
#include "prefdetect/types.hpp"

namespace prefdetect {

// Scoring interface for detection: higher output means more machine-like.
class Detector {
public:
    virtual ~Detector() = default;
    virtual double detect(const std::string& context, const std::string& response) const = 0;
};

// Mann-Whitney statistic: (#{pos > neg} + 0.5 * #{pos == neg}) / (|pos|*|neg|),
// computed by a sorted sweep. auroc(p, n) + auroc(n, p) == 1 exactly.
double auroc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

struct RocPoint {
    double threshold; // classify machine iff score >= threshold
    double fpr;
    double tpr;
};

// One point per distinct score, descending, preceded by the +inf sentinel.
std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels);

// Step-interpolated average precision over the descending-threshold sweep.
double aupr(const std::vector<double>& scores, const std::vector<int>& labels);

// Max TPR among thresholds with FPR <= target (no interpolation) and the
// highest threshold achieving it; (0, +inf) if only the sentinel qualifies.
std::pair<double, double> tpr_at_fpr(const std::vector<double>& scores,
                                     const std::vector<int>& labels,
                                     double target = 0.01);

struct MetricsReport {
    double auroc = 0.0;
    double aupr = 0.0;
    double tpr_at_fpr1 = 0.0;
    double threshold = std::numeric_limits<double>::infinity();
    size_t n_pos = 0;
    size_t n_neg = 0;
    std::vector<std::tuple<std::string, double, Label>> per_document_scores;
};

// Scores every human/machine document (mixed ones are skipped), machine as the
// positive class. Documents are processed in id-sorted order.
MetricsReport evaluate(const Detector& detector, const Dataset& dataset);

// Smallest observed-score threshold (or +inf) with FPR <= target_fpr over the
// human documents of the calibration set.
double calibrate_threshold(const Detector& detector, const Dataset& calibration,
                           double target_fpr);

// Add-1-smoothed character trigram model with two begin-of-text sentinels.
// The alphabet is the set of distinct training bytes plus one bucket for
// unseen bytes.
class CharTrigramModel {
public:
    void fit(const std::vector<std::string>& corpus);
    bool fitted() const { return fitted_; }
    // Mean per-character log probability of the response.
    double mean_logprob(const std::string& response) const;

private:
    std::unordered_map<uint64_t, uint32_t> tri_, bi_;
    std::unordered_set<unsigned char> alphabet_;
    double alpha_size_ = 0.0;
    bool fitted_ = false;
};

double ngram_loglik_score(const CharTrigramModel& lm, const std::string& response);

// Loglik baseline: sign * mean log-prob; the default sign -1 makes
// out-of-distribution (machine-like) responses score higher.
class NgramLoglikDetector : public Detector {
public:
    NgramLoglikDetector(CharTrigramModel lm, double sign = -1.0)
        : lm_(std::move(lm)), sign_(sign) {}
    double detect(const std::string& context, const std::string& response) const override;

private:
    CharTrigramModel lm_;
    double sign_;
};

// The planted synthetic signal: fraction of preferred-vocabulary words.
class OracleDetector : public Detector {
public:
    explicit OracleDetector(const SyntheticConfig& cfg)
        : preferred_(synthetic_preferred_set(cfg)) {}
    double detect(const std::string& context, const std::string& response) const override;

private:
    std::unordered_set<std::string> preferred_;
};

// Wraps a scorer checkpoint: detect = score(params, features(context, response)).
class RewardDetector : public Detector {
public:
    explicit RewardDetector(ScorerParams params) : params_(std::move(params)) {}
    double detect(const std::string& context, const std::string& response) const override;
    const ScorerParams& params() const { return params_; }

private:
    ScorerParams params_;
};

// {"auroc","aupr","tpr_at_fpr1","threshold","n_pos","n_neg"}; non-finite
// thresholds serialize as null.
std::string report_to_json(const MetricsReport& report);
void save_report_json(const MetricsReport& report, const std::string& path);
// CSV columns: id,score,label
void save_scores_csv(const MetricsReport& report, const std::string& path);

} // namespace prefdetect
