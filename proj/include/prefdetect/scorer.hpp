#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prefdetect {

// Hashed bag-of-ngrams feature vector. sparse holds (index, weight) pairs
// sorted by index with unique indices; it has unit Euclidean norm unless the
// response has no tokens (then it is empty and dense is all zero).
struct FeatureVector {
    uint32_t dim = 0;
    std::vector<std::pair<uint32_t, double>> sparse;
    std::array<double, 5> dense{};
};

// dense slots, all computed on the response:
//   [0] log(1 + word count)
//   [1] mean word length in bytes
//   [2] punctuation-byte fraction of the response
//   [3] type-token ratio (distinct words / words, case-sensitive)
//   [4] stopword fraction (lowercased match against the built-in 50-word list)
FeatureVector extract_features(const std::string& context, const std::string& response,
                               uint32_t dim = 65536);

// FNV-1a 64-bit over the bytes of a tagged token string.
uint64_t fnv1a64(const std::string& s);

const std::vector<std::string>& builtin_stopwords();

struct HiddenParams {
    uint32_t H = 64;
    std::vector<double> W1; // D x H, row-major: W1[i * H + j]
    std::vector<double> b1; // H
    std::vector<double> w2; // H
};

// Linear:  score = <sparse_weights, fv.sparse> + <dense_weights, fv.dense> + bias
// MLP:     score = <w2, tanh(W1^T fv.sparse + b1)> + <dense_weights, fv.dense> + bias
//          (sparse_weights are unused and stay zero in the MLP variant; the
//           dense block stays linear in both variants)
struct ScorerParams {
    uint32_t D = 65536;
    std::vector<double> sparse_weights; // length D
    std::array<double, 5> dense_weights{};
    double bias = 0.0;
    std::optional<HiddenParams> hidden;

    bool is_mlp() const { return hidden.has_value(); }
    // Flat parameter count: D + 5 + 1 (+ D*H + H + H for the MLP variant).
    size_t n_params() const;
};

ScorerParams make_linear_scorer(uint32_t dim = 65536);
// Hidden weights drawn uniform(-0.05, 0.05) from the given seed; the linear
// blocks start at zero.
ScorerParams make_mlp_scorer(uint32_t dim, uint32_t hidden_units, uint64_t seed);

double score(const ScorerParams& params, const FeatureVector& fv);

// Gradient of score with respect to every parameter, sparse where the model
// is. Flat indices follow the layout [sparse_weights | dense_weights | bias |
// W1 | b1 | w2] used by the trainer.
struct ScoreGrad {
    std::vector<std::pair<uint32_t, double>> d_sparse; // vs sparse_weights
    std::array<double, 5> d_dense{};
    double d_bias = 0.0;
    std::vector<std::pair<size_t, double>> d_w1; // flat i*H+j within the W1 block
    std::vector<double> d_b1;
    std::vector<double> d_w2;
};

ScoreGrad grad_score(const ScorerParams& params, const FeatureVector& fv);

// Immutable pre-training snapshot; scoring it is always side-effect free.
class FrozenScorer {
public:
    explicit FrozenScorer(const ScorerParams& params) : params_(params) {}
    double score_features(const FeatureVector& fv) const { return score(params_, fv); }
    const ScorerParams& params() const { return params_; }

private:
    const ScorerParams params_;
};

inline FrozenScorer snapshot(const ScorerParams& params) { return FrozenScorer(params); }

// Checkpoint JSON:
// {"version":1,"D":...,"variant":"linear"|"mlp","sparse_weights":[...],
//  "dense_weights":[...],"bias":...,"hidden":null|{"H":...,"W1":[D*H row-major],
//  "b1":[...],"w2":[...]}}
void save_checkpoint(const ScorerParams& params, const std::string& path);
ScorerParams load_checkpoint(const std::string& path);

} // namespace prefdetect
