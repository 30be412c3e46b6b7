#include "prefdetect/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "prefdetect/errors.hpp"
#include "prefdetect/rng.hpp"

namespace prefdetect {

void validate_config(const TrainConfig& cfg) {
    if (cfg.lambda < 0.0) throw config_error("lambda must be >= 0");
    if (cfg.beta1 < 0.0 || cfg.beta2 < 0.0) throw config_error("beta1/beta2 must be >= 0");
    if (!(cfg.warmup_frac > 0.0 && cfg.warmup_frac < 1.0))
        throw config_error("warmup_frac must be in (0, 1)");
    if (cfg.batch_size < 1) throw config_error("batch_size must be >= 1");
    if (cfg.epochs < 1) throw config_error("epochs must be >= 1");
    if (cfg.base_lr <= 0.0) throw config_error("base_lr must be positive");
}

double bt_loss(double s_w, double s_l) {
    const double x = -(s_w - s_l); // loss = softplus(x)
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

std::pair<double, double> bt_loss_grads(double s_w, double s_l) {
    const double g = sigmoid(s_w - s_l) - 1.0;
    return {g, -g};
}

namespace {

struct TripletFeatures {
    FeatureVector hu, lm;
    std::optional<FeatureVector> mix;
};

struct ReplayFeatures {
    FeatureVector chosen, rejected;
    double frozen_chosen = 0.0, frozen_rejected = 0.0;
};

TripletFeatures extract_triplet(const PreferenceTriplet& t, uint32_t dim) {
    TripletFeatures f;
    f.hu = extract_features(t.context, t.y_hu, dim);
    f.lm = extract_features(t.context, t.y_lm, dim);
    if (t.y_mix) f.mix = extract_features(t.context, *t.y_mix, dim);
    return f;
}

std::vector<ReplayFeatures> extract_replay(const std::vector<ReplayExample>& replay,
                                           const FrozenScorer& frozen, uint32_t dim) {
    std::vector<ReplayFeatures> out;
    out.reserve(replay.size());
    for (const auto& r : replay) {
        ReplayFeatures f;
        f.chosen = extract_features(r.context, r.chosen, dim);
        f.rejected = extract_features(r.context, r.rejected, dim);
        f.frozen_chosen = frozen.score_features(f.chosen);
        f.frozen_rejected = frozen.score_features(f.rejected);
        out.push_back(std::move(f));
    }
    return out;
}

double penalty_from_features(const ScorerParams& params,
                             const std::vector<ReplayFeatures>& batch) {
    double sum = 0.0;
    for (const auto& f : batch) {
        const double dc = score(params, f.chosen) - f.frozen_chosen;
        const double dr = score(params, f.rejected) - f.frozen_rejected;
        sum += dc * dc + dr * dr;
    }
    return sum / (2.0 * static_cast<double>(batch.size()));
}

LossBreakdown loss_from_features(const TripletFeatures& t,
                                 const std::vector<ReplayFeatures>& replay_batch,
                                 const ScorerParams& params, const TrainConfig& cfg) {
    LossBreakdown b;
    const double s_lm = score(params, t.lm);
    const double s_hu = score(params, t.hu);
    b.loss_rm = bt_loss(s_lm, s_hu);
    if (cfg.lambda > 0.0 && !replay_batch.empty())
        b.loss_replay = cfg.lambda * penalty_from_features(params, replay_batch);
    if (t.mix) {
        const double s_mix = score(params, *t.mix);
        b.loss_mix_hu = cfg.beta1 * bt_loss(s_mix, s_hu);
        b.loss_lm_mix = cfg.beta2 * bt_loss(s_lm, s_mix);
    }
    b.loss = b.loss_rm + b.loss_replay + b.loss_mix_hu + b.loss_lm_mix;
    return b;
}

// Flat parameter layout: [sparse_weights | dense_weights | bias | W1 | b1 | w2].
struct FlatView {
    ScorerParams* p;
    size_t off_dense, off_bias, off_w1, off_b1, off_w2, total;

    explicit FlatView(ScorerParams& params) : p(&params) {
        off_dense = params.D;
        off_bias = off_dense + 5;
        off_w1 = off_bias + 1;
        if (params.hidden) {
            const HiddenParams& h = *params.hidden;
            off_b1 = off_w1 + static_cast<size_t>(params.D) * h.H;
            off_w2 = off_b1 + h.H;
            total = off_w2 + h.H;
        } else {
            off_b1 = off_w2 = total = off_w1;
        }
    }

    double& at(size_t k) {
        if (k < off_dense) return p->sparse_weights[k];
        if (k < off_bias) return p->dense_weights[k - off_dense];
        if (k < off_w1) return p->bias;
        HiddenParams& h = *p->hidden;
        if (k < off_b1) return h.W1[k - off_w1];
        if (k < off_w2) return h.b1[k - off_b1];
        return h.w2[k - off_w2];
    }
};

// grad += coef * d(score)/d(params) at fv
void accumulate(std::vector<double>& grad, const FlatView& view, const ScoreGrad& g,
                double coef) {
    if (coef == 0.0) return;
    for (const auto& [idx, v] : g.d_sparse) grad[idx] += coef * v;
    for (int k = 0; k < 5; ++k) grad[view.off_dense + k] += coef * g.d_dense[k];
    grad[view.off_bias] += coef * g.d_bias;
    for (const auto& [idx, v] : g.d_w1) grad[view.off_w1 + idx] += coef * v;
    for (size_t j = 0; j < g.d_b1.size(); ++j) grad[view.off_b1 + j] += coef * g.d_b1[j];
    for (size_t j = 0; j < g.d_w2.size(); ++j) grad[view.off_w2 + j] += coef * g.d_w2[j];
}

// Batch-mean objective value and gradient over the given triplet batch and
// replay batch. Returns the mean breakdown; grad must be pre-sized and zeroed.
LossBreakdown batch_loss_grad(const std::vector<const TripletFeatures*>& batch,
                              const std::vector<const ReplayFeatures*>& replay_batch,
                              ScorerParams& params, const TrainConfig& cfg,
                              std::vector<double>* grad, const FlatView& view) {
    LossBreakdown sum;
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    double pen = 0.0;
    if (cfg.lambda > 0.0 && !replay_batch.empty()) {
        const double inv_k = 1.0 / static_cast<double>(replay_batch.size());
        for (const ReplayFeatures* f : replay_batch) {
            const double dc = score(params, f->chosen) - f->frozen_chosen;
            const double dr = score(params, f->rejected) - f->frozen_rejected;
            pen += (dc * dc + dr * dr) * 0.5 * inv_k;
            if (grad) {
                accumulate(*grad, view, grad_score(params, f->chosen),
                           cfg.lambda * dc * inv_k);
                accumulate(*grad, view, grad_score(params, f->rejected),
                           cfg.lambda * dr * inv_k);
            }
        }
    }
    sum.loss_replay = cfg.lambda * pen;

    for (const TripletFeatures* t : batch) {
        const double s_lm = score(params, t->lm);
        const double s_hu = score(params, t->hu);
        double c_lm = 0.0, c_hu = 0.0, c_mix = 0.0;

        sum.loss_rm += bt_loss(s_lm, s_hu) * inv_b;
        const double g1 = sigmoid(s_lm - s_hu) - 1.0;
        c_lm += g1;
        c_hu -= g1;

        if (t->mix) {
            const double s_mix = score(params, *t->mix);
            sum.loss_mix_hu += cfg.beta1 * bt_loss(s_mix, s_hu) * inv_b;
            sum.loss_lm_mix += cfg.beta2 * bt_loss(s_lm, s_mix) * inv_b;
            const double g2 = sigmoid(s_mix - s_hu) - 1.0;
            const double g3 = sigmoid(s_lm - s_mix) - 1.0;
            c_mix += cfg.beta1 * g2;
            c_hu -= cfg.beta1 * g2;
            c_lm += cfg.beta2 * g3;
            c_mix -= cfg.beta2 * g3;
        }
        if (grad) {
            accumulate(*grad, view, grad_score(params, t->lm), c_lm * inv_b);
            accumulate(*grad, view, grad_score(params, t->hu), c_hu * inv_b);
            if (t->mix)
                accumulate(*grad, view, grad_score(params, *t->mix), c_mix * inv_b);
        }
    }
    sum.loss = sum.loss_rm + sum.loss_replay + sum.loss_mix_hu + sum.loss_lm_mix;
    return sum;
}

} // namespace

double replay_penalty(const ScorerParams& params, const FrozenScorer& frozen,
                      const std::vector<ReplayExample>& batch) {
    if (batch.empty()) throw data_error("replay batch must be non-empty");
    auto feats = extract_replay(batch, frozen, params.D);
    return penalty_from_features(params, feats);
}

double continual_loss(const std::string& context, const std::string& y_lm,
                      const std::string& y_hu,
                      const std::vector<ReplayExample>& replay_batch,
                      const ScorerParams& params, const FrozenScorer& frozen,
                      double lambda) {
    const double s_lm = score(params, extract_features(context, y_lm, params.D));
    const double s_hu = score(params, extract_features(context, y_hu, params.D));
    double loss = bt_loss(s_lm, s_hu);
    if (lambda > 0.0 && !replay_batch.empty())
        loss += lambda * replay_penalty(params, frozen, replay_batch);
    return loss;
}

LossBreakdown triplet_loss(const PreferenceTriplet& triplet,
                           const std::vector<ReplayExample>& replay_batch,
                           const ScorerParams& params, const FrozenScorer& frozen,
                           const TrainConfig& cfg) {
    auto tf = extract_triplet(triplet, params.D);
    auto rf = extract_replay(replay_batch, frozen, params.D);
    return loss_from_features(tf, rf, params, cfg);
}

double lr_at(uint32_t step, uint32_t total_steps, const TrainConfig& cfg) {
    if (total_steps < 1 || step >= total_steps)
        throw config_error("lr_at: step out of range");
    const uint32_t warmup = static_cast<uint32_t>(
        std::ceil(cfg.warmup_frac * static_cast<double>(total_steps)));
    if (step < warmup)
        return cfg.base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
    const double t = static_cast<double>(step - warmup) /
                     static_cast<double>(total_steps - warmup);
    return cfg.base_lr * 0.5 * (1.0 + std::cos(M_PI * t));
}

TrainedScorer train(const std::vector<PreferenceTriplet>& triplets,
                    const std::vector<ReplayExample>& replay,
                    const TrainConfig& cfg, ScorerParams init) {
    validate_config(cfg);
    if (triplets.empty()) throw data_error("no training triplets");
    if (replay.empty()) throw data_error("no replay examples");

    FrozenScorer frozen = snapshot(init);
    ScorerParams params = std::move(init);
    const uint32_t dim = params.D;

    std::vector<TripletFeatures> tf;
    tf.reserve(triplets.size());
    for (const auto& t : triplets) tf.push_back(extract_triplet(t, dim));
    std::vector<ReplayFeatures> rf = extract_replay(replay, frozen, dim);

    const size_t n = triplets.size();
    const uint32_t steps_per_epoch =
        static_cast<uint32_t>((n + cfg.batch_size - 1) / cfg.batch_size);
    const uint32_t total_steps = cfg.epochs * steps_per_epoch;

    Rng rng(cfg.seed);
    std::vector<size_t> replay_perm = rng.permutation(replay.size());
    size_t replay_cursor = 0;

    FlatView view(params);
    std::vector<double> grad(view.total, 0.0);
    std::vector<double> m(view.total, 0.0), v(view.total, 0.0);
    const OptimizerConfig& opt = cfg.optimizer;

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    TrainedScorer out{ScorerParams{}, std::move(frozen), {}};
    out.history.reserve(total_steps);

    uint32_t step = 0;
    for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t b0 = 0; b0 < n; b0 += cfg.batch_size) {
            const size_t b1 = std::min(n, b0 + cfg.batch_size);
            std::vector<const TripletFeatures*> batch;
            batch.reserve(b1 - b0);
            for (size_t i = b0; i < b1; ++i) batch.push_back(&tf[order[i]]);

            std::vector<const ReplayFeatures*> rbatch;
            rbatch.reserve(b1 - b0);
            for (size_t i = b0; i < b1; ++i) {
                rbatch.push_back(&rf[replay_perm[replay_cursor]]);
                replay_cursor = (replay_cursor + 1) % replay_perm.size();
            }

            std::fill(grad.begin(), grad.end(), 0.0);
            LossBreakdown lb = batch_loss_grad(batch, rbatch, params, cfg, &grad, view);
            if (!std::isfinite(lb.loss))
                throw numeric_error("non-finite loss at step " + std::to_string(step));

            const double lr = lr_at(step, total_steps, cfg);
            const double t = static_cast<double>(step + 1);
            const double bc1 = 1.0 - std::pow(opt.adam_beta1, t);
            const double bc2 = 1.0 - std::pow(opt.adam_beta2, t);
            for (size_t k = 0; k < view.total; ++k) {
                const double g = grad[k];
                m[k] = opt.adam_beta1 * m[k] + (1.0 - opt.adam_beta1) * g;
                v[k] = opt.adam_beta2 * v[k] + (1.0 - opt.adam_beta2) * g * g;
                double& w = view.at(k);
                const double update = (m[k] / bc1) / (std::sqrt(v[k] / bc2) + opt.eps) +
                                      opt.weight_decay * w;
                w -= lr * update;
            }

            out.history.push_back({step, lr, lb.loss, lb.loss_rm, lb.loss_replay,
                                   lb.loss_mix_hu, lb.loss_lm_mix});
            ++step;
        }
    }
    out.params = std::move(params);
    return out;
}

TrainedScorer train(const std::vector<PreferenceTriplet>& triplets,
                    const std::vector<ReplayExample>& replay,
                    const TrainConfig& cfg, uint32_t dim) {
    return train(triplets, replay, cfg, make_linear_scorer(dim));
}

double grad_check(const ScorerParams& params, const PreferenceTriplet& triplet,
                  const std::vector<ReplayExample>& replay_batch,
                  const TrainConfig& cfg, double h) {
    // Offset frozen reference so the replay term carries nonzero gradient at
    // the given point.
    ScorerParams frozen_params = params;
    frozen_params.bias += 0.37;
    for (auto& w : frozen_params.dense_weights) w += 0.05;
    FrozenScorer frozen(frozen_params);

    auto tf = extract_triplet(triplet, params.D);
    auto rf = extract_replay(replay_batch, frozen, params.D);

    ScorerParams work = params;
    FlatView view(work);
    std::vector<const TripletFeatures*> batch{&tf};
    std::vector<const ReplayFeatures*> rbatch;
    for (const auto& f : rf) rbatch.push_back(&f);

    std::vector<double> grad(view.total, 0.0);
    batch_loss_grad(batch, rbatch, work, cfg, &grad, view);

    // Coordinate sample: bias and all dense slots always; the rest drawn from
    // the blocks the variant actually uses, biased toward active features.
    Rng rng(cfg.seed ^ 0x5eedc0de);
    std::vector<size_t> coords{view.off_bias};
    for (int k = 0; k < 5; ++k) coords.push_back(view.off_dense + k);

    std::vector<uint32_t> active;
    auto collect = [&](const FeatureVector& fv) {
        for (const auto& [idx, _] : fv.sparse) active.push_back(idx);
    };
    collect(tf.hu);
    collect(tf.lm);
    if (tf.mix) collect(*tf.mix);
    for (const auto& f : rf) {
        collect(f.chosen);
        collect(f.rejected);
    }

    if (!params.hidden) {
        for (int i = 0; i < 38 && !active.empty(); ++i)
            coords.push_back(active[rng.bounded(active.size())]);
        for (int i = 0; i < 20; ++i) coords.push_back(rng.bounded(params.D));
    } else {
        const uint32_t H = params.hidden->H;
        for (uint32_t i = 0; i < 12; ++i) coords.push_back(view.off_w2 + rng.bounded(H));
        for (uint32_t i = 0; i < 12; ++i) coords.push_back(view.off_b1 + rng.bounded(H));
        for (int i = 0; i < 24 && !active.empty(); ++i) {
            const size_t row = active[rng.bounded(active.size())];
            coords.push_back(view.off_w1 + row * H + rng.bounded(H));
        }
        for (int i = 0; i < 10; ++i)
            coords.push_back(view.off_w1 + rng.bounded(static_cast<uint64_t>(params.D) * H));
    }

    double max_rel = 0.0;
    for (size_t c : coords) {
        double& w = view.at(c);
        const double saved = w;
        w = saved + h;
        const double up = batch_loss_grad(batch, rbatch, work, cfg, nullptr, view).loss;
        w = saved - h;
        const double down = batch_loss_grad(batch, rbatch, work, cfg, nullptr, view).loss;
        w = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = grad[c];
        // Below ~1e-6 the difference quotient is dominated by rounding noise
        // (eps * |loss| / h ~ 1e-11), so such coordinates cannot be resolved.
        const double denom = std::max(std::fabs(a), std::fabs(fd));
        const double rel = denom > 1e-6 ? std::fabs(a - fd) / denom : 0.0;
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

void save_history_csv(const std::vector<HistoryEntry>& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write history: " + path);
    out << "step,lr,loss,loss_rm,loss_replay,loss_mix_hu,loss_lm_mix\n";
    char buf[256];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%u,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      e.step, e.lr, e.loss, e.loss_rm, e.loss_replay, e.loss_mix_hu,
                      e.loss_lm_mix);
        out << buf;
    }
    if (!out) throw data_error("write failed: " + path);
}

} // namespace prefdetect
