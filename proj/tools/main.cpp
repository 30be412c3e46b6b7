#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prefdetect/errors.hpp"
#include "prefdetect/jsonl.hpp"
#include "prefdetect/metrics.hpp"
#include "prefdetect/mixgen.hpp"
#include "prefdetect/remote.hpp"
#include "prefdetect/rng.hpp"
#include "prefdetect/robustness.hpp"
#include "prefdetect/scorer.hpp"
#include "prefdetect/synthetic.hpp"
#include "prefdetect/training.hpp"
#include "prefdetect/types.hpp"

namespace fs = std::filesystem;
using namespace prefdetect;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Resolved-config sidecar: sorted key=value lines, loadable back via --config.
void write_resolved(const std::string& path,
                    std::vector<std::pair<std::string, std::string>> kv) {
    std::sort(kv.begin(), kv.end());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write resolved config: " + path);
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
    if (!out) throw data_error("write failed: " + path);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw data_error("cannot create directory " + dir + ": " + ec.message());
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Flat key=value config file. Values fill options the command line left unset,
// so precedence is flag > file > default. Applied after parsing because this
// CLI11 version only reads config files registered on the top-level app.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trimmed(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw config_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value");
        const std::string key = trimmed(s.substr(0, eq));
        const std::string val = trimmed(s.substr(eq + 1));
        if (key == "config")
            throw config_error(path + ": config files cannot name another config file");
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw config_error(path + ":" + std::to_string(lineno) + ": unknown key " +
                               key);
        if (opt->count() > 0) continue;
        opt->add_result(val);
        opt->run_callback();
    }
}

// Output stem: "ckpt.json" -> "ckpt" so sidecars become ckpt.history.csv etc.
std::string stem_of(const std::string& path) {
    for (const std::string ext : {".jsonl", ".json"})
        if (path.size() > ext.size() && path.substr(path.size() - ext.size()) == ext)
            return path.substr(0, path.size() - ext.size());
    return path;
}

struct EndpointArgs {
    std::string url;
    int timeout_ms = 30000;
    int max_retries = 3;
    int retry_base_ms = 500;
    int max_concurrent = 4;
    std::string auth_env;

    void add_options(CLI::App* cmd, const std::string& prefix = "") {
        cmd->add_option("--" + prefix + "url", url, "remote endpoint base URL");
        cmd->add_option("--" + prefix + "timeout-ms", timeout_ms, "request timeout")
            ->capture_default_str();
        cmd->add_option("--" + prefix + "max-retries", max_retries,
                        "retries after the first attempt")
            ->capture_default_str();
        cmd->add_option("--" + prefix + "retry-base-ms", retry_base_ms,
                        "backoff base delay")
            ->capture_default_str();
        cmd->add_option("--" + prefix + "max-concurrent", max_concurrent,
                        "in-flight request cap")
            ->capture_default_str();
        cmd->add_option("--" + prefix + "auth-env", auth_env,
                        "environment variable holding the bearer token");
    }

    EndpointConfig config() const {
        EndpointConfig cfg;
        cfg.base_url = url;
        cfg.timeout_ms = timeout_ms;
        cfg.max_retries = max_retries;
        cfg.retry_base_ms = retry_base_ms;
        cfg.max_concurrent = max_concurrent;
        cfg.auth_env_var = auth_env;
        return cfg;
    }

    std::vector<std::pair<std::string, std::string>> resolved(
        const std::string& prefix = "") const {
        return {{prefix + "url", url},
                {prefix + "timeout-ms", std::to_string(timeout_ms)},
                {prefix + "max-retries", std::to_string(max_retries)},
                {prefix + "retry-base-ms", std::to_string(retry_base_ms)},
                {prefix + "max-concurrent", std::to_string(max_concurrent)},
                {prefix + "auth-env", auth_env}};
    }
};

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
    std::string config_path;
    std::string out_dir;
    uint64_t seed = 7;
    SyntheticConfig cfg;
};

void run_gen(const GenArgs& a) {
    const SyntheticData data = gen_synthetic(a.cfg, a.seed);
    ensure_dir(a.out_dir);
    save_dataset(data.documents, a.out_dir + "/documents.jsonl");
    save_triplets(data.triplets, a.out_dir + "/triplets.jsonl");
    save_replay(data.replay, a.out_dir + "/replay.jsonl");
    write_resolved(a.out_dir + "/gen.config",
                   {{"seed", std::to_string(a.seed)},
                    {"vocab-size", std::to_string(a.cfg.vocab_size)},
                    {"preferred-size", std::to_string(a.cfg.preferred_size)},
                    {"gamma", fmt(a.cfg.gamma)},
                    {"min-words", std::to_string(a.cfg.min_words)},
                    {"max-words", std::to_string(a.cfg.max_words)},
                    {"docs-per-class", std::to_string(a.cfg.docs_per_class)},
                    {"mix-p", fmt(a.cfg.mix_p)},
                    {"n-replay", std::to_string(a.cfg.n_replay)}});
    std::cout << "wrote " << data.documents.documents.size() << " documents, "
              << data.triplets.size() << " triplets, " << data.replay.size()
              << " replay pairs to " << a.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// mix

struct MixArgs {
    std::string config_path;
    std::string in_path;
    std::string out_path;
    double p = 0.5;
    std::string rephraser = "local";
    uint64_t seed = 7;
    EndpointArgs endpoint;
};

void run_mix(const MixArgs& a) {
    if (!(a.p >= 0.0 && a.p <= 1.0))
        throw config_error("p must be in [0, 1], got " + fmt(a.p));
    const auto triplets = load_triplets(a.in_path);
    std::unique_ptr<Rephraser> rephraser;
    if (a.rephraser == "local") {
        rephraser = std::make_unique<LocalRephraser>();
    } else if (a.rephraser == "remote") {
        rephraser = std::make_unique<RemoteRephraser>(a.endpoint.config());
    } else {
        throw config_error("unknown rephraser: " + a.rephraser);
    }

    const auto res = mix_dataset(triplets, a.p, *rephraser, a.seed);
    const size_t failed = res.failures.size();
    const size_t filled = triplets.size() - failed;
    if (!triplets.empty() && filled == 0) {
        for (const auto& [idx, msg] : res.failures)
            std::cerr << "record " << idx << ": " << msg << "\n";
        throw data_error("every record failed to mix");
    }
    save_triplets(res.triplets, a.out_path);

    auto kv = std::vector<std::pair<std::string, std::string>>{
        {"in", a.in_path},       {"out", a.out_path},
        {"p", fmt(a.p)},         {"rephraser", a.rephraser},
        {"seed", std::to_string(a.seed)}};
    if (a.rephraser == "remote")
        for (auto& e : a.endpoint.resolved()) kv.push_back(std::move(e));
    write_resolved(stem_of(a.out_path) + ".config", kv);

    std::cout << "filled " << filled << " failed " << failed << "\n";
    for (const auto& [idx, msg] : res.failures)
        std::cerr << "record " << idx << ": " << msg << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string config_path;
    std::string triplets_path;
    std::string replay_path;
    std::string out_path;
    std::string eval_path;
    std::string variant = "linear";
    uint32_t dim = 65536;
    uint32_t hidden_units = 64;
    TrainConfig cfg;
};

void run_train(TrainArgs& a) {
    const auto triplets = load_triplets(a.triplets_path);
    const auto replay = load_replay(a.replay_path);

    ScorerParams init;
    if (a.variant == "linear") {
        init = make_linear_scorer(a.dim);
    } else if (a.variant == "mlp") {
        init = make_mlp_scorer(a.dim, a.hidden_units, a.cfg.seed);
    } else {
        throw config_error("unknown variant: " + a.variant);
    }

    const auto trained = train(triplets, replay, a.cfg, std::move(init));
    save_checkpoint(trained.params, a.out_path);
    const std::string stem = stem_of(a.out_path);
    save_history_csv(trained.history, stem + ".history.csv");
    write_resolved(stem + ".config",
                   {{"triplets", a.triplets_path},
                    {"replay", a.replay_path},
                    {"out", a.out_path},
                    {"variant", a.variant},
                    {"dim", std::to_string(a.dim)},
                    {"hidden-units", std::to_string(a.hidden_units)},
                    {"lambda", fmt(a.cfg.lambda)},
                    {"beta1", fmt(a.cfg.beta1)},
                    {"beta2", fmt(a.cfg.beta2)},
                    {"lr", fmt(a.cfg.base_lr)},
                    {"warmup-frac", fmt(a.cfg.warmup_frac)},
                    {"epochs", std::to_string(a.cfg.epochs)},
                    {"batch-size", std::to_string(a.cfg.batch_size)},
                    {"seed", std::to_string(a.cfg.seed)}});

    std::cout << "final loss " << fmt(trained.history.back().loss) << "\n";
    if (!a.eval_path.empty()) {
        const auto held_out = load_dataset(a.eval_path);
        RewardDetector detector(trained.params);
        const auto rep = evaluate(detector, held_out);
        std::cout << "heldout auroc " << fmt(rep.auroc) << "\n";
    }
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
    std::string ckpt_path;
    std::string text;
    std::string context;
    double threshold = std::numeric_limits<double>::quiet_NaN();
    bool has_threshold = false;
};

void run_detect(const DetectArgs& a) {
    const ScorerParams params = load_checkpoint(a.ckpt_path);
    const double s = score(params, extract_features(a.context, a.text, params.D));
    std::cout << "score " << fmt(s) << "\n";
    if (a.has_threshold)
        std::cout << "verdict " << (s >= a.threshold ? "MACHINE" : "HUMAN") << "\n";
}

// ---------------------------------------------------------------------------
// detector selection shared by eval / sweep / attack

struct DetectorArgs {
    std::string kind = "reward"; // reward | ngram | oracle | remote
    std::string ckpt_path;
    uint32_t vocab_size = 1000;
    uint32_t preferred_size = 100;
    EndpointArgs endpoint;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--detector", kind, "reward|ngram|oracle|remote")
            ->capture_default_str();
        cmd->add_option("--ckpt", ckpt_path, "checkpoint for the reward detector");
        cmd->add_option("--vocab-size", vocab_size, "oracle detector vocabulary")
            ->capture_default_str();
        cmd->add_option("--preferred-size", preferred_size,
                        "oracle detector preferred-subset size")
            ->capture_default_str();
        endpoint.add_options(cmd);
    }

    std::unique_ptr<Detector> build(const Dataset& dataset) const {
        if (kind == "reward") {
            if (ckpt_path.empty())
                throw config_error("the reward detector needs --ckpt");
            return std::make_unique<RewardDetector>(load_checkpoint(ckpt_path));
        }
        if (kind == "ngram") {
            std::vector<std::string> human;
            for (const auto& d : dataset.documents)
                if (d.label == Label::human) human.push_back(d.response);
            if (human.empty())
                throw data_error("the ngram detector needs human documents to fit on");
            CharTrigramModel lm;
            lm.fit(human);
            return std::make_unique<NgramLoglikDetector>(std::move(lm));
        }
        if (kind == "oracle") {
            SyntheticConfig cfg;
            cfg.vocab_size = vocab_size;
            cfg.preferred_size = preferred_size;
            return std::make_unique<OracleDetector>(cfg);
        }
        if (kind == "remote") return std::make_unique<RemoteDetector>(endpoint.config());
        throw config_error("unknown detector: " + kind);
    }

    std::vector<std::pair<std::string, std::string>> resolved() const {
        std::vector<std::pair<std::string, std::string>> kv{
            {"detector", kind},
            {"ckpt", ckpt_path},
            {"vocab-size", std::to_string(vocab_size)},
            {"preferred-size", std::to_string(preferred_size)}};
        if (kind == "remote")
            for (auto& e : endpoint.resolved()) kv.push_back(std::move(e));
        return kv;
    }
};

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string config_path;
    std::string in_path;
    std::string out_dir;
    DetectorArgs detector;
};

void run_eval(const EvalArgs& a) {
    const auto dataset = load_dataset(a.in_path);
    const auto detector = a.detector.build(dataset);
    const auto rep = evaluate(*detector, dataset);
    ensure_dir(a.out_dir);
    save_report_json(rep, a.out_dir + "/report.json");
    save_scores_csv(rep, a.out_dir + "/scores.csv");
    auto kv = a.detector.resolved();
    kv.emplace_back("in", a.in_path);
    write_resolved(a.out_dir + "/eval.config", std::move(kv));
    std::cout << "auroc " << fmt(rep.auroc) << "\n";
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    std::string config_path;
    std::string in_path;
    std::string out_dir;
    std::vector<size_t> lengths = default_sweep_lengths();
    DetectorArgs detector;
};

void run_sweep(const SweepArgs& a) {
    const auto dataset = load_dataset(a.in_path);
    const auto detector = a.detector.build(dataset);
    const auto rep = length_sweep(*detector, dataset, a.lengths, a.detector.kind,
                                  a.in_path);
    ensure_dir(a.out_dir);
    save_sweep_json(rep, a.out_dir + "/sweep.json");
    save_sweep_csv(rep, a.out_dir + "/sweep.csv");
    std::string joined;
    for (size_t i = 0; i < a.lengths.size(); ++i) {
        if (i) joined += ',';
        joined += std::to_string(a.lengths[i]);
    }
    auto kv = a.detector.resolved();
    kv.emplace_back("in", a.in_path);
    kv.emplace_back("lengths", joined);
    write_resolved(a.out_dir + "/sweep.config", std::move(kv));
    for (size_t len : rep.lengths)
        std::cout << "length " << len << " auroc " << fmt(rep.auroc_by_length.at(len))
                  << "\n";
}

// ---------------------------------------------------------------------------
// attack

struct AttackArgs {
    std::string config_path;
    std::string in_path;
    std::string out_dir;
    std::string attacker = "local";
    double p = 1.0;
    uint64_t seed = 7;
    DetectorArgs detector;
    EndpointArgs endpoint;
};

void run_attack(const AttackArgs& a) {
    if (!(a.p >= 0.0 && a.p <= 1.0))
        throw config_error("p must be in [0, 1], got " + fmt(a.p));
    const auto dataset = load_dataset(a.in_path);
    const auto detector = a.detector.build(dataset);

    std::unique_ptr<Rephraser> rephraser;
    if (a.attacker == "local") {
        rephraser = std::make_unique<LocalRephraser>();
    } else if (a.attacker == "remote") {
        rephraser = std::make_unique<RemoteRephraser>(a.endpoint.config());
    } else {
        throw config_error("unknown attacker: " + a.attacker);
    }
    const double p = a.p;
    const uint64_t seed = a.seed;
    Rephraser* rp = rephraser.get();
    const auto rep = attack_eval(*detector, dataset, [p, seed, rp](const std::string& s) {
        return mix(s, p, *rp, derive_seed(seed, fnv1a64(s))).mixed;
    });

    ensure_dir(a.out_dir);
    save_attack_json(rep, a.out_dir + "/attack.json");
    save_attack_csv(rep, a.out_dir + "/attack.csv");
    auto kv = a.detector.resolved();
    kv.emplace_back("in", a.in_path);
    kv.emplace_back("attacker", a.attacker);
    kv.emplace_back("p", fmt(a.p));
    kv.emplace_back("seed", std::to_string(a.seed));
    if (a.attacker == "remote")
        for (auto& e : a.endpoint.resolved("attacker-")) kv.push_back(std::move(e));
    write_resolved(a.out_dir + "/attack.config", std::move(kv));

    std::cout << "original auroc " << fmt(rep.original_auroc) << "\n";
    std::cout << "attacked auroc " << fmt(rep.attacked_auroc) << "\n";
    std::cout << "relative drop pct " << fmt(rep.relative_drop_pct) << "\n";
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
    std::string variant = "linear";
    uint32_t dim = 4096;
    uint32_t hidden_units = 16;
    uint64_t seed = 7;
    double h = 1e-5;
};

void run_gradcheck(const GradcheckArgs& a) {
    SyntheticConfig scfg;
    scfg.docs_per_class = 4;
    scfg.n_replay = 4;
    scfg.min_words = 30;
    scfg.max_words = 60;
    const auto data = gen_synthetic(scfg, a.seed);

    ScorerParams params;
    if (a.variant == "linear") {
        params = make_linear_scorer(a.dim);
    } else if (a.variant == "mlp") {
        params = make_mlp_scorer(a.dim, a.hidden_units, a.seed);
    } else {
        throw config_error("unknown variant: " + a.variant);
    }

    TrainConfig cfg;
    cfg.seed = a.seed;
    std::vector<ReplayExample> rbatch(data.replay.begin(), data.replay.begin() + 2);
    const double err = grad_check(params, data.triplets[0], rbatch, cfg, a.h);
    std::cout << "max relative error " << fmt(err) << "\n";
    if (!(err <= 1e-4))
        throw numeric_error("gradient check failed: max relative error " + fmt(err));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"preference-reward detector for machine-generated text"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic corpus");
    gen_cmd->add_option("--config", gen.config_path, "flat key=value config file");
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    gen_cmd->add_option("--seed", gen.seed, "corpus seed")->capture_default_str();
    gen_cmd->add_option("--vocab-size", gen.cfg.vocab_size)->capture_default_str();
    gen_cmd->add_option("--preferred-size", gen.cfg.preferred_size)->capture_default_str();
    gen_cmd->add_option("--gamma", gen.cfg.gamma)->capture_default_str();
    gen_cmd->add_option("--min-words", gen.cfg.min_words)->capture_default_str();
    gen_cmd->add_option("--max-words", gen.cfg.max_words)->capture_default_str();
    gen_cmd->add_option("--docs-per-class", gen.cfg.docs_per_class)->capture_default_str();
    gen_cmd->add_option("--mix-p", gen.cfg.mix_p)->capture_default_str();
    gen_cmd->add_option("--n-replay", gen.cfg.n_replay)->capture_default_str();
    gen_cmd->callback([&] {
        apply_config_file(gen_cmd, gen.config_path);
        run_gen(gen);
    });

    MixArgs mix_args;
    auto* mix_cmd = app.add_subcommand("mix", "fill y_mix by rephrasing sentences");
    mix_cmd->add_option("--config", mix_args.config_path, "flat key=value config file");
    mix_cmd->add_option("--in", mix_args.in_path, "input triplets.jsonl")->required();
    mix_cmd->add_option("--out", mix_args.out_path, "output triplets.jsonl")->required();
    mix_cmd->add_option("--p", mix_args.p, "sentence replacement ratio")
        ->capture_default_str();
    mix_cmd->add_option("--rephraser", mix_args.rephraser, "local|remote")
        ->capture_default_str();
    mix_cmd->add_option("--seed", mix_args.seed)->capture_default_str();
    mix_args.endpoint.add_options(mix_cmd);
    mix_cmd->callback([&] {
        apply_config_file(mix_cmd, mix_args.config_path);
        run_mix(mix_args);
    });

    TrainArgs train_args;
    train_args.cfg.base_lr = 5e-4; // desk-scale default; the documented preset is 2e-5
    auto* train_cmd = app.add_subcommand("train", "fit a scorer on preference triplets");
    train_cmd->add_option("--config", train_args.config_path,
                          "flat key=value config file");
    train_cmd->add_option("--triplets", train_args.triplets_path)->required();
    train_cmd->add_option("--replay", train_args.replay_path)->required();
    train_cmd->add_option("--out", train_args.out_path, "checkpoint path")->required();
    train_cmd->add_option("--eval", train_args.eval_path,
                          "held-out documents.jsonl to report AUROC on");
    train_cmd->add_option("--variant", train_args.variant, "linear|mlp")
        ->capture_default_str();
    train_cmd->add_option("--dim", train_args.dim)->capture_default_str();
    train_cmd->add_option("--hidden-units", train_args.hidden_units)->capture_default_str();
    train_cmd->add_option("--lambda", train_args.cfg.lambda)->capture_default_str();
    train_cmd->add_option("--beta1", train_args.cfg.beta1)->capture_default_str();
    train_cmd->add_option("--beta2", train_args.cfg.beta2)->capture_default_str();
    train_cmd->add_option("--lr", train_args.cfg.base_lr)->capture_default_str();
    train_cmd->add_option("--warmup-frac", train_args.cfg.warmup_frac)
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_args.cfg.epochs)->capture_default_str();
    train_cmd->add_option("--batch-size", train_args.cfg.batch_size)->capture_default_str();
    train_cmd->add_option("--seed", train_args.cfg.seed)->capture_default_str();
    train_cmd->callback([&] {
        apply_config_file(train_cmd, train_args.config_path);
        run_train(train_args);
    });

    DetectArgs detect_args;
    auto* detect_cmd = app.add_subcommand("detect", "score one text with a checkpoint");
    detect_cmd->add_option("--ckpt", detect_args.ckpt_path)->required();
    detect_cmd->add_option("--text", detect_args.text)->required();
    detect_cmd->add_option("--context", detect_args.context);
    auto* thr = detect_cmd->add_option("--threshold", detect_args.threshold,
                                       "print MACHINE/HUMAN verdict against this value");
    detect_cmd->callback([&] {
        detect_args.has_threshold = thr->count() > 0;
        run_detect(detect_args);
    });

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "score a dataset and report metrics");
    eval_cmd->add_option("--config", eval_args.config_path, "flat key=value config file");
    eval_cmd->add_option("--in", eval_args.in_path, "documents.jsonl")->required();
    eval_cmd->add_option("--out", eval_args.out_dir, "output directory")->required();
    eval_args.detector.add_options(eval_cmd);
    eval_cmd->callback([&] {
        apply_config_file(eval_cmd, eval_args.config_path);
        run_eval(eval_args);
    });

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "AUROC vs response length");
    sweep_cmd->add_option("--config", sweep_args.config_path,
                          "flat key=value config file");
    sweep_cmd->add_option("--in", sweep_args.in_path, "documents.jsonl")->required();
    sweep_cmd->add_option("--out", sweep_args.out_dir, "output directory")->required();
    sweep_cmd->add_option("--lengths", sweep_args.lengths, "word-count grid")
        ->delimiter(',');
    sweep_args.detector.add_options(sweep_cmd);
    sweep_cmd->callback([&] {
        apply_config_file(sweep_cmd, sweep_args.config_path);
        run_sweep(sweep_args);
    });

    AttackArgs attack_args;
    auto* attack_cmd = app.add_subcommand("attack", "paraphrase-attack evaluation");
    attack_cmd->add_option("--config", attack_args.config_path,
                           "flat key=value config file");
    attack_cmd->add_option("--in", attack_args.in_path, "documents.jsonl")->required();
    attack_cmd->add_option("--out", attack_args.out_dir, "output directory")->required();
    attack_cmd->add_option("--attacker", attack_args.attacker, "local|remote")
        ->capture_default_str();
    attack_cmd->add_option("--p", attack_args.p, "fraction of sentences rephrased")
        ->capture_default_str();
    attack_cmd->add_option("--seed", attack_args.seed)->capture_default_str();
    attack_args.detector.add_options(attack_cmd);
    attack_args.endpoint.add_options(attack_cmd, "attacker-");
    attack_cmd->callback([&] {
        apply_config_file(attack_cmd, attack_args.config_path);
        run_attack(attack_args);
    });

    GradcheckArgs grad_args;
    auto* grad_cmd = app.add_subcommand("gradcheck",
                                        "compare analytic gradients to finite differences");
    grad_cmd->add_option("--variant", grad_args.variant, "linear|mlp")
        ->capture_default_str();
    grad_cmd->add_option("--dim", grad_args.dim)->capture_default_str();
    grad_cmd->add_option("--hidden-units", grad_args.hidden_units)->capture_default_str();
    grad_cmd->add_option("--seed", grad_args.seed)->capture_default_str();
    grad_cmd->add_option("--step", grad_args.h, "finite-difference step")
        ->capture_default_str();
    grad_cmd->callback([&] { run_gradcheck(grad_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // config/usage problems map to exit 2
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const remote_error& e) {
        std::cerr << "remote error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
