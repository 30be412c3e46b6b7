#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prefdetect/jsonl.hpp"
#include "prefdetect/metrics.hpp"
#include "prefdetect/mixgen.hpp"
#include "prefdetect/robustness.hpp"
#include "prefdetect/scorer.hpp"
#include "prefdetect/synthetic.hpp"
#include "prefdetect/text.hpp"
#include "prefdetect/training.hpp"
#include "prefdetect/types.hpp"

namespace py = pybind11;
using namespace prefdetect;

namespace {

class PyRephraser : public Rephraser {
public:
    using Rephraser::Rephraser;
    std::string rephrase(const std::string& prompt, uint64_t seed) const override {
        PYBIND11_OVERRIDE_PURE(std::string, Rephraser, rephrase, prompt, seed);
    }
    bool concurrent_safe() const override {
        PYBIND11_OVERRIDE(bool, Rephraser, concurrent_safe);
    }
};

class PyDetector : public Detector {
public:
    using Detector::Detector;
    double detect(const std::string& context, const std::string& response) const override {
        PYBIND11_OVERRIDE_PURE(double, Detector, detect, context, response);
    }
};

} // namespace

PYBIND11_MODULE(prefdetect, m) {
    m.doc() = "preference-reward detector for machine-generated text";

    py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<data_error>(m, "DataError", PyExc_ValueError);
    py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<remote_error>(m, "RemoteError", PyExc_RuntimeError);

    // text
    m.def("split_words", &split_words, py::arg("text"));
    m.def("split_sentences", &split_sentences, py::arg("text"));
    m.def("join_words", &join_words, py::arg("words"));

    // types
    py::enum_<Label>(m, "Label")
        .value("human", Label::human)
        .value("machine", Label::machine)
        .value("mixed", Label::mixed);

    py::class_<Document>(m, "Document")
        .def(py::init<>())
        .def_readwrite("id", &Document::id)
        .def_readwrite("context", &Document::context)
        .def_readwrite("response", &Document::response)
        .def_readwrite("label", &Document::label)
        .def_readwrite("source_model", &Document::source_model)
        .def_readwrite("domain", &Document::domain);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("documents", &Dataset::documents)
        .def_readwrite("meta", &Dataset::meta);

    py::class_<PreferenceTriplet>(m, "PreferenceTriplet")
        .def(py::init<>())
        .def_readwrite("context", &PreferenceTriplet::context)
        .def_readwrite("y_hu", &PreferenceTriplet::y_hu)
        .def_readwrite("y_mix", &PreferenceTriplet::y_mix)
        .def_readwrite("y_lm", &PreferenceTriplet::y_lm);

    py::class_<ReplayExample>(m, "ReplayExample")
        .def(py::init<>())
        .def_readwrite("context", &ReplayExample::context)
        .def_readwrite("chosen", &ReplayExample::chosen)
        .def_readwrite("rejected", &ReplayExample::rejected);

    // jsonl
    m.def("load_dataset", &load_dataset, py::arg("path"));
    m.def("load_triplets", &load_triplets, py::arg("path"));
    m.def("load_replay", &load_replay, py::arg("path"));
    m.def("save_dataset", &save_dataset, py::arg("data"), py::arg("path"));
    m.def("save_triplets", &save_triplets, py::arg("triplets"), py::arg("path"));
    m.def("save_replay", &save_replay, py::arg("replay"), py::arg("path"));

    // synthetic corpus
    py::class_<SyntheticConfig>(m, "SyntheticConfig")
        .def(py::init<>())
        .def_readwrite("vocab_size", &SyntheticConfig::vocab_size)
        .def_readwrite("preferred_size", &SyntheticConfig::preferred_size)
        .def_readwrite("gamma", &SyntheticConfig::gamma)
        .def_readwrite("min_words", &SyntheticConfig::min_words)
        .def_readwrite("max_words", &SyntheticConfig::max_words)
        .def_readwrite("docs_per_class", &SyntheticConfig::docs_per_class)
        .def_readwrite("mix_p", &SyntheticConfig::mix_p)
        .def_readwrite("n_replay", &SyntheticConfig::n_replay);

    py::class_<SyntheticData>(m, "SyntheticData")
        .def_readonly("documents", &SyntheticData::documents)
        .def_readonly("triplets", &SyntheticData::triplets)
        .def_readonly("replay", &SyntheticData::replay);

    m.def("gen_synthetic", &gen_synthetic, py::arg("cfg"), py::arg("seed"));
    m.def("synthetic_word", &synthetic_word, py::arg("i"));
    m.def("oracle_fraction", &oracle_fraction, py::arg("text"), py::arg("preferred"));
    m.def("synthetic_preferred_set", &synthetic_preferred_set, py::arg("cfg"));

    // features and scorer
    py::class_<FeatureVector>(m, "FeatureVector")
        .def(py::init<>())
        .def_readwrite("dim", &FeatureVector::dim)
        .def_readwrite("sparse", &FeatureVector::sparse)
        .def_readwrite("dense", &FeatureVector::dense);

    m.def("extract_features", &extract_features, py::arg("context"), py::arg("response"),
          py::arg("dim") = 65536);
    m.def("fnv1a64", &fnv1a64, py::arg("s"));

    py::class_<HiddenParams>(m, "HiddenParams")
        .def(py::init<>())
        .def_readwrite("H", &HiddenParams::H)
        .def_readwrite("W1", &HiddenParams::W1)
        .def_readwrite("b1", &HiddenParams::b1)
        .def_readwrite("w2", &HiddenParams::w2);

    py::class_<ScorerParams>(m, "ScorerParams")
        .def(py::init<>())
        .def_readwrite("D", &ScorerParams::D)
        .def_readwrite("sparse_weights", &ScorerParams::sparse_weights)
        .def_readwrite("dense_weights", &ScorerParams::dense_weights)
        .def_readwrite("bias", &ScorerParams::bias)
        .def_readwrite("hidden", &ScorerParams::hidden)
        .def("is_mlp", &ScorerParams::is_mlp)
        .def("n_params", &ScorerParams::n_params);

    m.def("make_linear_scorer", &make_linear_scorer, py::arg("dim") = 65536);
    m.def("make_mlp_scorer", &make_mlp_scorer, py::arg("dim"), py::arg("hidden_units"),
          py::arg("seed"));
    m.def("score", &score, py::arg("params"), py::arg("fv"));
    m.def("save_checkpoint", &save_checkpoint, py::arg("params"), py::arg("path"));
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

    py::class_<FrozenScorer>(m, "FrozenScorer")
        .def(py::init<const ScorerParams&>(), py::arg("params"))
        .def("score_features", &FrozenScorer::score_features, py::arg("fv"))
        .def_property_readonly("params", &FrozenScorer::params);

    // training
    py::class_<OptimizerConfig>(m, "OptimizerConfig")
        .def(py::init<>())
        .def_readwrite("adam_beta1", &OptimizerConfig::adam_beta1)
        .def_readwrite("adam_beta2", &OptimizerConfig::adam_beta2)
        .def_readwrite("eps", &OptimizerConfig::eps)
        .def_readwrite("weight_decay", &OptimizerConfig::weight_decay);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("beta1", &TrainConfig::beta1)
        .def_readwrite("beta2", &TrainConfig::beta2)
        .def_readwrite("base_lr", &TrainConfig::base_lr)
        .def_readwrite("warmup_frac", &TrainConfig::warmup_frac)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("optimizer", &TrainConfig::optimizer);

    m.def("bt_loss", &bt_loss, py::arg("s_w"), py::arg("s_l"));
    m.def("bt_loss_grads", &bt_loss_grads, py::arg("s_w"), py::arg("s_l"));
    m.def("replay_penalty", &replay_penalty, py::arg("params"), py::arg("frozen"),
          py::arg("batch"));
    m.def("continual_loss", &continual_loss, py::arg("context"), py::arg("y_lm"),
          py::arg("y_hu"), py::arg("replay_batch"), py::arg("params"), py::arg("frozen"),
          py::arg("lambda_"));

    py::class_<LossBreakdown>(m, "LossBreakdown")
        .def_readonly("loss", &LossBreakdown::loss)
        .def_readonly("loss_rm", &LossBreakdown::loss_rm)
        .def_readonly("loss_replay", &LossBreakdown::loss_replay)
        .def_readonly("loss_mix_hu", &LossBreakdown::loss_mix_hu)
        .def_readonly("loss_lm_mix", &LossBreakdown::loss_lm_mix);

    m.def("triplet_loss", &triplet_loss, py::arg("triplet"), py::arg("replay_batch"),
          py::arg("params"), py::arg("frozen"), py::arg("cfg"));
    m.def("lr_at", &lr_at, py::arg("step"), py::arg("total_steps"), py::arg("cfg"));

    py::class_<HistoryEntry>(m, "HistoryEntry")
        .def_readonly("step", &HistoryEntry::step)
        .def_readonly("lr", &HistoryEntry::lr)
        .def_readonly("loss", &HistoryEntry::loss)
        .def_readonly("loss_rm", &HistoryEntry::loss_rm)
        .def_readonly("loss_replay", &HistoryEntry::loss_replay)
        .def_readonly("loss_mix_hu", &HistoryEntry::loss_mix_hu)
        .def_readonly("loss_lm_mix", &HistoryEntry::loss_lm_mix);

    py::class_<TrainedScorer>(m, "TrainedScorer")
        .def_readonly("params", &TrainedScorer::params)
        .def_readonly("frozen", &TrainedScorer::frozen)
        .def_readonly("history", &TrainedScorer::history);

    m.def("train",
          py::overload_cast<const std::vector<PreferenceTriplet>&,
                            const std::vector<ReplayExample>&, const TrainConfig&,
                            ScorerParams>(&train),
          py::arg("triplets"), py::arg("replay"), py::arg("cfg"), py::arg("init"));
    m.def("train",
          py::overload_cast<const std::vector<PreferenceTriplet>&,
                            const std::vector<ReplayExample>&, const TrainConfig&,
                            uint32_t>(&train),
          py::arg("triplets"), py::arg("replay"), py::arg("cfg"), py::arg("dim") = 65536);
    m.def("grad_check", &grad_check, py::arg("params"), py::arg("triplet"),
          py::arg("replay_batch"), py::arg("cfg"), py::arg("h") = 1e-5);
    m.def("save_history_csv", &save_history_csv, py::arg("history"), py::arg("path"));

    // mixed-text generation
    py::class_<Rephraser, PyRephraser>(m, "Rephraser")
        .def(py::init<>())
        .def("rephrase", &Rephraser::rephrase, py::arg("prompt"), py::arg("seed"))
        .def("concurrent_safe", &Rephraser::concurrent_safe);

    py::class_<LocalRephraser, Rephraser>(m, "LocalRephraser").def(py::init<>());

    m.def("local_rephrase", &local_rephrase, py::arg("sentence"), py::arg("seed"));
    m.def("select_indices", &select_indices, py::arg("n_sentences"), py::arg("p"),
          py::arg("seed"));
    m.def("build_prompt", &build_prompt, py::arg("sentences"), py::arg("indices"));

    py::class_<MixResult>(m, "MixResult")
        .def_readonly("mixed", &MixResult::mixed)
        .def_readonly("selected_indices", &MixResult::selected_indices)
        .def_readonly("original_sentences", &MixResult::original_sentences)
        .def_readonly("replaced_sentences", &MixResult::replaced_sentences);

    m.def("mix", &mix, py::arg("response"), py::arg("p"), py::arg("rephraser"),
          py::arg("seed"));

    py::class_<MixDatasetResult>(m, "MixDatasetResult")
        .def_readonly("triplets", &MixDatasetResult::triplets)
        .def_readonly("failures", &MixDatasetResult::failures);

    m.def("mix_dataset", &mix_dataset, py::arg("triplets"), py::arg("p"),
          py::arg("rephraser"), py::arg("seed"));

    // metrics
    py::class_<Detector, PyDetector>(m, "Detector")
        .def(py::init<>())
        .def("detect", &Detector::detect, py::arg("context"), py::arg("response"));

    py::class_<RewardDetector, Detector>(m, "RewardDetector")
        .def(py::init<ScorerParams>(), py::arg("params"));

    py::class_<OracleDetector, Detector>(m, "OracleDetector")
        .def(py::init<const SyntheticConfig&>(), py::arg("cfg"));

    py::class_<CharTrigramModel>(m, "CharTrigramModel")
        .def(py::init<>())
        .def("fit", &CharTrigramModel::fit, py::arg("corpus"))
        .def("fitted", &CharTrigramModel::fitted)
        .def("mean_logprob", &CharTrigramModel::mean_logprob, py::arg("response"));

    py::class_<NgramLoglikDetector, Detector>(m, "NgramLoglikDetector")
        .def(py::init<CharTrigramModel, double>(), py::arg("lm"), py::arg("sign") = -1.0);

    m.def("auroc", &auroc, py::arg("pos_scores"), py::arg("neg_scores"));

    py::class_<RocPoint>(m, "RocPoint")
        .def_readonly("threshold", &RocPoint::threshold)
        .def_readonly("fpr", &RocPoint::fpr)
        .def_readonly("tpr", &RocPoint::tpr);

    m.def("roc_points", &roc_points, py::arg("scores"), py::arg("labels"));
    m.def("aupr", &aupr, py::arg("scores"), py::arg("labels"));
    m.def("tpr_at_fpr", &tpr_at_fpr, py::arg("scores"), py::arg("labels"),
          py::arg("target") = 0.01);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("auroc", &MetricsReport::auroc)
        .def_readonly("aupr", &MetricsReport::aupr)
        .def_readonly("tpr_at_fpr1", &MetricsReport::tpr_at_fpr1)
        .def_readonly("threshold", &MetricsReport::threshold)
        .def_readonly("n_pos", &MetricsReport::n_pos)
        .def_readonly("n_neg", &MetricsReport::n_neg)
        .def_readonly("per_document_scores", &MetricsReport::per_document_scores);

    m.def("evaluate", &evaluate, py::arg("detector"), py::arg("dataset"));
    m.def("calibrate_threshold", &calibrate_threshold, py::arg("detector"),
          py::arg("calibration"), py::arg("target_fpr"));
    m.def("ngram_loglik_score", &ngram_loglik_score, py::arg("lm"), py::arg("response"));
    m.def("report_to_json", &report_to_json, py::arg("report"));
    m.def("save_report_json", &save_report_json, py::arg("report"), py::arg("path"));
    m.def("save_scores_csv", &save_scores_csv, py::arg("report"), py::arg("path"));

    // robustness
    m.def("truncate_words", &truncate_words, py::arg("text"), py::arg("k"));
    m.def("default_sweep_lengths", []() { return default_sweep_lengths(); });

    py::class_<LengthSweepReport>(m, "LengthSweepReport")
        .def_readonly("lengths", &LengthSweepReport::lengths)
        .def_readonly("auroc_by_length", &LengthSweepReport::auroc_by_length)
        .def_readonly("detector_id", &LengthSweepReport::detector_id)
        .def_readonly("dataset_id", &LengthSweepReport::dataset_id);

    m.def("length_sweep", &length_sweep, py::arg("detector"), py::arg("dataset"),
          py::arg("lengths") = default_sweep_lengths(), py::arg("detector_id") = "",
          py::arg("dataset_id") = "");

    py::class_<AttackReport>(m, "AttackReport")
        .def_readonly("original_auroc", &AttackReport::original_auroc)
        .def_readonly("attacked_auroc", &AttackReport::attacked_auroc)
        .def_readonly("relative_drop_pct", &AttackReport::relative_drop_pct);

    m.def("attack_eval", &attack_eval, py::arg("detector"), py::arg("dataset"),
          py::arg("attacker"));
}
