import math

import pytest

import prefdetect as pd


def test_text_splitting():
    assert pd.split_words("one  two\tthree") == ["one", "two", "three"]
    sents = pd.split_sentences("First one. Second two! Third three?")
    assert sents == ["First one.", "Second two!", "Third three?"]
    assert pd.join_words(["a", "b"]) == "a b"


def test_bt_loss_anchors():
    assert pd.bt_loss(0.0, 0.0) == pytest.approx(math.log(2.0), abs=1e-12)
    assert pd.bt_loss(10.0, 0.0) == pytest.approx(4.5398899216864647e-05, abs=1e-12)
    ga, gb = pd.bt_loss_grads(0.0, 0.0)
    assert ga == pytest.approx(-0.5, abs=1e-15)
    assert ga + gb == 0.0


def test_auroc_anchors():
    assert pd.auroc([2.0, 3.0], [0.0, 1.0]) == 1.0
    assert pd.auroc([0.0, 1.0], [2.0, 3.0]) == 0.0
    assert pd.auroc([1.0], [1.0]) == 0.5
    with pytest.raises(pd.DataError):
        pd.auroc([], [1.0])


def test_features_and_score():
    fv = pd.extract_features("ctx", "a small test response", 4096)
    assert fv.dim == 4096
    norm = math.sqrt(sum(w * w for _, w in fv.sparse))
    assert norm == pytest.approx(1.0, abs=1e-12)
    params = pd.make_linear_scorer(4096)
    assert pd.score(params, fv) == 0.0
    params.bias = 1.5
    assert pd.score(params, fv) == 1.5


def test_checkpoint_roundtrip(tmp_path):
    params = pd.make_mlp_scorer(512, 8, 42)
    params.bias = 0.25
    path = str(tmp_path / "ckpt.json")
    pd.save_checkpoint(params, path)
    loaded = pd.load_checkpoint(path)
    assert loaded.is_mlp()
    assert loaded.bias == 0.25
    assert loaded.hidden.W1 == params.hidden.W1


def test_mix_and_prompt():
    assert pd.select_indices(10, 0.0, 1) == []
    assert len(pd.select_indices(10, 0.5, 1)) == 5
    prompt = pd.build_prompt(["Alpha one.", "Beta two."], [1])
    assert prompt.startswith("Please paraphrase sentence numbers [1]")
    assert "<0th> sentence: Alpha one." in prompt
    out = pd.mix("First one. Second two.", 0.5, pd.LocalRephraser(), 9)
    assert len(out.selected_indices) == 1
    assert out.mixed != "First one. Second two."


def test_python_rephraser_plugs_in():
    class Upper(pd.Rephraser):
        def rephrase(self, prompt, seed):
            return prompt.upper()

    out = pd.mix("one two. three four.", 1.0, Upper(), 5)
    assert "ONE TWO." in out.mixed
    assert "THREE FOUR." in out.mixed


def test_synthetic_train_eval():
    cfg = pd.SyntheticConfig()
    cfg.docs_per_class = 30
    cfg.n_replay = 16
    cfg.min_words = 40
    cfg.max_words = 80
    data = pd.gen_synthetic(cfg, 7)
    assert len(data.documents.documents) == 90
    assert len(data.triplets) == 30

    tc = pd.TrainConfig()
    tc.base_lr = 0.05
    tc.seed = 7
    trained = pd.train(data.triplets, data.replay, tc, 8192)
    assert len(trained.history) == 15  # 30 triplets / batch 2, one epoch
    assert all(math.isfinite(h.loss) for h in trained.history)

    held_out = pd.gen_synthetic(cfg, 99)
    report = pd.evaluate(pd.RewardDetector(trained.params), held_out.documents)
    assert report.n_pos == 30 and report.n_neg == 30
    assert report.auroc > 0.5


def test_python_detector_plugs_in():
    class LengthDetector(pd.Detector):
        def detect(self, context, response):
            return float(len(response))

    docs = []
    for i, (label, text) in enumerate(
        [(pd.Label.machine, "a long machine response"), (pd.Label.human, "short")]
    ):
        d = pd.Document()
        d.id = f"d-{i}"
        d.label = label
        d.response = text
        docs.append(d)
    ds = pd.Dataset()
    ds.documents = docs
    report = pd.evaluate(LengthDetector(), ds)
    assert report.auroc == 1.0


def test_robustness_helpers():
    assert pd.truncate_words("a b c d", 2) == "a b"
    assert pd.default_sweep_lengths() == [30, 60, 90, 120, 150, 180, 210]


def test_jsonl_roundtrip(tmp_path):
    t = pd.PreferenceTriplet()
    t.context = "c"
    t.y_hu = "human text"
    t.y_lm = "machine text"
    path = str(tmp_path / "t.jsonl")
    pd.save_triplets([t], path)
    back = pd.load_triplets(path)
    assert len(back) == 1
    assert back[0].y_mix is None
    assert back[0].y_hu == "human text"
