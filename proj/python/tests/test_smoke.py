"""Smoke tests for the murreid extension module."""

import math

import pytest

import murreid


def test_registry_has_23_unique_dialects():
    labels = murreid.registry()
    assert len(labels) == 23
    assert len({l.code for l in labels}) == 23
    assert len({l.name for l in labels}) == 23
    by_code = {l.code: l for l in labels}
    assert by_code["KH"].name == "Kaakkois-Häme"
    assert [l.index for l in labels] == list(range(23))


def test_tokenize_word_and_char():
    assert murreid.tokenize("Mie läksin sinne.") == ["mie", "läksin", "sinne"]
    assert murreid.tokenize("abc", "char") == ["a", "b", "c"]
    assert murreid.tokenize("") == []


def test_mel_scale_points():
    assert murreid.hz_to_mel(0.0) == 0.0
    assert abs(murreid.hz_to_mel(1000.0) - 1000.0) < 0.5


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    cfg = murreid.SynthConfig()
    cfg.n_classes = 3
    cfg.utterances_per_class = 20
    cfg.placement = "text"
    cfg.p_text = 1.0
    cfg.duration_min_s = 0.5
    cfg.duration_max_s = 0.8
    cfg.seed = 5
    result = murreid.synth_generate(cfg, str(out))
    utts = murreid.parse_manifest(result.manifest_path)
    for u in utts:
        u.audio_path = str(out / u.audio_path)
    return utts


def test_synth_split_roundtrip(corpus, tmp_path):
    assert len(corpus) == 60
    sm = murreid.split(corpus, (0.7, 0.15, 0.15), seed=9)
    counts = sm.counts()
    assert counts == [42, 9, 9]
    assigned = {uid for uid, _ in sm.assignment}
    assert len(assigned) == 60

    path = tmp_path / "split.tsv"
    sm.save(str(path))
    back = murreid.read_split(str(path))
    assert back.counts() == counts

    stats = murreid.compute_stats(corpus)
    assert sum(stats.sentences) == 60
    assert stats.sentences[0] == 20


def test_audio_features_shape(corpus):
    w = murreid.decode_wav(corpus[0].audio_path)
    assert w.sample_rate_hz == 16000
    feats = murreid.extract_features(w)
    expected_frames = 1 + (len(w.samples) - 400) // 160
    assert feats.shape == (expected_frames, 40)

    one_sec = murreid.resample(w, 44100)
    assert abs(len(one_sec.samples) - round(len(w.samples) * 44100 / 16000)) <= 1


def marker_corpus(n_classes, per_class, seed):
    """Class-k sentences start with the marker token murre_k."""
    import random

    rng = random.Random(seed)
    fillers = ["talo", "kala", "iso", "menee", "niin", "vanha"]
    labels = murreid.registry()
    utts = []
    for k in range(n_classes):
        for i in range(per_class):
            u = murreid.Utterance()
            u.id = f"m{k}_{i}"
            u.speaker_id = f"spk{i % 3}"
            u.dialect = labels[k]
            u.transcript_dialectal = f"murre_{k} " + " ".join(
                rng.choice(fillers) for _ in range(rng.randrange(4, 8))
            )
            u.duration_s = 2.0
            u.sample_rate_hz = 16000
            u.audio_path = "none.wav"
            utts.append(u)
    return utts


def test_train_predict_save_load(tmp_path):
    corpus = marker_corpus(4, 30, 9)
    train = [u for i, u in enumerate(corpus) if i % 5 != 0]
    val = [u for i, u in enumerate(corpus) if i % 5 == 0]

    dims = murreid.ModelDims()
    dims.embedding_dim = 16
    dims.hidden_dim = 12
    dims.text_fixed_len = 16

    cfg = murreid.TrainConfig()
    cfg.epochs = 20
    cfg.learning_rate = 0.02
    cfg.batch_size = 8
    cfg.seed = 13

    bundle, report = murreid.train_text_only(train, val, cfg, dims)
    assert report.steps > 0
    assert len(report.val_accuracy) == 20
    assert max(report.val_accuracy) >= 0.9

    pred = bundle.predict("murre_1 talo kala")
    assert len(pred.scores) == 23
    assert math.isclose(sum(pred.scores), 1.0, abs_tol=1e-9)
    assert pred.label.index == 1

    path = tmp_path / "model.mrid"
    bundle.save(str(path))
    loaded = murreid.load_bundle(str(path))
    again = loaded.predict("murre_1 talo kala")
    assert again.scores == pred.scores

    report_eval = murreid.evaluate_bundle(loaded, val)
    assert 0.0 <= report_eval.accuracy <= 1.0


def test_metrics_match_sklearn():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    import random

    rng = random.Random(3)
    truth = [rng.randrange(5) for _ in range(400)]
    pred = [rng.randrange(5) for _ in range(400)]

    rep = murreid.metrics(truth, pred, 5)
    p, r, f1, support = sklearn_metrics.precision_recall_fscore_support(
        truth, pred, labels=list(range(5)), zero_division=0
    )
    for k in range(5):
        assert math.isclose(rep.precision[k], p[k], abs_tol=1e-12)
        assert math.isclose(rep.recall[k], r[k], abs_tol=1e-12)
        assert math.isclose(rep.f1[k], f1[k], abs_tol=1e-12)
        assert rep.support[k] == support[k]
    assert math.isclose(
        rep.accuracy, sklearn_metrics.accuracy_score(truth, pred), abs_tol=1e-12
    )


def test_render_report_shape():
    rep = murreid.metrics([0, 1, 2], [0, 1, 1], 23)
    text = murreid.render_report(rep)
    lines = text.strip().split("\n")
    assert lines[0] == "dialect\tprecision\trecall\tf1\tsupport"
    assert len(lines) == 25  # header + 23 rows + accuracy footer
    assert lines[-1].startswith("# accuracy=")
