import os

import numpy as np
import pytest

from livediff.diffusion import DiffusionConfig
from livediff.errors import (
    DuplicateId,
    MissingDeepFeature,
    MissingFile,
    ParseError,
    SingleClass,
    UnsupportedFormat,
)
from livediff.featureio import write_features
from livediff.gmkl import GmklConfig, load_model, load_model_meta
from livediff.imaging import encode_pgm, GrayImage
from livediff.metrics import ScoredSample
from livediff.pipeline import (
    Manifest,
    ManifestEntry,
    PipelineConfig,
    config_echo,
    config_from_echo,
    load_clip,
    load_deep_map,
    load_manifest,
    normalize_conductance,
    parse_config,
    read_config,
    read_scores,
    run_all,
    run_eval,
    run_predict,
    run_train,
    write_report,
    write_scores,
)

from synthcorpus import make_corpus

FAST_GMKL = GmklConfig(rbf_gamma=0.1, C=2.0)


def fast_config(lowd=4, **kw):
    return PipelineConfig(
        diffusion=DiffusionConfig(iterations=2), lowd=lowd, gmkl=FAST_GMKL, **kw
    )


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    manifest_path, deep_path = make_corpus(
        str(root), n_per_class=8, n_frames=4, size=16, deep_dim=6, seed=1
    )
    return load_manifest(manifest_path), manifest_path, deep_path


def write_frame(path, value=100.0, size=4):
    with open(path, "wb") as fh:
        fh.write(encode_pgm(GrayImage(np.full((size, size), value))))


def write_manifest(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def test_config_echo_roundtrip():
    cfg = fast_config(lowd=6, dk_gamma_policy=0.25, seed=9)
    echo = config_echo(cfg)
    assert echo["diffusion.iterations"] == 2
    assert echo["dk_gamma"] == 0.25
    assert config_from_echo(echo) == cfg

    median = PipelineConfig()
    assert config_from_echo(config_echo(median)) == median

    partial = dict(echo)
    del partial["lowd"]
    with pytest.raises(ParseError):
        config_from_echo(partial)


def test_parse_config_values_and_errors():
    cfg = parse_config(
        "# comment\n"
        "\n"
        "diffusion.iterations = 7\n"
        "diffusion.conductance=exp\n"
        "dk_gamma=0.5\n"
        "gmkl.C=4.0\n"
        "lowd=8\n"
    )
    assert cfg.diffusion.iterations == 7
    assert cfg.diffusion.conductance == "exponential"
    assert cfg.dk_gamma_policy == 0.5
    assert cfg.gmkl.C == 4.0
    assert cfg.lowd == 8
    assert cfg.seed == 0

    with pytest.raises(ParseError) as err:
        parse_config("diffusion.iterations=3\nwhat is this\n")
    assert err.value.line == 2
    with pytest.raises(ParseError):
        parse_config("unknown.key=1\n")
    with pytest.raises(ParseError):
        parse_config("diffusion.iterations=soon\n")


def test_read_config_missing(tmp_path):
    with pytest.raises(MissingFile):
        read_config(str(tmp_path / "nope.cfg"))


def test_normalize_conductance():
    assert normalize_conductance("exp") == "exponential"
    assert normalize_conductance("exponential") == "exponential"
    assert normalize_conductance("rational") == "rational"
    with pytest.raises(ValueError):
        normalize_conductance("quadratic")


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(lowd=0)
    with pytest.raises(ValueError):
        PipelineConfig(dk_gamma_policy="auto")
    with pytest.raises(ValueError):
        PipelineConfig(dk_gamma_policy=-1.0)
    with pytest.raises(ValueError):
        PipelineConfig(seed="zero")


def test_load_manifest_resolves_and_orders(tmp_path):
    write_frame(tmp_path / "a.pgm")
    write_frame(tmp_path / "b.pgm")
    write_manifest(
        tmp_path / "m.tsv",
        [
            "c1\ttrain\tlive\ta.pgm,b.pgm",
            "c2\ttrain\tfake\tb.pgm",
            "c3\tdevel\tlive\ta.pgm",
        ],
    )
    manifest = load_manifest(str(tmp_path / "m.tsv"))
    assert [e.source_id for e in manifest.entries] == ["c1", "c2", "c3"]
    assert manifest.entries[0].frame_paths == (
        str(tmp_path / "a.pgm"),
        str(tmp_path / "b.pgm"),
    )
    assert [e.source_id for e in manifest.split_entries("train")] == ["c1", "c2"]
    assert manifest.split_entries("test") == []
    with pytest.raises(ValueError):
        manifest.split_entries("validation")


@pytest.mark.parametrize(
    "line,exc",
    [
        ("c1\ttrain\tlive", ParseError),
        ("c1\tholdout\tlive\ta.pgm", ParseError),
        ("c1\ttrain\treal\ta.pgm", ParseError),
        ("\ttrain\tlive\ta.pgm", ParseError),
        ("c1\ttrain\tlive\t,", ParseError),
    ],
)
def test_load_manifest_line_errors(tmp_path, line, exc):
    write_frame(tmp_path / "a.pgm")
    write_manifest(tmp_path / "m.tsv", ["c0\ttrain\tfake\ta.pgm", line])
    with pytest.raises(exc) as err:
        load_manifest(str(tmp_path / "m.tsv"))
    if exc is ParseError:
        assert err.value.line == 2


def test_load_manifest_whole_file_errors(tmp_path):
    write_frame(tmp_path / "a.pgm")

    with pytest.raises(MissingFile):
        load_manifest(str(tmp_path / "nope.tsv"))

    write_manifest(tmp_path / "empty.tsv", ["", "   "])
    with pytest.raises(ParseError):
        load_manifest(str(tmp_path / "empty.tsv"))

    write_manifest(
        tmp_path / "dup.tsv",
        ["c1\ttrain\tlive\ta.pgm", "c1\ttrain\tfake\ta.pgm"],
    )
    with pytest.raises(DuplicateId):
        load_manifest(str(tmp_path / "dup.tsv"))

    write_manifest(tmp_path / "gone.tsv", ["c1\ttrain\tlive\tmissing_frame.pgm"])
    with pytest.raises(MissingFile) as err:
        load_manifest(str(tmp_path / "gone.tsv"))
    assert "missing_frame.pgm" in str(err.value)

    write_manifest(
        tmp_path / "mono.tsv",
        ["c1\ttrain\tlive\ta.pgm", "c2\ttrain\tlive\ta.pgm"],
    )
    with pytest.raises(SingleClass):
        load_manifest(str(tmp_path / "mono.tsv"))


def test_load_clip_formats(tmp_path):
    write_frame(tmp_path / "f.pgm", value=37.0)
    entry = ManifestEntry("c", "train", "live", (str(tmp_path / "f.pgm"),))
    clip = load_clip(entry)
    assert clip.source_id == "c"
    assert clip.frames[0].pixels[0, 0] == 37.0

    bad = ManifestEntry("c", "train", "live", (str(tmp_path / "f.tiff"),))
    with pytest.raises(UnsupportedFormat):
        load_clip(bad)


def test_load_deep_map_validation(tmp_path):
    path = tmp_path / "x.ldfv"
    write_features(str(path), "dk", [("a", np.ones(3, dtype=np.float32))])
    with pytest.raises(UnsupportedFormat):
        load_deep_map(str(path))

    write_features(str(path), "deep", [("a", np.ones(3, dtype=np.float32))])
    got = load_deep_map(str(path))
    assert set(got) == {"a"}
    assert got["a"].dtype == np.float64


def test_run_train_outputs_and_determinism(corpus, tmp_path):
    manifest, _, deep_path = corpus
    cfg = fast_config()
    res = run_train(
        manifest,
        cfg,
        deep_path,
        model_path=str(tmp_path / "model.json"),
        reducer_path=str(tmp_path / "reducer.json"),
    )
    assert res.dk_gamma > 0.0
    assert res.reducer.output_dim == 4
    assert res.model.converged

    meta = load_model_meta(str(tmp_path / "model.json"))
    assert meta["dk_gamma"] == res.dk_gamma
    assert meta["reducer_fingerprint"] == res.reducer.fingerprint
    assert config_from_echo(meta["config"]) == cfg

    run_train(
        manifest,
        cfg,
        deep_path,
        model_path=str(tmp_path / "model2.json"),
        reducer_path=str(tmp_path / "reducer2.json"),
    )
    assert (tmp_path / "model.json").read_bytes() == (tmp_path / "model2.json").read_bytes()
    assert (tmp_path / "reducer.json").read_bytes() == (tmp_path / "reducer2.json").read_bytes()


def test_run_train_missing_deep_feature_names_ids(corpus, tmp_path):
    manifest, _, _ = corpus
    sparse = tmp_path / "sparse.ldfv"
    keep = manifest.split_entries("train")[1:]
    write_features(
        str(sparse),
        "deep",
        [(e.source_id, np.ones(6, dtype=np.float32)) for e in keep],
    )
    dropped = manifest.split_entries("train")[0].source_id
    with pytest.raises(MissingDeepFeature) as err:
        run_train(manifest, fast_config(), str(sparse))
    assert dropped in str(err.value)


def test_run_predict_consistency(corpus):
    manifest, _, deep_path = corpus
    cfg = fast_config()
    res = run_train(manifest, cfg, deep_path)

    train_scores = run_predict(
        manifest, "train", res.model, res.reducer, res.dk_gamma, cfg.diffusion, deep_path
    )
    labels = {e.source_id: e.label for e in manifest.split_entries("train")}
    assert [s.source_id for s in train_scores] == list(labels)
    for s in train_scores:
        assert s.label == labels[s.source_id]

    devel = run_predict(
        manifest, "devel", res.model, res.reducer, res.dk_gamma, cfg.diffusion, deep_path
    )
    again = run_predict(
        manifest, "devel", res.model, res.reducer, res.dk_gamma, cfg.diffusion, deep_path
    )
    assert [(s.source_id, s.score) for s in devel] == [(s.source_id, s.score) for s in again]

    empty = Manifest(entries=tuple(manifest.split_entries("train")))
    assert run_predict(
        empty, "test", res.model, res.reducer, res.dk_gamma, cfg.diffusion, deep_path
    ) == []


def test_run_eval_reports_threshold_from_devel():
    devel = [
        ScoredSample("d1", 1.0, "live"),
        ScoredSample("d2", 2.0, "live"),
        ScoredSample("d3", -1.0, "fake"),
        ScoredSample("d4", -2.0, "fake"),
    ]
    test = [ScoredSample("t1", 5.0, "live"), ScoredSample("t2", -0.5, "fake")]
    devel_rep, test_rep = run_eval(devel, test)
    assert devel_rep.hter == 0.0
    assert test_rep.threshold == devel_rep.threshold
    assert test_rep.accuracy == 1.0


def test_scores_roundtrip(tmp_path):
    cfg = fast_config()
    samples = [
        ScoredSample("a", 0.1234567890123456, "live"),
        ScoredSample("b", -2.5e-17, "fake"),
    ]
    path = tmp_path / "scores.tsv"
    write_scores(str(path), samples, cfg)
    text = path.read_text()
    assert text.startswith("# config.")
    back = read_scores(str(path))
    assert back == samples  # repr round-trips floats exactly

    with pytest.raises(MissingFile):
        read_scores(str(tmp_path / "nope.tsv"))


def test_read_scores_errors(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("a\t0.5\n")
    with pytest.raises(ParseError) as err:
        read_scores(str(path))
    assert err.value.line == 1

    path.write_text("a\tfast\tlive\n")
    with pytest.raises(ParseError):
        read_scores(str(path))

    path.write_text("# only comments\n\n")
    with pytest.raises(ParseError):
        read_scores(str(path))


def test_write_report_files(tmp_path):
    cfg = fast_config()
    devel = [
        ScoredSample("d1", 1.0, "live"),
        ScoredSample("d2", -1.0, "fake"),
    ]
    rep, _ = run_eval(devel, devel)
    write_report(str(tmp_path / "r.txt"), str(tmp_path / "r.json"), rep, cfg)
    text = (tmp_path / "r.txt").read_text()
    assert "# config.lowd=4" in text
    assert "hter=0.0" in text

    import json

    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["version"] == "livediff-report-1"
    assert doc["report"]["counts"] == {"tp": 1, "tn": 1, "fp": 0, "fn": 0}
    assert config_from_echo(doc["config"]) == cfg


def test_run_all_writes_identical_artifacts_across_out_dirs(corpus, tmp_path):
    manifest, _, deep_path = corpus
    cfg = fast_config()
    first = run_all(manifest, cfg, deep_path, str(tmp_path / "out1"))
    second = run_all(manifest, cfg, deep_path, str(tmp_path / "out2"))

    assert first.devel_report == second.devel_report
    assert first.test_report == second.test_report
    for key, path in first.paths.items():
        with open(path, "rb") as fh:
            a = fh.read()
        with open(second.paths[key], "rb") as fh:
            b = fh.read()
        assert a == b, key

    devel = read_scores(first.paths["scores_devel"])
    assert all(s.label in ("live", "fake") for s in devel)
    assert first.train.model.converged

    reloaded = load_model(first.paths["model"])
    got = run_predict(
        manifest, "test", reloaded, first.train.reducer, first.train.dk_gamma,
        cfg.diffusion, deep_path,
    )
    persisted = read_scores(first.paths["scores_test"])
    assert [s.score for s in got] == [s.score for s in persisted]
