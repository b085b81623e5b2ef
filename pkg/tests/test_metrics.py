import math

import numpy as np
import pytest

from livediff.errors import MissingClass
from livediff.metrics import (
    EvalReport,
    ScoredSample,
    evaluate,
    report_doc,
    report_text,
    select_threshold,
)

from oracles import threshold_scan


def scored(pairs):
    return [ScoredSample(f"s{i}", float(v), lab) for i, (v, lab) in enumerate(pairs)]


def test_scored_sample_validation():
    with pytest.raises(ValueError):
        ScoredSample("a", float("nan"), "live")
    with pytest.raises(ValueError):
        ScoredSample("a", math.inf, "fake")
    with pytest.raises(ValueError):
        ScoredSample("a", 0.5, "genuine")


def test_evaluate_hand_counts():
    samples = scored(
        [(0.5, "live"), (1.2, "live"), (-0.1, "live"), (-0.3, "fake"), (0.1, "fake")]
    )
    rep = evaluate(samples, 0.0)
    assert (rep.tp, rep.tn, rep.fp, rep.fn) == (2, 1, 1, 1)
    assert rep.accuracy == 0.6
    assert rep.far == 0.5
    assert rep.frr == pytest.approx(1.0 / 3.0)
    assert rep.hter == pytest.approx((0.5 + 1.0 / 3.0) / 2.0)


def test_evaluate_tie_rejects():
    rep = evaluate(scored([(0.0, "live"), (-1.0, "fake")]), 0.0)
    assert rep.fn == 1 and rep.tp == 0
    assert rep.frr == 1.0


def test_hter_is_mean_of_rates():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(4, 40))
        labels = rng.choice(["live", "fake"], size=n)
        if len(set(labels)) < 2:
            continue
        samples = scored(zip(rng.normal(size=n), labels))
        rep = evaluate(samples, float(rng.normal()))
        assert rep.hter == (rep.far + rep.frr) / 2
        assert 0.0 <= rep.far <= 1.0 and 0.0 <= rep.frr <= 1.0


def test_hter_point_fifteen_case():
    lives = [(1.0, "live")] * 9 + [(-1.0, "live")]
    fakes = [(-1.0, "fake")] * 8 + [(1.0, "fake")] * 2
    rep = evaluate(scored(lives + fakes), 0.0)
    assert rep.far == 0.2
    assert rep.frr == 0.1
    assert rep.hter == pytest.approx(0.15, abs=1e-12)


def test_rates_are_none_when_class_absent():
    rep = evaluate(scored([(0.4, "live"), (0.6, "live")]), 0.5)
    assert rep.far is None and rep.hter is None
    assert rep.frr == 0.5

    rep = evaluate(scored([(0.4, "fake")]), 0.5)
    assert rep.frr is None and rep.hter is None
    assert rep.far == 0.0

    with pytest.raises(ValueError):
        evaluate([], 0.0)


def test_rate_monotonicity_in_threshold():
    rng = np.random.default_rng(1)
    samples = scored(
        zip(rng.normal(size=30), rng.choice(["live", "fake"], size=30))
    )
    thresholds = np.linspace(-3, 3, 61)
    reports = [evaluate(samples, float(t)) for t in thresholds]
    for prev, cur in zip(reports, reports[1:]):
        assert cur.far <= prev.far
        assert cur.frr >= prev.frr


def test_evaluate_permutation_invariant():
    rng = np.random.default_rng(2)
    samples = scored(zip(rng.normal(size=20), ["live", "fake"] * 10))
    rep = evaluate(samples, 0.1)
    shuffled = list(samples)
    rng.shuffle(shuffled)
    assert evaluate(shuffled, 0.1) == rep


def test_select_threshold_midpoint_example():
    samples = scored([(1.0, "live"), (3.0, "live"), (0.0, "fake"), (2.0, "fake")])
    t = select_threshold(samples)
    assert t == 1.5
    rep = evaluate(samples, t)
    assert rep.far == rep.frr == 0.5


def test_select_threshold_perfect_separation():
    samples = scored([(2.0, "live"), (3.0, "live"), (-2.0, "fake"), (-1.0, "fake")])
    t = select_threshold(samples)
    rep = evaluate(samples, t)
    assert rep.far == rep.frr == 0.0
    assert rep.hter == 0.0
    assert -1.0 <= t <= 2.0


def test_select_threshold_matches_exhaustive_scan():
    rng = np.random.default_rng(3)
    for _ in range(15):
        n = int(rng.integers(4, 30))
        labels = ["live", "fake"] * (n // 2) + ["live"] * (n % 2)
        values = rng.normal(size=n)
        if rng.random() < 0.3:
            values = np.round(values)  # force score ties
        samples = scored(zip(values, labels))
        got = select_threshold(samples)
        want = threshold_scan([s.score for s in samples], [s.label for s in samples])
        assert got == want


def test_select_threshold_affine_equivariance():
    rng = np.random.default_rng(4)
    values = rng.normal(size=16)
    labels = ["live", "fake"] * 8
    samples = scored(zip(values, labels))
    t = select_threshold(samples)
    base = evaluate(samples, t)

    mapped = scored(zip(2.5 * values + 1.0, labels))
    mt = select_threshold(mapped)
    rep = evaluate(mapped, mt)
    assert (rep.far, rep.frr) == (base.far, base.frr)


def test_select_threshold_missing_class():
    with pytest.raises(MissingClass):
        select_threshold(scored([(0.1, "live"), (0.2, "live")]))
    with pytest.raises(MissingClass):
        select_threshold(scored([(0.1, "fake")]))


def test_report_text_rendering():
    rep = EvalReport(
        threshold=0.5, accuracy=0.75, far=0.25, frr=None, hter=None, tp=3, tn=3, fp=1, fn=1
    )
    text = report_text(rep)
    assert text == (
        "threshold=0.5\n"
        "accuracy=0.75\n"
        "far=0.25\n"
        "frr=undefined\n"
        "hter=undefined\n"
        "tp=3\ntn=3\nfp=1\nfn=1\n"
    )


def test_report_doc_rendering():
    rep = EvalReport(
        threshold=-math.inf, accuracy=1.0, far=0.0, frr=0.0, hter=0.0, tp=2, tn=2, fp=0, fn=0
    )
    doc = report_doc(rep)
    assert doc["threshold"] == "-inf"
    assert doc["counts"] == {"tp": 2, "tn": 2, "fp": 0, "fn": 0}
    finite = report_doc(
        EvalReport(threshold=0.25, accuracy=0.5, far=None, frr=1.0, hter=None, tp=0, tn=0, fp=0, fn=2)
    )
    assert finite["threshold"] == 0.25
    assert finite["far"] is None
