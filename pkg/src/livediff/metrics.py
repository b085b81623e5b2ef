"""Anti-spoofing error rates and threshold selection.

A sample is accepted as live when its score strictly exceeds the
threshold; a tie classifies as fake, matching the classifier's rule. FAR
is the fraction of fakes accepted, FRR the fraction of lives rejected,
and HTER their mean. When a class is absent the corresponding rate is
carried as an explicit None, never as NaN arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MissingClass

LABELS = ("live", "fake")


@dataclass(frozen=True)
class ScoredSample:
    source_id: str
    score: float
    label: str

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"score for {self.source_id!r} is not finite")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")


@dataclass(frozen=True)
class EvalReport:
    threshold: float
    accuracy: float
    far: float | None
    frr: float | None
    hter: float | None
    tp: int  # live accepted
    tn: int  # fake rejected
    fp: int  # fake accepted
    fn: int  # live rejected


def evaluate(samples: list[ScoredSample], threshold: float) -> EvalReport:
    """Score counts and rates at a fixed threshold."""
    if not samples:
        raise ValueError("cannot evaluate an empty sample list")
    tp = tn = fp = fn = 0
    for s in samples:
        accepted = s.score > threshold
        if s.label == "live":
            tp += accepted
            fn += not accepted
        else:
            fp += accepted
            tn += not accepted
    far = fp / (fp + tn) if (fp + tn) > 0 else None
    frr = fn / (fn + tp) if (fn + tp) > 0 else None
    hter = (far + frr) / 2 if far is not None and frr is not None else None
    return EvalReport(
        threshold=threshold,
        accuracy=(tp + tn) / len(samples),
        far=far,
        frr=frr,
        hter=hter,
        tp=int(tp),
        tn=int(tn),
        fp=int(fp),
        fn=int(fn),
    )


def select_threshold(devel: list[ScoredSample]) -> float:
    """Equal-error-rate operating point on the development scores.

    Candidates are the midpoints between adjacent sorted scores plus
    -inf/+inf sentinels; the winner minimizes |FAR - FRR|, with ties
    broken by lower HTER and then by lower threshold.
    """
    live = np.sort([s.score for s in devel if s.label == "live"])
    fake = np.sort([s.score for s in devel if s.label == "fake"])
    if live.size == 0 or fake.size == 0:
        raise MissingClass("development set must contain both classes")

    scores = np.unique(np.concatenate([live, fake]))
    candidates = [-math.inf]
    candidates.extend(((scores[:-1] + scores[1:]) / 2.0).tolist())
    candidates.append(math.inf)

    best = None
    for threshold in candidates:
        far = float(fake.size - np.searchsorted(fake, threshold, side="right")) / fake.size
        frr = float(np.searchsorted(live, threshold, side="right")) / live.size
        key = (abs(far - frr), (far + frr) / 2.0, threshold)
        if best is None or key < best:
            best = key
    return best[2]


def report_text(report: EvalReport) -> str:
    """key=value rendering, one field per line; undefined rates print as such."""

    def fmt(value):
        return "undefined" if value is None else repr(float(value))

    lines = [
        f"threshold={report.threshold!r}",
        f"accuracy={report.accuracy!r}",
        f"far={fmt(report.far)}",
        f"frr={fmt(report.frr)}",
        f"hter={fmt(report.hter)}",
        f"tp={report.tp}",
        f"tn={report.tn}",
        f"fp={report.fp}",
        f"fn={report.fn}",
    ]
    return "\n".join(lines) + "\n"


def report_doc(report: EvalReport) -> dict:
    """JSON-compatible rendering; infinities become strings, undefined null."""
    threshold = report.threshold
    if math.isinf(threshold):
        threshold = "inf" if threshold > 0 else "-inf"
    return {
        "threshold": threshold,
        "accuracy": report.accuracy,
        "far": report.far,
        "frr": report.frr,
        "hter": report.hter,
        "counts": {"tp": report.tp, "tn": report.tn, "fp": report.fp, "fn": report.fn},
    }
