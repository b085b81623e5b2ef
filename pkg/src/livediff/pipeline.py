"""Manifest ingestion, configuration, and end-to-end orchestration.

The pipeline wires the stages together: diffuse each clip's frames,
extract a D-K feature per clip, join externally supplied deep vectors by
source id, train or score the fused GMKL model, and evaluate. Everything
here is deterministic given (manifest, config, deep feature file); file
writes go through the atomic helpers so partial artifacts never appear.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .diffusion import CONDUCTANCE_KINDS, DiffusionConfig, diffuse
from .dkfeatures import (
    DEFAULT_LOWD,
    Reducer,
    clip_to_matrix,
    extract_dk,
    fit_reducer,
    kernel_matrix,
    median_heuristic_gamma,
    reduce,
    save_reducer,
)
from .errors import (
    DuplicateId,
    MissingDeepFeature,
    MissingFile,
    ParseError,
    SingleClass,
    UnsupportedFormat,
)
from .featureio import atomic_write_text, read_features, write_json_doc
from .gmkl import GmklConfig, GmklModel, TrainingSet, save_model, score_samples, train
from .imaging import Clip, GrayImage, decode_image
from .metrics import EvalReport, ScoredSample, evaluate, report_doc, report_text, select_threshold

SPLITS = ("train", "devel", "test")
LABELS = ("live", "fake")
REPORT_VERSION = "livediff-report-1"

# extensions the manifest loader knows how to decode
_FORMAT_BY_EXT = {".pgm": "pgm", ".png": "png"}


@dataclass(frozen=True)
class ManifestEntry:
    source_id: str
    split: str
    label: str
    frame_paths: tuple[str, ...]


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]

    def split_entries(self, split: str) -> list[ManifestEntry]:
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        return [e for e in self.entries if e.split == split]


@dataclass(frozen=True)
class PipelineConfig:
    """Aggregated settings; output locations stay with the caller."""

    diffusion: DiffusionConfig = DiffusionConfig()
    lowd: int = DEFAULT_LOWD
    dk_gamma_policy: str | float = "median"
    gmkl: GmklConfig = GmklConfig()
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.lowd, int) and self.lowd >= 1):
            raise ValueError(f"lowd must be a positive integer, got {self.lowd!r}")
        policy = self.dk_gamma_policy
        if isinstance(policy, str):
            if policy != "median":
                raise ValueError(f"dk_gamma policy must be 'median' or a number, got {policy!r}")
        elif not (isinstance(policy, (int, float)) and float(policy) > 0):
            raise ValueError(f"numeric dk_gamma must be positive, got {policy!r}")
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")


def config_echo(cfg: PipelineConfig) -> dict:
    """Flat dotted-key view of the config, frozen into every artifact."""
    dk_gamma = cfg.dk_gamma_policy
    return {
        "diffusion.conductance": cfg.diffusion.conductance,
        "diffusion.iterations": cfg.diffusion.iterations,
        "diffusion.kappa": cfg.diffusion.kappa,
        "diffusion.lambda": cfg.diffusion.lam,
        "dk_gamma": dk_gamma if isinstance(dk_gamma, str) else float(dk_gamma),
        "gmkl.C": cfg.gmkl.C,
        "gmkl.c_step": cfg.gmkl.c_step,
        "gmkl.max_outer": cfg.gmkl.max_outer,
        "gmkl.max_smo_passes": cfg.gmkl.max_smo_passes,
        "gmkl.rbf_gamma": cfg.gmkl.rbf_gamma,
        "gmkl.tol_c": cfg.gmkl.tol_c,
        "gmkl.tol_kkt": cfg.gmkl.tol_kkt,
        "lowd": cfg.lowd,
        "seed": cfg.seed,
    }


def config_from_echo(echo: dict) -> PipelineConfig:
    """Rebuild a PipelineConfig from a persisted echo; inverse of config_echo."""
    try:
        dk_gamma = echo["dk_gamma"]
        return PipelineConfig(
            diffusion=DiffusionConfig(
                iterations=int(echo["diffusion.iterations"]),
                lam=float(echo["diffusion.lambda"]),
                kappa=float(echo["diffusion.kappa"]),
                conductance=str(echo["diffusion.conductance"]),
            ),
            lowd=int(echo["lowd"]),
            dk_gamma_policy=dk_gamma if isinstance(dk_gamma, str) else float(dk_gamma),
            gmkl=GmklConfig(
                C=float(echo["gmkl.C"]),
                rbf_gamma=float(echo["gmkl.rbf_gamma"]),
                max_outer=int(echo["gmkl.max_outer"]),
                max_smo_passes=int(echo["gmkl.max_smo_passes"]),
                tol_kkt=float(echo["gmkl.tol_kkt"]),
                tol_c=float(echo["gmkl.tol_c"]),
                c_step=float(echo["gmkl.c_step"]),
            ),
            seed=int(echo["seed"]),
        )
    except KeyError as exc:
        raise ParseError(f"config echo is missing key {exc.args[0]!r}") from exc


def parse_config(text: str) -> PipelineConfig:
    """key=value lines; '#' comments and blank lines are skipped."""
    diffusion: dict = {}
    gmkl: dict = {}
    top: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", line=lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            _assign_config_key(key, value, diffusion, gmkl, top)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
    return PipelineConfig(
        diffusion=DiffusionConfig(**diffusion),
        gmkl=GmklConfig(**gmkl),
        **top,
    )


def read_config(path: str) -> PipelineConfig:
    if not os.path.exists(path):
        raise MissingFile(f"config file not found: {path}")
    with open(path, "r", encoding="ascii") as fh:
        return parse_config(fh.read())


def _assign_config_key(key: str, value: str, diffusion: dict, gmkl: dict, top: dict) -> None:
    if key == "diffusion.iterations":
        diffusion["iterations"] = int(value)
    elif key == "diffusion.lambda":
        diffusion["lam"] = float(value)
    elif key == "diffusion.kappa":
        diffusion["kappa"] = float(value)
    elif key == "diffusion.conductance":
        diffusion["conductance"] = normalize_conductance(value)
    elif key == "lowd":
        top["lowd"] = int(value)
    elif key == "dk_gamma":
        top["dk_gamma_policy"] = "median" if value == "median" else float(value)
    elif key == "seed":
        top["seed"] = int(value)
    elif key == "gmkl.C":
        gmkl["C"] = float(value)
    elif key == "gmkl.rbf_gamma":
        gmkl["rbf_gamma"] = float(value)
    elif key == "gmkl.max_outer":
        gmkl["max_outer"] = int(value)
    elif key == "gmkl.max_smo_passes":
        gmkl["max_smo_passes"] = int(value)
    elif key == "gmkl.tol_kkt":
        gmkl["tol_kkt"] = float(value)
    elif key == "gmkl.tol_c":
        gmkl["tol_c"] = float(value)
    elif key == "gmkl.c_step":
        gmkl["c_step"] = float(value)
    else:
        raise ValueError(f"unknown config key {key!r}")


def normalize_conductance(value: str) -> str:
    # the CLI accepts the short form
    if value == "exp":
        return "exponential"
    if value in CONDUCTANCE_KINDS:
        return value
    raise ValueError(f"conductance must be exp, exponential, or rational, got {value!r}")


def load_manifest(path: str) -> Manifest:
    """Parse and validate the tab-separated clip index.

    Relative frame paths resolve against the manifest's directory, so a
    corpus stays relocatable as one tree.
    """
    if not os.path.exists(path):
        raise MissingFile(f"manifest not found: {path}")
    base = os.path.dirname(os.path.abspath(path))
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ParseError(
                    f"expected 4 tab-separated fields, got {len(fields)}", line=lineno
                )
            source_id, split, label, paths_field = fields
            if not source_id:
                raise ParseError("empty source_id", line=lineno)
            if split not in SPLITS:
                raise ParseError(f"split must be one of {SPLITS}, got {split!r}", line=lineno)
            if label not in LABELS:
                raise ParseError(f"label must be one of {LABELS}, got {label!r}", line=lineno)
            paths = tuple(p for p in paths_field.split(",") if p)
            if not paths:
                raise ParseError("entry lists no frame paths", line=lineno)
            if source_id in seen:
                raise DuplicateId(f"duplicate source_id {source_id!r} at line {lineno}")
            seen.add(source_id)
            resolved = tuple(
                p if os.path.isabs(p) else os.path.join(base, p) for p in paths
            )
            entries.append(ManifestEntry(source_id, split, label, resolved))
    if not entries:
        raise ParseError("manifest contains no entries")
    absent = [p for e in entries for p in e.frame_paths if not os.path.exists(p)]
    if absent:
        raise MissingFile("missing frame files: " + ", ".join(sorted(set(absent))))
    train_labels = {e.label for e in entries if e.split == "train"}
    if "train" in {e.split for e in entries} and train_labels != set(LABELS):
        raise SingleClass(f"train split carries only {sorted(train_labels)}")
    return Manifest(entries=tuple(entries))


def load_clip(entry: ManifestEntry) -> Clip:
    frames: list[GrayImage] = []
    for p in entry.frame_paths:
        ext = os.path.splitext(p)[1].lower()
        fmt = _FORMAT_BY_EXT.get(ext)
        if fmt is None:
            raise UnsupportedFormat(f"{p}: cannot infer image format from extension")
        with open(p, "rb") as fh:
            frames.append(decode_image(fh.read(), fmt))
    return Clip(frames=tuple(frames), source_id=entry.source_id, label=entry.label)


def _map_clips(fn, items):
    """Order-preserving map; clips are independent so threads are safe."""
    if len(items) < 2:
        return [fn(item) for item in items]
    workers = min(8, os.cpu_count() or 1)
    if workers < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def load_deep_map(path: str) -> dict[str, np.ndarray]:
    kind, _, records = read_features(path)
    if kind != "deep":
        raise UnsupportedFormat(f"{path}: expected deep features, file holds {kind!r}")
    out: dict[str, np.ndarray] = {}
    for source_id, vec in records:
        if source_id in out:
            raise DuplicateId(f"duplicate source_id {source_id!r} in {path}")
        out[source_id] = np.asarray(vec, dtype=np.float64)
    return out


def _join_deep(entries: list[ManifestEntry], deep: dict[str, np.ndarray]) -> np.ndarray:
    missing = [e.source_id for e in entries if e.source_id not in deep]
    if missing:
        raise MissingDeepFeature("no deep feature for: " + ", ".join(missing))
    return np.stack([deep[e.source_id] for e in entries])


@dataclass(frozen=True)
class TrainResult:
    model: GmklModel
    reducer: Reducer
    dk_gamma: float


def run_train(
    manifest: Manifest,
    cfg: PipelineConfig,
    deep_path: str,
    model_path: str | None = None,
    reducer_path: str | None = None,
) -> TrainResult:
    """Fit the reducer and GMKL model on the train split, then persist.

    The reducer is fit on the diffused train matrices, the kernel width
    comes from the configured policy, and both frozen values ride along
    in the model file so prediction needs no config re-derivation.
    """
    entries = manifest.split_entries("train")
    deep = load_deep_map(deep_path)
    deep_mat = _join_deep(entries, deep)

    def diffused_matrix(entry: ManifestEntry):
        clip = load_clip(entry)
        diffused = Clip(
            frames=tuple(diffuse(f, cfg.diffusion) for f in clip.frames),
            source_id=clip.source_id,
            label=clip.label,
        )
        return clip_to_matrix(diffused)

    mats = _map_clips(diffused_matrix, entries)
    reducer = fit_reducer(mats, cfg.lowd)
    reduced = [reduce(m, reducer) for m in mats]
    if isinstance(cfg.dk_gamma_policy, str):
        dk_gamma = median_heuristic_gamma(reduced)
    else:
        dk_gamma = float(cfg.dk_gamma_policy)
    dk_mat = np.stack([kernel_matrix(r, dk_gamma).flat for r in reduced])
    labels = np.array([1.0 if e.label == "live" else -1.0 for e in entries])
    model = train(TrainingSet(dk=dk_mat, deep=deep_mat, labels=labels), cfg.gmkl)
    meta = {
        "dk_gamma": dk_gamma,
        "seed": cfg.seed,
        "config": config_echo(cfg),
        "reducer_fingerprint": reducer.fingerprint,
    }
    if model_path is not None:
        save_model(model_path, model, meta=meta)
    if reducer_path is not None:
        save_reducer(reducer_path, reducer)
    return TrainResult(model=model, reducer=reducer, dk_gamma=dk_gamma)


def run_predict(
    manifest: Manifest,
    split: str,
    model: GmklModel,
    reducer: Reducer,
    dk_gamma: float,
    dcfg: DiffusionConfig,
    deep_path: str,
) -> list[ScoredSample]:
    """One decision value per entry of the split, in manifest order."""
    entries = manifest.split_entries(split)
    if not entries:
        return []
    deep = load_deep_map(deep_path)
    deep_mat = _join_deep(entries, deep)

    def dk_flat(entry: ManifestEntry) -> np.ndarray:
        return extract_dk(load_clip(entry), dcfg, reducer, dk_gamma).flat

    dk_mat = np.stack(_map_clips(dk_flat, entries))
    scores = score_samples(model, dk_mat, deep_mat)
    return [
        ScoredSample(source_id=e.source_id, score=float(s), label=e.label)
        for e, s in zip(entries, scores)
    ]


def run_eval(
    devel: list[ScoredSample], test: list[ScoredSample]
) -> tuple[EvalReport, EvalReport]:
    """Pick the operating point on devel, report both splits at it."""
    threshold = select_threshold(devel)
    return evaluate(devel, threshold), evaluate(test, threshold)


# ---------------------------------------------------------------------------
# score and report artifacts


def _echo_comment_lines(cfg: PipelineConfig) -> list[str]:
    echo = config_echo(cfg)
    return [f"# config.{key}={echo[key]!r}" for key in sorted(echo)]


def write_scores(path: str, samples: list[ScoredSample], cfg: PipelineConfig) -> None:
    lines = _echo_comment_lines(cfg)
    for s in samples:
        lines.append(f"{s.source_id}\t{s.score!r}\t{s.label}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_scores(path: str) -> list[ScoredSample]:
    if not os.path.exists(path):
        raise MissingFile(f"scores file not found: {path}")
    samples: list[ScoredSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"expected source_id<TAB>score<TAB>label, got {line!r}", line=lineno
                )
            try:
                score = float(fields[1])
            except ValueError as exc:
                raise ParseError(f"bad score {fields[1]!r}", line=lineno) from exc
            samples.append(ScoredSample(source_id=fields[0], score=score, label=fields[2]))
    if not samples:
        raise ParseError(f"{path}: no scored samples")
    return samples


def write_report(path_txt: str, path_json: str, report: EvalReport, cfg: PipelineConfig) -> None:
    lines = _echo_comment_lines(cfg) + [report_text(report).rstrip("\n")]
    atomic_write_text(path_txt, "\n".join(lines) + "\n")
    write_json_doc(
        path_json,
        {
            "version": REPORT_VERSION,
            "config": config_echo(cfg),
            "seed": cfg.seed,
            "report": report_doc(report),
        },
    )


@dataclass(frozen=True)
class AllResult:
    train: TrainResult
    devel_report: EvalReport
    test_report: EvalReport
    paths: dict[str, str]


def run_all(manifest: Manifest, cfg: PipelineConfig, deep_path: str, out_dir: str) -> AllResult:
    """train -> predict devel/test -> eval, writing every artifact to out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "model": os.path.join(out_dir, "model.json"),
        "reducer": os.path.join(out_dir, "reducer.json"),
        "scores_devel": os.path.join(out_dir, "scores_devel.tsv"),
        "scores_test": os.path.join(out_dir, "scores_test.tsv"),
        "report_devel_txt": os.path.join(out_dir, "report_devel.txt"),
        "report_devel_json": os.path.join(out_dir, "report_devel.json"),
        "report_test_txt": os.path.join(out_dir, "report_test.txt"),
        "report_test_json": os.path.join(out_dir, "report_test.json"),
    }
    result = run_train(manifest, cfg, deep_path, paths["model"], paths["reducer"])
    devel = run_predict(
        manifest, "devel", result.model, result.reducer, result.dk_gamma, cfg.diffusion, deep_path
    )
    test = run_predict(
        manifest, "test", result.model, result.reducer, result.dk_gamma, cfg.diffusion, deep_path
    )
    write_scores(paths["scores_devel"], devel, cfg)
    write_scores(paths["scores_test"], test, cfg)
    devel_report, test_report = run_eval(devel, test)
    write_report(paths["report_devel_txt"], paths["report_devel_json"], devel_report, cfg)
    write_report(paths["report_test_txt"], paths["report_test_json"], test_report, cfg)
    return AllResult(
        train=result, devel_report=devel_report, test_report=test_report, paths=paths
    )
