"""Command line front end.

Subcommands mirror the pipeline stages: diffuse, extract, train,
predict, eval, and all. Exit codes: 0 on success, 1 on any validation
or input error, 2 when training ran to completion without converging.
"""

from __future__ import annotations

import argparse
import os
import sys

from .diffusion import DiffusionConfig, diffuse
from .dkfeatures import extract_dk, load_reducer
from .errors import LivediffError, MalformedFile
from .featureio import atomic_write_bytes, atomic_write_text, write_features
from .gmkl import load_model, load_model_meta
from .imaging import decode_image, encode_pgm
from .metrics import report_text
from .pipeline import (
    PipelineConfig,
    SPLITS,
    config_from_echo,
    load_clip,
    load_manifest,
    normalize_conductance,
    read_config,
    read_scores,
    run_all,
    run_eval,
    run_predict,
    run_train,
    write_report,
    write_scores,
)

_IMAGE_EXTS = (".pgm", ".png")


class _Parser(argparse.ArgumentParser):
    # usage problems are validation errors, so exit 1 rather than
    # argparse's default of 2 (reserved for convergence failure)
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="livediff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diffuse", help="diffuse frames and write 16-bit PGMs")
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   metavar="PATH", help="frame files or one directory of frames")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--iters", type=int, default=DiffusionConfig().iterations)
    p.add_argument("--lambda", dest="lam", type=float, default=DiffusionConfig().lam)
    p.add_argument("--kappa", type=float, default=DiffusionConfig().kappa)
    p.add_argument("--conductance", default="exp",
                   choices=("exp", "exponential", "rational"))
    p.set_defaults(func=_cmd_diffuse)

    p = sub.add_parser("extract", help="write D-K features for manifest entries")
    p.add_argument("--manifest", required=True)
    p.add_argument("--reducer", required=True, help="fitted reducer file")
    p.add_argument("--model", help="trained model file supplying config and gamma")
    p.add_argument("--gamma", type=float, help="kernel width override")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--split", choices=SPLITS + ("all",), default="all")
    p.add_argument("--out", required=True, help="output feature file")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="fit reducer and GMKL model on the train split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--deep-features", required=True)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="score one split with a trained model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=SPLITS, required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--reducer", required=True)
    p.add_argument("--deep-features", required=True)
    p.add_argument("--out", required=True, help="output scores file")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="select threshold on devel scores, report both splits")
    p.add_argument("--devel", required=True, help="devel scores file")
    p.add_argument("--test", required=True, help="test scores file")
    p.add_argument("--config", help="key=value config file echoed into reports")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("all", help="train, score devel and test, evaluate")
    p.add_argument("--manifest", required=True)
    p.add_argument("--deep-features", required=True)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_all)

    return parser


def _load_config(path: str | None) -> PipelineConfig:
    return read_config(path) if path else PipelineConfig()


def _list_inputs(inputs: list[str]) -> list[str]:
    if len(inputs) == 1 and os.path.isdir(inputs[0]):
        root = inputs[0]
        found = sorted(
            os.path.join(root, name)
            for name in os.listdir(root)
            if os.path.splitext(name)[1].lower() in _IMAGE_EXTS
        )
        if not found:
            raise MalformedFile(f"{root}: no .pgm or .png frames found")
        return found
    return list(inputs)


def _cmd_diffuse(args) -> int:
    cfg = DiffusionConfig(
        iterations=args.iters,
        lam=args.lam,
        kappa=args.kappa,
        conductance=normalize_conductance(args.conductance),
    )
    paths = _list_inputs(args.inputs)
    out_names = {}
    for p in paths:
        stem = os.path.splitext(os.path.basename(p))[0]
        if stem in out_names:
            raise MalformedFile(f"output name collision: {p} and {out_names[stem]}")
        out_names[stem] = p
    os.makedirs(args.out, exist_ok=True)
    for stem, p in out_names.items():
        ext = os.path.splitext(p)[1].lower().lstrip(".")
        with open(p, "rb") as fh:
            img = decode_image(fh.read(), ext)
        atomic_write_bytes(
            os.path.join(args.out, stem + ".pgm"),
            encode_pgm(diffuse(img, cfg), maxval=65535),
        )
    sidecar = (
        f"conductance={cfg.conductance}\n"
        f"iterations={cfg.iterations}\n"
        f"kappa={cfg.kappa!r}\n"
        f"lambda={cfg.lam!r}\n"
    )
    atomic_write_text(os.path.join(args.out, "diffusion-config.txt"), sidecar)
    print(f"diffused {len(out_names)} frame(s) into {args.out}")
    return 0


def _pipeline_settings(args) -> tuple[PipelineConfig, float | None]:
    """Config and gamma for extract: flags win, then model meta, then defaults."""
    cfg = None
    gamma = args.gamma
    if args.model:
        meta = load_model_meta(args.model)
        if "config" not in meta or "dk_gamma" not in meta:
            raise MalformedFile(f"{args.model}: model file lacks pipeline metadata")
        cfg = config_from_echo(meta["config"])
        if gamma is None:
            gamma = float(meta["dk_gamma"])
    if args.config:
        cfg = read_config(args.config)
    return cfg or PipelineConfig(), gamma


def _cmd_extract(args) -> int:
    cfg, gamma = _pipeline_settings(args)
    if gamma is None:
        policy = cfg.dk_gamma_policy
        if isinstance(policy, str):
            raise MalformedFile(
                "extract needs a fixed kernel width: pass --gamma, --model, "
                "or a config with numeric dk_gamma"
            )
        gamma = float(policy)
    manifest = load_manifest(args.manifest)
    reducer = load_reducer(args.reducer)
    entries = (
        list(manifest.entries) if args.split == "all" else manifest.split_entries(args.split)
    )
    if not entries:
        raise MalformedFile(f"manifest has no {args.split!r} entries")
    records = [
        (e.source_id, extract_dk(load_clip(e), cfg.diffusion, reducer, gamma).flat)
        for e in entries
    ]
    write_features(args.out, "dk", records)
    print(f"wrote {len(records)} dk feature(s) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    manifest = load_manifest(args.manifest)
    cfg = _load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.json")
    reducer_path = os.path.join(args.out, "reducer.json")
    result = run_train(manifest, cfg, args.deep_features, model_path, reducer_path)
    print(f"model={model_path}")
    print(f"reducer={reducer_path}")
    print(f"dk_gamma={result.dk_gamma!r}")
    print(f"converged={result.model.converged}")
    return 0 if result.model.converged else 2


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    meta = load_model_meta(args.model)
    if "config" not in meta or "dk_gamma" not in meta:
        raise MalformedFile(f"{args.model}: model file lacks pipeline metadata")
    reducer = load_reducer(args.reducer)
    if meta.get("reducer_fingerprint") != reducer.fingerprint:
        raise MalformedFile(
            f"{args.reducer}: fingerprint does not match the model's training reducer"
        )
    cfg = config_from_echo(meta["config"])
    manifest = load_manifest(args.manifest)
    samples = run_predict(
        manifest, args.split, model, reducer,
        float(meta["dk_gamma"]), cfg.diffusion, args.deep_features,
    )
    write_scores(args.out, samples, cfg)
    print(f"scored {len(samples)} {args.split} sample(s) into {args.out}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    devel = read_scores(args.devel)
    test = read_scores(args.test)
    devel_report, test_report = run_eval(devel, test)
    os.makedirs(args.out, exist_ok=True)
    for name, report in (("devel", devel_report), ("test", test_report)):
        write_report(
            os.path.join(args.out, f"report_{name}.txt"),
            os.path.join(args.out, f"report_{name}.json"),
            report,
            cfg,
        )
        print(f"[{name}]")
        print(_indent(_report_text(report)))
    return 0


def _cmd_all(args) -> int:
    manifest = load_manifest(args.manifest)
    cfg = _load_config(args.config)
    result = run_all(manifest, cfg, args.deep_features, args.out)
    print(f"converged={result.train.model.converged}")
    for name, report in (("devel", result.devel_report), ("test", result.test_report)):
        print(f"[{name}]")
        print(_indent(_report_text(report)))
    return 0 if result.train.model.converged else 2


def _report_text(report) -> str:
    return report_text(report).rstrip("\n")


def _indent(text: str) -> str:
    return "\n".join("  " + line for line in text.splitlines())


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except LivediffError as exc:
        print(f"livediff: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"livediff: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
