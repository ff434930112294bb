"""Command-line interface: synth, validate, train, predict, evaluate, explain.

Every subcommand writes only under ``--out``. Failures exit nonzero with one
JSON line on stderr: ``{"error": <kind>, "message": <text>}``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, explain, ingest, metrics, pipeline, synth
from .core import VARIANTS, VariantConfig, validate_dataset

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_FAILURE = 4

CSV_SCHEMAS = f"""\
input files:
  observations CSV   one row per measurement; columns (renamable with --column):
                     object_id, mjd (time), passband (dimension), flux (value),
                     flux_err (uncertainty, >= 0). Rows with non-finite values
                     or negative uncertainty are dropped.
  metadata CSV       object_id, target (class label), plus any extra columns
                     usable as --group-columns.

output files:
  model_seed<S>.json         trained model (format "usast-model",
                             schema_version {pipeline.SCHEMA_VERSION})
  split_seed<S>.json         train/test object ids of each run
  training_summary.json      pool sizes, timings and held-out scores per seed
  predictions.csv            object_id, predicted, p_<class>... (forest only)
  report.json / report.txt   weighted precision/recall/F1, log-loss, grouped
                             and one-vs-rest tables
  explanation_global.json    top-k subsequences with feature type and importance
  explanation_local_<id>.json  per-instance top contributions with windows
  observations.csv / metadata.csv   written by `synth`

variants (--variant): {", ".join(VARIANTS)}
"""


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_FAILURE):
        super().__init__(message)
        self.kind = kind
        self.code = code


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": " ".join(str(message).split())}), file=sys.stderr)
    return code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.exit(_fail("usage", f"{self.prog}: {message}", EXIT_USAGE))


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _column_pair(text):
    key, sep, name = text.partition("=")
    if not sep or key not in ingest.DEFAULT_COLUMNS:
        raise argparse.ArgumentTypeError(f"expected KEY=NAME with KEY in {sorted(ingest.DEFAULT_COLUMNS)}")
    return key, name


def _add_data_args(p, labeled=True):
    p.add_argument("--observations", required=True, type=Path, help="observations CSV")
    if labeled:
        p.add_argument("--metadata", required=True, type=Path, help="metadata CSV with labels")
    p.add_argument("--column", action="append", type=_column_pair, default=[], metavar="KEY=NAME",
                   help="rename an input column, e.g. value=flux_corrected")
    p.add_argument("--window", type=_positive_int, default=5, help="imputation window (odd, default 5)")


def _add_common(p):
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--n-jobs", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker threads for the transform (default: all cores)")
    p.add_argument("-v", "--verbose", action="store_true")


def _bool_flag(p, name, help_text):
    p.add_argument(f"--{name}", dest=name.replace("-", "_"), action=argparse.BooleanOptionalAction,
                   default=None, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="usast",
        description="Uncertainty-aware subsequence-transform classification of uncertain time series.",
        epilog=CSV_SCHEMAS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = argparse.RawDescriptionHelpFormatter

    p = sub.add_parser("synth", help="write a synthetic dataset", epilog=CSV_SCHEMAS, formatter_class=fmt)
    p.add_argument("--preset", choices=sorted(synth.PRESETS), default="separable")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-class", type=_positive_int)
    p.add_argument("--m", type=_positive_int, help="series length")
    p.add_argument("--n-dims", type=_positive_int)
    _add_common(p)

    p = sub.add_parser("validate", help="check a dataset for invariant violations", epilog=CSV_SCHEMAS,
                       formatter_class=fmt)
    _add_data_args(p)
    p.add_argument("--relative-time", action="store_true", help="grid on time since each object's first point")
    _add_common(p)

    p = sub.add_parser("train", help="train one model per seed", epilog=CSV_SCHEMAS, formatter_class=fmt)
    _add_data_args(p)
    p.add_argument("--variant", choices=list(VARIANTS), help="preset for the three variant flags")
    _bool_flag(p, "use-uncertainty", "propagate uncertainties (u variants)")
    _bool_flag(p, "drop-duplicates", "epsilon-similarity deduplication of the pool (d variants)")
    _bool_flag(p, "count-frequency", "add occurrence-count features (dc variants; needs deduplication)")
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--count-epsilon", type=float, help="count threshold (default: --epsilon)")
    p.add_argument("--min-length", type=_positive_int, default=20)
    p.add_argument("--max-length", type=_positive_int, default=60)
    p.add_argument("--length-step", type=_positive_int, default=10)
    p.add_argument("-k", "--k-per-class", type=_positive_int, default=1, help="reference instances per class")
    p.add_argument("--no-normalize", action="store_true", help="do not divide distances by window length")
    p.add_argument("--znormalize", action="store_true", help="z-normalize values of every compared window")
    p.add_argument("--split", type=float, default=0.8, help="training fraction; 1 trains on everything")
    p.add_argument("--random-split", action="store_true", help="plain random split instead of stratified")
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--classifier", choices=("forest", "ridge"), default="forest")
    p.add_argument("--n-trees", type=_positive_int, default=100)
    p.add_argument("--relative-time", action="store_true", help="grid on time since each object's first point")
    p.add_argument("--group-columns", nargs="*", default=[])
    p.add_argument("--positive-class")
    _add_common(p)

    p = sub.add_parser("predict", help="label new objects", epilog=CSV_SCHEMAS, formatter_class=fmt)
    p.add_argument("--model", required=True, type=Path)
    _add_data_args(p, labeled=False)
    _add_common(p)

    p = sub.add_parser("evaluate", help="score a model on labeled data", epilog=CSV_SCHEMAS, formatter_class=fmt)
    p.add_argument("--model", required=True, type=Path)
    _add_data_args(p)
    p.add_argument("--split-file", type=Path, help="restrict to the test ids of a split_seed<S>.json")
    p.add_argument("--group-columns", nargs="*", default=[])
    p.add_argument("--positive-class")
    _add_common(p)

    p = sub.add_parser("explain", help="global and local explanations", epilog=CSV_SCHEMAS, formatter_class=fmt)
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--top-k", type=_positive_int, default=20, help="global entries")
    p.add_argument("--top", type=_positive_int, default=3, help="local entries per instance")
    p.add_argument("--observations", type=Path, help="objects to explain locally")
    p.add_argument("--column", action="append", type=_column_pair, default=[], metavar="KEY=NAME")
    p.add_argument("--window", type=_positive_int, default=5)
    p.add_argument("--ids", nargs="*", help="only these object ids (default: all)")
    _add_common(p)
    return parser


# --- helpers -----------------------------------------------------------------

def _columns(args):
    return dict(args.column)


def _require(path: Path, what: str):
    if not path.is_file():
        raise CliError("missing-file", f"{what} not found: {path}", EXIT_INPUT)


def _load_labeled(args, grid=None):
    _require(args.observations, "observations CSV")
    _require(args.metadata, "metadata CSV")
    try:
        return ingest.load_dataset(args.observations, args.metadata, _columns(args), grid, args.window,
                                   getattr(args, "relative_time", False))
    except ValueError as err:
        raise CliError("bad-input", str(err), EXIT_INPUT) from err


def _load_model(path: Path):
    _require(path, "model file")
    try:
        return pipeline.load_model(path)
    except pipeline.ModelFormatError as err:
        raise CliError("bad-model", str(err), EXIT_INPUT) from err


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=1, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _report_payload(reports: dict) -> dict:
    out = {"overall": reports["overall"].to_dict()}
    if "grouped" in reports:
        out["grouped"] = [r.to_dict() for r in reports["grouped"].values()]
    if "one_vs_rest" in reports:
        out["one_vs_rest"] = vars(reports["one_vs_rest"])
    return out


def _report_text(reports: dict, group_columns) -> str:
    parts = [metrics.format_report(reports["overall"])]
    if "grouped" in reports:
        parts.append(metrics.format_grouped_table(reports["grouped"], group_columns))
    if "one_vs_rest" in reports:
        b = reports["one_vs_rest"]
        parts.append(f"one-vs-rest {b.positive_class}: precision {b.precision:.4f}  recall {b.recall:.4f}  f1 {b.f1:.4f}")
    return "\n\n".join(parts) + "\n"


def config_from_args(args) -> VariantConfig:
    flags = dict(zip(("use_uncertainty", "drop_duplicates", "count_frequency"),
                     VARIANTS[args.variant] if args.variant else (True, True, False)))
    for name in flags:
        if getattr(args, name) is not None:
            flags[name] = getattr(args, name)
    if flags["count_frequency"] and not flags["drop_duplicates"]:
        raise CliError("usage", "--count-frequency requires --drop-duplicates", EXIT_USAGE)
    if args.min_length > args.max_length:
        raise CliError("usage", "--min-length exceeds --max-length", EXIT_USAGE)
    lengths = tuple(range(args.min_length, args.max_length + 1, args.length_step))
    try:
        return VariantConfig(
            **flags,
            epsilon=args.epsilon,
            length_list=lengths,
            k_per_class=args.k_per_class,
            normalize_by_length=not args.no_normalize,
            znormalize_windows=args.znormalize,
            count_epsilon=args.count_epsilon,
        )
    except ValueError as err:
        raise CliError("usage", str(err), EXIT_USAGE) from err


# --- subcommands -------------------------------------------------------------

def cmd_synth(args) -> int:
    factory = synth.PRESETS[args.preset]
    kwargs = {"seed": args.seed}
    for name in ("n_per_class", "m", "n_dims"):
        if getattr(args, name) is not None:
            kwargs[name] = getattr(args, name)
    try:
        dataset = synth.generate(factory(**kwargs))
    except ValueError as err:
        raise CliError("usage", str(err), EXIT_USAGE) from err
    ingest.write_long_csv(dataset, args.out / "observations.csv", args.out / "metadata.csv")
    print(f"wrote {len(dataset)} objects ({args.preset}) to {args.out}")
    return 0


def cmd_validate(args) -> int:
    dataset, grid = _load_labeled(args)
    problems = validate_dataset(dataset)
    for p in problems:
        print(p)
    if problems:
        raise CliError("invalid-dataset", f"{len(problems)} violation(s)", EXIT_INPUT)
    print(f"ok: {len(dataset)} objects, {len(dataset.dim_names)} dimension(s), {grid.n_points} grid points")
    return 0


def cmd_train(args) -> int:
    config = config_from_args(args)
    if not 0 < args.split <= 1:
        raise CliError("usage", "--split must be in (0, 1]", EXIT_USAGE)
    dataset, grid = _load_labeled(args)
    params = {"n_trees": args.n_trees} if args.classifier == "forest" else {}
    summary = {"variant": config.variant_name, "config": config.to_dict(), "grid": grid.to_dict(), "runs": []}
    for seed in args.seeds:
        cfg = config.with_(seed=seed)
        if args.split == 1:
            tr, te = np.arange(len(dataset)), np.arange(0)
        elif args.random_split:
            tr, te = pipeline.random_split(len(dataset), args.split, seed)
        else:
            tr, te = pipeline.stratified_split(dataset.labels, args.split, seed)
        t0 = time.perf_counter()
        try:
            model = pipeline.train(dataset.subset(tr), cfg, args.classifier, params, grid, args.n_jobs)
        except pipeline.StageError as err:
            raise CliError(f"train-{err.stage}", str(err)) from err
        run = {"seed": seed, **model.summary, "timings": dict(model.timings)}
        model_path = args.out / f"model_seed{seed}.json"
        pipeline.save_model(model, model_path)
        _write_json(args.out / f"split_seed{seed}.json", {
            "seed": seed,
            "train": [dataset.instances[i].id for i in tr],
            "test": [dataset.instances[i].id for i in te],
        })
        if len(te):
            reports = pipeline.evaluate(model, dataset.subset(te), args.group_columns, args.positive_class, args.n_jobs)
            run["held_out"] = _report_payload(reports)
            run["timings"]["predict"] = model.timings.get("predict")
        run["timings"]["total"] = time.perf_counter() - t0
        summary["runs"].append(run)
        score = run.get("held_out", {}).get("overall", {}).get("f1")
        print(f"seed {seed}: pool {len(model.pool)}/{model.pool.n_candidates}"
              + (f", held-out F1 {score:.4f}" if score is not None else "") + f" -> {model_path}")
    _write_json(args.out / "training_summary.json", summary)
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    if model.grid is None:
        raise CliError("bad-model", "model has no resampling grid; predict from preprocessed data in Python instead")
    _require(args.observations, "observations CSV")
    try:
        instances = ingest.instances_from_observations(args.observations, model.grid, _columns(args), args.window)
        labels, proba = pipeline.predict(model, instances, args.n_jobs)
    except ValueError as err:
        raise CliError("bad-input", str(err), EXIT_INPUT) from err
    with open(args.out / "predictions.csv", "w") as fh:
        head = ["object_id", "predicted"] + ([f"p_{c}" for c in model.classes] if proba is not None else [])
        fh.write(",".join(head) + "\n")
        for i, (inst, label) in enumerate(zip(instances, labels)):
            cells = [inst.id, label] + ([repr(float(p)) for p in proba[i]] if proba is not None else [])
            fh.write(",".join(cells) + "\n")
    print(f"wrote {len(instances)} predictions to {args.out / 'predictions.csv'}")
    return 0


def cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    dataset, _ = _load_labeled(args, model.grid)
    if args.split_file:
        _require(args.split_file, "split file")
        wanted = set(json.loads(args.split_file.read_text())["test"])
        dataset = dataset.subset([i for i, inst in enumerate(dataset.instances) if inst.id in wanted])
        if len(dataset) == 0:
            raise CliError("bad-input", "no test objects of the split file are in the data", EXIT_INPUT)
    try:
        reports = pipeline.evaluate(model, dataset, args.group_columns, args.positive_class, args.n_jobs)
    except (KeyError, ValueError) as err:
        raise CliError("bad-input", str(err), EXIT_INPUT) from err
    _write_json(args.out / "report.json", _report_payload(reports))
    text = _report_text(reports, args.group_columns)
    (args.out / "report.txt").write_text(text)
    print(text, end="")
    return 0


def cmd_explain(args) -> int:
    model = _load_model(args.model)
    try:
        g = explain.explain_global(model.classifier, model.pool, model.layout, args.top_k)
    except ValueError as err:
        raise CliError("bad-model", str(err), EXIT_INPUT) from err
    (args.out / "explanation_global.json").write_text(g.to_json() + "\n")
    n_local = 0
    if args.observations is not None:
        if not hasattr(model.classifier, "contributions"):
            raise CliError("usage", "local explanations need a forest model", EXIT_USAGE)
        if model.grid is None:
            raise CliError("bad-model", "model has no resampling grid")
        _require(args.observations, "observations CSV")
        try:
            instances = ingest.instances_from_observations(args.observations, model.grid, _columns(args), args.window)
        except ValueError as err:
            raise CliError("bad-input", str(err), EXIT_INPUT) from err
        if args.ids is not None:
            unknown = set(args.ids) - {i.id for i in instances}
            if unknown:
                raise CliError("bad-input", f"unknown object id(s): {sorted(unknown)}", EXIT_INPUT)
            instances = [i for i in instances if i.id in set(args.ids)]
        for inst in instances:
            le = explain.explain_local(model.classifier, model.pool, model.layout, inst, model.config,
                                       args.top, model.classes)
            safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in inst.id)
            (args.out / f"explanation_local_{safe}.json").write_text(le.to_json() + "\n")
            n_local += 1
    print(f"wrote global explanation ({len(g.entries)} entries) and {n_local} local explanation(s) to {args.out}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "validate": cmd_validate,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args)
    except CliError as err:
        return _fail(err.kind, str(err), err.code)
    except OSError as err:
        return _fail("io", str(err), EXIT_FAILURE)
    except Exception as err:  # last resort: keep the one-line error contract
        return _fail(type(err).__name__, str(err), EXIT_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
