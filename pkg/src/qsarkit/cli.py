"""Command-line interface.

Exit codes: 0 success, 1 pipeline error, 2 configuration/usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .data_ingest import load_dataset, load_descriptors, write_dataset, write_descriptors
from .errors import ConfigError, QSARError, StageError
from .feature_select import SAConfig, sa_select_chains
from .pipeline import RunConfig, compare_methods, run, stage_seed
from .preprocess import preprocess
from .regression import ModelSpec, choose_components, fit_dataset, load_model, predict, save_model
from .report_emit import render_table, table_column
from .splitter import SplitAssignment, sphere_exclusion_split, tune_dissimilarity
from .validation import evaluate_gate, validate_model, y_randomization

RUN_KEYS = (
    "activity_path",
    "descriptor_path",
    "abs_ic50",
    "constant_tol",
    "corr_threshold",
    "dissimilarity",
    "test_size",
    "method",
    "k",
    "descriptors",
    "n_components",
    "max_components",
    "t_initial",
    "cooling",
    "steps_per_temp",
    "t_min",
    "chains",
    "select_on_all",
    "n_randomizations",
)


class UsageError(Exception):
    pass


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _data_args(p, required=True):
    p.add_argument("--activity", dest="activity_path", required=required, help="activity CSV (id,ic50 and/or pic50)")
    p.add_argument("--descriptors", dest="descriptor_path", required=required, help="descriptor CSV (id,<names>)")
    p.add_argument("--abs-ic50", action="store_true", default=None, help="take |IC50| for negative entries")


def _split_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dissimilarity", type=float, help="sphere-exclusion dissimilarity level d")
    g.add_argument("--test-size", type=int, help="tune d until the test set has this many compounds")


def _preprocess_args(p):
    p.add_argument("--constant-tol", type=float, default=None)
    p.add_argument("--corr-threshold", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    def global_flags(default):
        # subcommands repeat the global flags; SUPPRESS keeps them from
        # overwriting values given before the subcommand name
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--seed", type=int, default=default, help="master seed (default 0)")
        g.add_argument("--out-dir", default=default, help="output directory")
        g.add_argument("--config", default=default, help="flat key = value config file")
        g.add_argument("-v", "--verbose", action="store_true", default=default or False)
        return g

    common = global_flags(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="qsarkit",
        description="QSAR model building: preprocessing, sphere-exclusion splits, "
        "simulated-annealing selection, MLR/PCR/PLS and validation.",
        parents=[global_flags(None)],
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="join activity and descriptor tables")
    _data_args(p)

    p = sub.add_parser("preprocess", parents=[common], help="drop constant and correlated descriptors")
    _data_args(p)
    _preprocess_args(p)

    p = sub.add_parser("split", parents=[common], help="sphere-exclusion train/test split")
    _data_args(p)
    _split_args(p)

    p = sub.add_parser("select", parents=[common], help="simulated-annealing descriptor selection")
    _data_args(p)
    p.add_argument("--split", required=True, help="split.json from the split command")
    p.add_argument("--method", default="PLS", choices=["MLR", "PCR", "PLS"], type=str.upper)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-components", type=int)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--t-initial", type=float, default=1.0)
    p.add_argument("--cooling", type=float, default=0.9)
    p.add_argument("--steps-per-temp", type=int, default=50)
    p.add_argument("--t-min", type=float, default=1e-3)
    p.add_argument("--select-on-all", action="store_true")

    p = sub.add_parser("fit", parents=[common], help="fit an MLR/PCR/PLS model on the training set")
    _data_args(p)
    p.add_argument("--split", required=True)
    p.add_argument("--method", default="PLS", choices=["MLR", "PCR", "PLS"], type=str.upper)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--use", help="comma-separated descriptor names")
    g.add_argument("--selection", help="selection.json from the select command")
    p.add_argument("--n-components", type=int, help="default: LOO-optimal")
    p.add_argument("--max-components", type=int, default=5)

    p = sub.add_parser("validate", parents=[common], help="r2, q2, pred_r2, F, se and the predictivity gate")
    _data_args(p)
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--table2", action="store_true", help="print the statistics-table layout")
    p.add_argument("--randomization", help="randomization.json to include in --table2 output")

    p = sub.add_parser("randomize", parents=[common], help="Y-randomization test")
    _data_args(p)
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--iterations", type=int, default=100)

    p = sub.add_parser("predict", parents=[common], help="predict with a fitted or published model")
    p.add_argument("--model", required=True)
    p.add_argument("--descriptors", dest="descriptor_path", required=True)

    for name, helptext in (("run", "full pipeline"), ("compare", "MLR, PCR and PLS side by side")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        _data_args(p, required=False)
        _split_args(p)
        _preprocess_args(p)
        p.add_argument("--method", type=str.upper, choices=["MLR", "PCR", "PLS"])
        g = p.add_mutually_exclusive_group()
        g.add_argument("--k", type=int)
        g.add_argument("--use", dest="descriptors", help="comma-separated descriptor names")
        p.add_argument("--n-components", type=int)
        p.add_argument("--max-components", type=int)
        p.add_argument("--chains", type=int)
        p.add_argument("--n-randomizations", type=int)
        p.add_argument("--select-on-all", action="store_true", default=None)
    return parser


def _out(args) -> Path:
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _dataset(args):
    return load_dataset(args.activity_path, args.descriptor_path, abs_ic50=bool(args.abs_ic50))


def _train_test(args):
    ds = _dataset(args)
    split = SplitAssignment.from_dict(json.loads(Path(args.split).read_text()))
    test = ds.subset(split.test_ids) if split.test_ids else None
    return ds, split, ds.subset(split.train_ids), test


def cmd_ingest(args):
    ds = _dataset(args)
    out = _out(args)
    write_dataset(ds, out / "activity.csv", out / "descriptors.csv")
    print(f"{len(ds)} compounds x {len(ds.names)} descriptors")


def cmd_preprocess(args):
    ds = _dataset(args)
    kw = {}
    if args.constant_tol is not None:
        kw["tol"] = args.constant_tol
    if args.corr_threshold is not None:
        kw["threshold"] = args.corr_threshold
    matrix, report = preprocess(ds.matrix, **kw)
    out = _out(args)
    _write_json(out / "preprocess.json", report.to_dict())
    write_descriptors(matrix, out / "descriptors_preprocessed.csv")
    print(f"kept {len(report.kept)} of {len(ds.names)} descriptors")


def cmd_split(args):
    ds = _dataset(args)
    if (args.dissimilarity is None) == (args.test_size is None):
        raise UsageError("give exactly one of --dissimilarity and --test-size")
    if args.dissimilarity is not None:
        split = sphere_exclusion_split(ds, args.dissimilarity)
    else:
        _, split = tune_dissimilarity(ds, args.test_size)
    doc = split.to_dict()
    doc["activity_ranges"] = split.activity_ranges(ds)
    _write_json(_out(args) / "split.json", doc)
    print(f"train {split.n_train}, test {split.n_test}, d = {split.dissimilarity:.6g}")


def cmd_select(args):
    ds, _, train, _ = _train_test(args)
    pool = ds if args.select_on_all else train
    cfg = SAConfig(args.k, args.t_initial, args.cooling, args.steps_per_temp, args.t_min, stage_seed(_seed(args), "select"))
    subset, trace, seeds = sa_select_chains(pool, args.method, args.k, cfg, args.chains, n_components=args.n_components)
    out = _out(args)
    trace.to_csv(out / "sa_trace.csv")
    _write_json(out / "selection.json", {"descriptors": list(subset), "q2": trace[-1].best, "chain_seeds": seeds})
    print(", ".join(subset))


def cmd_fit(args):
    _, _, train, _ = _train_test(args)
    if args.use:
        names = tuple(n.strip() for n in args.use.split(",") if n.strip())
    else:
        names = tuple(json.loads(Path(args.selection).read_text())["descriptors"])
    c = args.n_components
    if args.method != "MLR" and c is None:
        c = choose_components(train.matrix.columns(names), train.activity, args.method, min(args.max_components, len(names)))
    model = fit_dataset(ModelSpec(args.method, names, c), train)
    save_model(model, _out(args) / "model.json")
    print(model.equation())


def cmd_validate(args):
    _, _, train, test = _train_test(args)
    model = load_model(args.model)
    report = validate_model(model, train, test)
    gate = evaluate_gate(report)
    out = _out(args)
    _write_json(out / "validation.json", report.to_dict())
    _write_json(out / "gate.json", gate.to_dict())
    if args.table2:
        rand = json.loads(Path(args.randomization).read_text()) if args.randomization else None
        text, _ = render_table({model.spec.method: table_column(report, rand)})
        print(text, end="")
    else:
        print(json.dumps(report.to_dict(), indent=2))
    print("gate:", "passes" if gate.passes else "fails " + ", ".join(gate.failed_criteria))


def cmd_randomize(args):
    _, _, train, _ = _train_test(args)
    model = load_model(args.model)
    result = y_randomization(train, model.spec, args.iterations, stage_seed(_seed(args), "randomize"))
    _write_json(_out(args) / "randomization.json", result.to_dict())
    print(f"Z(r2) = {result.z_score_r2:.4f}, Z(q2) = {result.z_score_q2:.4f}")


def cmd_predict(args):
    model = load_model(args.model)
    matrix = load_descriptors(args.descriptor_path)
    preds = predict(model, matrix)
    lines = ["id,predicted"] + [f"{cid},{p!r}" for cid, p in zip(matrix.compound_ids, map(float, preds))]
    text = "\n".join(lines) + "\n"
    if args.out_dir:
        (_out(args) / "predictions.csv").write_text(text, encoding="utf-8")
    print(text, end="")


def _run_config(args) -> RunConfig:
    values = {k: getattr(args, k, None) for k in RUN_KEYS}
    values["out_dir"] = args.out_dir
    values["seed"] = args.seed
    if args.config:
        return RunConfig.from_file(args.config, **values)
    return RunConfig.from_mapping({k: v for k, v in values.items() if v is not None})


def cmd_run(args):
    art = run(_run_config(args))
    print(art.model.equation())
    print("gate:", "passes" if art.gate.passes else "fails " + ", ".join(art.gate.failed_criteria))


def cmd_compare(args):
    config = _run_config(args)
    results = compare_methods(config)
    print((Path(config.out_dir) / "stats_table.txt").read_text(), end="")
    if any(isinstance(r, Exception) for r in results.values()):
        return 1


COMMANDS = {
    "ingest": cmd_ingest,
    "preprocess": cmd_preprocess,
    "split": cmd_split,
    "select": cmd_select,
    "fit": cmd_fit,
    "validate": cmd_validate,
    "randomize": cmd_randomize,
    "predict": cmd_predict,
    "run": cmd_run,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args) or 0
    except (ConfigError, UsageError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.cause, ConfigError) else 1
    except (QSARError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
