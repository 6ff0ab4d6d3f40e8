"""End-to-end orchestration: ingest, preprocess, split, select, fit, validate,
randomize, gate and report, all driven by one :class:`RunConfig`."""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

from .data_ingest import Dataset, load_dataset, residual
from .errors import ConfigError, QSARError, StageError
from .feature_select import SAConfig, SATrace, sa_select_chains
from .preprocess import PreprocessReport, preprocess
from .regression import FittedModel, ModelSpec, choose_components, fit_dataset, predict, save_model
from .report_emit import emit_contribution_chart, emit_scatter, emit_table, table_column
from .splitter import SplitAssignment, sphere_exclusion_split, tune_dissimilarity
from .validation import (
    GateVerdict,
    RandomizationResult,
    ValidationReport,
    evaluate_gate,
    validate_model,
    y_randomization,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    activity_path: str
    descriptor_path: str
    out_dir: str = "qsar_run"
    abs_ic50: bool = False
    constant_tol: float = 1e-8
    corr_threshold: float = 0.99
    dissimilarity: float | None = None
    test_size: int | None = None
    method: str = "PLS"
    k: int | None = None
    descriptors: tuple[str, ...] | None = None
    # None selects the LOO-optimal count for PCR/PLS
    n_components: int | None = None
    max_components: int = 5
    t_initial: float = 1.0
    cooling: float = 0.9
    steps_per_temp: int = 50
    t_min: float = 1e-3
    chains: int = 1
    select_on_all: bool = False
    n_randomizations: int = 100
    seed: int = 0

    def __post_init__(self):
        if (self.dissimilarity is None) == (self.test_size is None):
            raise ConfigError("set exactly one of dissimilarity and test_size")
        if (self.k is None) == (self.descriptors is None):
            raise ConfigError("set exactly one of k and descriptors")
        if self.method.upper() not in ("MLR", "PCR", "PLS"):
            raise ConfigError(f"unknown method {self.method!r}")
        object.__setattr__(self, "method", self.method.upper())
        if self.descriptors is not None:
            object.__setattr__(self, "descriptors", tuple(self.descriptors))
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be >= 1")

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        """Build from string-valued keys (config file or CLI), coercing types."""
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        kwargs = {}
        for key, raw in data.items():
            if raw is None:
                continue
            kwargs[key] = _coerce(key, known[key].type, raw)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        """Read a flat ``key = value`` file (``#`` comments, no sections)."""
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        try:
            text = Path(path).read_text(encoding="utf-8")
            parser.read_string("[run]\n" + text)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        data = dict(parser["run"])
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(data)

    def sa_config(self, k: int, seed: int) -> SAConfig:
        return SAConfig(k, self.t_initial, self.cooling, self.steps_per_temp, self.t_min, seed)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        if d["descriptors"] is not None:
            d["descriptors"] = list(d["descriptors"])
        return d


def _coerce(key, typ, raw):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    typ = str(typ)
    try:
        if "bool" in typ:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "tuple" in typ:
            return tuple(t.strip() for t in text.split(",") if t.strip())
        if "int" in typ:
            return int(text)
        if "float" in typ:
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return text


def stage_seed(master: int, stage: str) -> int:
    """64-bit seed from SHA-256 of (master seed, stage label)."""
    digest = hashlib.sha256(f"{master}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class RunArtifacts:
    preprocess: PreprocessReport | None = None
    split: SplitAssignment | None = None
    descriptors: tuple[str, ...] | None = None
    sa_trace: SATrace | None = None
    model: FittedModel | None = None
    validation: ValidationReport | None = None
    randomization: RandomizationResult | None = None
    gate: GateVerdict | None = None
    predictions: list[dict] = field(default_factory=list)


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def prediction_table(model: FittedModel, ds: Dataset, split: SplitAssignment) -> list[dict]:
    train = set(split.train_ids)
    preds = predict(model, ds.matrix)
    return [
        {
            "id": cid,
            "set": "train" if cid in train else "test",
            "observed": float(obs),
            "predicted": float(pred),
            "residual": residual(float(obs), float(pred)),
        }
        for cid, obs, pred in zip(ds.ids, ds.activity, preds)
    ]


def write_predictions(table, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "set", "observed", "predicted", "residual"])
        for r in table:
            w.writerow([r["id"], r["set"], repr(r["observed"]), repr(r["predicted"]), repr(r["residual"])])


class _Stages:
    """Runs labelled stages, wrapping failures in StageError."""

    def __init__(self):
        self.current = None

    def __call__(self, label):
        self.current = label
        return self

    def __enter__(self):
        log.info("stage %s", self.current)

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (QSARError, ValueError, KeyError)) and not isinstance(exc, StageError):
            raise StageError(self.current, exc) from exc
        return False


def _prepare(config: RunConfig, stage):
    with stage("ingest"):
        ds = load_dataset(config.activity_path, config.descriptor_path, abs_ic50=config.abs_ic50)
    with stage("preprocess"):
        matrix, prep = preprocess(ds.matrix, config.constant_tol, config.corr_threshold)
        ds = ds.with_matrix(matrix)
    with stage("split"):
        if config.dissimilarity is not None:
            split = sphere_exclusion_split(ds, config.dissimilarity)
        else:
            _, split = tune_dissimilarity(ds, config.test_size)
            if split.n_test != config.test_size:
                log.warning("requested %d test compounds, achieved %d", config.test_size, split.n_test)
    return ds, prep, split


def _run_method(config, method, ds, split, art, out, stage):
    train = ds.subset(split.train_ids)
    test = ds.subset(split.test_ids) if split.test_ids else None
    with stage("select"):
        if config.descriptors is not None:
            missing = [d for d in config.descriptors if d not in ds.names]
            if missing:
                raise ConfigError(f"descriptor(s) not in preprocessed pool: {', '.join(missing)}")
            art.descriptors = config.descriptors
        else:
            pool = ds if config.select_on_all else train
            fixed_c = None if method == "MLR" else config.n_components
            art.descriptors, art.sa_trace, seeds = sa_select_chains(
                pool,
                method,
                config.k,
                config.sa_config(config.k, stage_seed(config.seed, "select")),
                config.chains,
                n_components=fixed_c,
            )
            art.sa_trace.to_csv(out / "sa_trace.csv")
        _dump(out / "selection.json", {"descriptors": list(art.descriptors)})
    with stage("fit"):
        X = train.matrix.columns(art.descriptors)
        if method == "MLR":
            c = None
        elif config.n_components is not None:
            c = min(config.n_components, len(art.descriptors))
        else:
            c = choose_components(X, train.activity, method, min(config.max_components, len(art.descriptors)))
        art.model = fit_dataset(ModelSpec(method, art.descriptors, c), train)
        save_model(art.model, out / "model.json")
        art.predictions = prediction_table(art.model, ds, split)
        write_predictions(art.predictions, out / "predictions.csv")
    with stage("validate"):
        art.validation = validate_model(art.model, train, test)
        _dump(out / "validation.json", art.validation.to_dict())
    with stage("randomize"):
        art.randomization = y_randomization(
            train, art.model.spec, config.n_randomizations, stage_seed(config.seed, "randomize")
        )
        _dump(out / "randomization.json", art.randomization.to_dict())
    with stage("gate"):
        art.gate = evaluate_gate(art.validation)
        _dump(out / "gate.json", art.gate.to_dict())
    with stage("report"):
        emit_scatter(art.predictions, out)
        emit_contribution_chart(art.model, out)
        emit_table({method: table_column(art.validation, art.randomization)}, out)
    return art


def run(config: RunConfig) -> RunArtifacts:
    """Execute every stage in order and write artifacts under ``config.out_dir``.

    Artifacts from completed stages stay on disk if a later stage fails; the
    failure surfaces as StageError carrying the stage label.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "config.json", config.to_dict())
    stage = _Stages()
    art = RunArtifacts()
    ds, art.preprocess, art.split = _prepare(config, stage)
    _dump(out / "preprocess.json", art.preprocess.to_dict())
    split_doc = art.split.to_dict()
    split_doc["activity_ranges"] = art.split.activity_ranges(ds)
    _dump(out / "split.json", split_doc)
    return _run_method(config, config.method, ds, art.split, art, out, stage)


def compare_methods(config: RunConfig, methods=("PLS", "MLR", "PCR")) -> dict:
    """Run each method on the same split and descriptor pool.

    Returns ``{method: RunArtifacts | StageError}``; each method writes into
    its own subdirectory and the combined table goes to the top level.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "config.json", config.to_dict())
    stage = _Stages()
    ds, prep, split = _prepare(config, stage)
    _dump(out / "preprocess.json", prep.to_dict())
    _dump(out / "split.json", split.to_dict())
    results = {}
    columns = {}
    for method in methods:
        sub = out / method.lower()
        sub.mkdir(exist_ok=True)
        art = RunArtifacts(preprocess=prep, split=split)
        try:
            results[method] = _run_method(config, method, ds, split, art, sub, _Stages())
            columns[method] = table_column(art.validation, art.randomization)
        except StageError as exc:
            log.error("%s failed: %s", method, exc)
            results[method] = exc
            columns[method] = {}
    emit_table(columns, out)
    return results
