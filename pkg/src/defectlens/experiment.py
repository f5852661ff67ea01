"""End-to-end pipeline: ingest, split, standardize, train, evaluate, explain, compare."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .attribution import (
    IgConfig,
    ShapConfig,
    compare_rankings,
    explain_rows,
    global_importance,
    cap_rows,
    sample_background,
)
from .data import (
    DefectDataset,
    FeatureSchema,
    compute_class_weights,
    fit_standardizer,
    load_table,
    resolve_schema,
    stratified_split,
)
from .errors import ConfigError, DataError
from .metrics import evaluate
from .models import MODEL_KINDS, TrainConfig, default_config, fit_model
from .models.persistence import atomic_write_text, model_to_dict

_TOP_KEYS = {"dataset", "split", "models", "ig", "shap", "max_explained", "compare_k", "output_dir"}


def _section(doc: dict, key: str, allowed: set) -> dict:
    sec = doc.get(key) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {key!r} must be an object")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {key!r}: {sorted(unknown)}")
    return sec


@dataclass
class ExperimentConfig:
    data_path: Path
    schema: FeatureSchema
    schema_spec: str
    test_fraction: float = 0.2
    split_seed: int = 0
    train: dict = field(default_factory=lambda: {k: default_config(k) for k in MODEL_KINDS})
    ig_steps: int = 64
    ig_baseline: list | None = None
    ig_output: str = "probability"
    background_size: int = 100
    coalition_budget: int = 2048
    exact_threshold: int = 10
    shap_seed: int = 0
    max_explained: int | None = 200
    compare_k: int = 5
    output_dir: Path = Path("out")
    source: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path = Path(".")) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        ds = _section(doc, "dataset", {"path", "schema"})
        if "path" not in ds:
            raise ConfigError("dataset.path is required")
        schema_spec = str(ds.get("schema", "traditional"))
        if schema_spec.lower() not in ("traditional", "jit"):
            schema_spec_path = base_dir / schema_spec
            schema = resolve_schema(schema_spec_path)
        else:
            schema = resolve_schema(schema_spec)
        split = _section(doc, "split", {"test_fraction", "seed"})
        models = _section(doc, "models", set(MODEL_KINDS))
        train = {k: TrainConfig.from_dict(models.get(k), default_config(k)) for k in MODEL_KINDS}
        ig = _section(doc, "ig", {"steps", "baseline", "output"})
        shap = _section(doc, "shap", {"background_size", "coalition_budget", "exact_threshold", "seed"})
        try:
            cfg = cls(
                data_path=base_dir / ds["path"],
                schema=schema,
                schema_spec=schema_spec,
                test_fraction=float(split.get("test_fraction", 0.2)),
                split_seed=int(split.get("seed", 0)),
                train=train,
                ig_steps=int(ig.get("steps", 64)),
                ig_baseline=ig.get("baseline"),
                ig_output=str(ig.get("output", "probability")),
                background_size=int(shap.get("background_size", 100)),
                coalition_budget=int(shap.get("coalition_budget", 2048)),
                exact_threshold=int(shap.get("exact_threshold", 10)),
                shap_seed=int(shap.get("seed", 0)),
                max_explained=doc.get("max_explained", 200),
                compare_k=int(doc.get("compare_k", 5)),
                output_dir=base_dir / doc.get("output_dir", "out"),
                source=doc,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("split.test_fraction must lie in (0, 1)")
        if self.background_size < 1:
            raise ConfigError("shap.background_size must be >= 1")
        if self.max_explained is not None and int(self.max_explained) < 1:
            raise ConfigError("max_explained must be >= 1 or null")
        if self.compare_k < 1 or self.compare_k > self.schema.n_features:
            raise ConfigError(f"compare_k must lie in [1, {self.schema.n_features}]")
        self.ig_config()  # raises on bad steps/output
        if self.ig_baseline is not None and len(self.ig_baseline) != self.schema.n_features:
            raise ConfigError("ig.baseline length must equal the feature count")

    def ig_config(self) -> IgConfig:
        base = None if self.ig_baseline is None else np.asarray(self.ig_baseline, dtype=np.float64)
        return IgConfig(steps=self.ig_steps, baseline=base, output=self.ig_output)

    def echo(self) -> dict:
        return {
            "dataset": {"path": self.source["dataset"]["path"], "schema": self.schema_spec},
            "split": {"test_fraction": self.test_fraction, "seed": self.split_seed},
            "models": {k: self.train[k].to_dict() for k in MODEL_KINDS},
            "ig": {"steps": self.ig_steps, "baseline": self.ig_baseline, "output": self.ig_output},
            "shap": {
                "background_size": self.background_size,
                "coalition_budget": self.coalition_budget,
                "exact_threshold": self.exact_threshold,
                "seed": self.shap_seed,
            },
            "max_explained": self.max_explained,
            "compare_k": self.compare_k,
        }


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(doc, base_dir=path.parent)


@dataclass
class PreparedData:
    train: DefectDataset
    test: DefectDataset
    X_train: np.ndarray
    X_test: np.ndarray
    standardizer: object
    class_weights: object


def prepare(data: DefectDataset, test_fraction: float, seed: int) -> PreparedData:
    """Split, then fit the standardizer and class weights on the training part only."""
    train, test = stratified_split(data, test_fraction, seed)
    std = fit_standardizer(train.features)
    return PreparedData(
        train, test, std.transform(train.features), std.transform(test.features),
        std, compute_class_weights(train.labels),
    )


def _gap_summary(attrs) -> dict:
    gaps = np.array([a.completeness_gap for a in attrs])
    return {
        "n_explained": len(attrs),
        "max_completeness_gap": float(gaps.max()),
        "mean_completeness_gap": float(gaps.mean()),
    }


def attributions_csv(attrs, feature_names, row_ids) -> str:
    lines = [",".join(["row", *feature_names, "prediction", "reference_value", "completeness_gap"])]
    for rid, a in zip(row_ids, attrs):
        cells = [str(int(rid)), *(repr(float(v)) for v in a.values),
                 repr(float(a.prediction)), repr(float(a.reference_value)),
                 repr(float(a.completeness_gap))]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig) -> tuple[dict, dict]:
    """Run the full pipeline; returns (report, {filename: text}) without writing anything."""
    timing = {}
    t0 = time.perf_counter()
    data = load_table(cfg.data_path, cfg.schema)
    prep = prepare(data, cfg.test_fraction, cfg.split_seed)
    timing["ingest"] = time.perf_counter() - t0

    fitted = {}
    evaluation = {}
    files = {}
    for kind in MODEL_KINDS:
        t = time.perf_counter()
        model = fit_model(kind, prep.X_train, prep.train.labels, prep.class_weights, cfg.train[kind])
        fitted[kind] = model
        evaluation[kind] = evaluate(model.predict_proba(prep.X_test), prep.test.labels).to_dict()
        files[f"model_{kind}.json"] = json.dumps(
            model_to_dict(model, cfg.schema, cfg.train[kind], prep.standardizer)
        )
        timing[f"train_{kind}"] = time.perf_counter() - t

    mlp = fitted["mlp"]
    rows = cap_rows(prep.X_test.shape[0], cfg.max_explained, cfg.shap_seed)
    X_explain = prep.X_test[rows]
    names = list(cfg.schema.feature_names)

    t = time.perf_counter()
    ig_attrs = explain_rows(mlp, X_explain, "ig", ig=cfg.ig_config())
    timing["explain_ig"] = time.perf_counter() - t

    t = time.perf_counter()
    background = sample_background(prep.X_train, cfg.background_size, cfg.shap_seed)
    shap_cfg = ShapConfig(background, cfg.coalition_budget, cfg.exact_threshold, cfg.shap_seed)
    shap_attrs = explain_rows(mlp, X_explain, "shap", shap=shap_cfg)
    timing["explain_shap"] = time.perf_counter() - t

    ig_report = global_importance(ig_attrs, names)
    shap_report = global_importance(shap_attrs, names)
    comparison = compare_rankings(ig_report, shap_report, cfg.compare_k)

    for tag, rep, attrs in (("ig", ig_report, ig_attrs), ("shap", shap_report, shap_attrs)):
        files[f"importance_{tag}.csv"] = rep.to_csv()
        files[f"importance_{tag}.json"] = json.dumps(
            {**rep.to_dict(), "schema_fingerprint": cfg.schema.fingerprint}, indent=2
        )
        files[f"attributions_{tag}.csv"] = attributions_csv(attrs, names, rows)

    n0, n1 = data.class_counts()
    report = {
        "toolkit": {"name": "defectlens", "version": __version__},
        "schema": {**cfg.schema.to_dict(), "fingerprint": cfg.schema.fingerprint},
        "dataset": {
            "path": cfg.source["dataset"]["path"],
            "n": data.n,
            "n_negative": n0,
            "n_positive": n1,
            "n_train": prep.train.n,
            "n_test": prep.test.n,
        },
        "config": cfg.echo(),
        "evaluation": evaluation,
        "importance": {
            "integrated_gradients": {**ig_report.to_dict(), **_gap_summary(ig_attrs)},
            "kernel_shap": {**shap_report.to_dict(), **_gap_summary(shap_attrs)},
        },
        "comparison": comparison.to_dict(),
        "runtime": {
            "kernel_backend": kernels.BACKEND,
            "wall_clock_seconds": {k: round(v, 6) for k, v in timing.items()},
        },
    }
    return report, files


def write_outputs(out_dir: Path, report: dict, files: dict) -> None:
    """Write every artifact, ``report.json`` last, each via temp-file rename."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from None
    for name, text in files.items():
        atomic_write_text(out_dir / name, text)
    atomic_write_text(out_dir / "report.json", json.dumps(report, indent=2) + "\n")


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "runtime"}


def load_dataset(path, schema_spec) -> DefectDataset:
    schema = resolve_schema(schema_spec)
    if not Path(path).exists():
        raise DataError(f"{path}: no such file")
    return load_table(path, schema)
