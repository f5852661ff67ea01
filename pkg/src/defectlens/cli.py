"""``defectlens`` command line: run | evaluate | explain | compare.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 training error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .attribution import (
    IgConfig,
    ImportanceReport,
    ShapConfig,
    cap_rows,
    compare_rankings,
    explain_rows,
    global_importance,
    sample_background,
)
from .data import resolve_schema, stratified_split
from .errors import ConfigError, DataError, DefectLensError, NonDifferentiableModel, SchemaMismatch
from .experiment import (
    attributions_csv,
    load_config,
    load_dataset,
    prepare,
    run_experiment,
    write_outputs,
)
from .metrics import evaluate
from .models import MODEL_KINDS, default_config, fit_model
from .models.persistence import atomic_write_text, load_model, model_to_dict


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the toolkit reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="defectlens", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"defectlens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="full pipeline from a JSON config")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, help="override the config's output_dir")

    def data_args(q):
        q.add_argument("--data", required=True, type=Path)
        q.add_argument("--schema", default="traditional",
                       help="traditional, jit, or a JSON schema file")
        q.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("evaluate", help="train and score one model")
    data_args(p)
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--split", type=float, default=0.2, help="test fraction")
    p.add_argument("--out", type=Path, help="directory for the model artifact")

    p = sub.add_parser("explain", help="feature importance for a saved model")
    data_args(p)
    p.add_argument("--model-file", required=True, type=Path)
    p.add_argument("--method", required=True, choices=("ig", "shap"))
    p.add_argument("--steps", type=int, default=64)
    p.add_argument("--exact", action="store_true", help="brute-force Shapley values")
    p.add_argument("--split", type=float, default=None,
                   help="explain only the test part of a seeded split")
    p.add_argument("--max-instances", type=int, default=200)
    p.add_argument("--background-size", type=int, default=100)
    p.add_argument("--coalition-budget", type=int, default=2048)
    p.add_argument("--exact-threshold", type=int, default=10)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("compare", help="compare two importance rankings")
    p.add_argument("report_a", type=Path)
    p.add_argument("report_b", type=Path)
    p.add_argument("--top-k", type=int, default=5)
    return parser


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg.output_dir = args.out
    report, files = run_experiment(cfg)
    write_outputs(cfg.output_dir, report, files)
    ev = report["evaluation"]
    for kind in MODEL_KINDS:
        print(f"{kind:9s} acc {ev[kind]['accuracy_pct']:3d}%  auc {ev[kind]['auc_pct']:3d}%")
    print(f"report written to {Path(cfg.output_dir) / 'report.json'}")
    return 0


def cmd_evaluate(args) -> int:
    data = load_dataset(args.data, args.schema)
    prep = prepare(data, args.split, args.seed)
    cfg = default_config(args.model).with_seed(args.seed)
    model = fit_model(args.model, prep.X_train, prep.train.labels, prep.class_weights, cfg)
    result = evaluate(model.predict_proba(prep.X_test), prep.test.labels)
    out = {"model": args.model, "seed": args.seed, "split": args.split,
           "schema_fingerprint": data.schema.fingerprint, **result.to_dict()}
    if args.out is not None:
        path = Path(args.out) / f"model_{args.model}.json"
        atomic_write_text(path, json.dumps(model_to_dict(model, data.schema, cfg, prep.standardizer)))
        out["model_file"] = str(path)
    print(json.dumps(out, indent=2))
    return 0


def cmd_explain(args) -> int:
    model, model_schema, _, std = load_model(args.model_file)
    if args.method == "ig" and not hasattr(model, "input_gradient"):
        raise NonDifferentiableModel(f"--method ig needs a differentiable model, got {model.kind}")
    data = load_dataset(args.data, args.schema)
    if data.schema.fingerprint != model_schema.fingerprint:
        raise SchemaMismatch("model artifact was trained on a different feature schema")

    if args.split is not None:
        pool, target = stratified_split(data, args.split, args.seed)
    else:
        pool = target = data
    scale = std.transform if std is not None else np.asarray
    X_pool = scale(pool.features)
    X_target = scale(target.features)
    rows = cap_rows(X_target.shape[0], args.max_instances, args.seed)

    if args.method == "ig":
        attrs = explain_rows(model, X_target[rows], "ig", ig=IgConfig(steps=args.steps))
    else:
        background = sample_background(X_pool, args.background_size, args.seed)
        shap_cfg = ShapConfig(background, args.coalition_budget, args.exact_threshold, args.seed)
        attrs = explain_rows(model, X_target[rows], "shap", shap=shap_cfg, exact=args.exact)

    names = list(data.schema.feature_names)
    report = global_importance(attrs, names)
    out = Path(args.out)
    doc = {**report.to_dict(), "schema_fingerprint": data.schema.fingerprint,
           "max_completeness_gap": max(a.completeness_gap for a in attrs)}
    atomic_write_text(out / f"attributions_{args.method}.csv", attributions_csv(attrs, names, rows))
    atomic_write_text(out / f"importance_{args.method}.csv", report.to_csv())
    atomic_write_text(out / f"importance_{args.method}.json", json.dumps(doc, indent=2))
    if args.top_k is not None:
        for i, name in enumerate(report.top(args.top_k), start=1):
            print(f"{i:2d}. {name:10s} {report.score_of(name):.4f}")
    else:
        print(json.dumps(doc, indent=2))
    return 0


def _read_importance(path: Path) -> ImportanceReport:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return ImportanceReport.from_dict(doc)
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: not an importance report ({exc})") from None


def cmd_compare(args) -> int:
    a = _read_importance(args.report_a)
    b = _read_importance(args.report_b)
    result = compare_rankings(a, b, args.top_k, allow_disjoint=True)
    print(json.dumps(result.to_dict(), indent=2))
    return 0


_COMMANDS = {"run": cmd_run, "evaluate": cmd_evaluate, "explain": cmd_explain, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DefectLensError as exc:
        print(f"defectlens: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"defectlens: error: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
