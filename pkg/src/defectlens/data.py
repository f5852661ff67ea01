"""Dataset schemas, CSV ingestion, preprocessing and synthetic data."""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DegenerateSplit,
    EmptyMatrix,
    EmptyTable,
    MissingColumn,
    NegativeCount,
    NonNumericCell,
    SingleClass,
    WidthMismatch,
)


class DomainKind(str, enum.Enum):
    TRADITIONAL = "traditional"
    JIT = "jit"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class FeatureSchema:
    domain_kind: DomainKind
    feature_names: tuple[str, ...]
    label_column: str
    identifier_columns: tuple[str, ...] = ()
    # alternative header spellings found in published dumps, alias -> canonical
    aliases: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "identifier_columns", tuple(self.identifier_columns))
        object.__setattr__(self, "domain_kind", DomainKind(self.domain_kind))
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ConfigError("feature names must be unique")
        if not self.feature_names:
            raise ConfigError("schema needs at least one feature")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def fingerprint(self) -> str:
        blob = "\n".join(self.feature_names).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "domain_kind": self.domain_kind.value,
            "feature_names": list(self.feature_names),
            "label_column": self.label_column,
            "identifier_columns": list(self.identifier_columns),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        try:
            return cls(
                domain_kind=DomainKind(d["domain_kind"].lower()),
                feature_names=tuple(d["feature_names"]),
                label_column=d["label_column"],
                identifier_columns=tuple(d.get("identifier_columns", ())),
                aliases=dict(d.get("aliases", {})),
            )
        except (KeyError, ValueError, AttributeError) as exc:
            raise ConfigError(f"invalid schema document: {exc}") from exc


TRADITIONAL_SCHEMA = FeatureSchema(
    domain_kind=DomainKind.TRADITIONAL,
    feature_names=(
        "wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm", "lcom3",
        "loc", "dam", "moa", "mfa", "cam", "ic", "cbm", "amc", "max_cc", "avg_cc",
    ),
    label_column="bug",
    identifier_columns=("name", "version"),
)

JIT_SCHEMA = FeatureSchema(
    domain_kind=DomainKind.JIT,
    feature_names=(
        "fix", "la", "ld", "nf", "nd", "ns", "entropy",
        "ndev", "age", "nuc", "exp", "rexp", "sexp",
    ),
    label_column="buggy",
    identifier_columns=("commit_id", "project", "author_date", "year"),
    # ApacheJIT headers
    aliases={"ent": "entropy", "aexp": "exp", "arexp": "rexp", "asexp": "sexp"},
)


def synthetic_schema(p: int) -> FeatureSchema:
    return FeatureSchema(
        domain_kind=DomainKind.SYNTHETIC,
        feature_names=tuple(f"x{i}" for i in range(p)),
        label_column="y",
    )


def resolve_schema(spec: str | Path) -> FeatureSchema:
    """Built-in schema name (``traditional``/``jit``) or path to a JSON schema file."""
    name = str(spec)
    if name.lower() == "traditional":
        return TRADITIONAL_SCHEMA
    if name.lower() == "jit":
        return JIT_SCHEMA
    path = Path(name)
    if not path.is_file():
        raise ConfigError(f"unknown schema {name!r}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"schema file {path}: {exc}") from exc
    return FeatureSchema.from_dict(doc)


@dataclass(frozen=True, eq=False)
class DefectDataset:
    features: np.ndarray
    labels: np.ndarray
    schema: FeatureSchema
    provenance: str = ""

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise EmptyTable("dataset has no rows")
        if X.shape[1] != self.schema.n_features:
            raise WidthMismatch(
                f"matrix width {X.shape[1]} != schema width {self.schema.n_features}"
            )
        if y.shape != (X.shape[0],):
            raise WidthMismatch("label count does not match row count")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray, tag: str = "") -> "DefectDataset":
        return DefectDataset(
            self.features[idx], self.labels[idx], self.schema,
            f"{self.provenance}{tag}",
        )

    def class_counts(self) -> tuple[int, int]:
        n1 = int(self.labels.sum())
        return self.n - n1, n1


def binarize_label(raw_count) -> int:
    """0 for a clean class/commit, 1 when it has one or more bugs."""
    if raw_count < 0:
        raise NegativeCount(f"negative bug count {raw_count}")
    return 0 if raw_count == 0 else 1


_BOOL_WORDS = {"true": 1.0, "false": 0.0}


def _parse_cell(text: str, row: int, column: str) -> float:
    s = text.strip()
    low = s.lower()
    if low in _BOOL_WORDS:
        return _BOOL_WORDS[low]
    try:
        value = float(s)
    except ValueError:
        raise NonNumericCell(row, column, text) from None
    if not math.isfinite(value):
        raise NonNumericCell(row, column, text)
    return value


def load_table(path: str | Path, schema: FeatureSchema) -> DefectDataset:
    """Read a CSV export into a :class:`DefectDataset`.

    Identifier and unknown columns are dropped and the predictors reordered
    to schema order. ``true``/``false`` cells read as 1/0. Row numbers in
    errors are 1-based data rows (the header is row 0).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    try:
        return _read_csv(path, schema)
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 text ({exc.reason})") from None
    except csv.Error as exc:
        raise DataError(f"{path}: malformed CSV ({exc})") from None


def _read_csv(path: Path, schema: FeatureSchema) -> DefectDataset:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyTable(f"{path}: no header row")
        header = [h.strip() for h in header]
        wanted = list(schema.feature_names) + [schema.label_column]
        position = {}
        for j, name in enumerate(header):
            canon = schema.aliases.get(name, name)
            # first occurrence wins; later duplicates are ignored
            if canon in wanted and canon not in position:
                position[canon] = j
        for name in wanted:
            if name not in position:
                raise MissingColumn(name)
        cols = [position[name] for name in wanted]

        rows = []
        labels = []
        for r, record in enumerate(reader, start=1):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) < len(header):
                raise NonNumericCell(r, header[len(record)], "")
            vals = [_parse_cell(record[j], r, header[j]) for j in cols]
            raw = vals.pop()
            if raw != int(raw):
                raise NonNumericCell(r, schema.label_column, record[cols[-1]])
            try:
                labels.append(binarize_label(int(raw)))
            except NegativeCount as exc:
                raise NegativeCount(f"row {r}: {exc}") from None
            rows.append(vals)
    if not rows:
        raise EmptyTable(f"{path}: no data rows")
    return DefectDataset(
        np.asarray(rows, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        schema,
        provenance=str(path),
    )


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(data: DefectDataset, test_fraction: float, seed: int):
    """Seeded per-class split; each class sends round(n_c * test_fraction) rows to test."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    train_idx = []
    for cls in (0, 1):
        members = np.flatnonzero(data.labels == cls)
        n_test = round_half_up(len(members) * test_fraction)
        if n_test == 0 or n_test == len(members):
            raise DegenerateSplit(
                f"class {cls} with {len(members)} rows cannot appear in both splits"
            )
        perm = rng.permutation(members)
        test_idx.append(perm[:n_test])
        train_idx.append(perm[n_test:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx))
    return data.subset(train, "[train]"), data.subset(test, "[test]")


@dataclass(frozen=True, eq=False)
class Standardizer:
    means: np.ndarray
    scales: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        return apply_standardizer(self, features)

    def inverse_transform(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        return features * self.scales + self.means

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "scales": self.scales.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["means"], dtype=np.float64), np.asarray(d["scales"], dtype=np.float64))


def fit_standardizer(train_features) -> Standardizer:
    X = np.asarray(train_features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix("cannot fit a standardizer on an empty matrix")
    means = X.mean(axis=0)
    scales = X.std(axis=0)  # population std (ddof=0)
    # decided on exact constancy: a rounded mean can leave a spurious ~1e-13 std
    constant = X.max(axis=0) == X.min(axis=0)
    means = np.where(constant, X[0], means)
    scales = np.where(constant | (scales == 0.0), 1.0, scales)
    return Standardizer(means, scales)


def apply_standardizer(s: Standardizer, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.shape[-1] != s.means.shape[0]:
        raise WidthMismatch(f"expected {s.means.shape[0]} columns, got {X.shape[-1]}")
    return (X - s.means) / s.scales


@dataclass(frozen=True)
class ClassWeights:
    weight_negative: float
    weight_positive: float

    def per_sample(self, labels) -> np.ndarray:
        labels = np.asarray(labels)
        return np.where(labels == 1, self.weight_positive, self.weight_negative)

    @classmethod
    def unit(cls) -> "ClassWeights":
        return cls(1.0, 1.0)


def compute_class_weights(labels) -> ClassWeights:
    """Balanced weights N / (2 N_c)."""
    y = np.asarray(labels)
    n = y.shape[0]
    n1 = int(np.sum(y == 1))
    n0 = n - n1
    if n0 == 0 or n1 == 0:
        raise SingleClass("class weights need both classes")
    return ClassWeights(n / (2.0 * n0), n / (2.0 * n1))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def generate_synthetic_linear(
    n: int,
    weights,
    bias: float = 0.0,
    noise_scale: float = 0.0,
    seed: int = 0,
) -> DefectDataset:
    """Standard-normal features with labels ~ Bernoulli(sigmoid(w.x + b + eps))."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if noise_scale < 0:
        raise ValueError("noise_scale must be nonnegative")
    w = np.asarray(weights, dtype=np.float64)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, w.shape[0]))
    eps = rng.normal(0.0, noise_scale, n) if noise_scale > 0 else np.zeros(n)
    prob = _sigmoid(X @ w + bias + eps)
    y = (rng.random(n) < prob).astype(np.int64)
    return DefectDataset(X, y, synthetic_schema(w.shape[0]), provenance=f"synthetic(seed={seed})")
