"""Dataset-level importance scores and ranking comparison."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, EmptyInput, InconsistentWidth, SchemaMismatch


@dataclass(frozen=True, eq=False)
class ImportanceReport:
    feature_names: tuple
    raw_scores: np.ndarray
    normalized_scores: np.ndarray
    ranking: tuple
    method: str = ""

    @classmethod
    def from_raw(cls, feature_names, raw_scores, method: str = "") -> "ImportanceReport":
        """Max-normalize ``raw_scores`` and rank features, ties in schema order."""
        names = tuple(feature_names)
        raw = np.asarray(raw_scores, dtype=np.float64)
        if raw.shape != (len(names),):
            raise InconsistentWidth(f"{raw.shape[0]} scores for {len(names)} features")
        if np.any(raw < 0) or not np.all(np.isfinite(raw)):
            raise ValueError("raw importance scores must be finite and nonnegative")
        top = raw.max()
        normalized = raw / top if top > 0 else np.zeros_like(raw)
        # ordering on raw scores keeps the ranking exactly scale invariant
        order = sorted(range(len(names)), key=lambda i: (-raw[i], i))
        return cls(names, raw, normalized, tuple(names[i] for i in order), method)

    def top(self, k: int) -> list:
        return list(self.ranking[:k])

    def score_of(self, name: str) -> float:
        return float(self.normalized_scores[self.feature_names.index(name)])

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "feature_names": list(self.feature_names),
            "raw_scores": self.raw_scores.tolist(),
            "normalized_scores": self.normalized_scores.tolist(),
            "ranking": list(self.ranking),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImportanceReport":
        return cls.from_raw(d["feature_names"], d["raw_scores"], d.get("method", ""))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["feature", "normalized_score"])
        for name in self.ranking:
            writer.writerow([name, repr(self.score_of(name))])
        return buf.getvalue()


def global_importance(attributions, feature_names, method: str = "") -> ImportanceReport:
    """Mean absolute attribution per feature, max-normalized."""
    attributions = list(attributions)
    if not attributions:
        raise EmptyInput("no attributions to aggregate")
    p = len(feature_names)
    rows = []
    for a in attributions:
        vals = np.asarray(getattr(a, "values", a), dtype=np.float64)
        if vals.shape != (p,):
            raise InconsistentWidth(f"attribution of width {vals.shape} for {p} features")
        rows.append(vals)
    raw = np.abs(np.vstack(rows)).mean(axis=0)
    if not method and hasattr(attributions[0], "method"):
        method = attributions[0].method.value
    return ImportanceReport.from_raw(feature_names, raw, method)


@dataclass(frozen=True)
class RankingComparison:
    k: int
    top_k_overlap: int
    kendall_tau: float | None
    common_top_k: tuple
    disjoint_schema: bool = False

    def to_dict(self) -> dict:
        d = {
            "k": self.k,
            "top_k_overlap": self.top_k_overlap,
            "kendall_tau": self.kendall_tau,
            "common_top_k": list(self.common_top_k),
        }
        if self.disjoint_schema:
            d["schema_relation"] = "disjoint-schema"
        return d


def compare_rankings(a: ImportanceReport, b: ImportanceReport, k: int,
                     allow_disjoint: bool = False) -> RankingComparison:
    """Top-k overlap and Kendall tau between two rankings of the same features.

    With ``allow_disjoint`` reports over different feature sets are accepted:
    only the top-k intersection is computed and tau is left undefined.
    """
    same = set(a.feature_names) == set(b.feature_names)
    if not same and not allow_disjoint:
        raise SchemaMismatch("rankings cover different feature sets")
    limit = min(len(a.ranking), len(b.ranking))
    if not 1 <= k <= limit:
        raise ConfigError(f"k must lie in [1, {limit}]")
    top_b = set(b.top(k))
    common = tuple(name for name in a.top(k) if name in top_b)
    if not same:
        return RankingComparison(k, len(common), None, common, disjoint_schema=True)
    pos_b = {name: i for i, name in enumerate(b.ranking)}
    rb = np.array([pos_b[name] for name in a.ranking])
    n = len(rb)
    if n < 2:
        tau = 1.0
    else:
        # positions are a permutation, so no ties; integer pair counts keep tau exact
        later = rb[None, :] > rb[:, None]
        upper = np.triu(np.ones((n, n), dtype=bool), 1)
        concordant = int(np.sum(later & upper))
        pairs = n * (n - 1) // 2
        tau = (2 * concordant - pairs) / pairs
    return RankingComparison(k, len(common), tau, common)
