import csv
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from defectlens.data import JIT_SCHEMA, TRADITIONAL_SCHEMA  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def make_traditional_csv(path, n=400, seed=0):
    """Camel-like class-metric table; defects driven by loc, lcom3 and cbm."""
    rng = np.random.default_rng(seed)
    X = np.abs(rng.normal(size=(n, 20))) * 10
    z = 0.3 * X[:, 10] - 0.2 * X[:, 9] + 0.15 * X[:, 16] - 3
    buggy = rng.random(n) < 1 / (1 + np.exp(-z))
    bug = np.where(buggy, rng.integers(1, 4, n), 0)
    header = ["name", "version", "name", *TRADITIONAL_SCHEMA.feature_names, "bug"]
    rows = [["camel", "1.6", f"C{i}", *(f"{v:.3f}" for v in X[i]), int(bug[i])] for i in range(n)]
    return write_csv(path, header, rows)


def make_jit_csv(path, n=400, seed=0):
    rng = np.random.default_rng(seed)
    X = np.abs(rng.normal(size=(n, 13))) * 5
    fix = rng.random(n) < 0.3
    X[:, 0] = fix
    z = 1.5 * fix + 0.3 * X[:, 1] - 2.5
    buggy = rng.random(n) < 1 / (1 + np.exp(-z))
    header = ["commit_id", "project", *JIT_SCHEMA.feature_names, "buggy"]
    rows = [[f"c{i:05d}", "camel", *(f"{v:.3f}" for v in X[i]), "True" if buggy[i] else "False"]
            for i in range(n)]
    return write_csv(path, header, rows)


@pytest.fixture
def traditional_csv(tmp_path):
    return make_traditional_csv(tmp_path / "camel-1.6.csv")


@pytest.fixture
def jit_csv(tmp_path):
    return make_jit_csv(tmp_path / "camel-jit.csv")


def random_mlp(p, seed, bias_scale=0.5):
    """Glorot network with random biases so ReLU kinks are spread out."""
    from defectlens.models import init_mlp

    model = init_mlp(p, seed)
    rng = np.random.default_rng(seed + 10_000)
    for b in model.biases:
        b[:] = rng.normal(0.0, bias_scale, b.shape)
    return model
