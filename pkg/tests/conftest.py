import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# worked example: 10 rows in x1, x2, x3 and y
TABLE2 = np.array([
    [0, 0, 0, 1],
    [0, 1, 0, 1],
    [1, 1, 1, 1],
    [1, 1, 1, 0],
    [0, 1, 1, 0],
    [0, 0, 1, 0],
    [1, 0, 0, 0],
    [0, 0, 1, 0],
    [1, 1, 0, 1],
    [1, 0, 1, 0],
], dtype=float)

# published path: lambda, coefficients on (1,2,3,12,13,23,123), support, closure, Betti
TABLE3 = [
    (0.00, (-1.02, 0, -1, 1.94, 1.94, 0, -0.97), "1,3,12,13,123", "1,2,3,12,13,23,123", (1, 0)),
    (0.06, (-0.72, 0.12, -0.83, 1.23, 1.13, -0.29, 0), "1,2,3,12,13,23", "1,2,3,12,13,23", (1, 1)),
    (0.15, (-0.48, 0.08, -0.74, 0.99, 0.63, 0, 0), "1,2,3,12,13", "1,2,3,12,13", (1, 0)),
    (0.27, (-0.15, 0.14, -0.52, 0.66, 0, 0, 0), "1,2,3,12", "1,2,3,12", (2, 0)),
    (0.40, (0, 0.18, -0.46, 0.31, 0, 0, 0), "2,3,12", "1,2,3,12", (2, 0)),
    (0.97, (0, 0.08, -0.26, 0, 0, 0, 0), "2,3", "2,3", (2, 0)),
    (1.22, (0, 0, -0.18, 0, 0, 0, 0), "3", "3", (1, 0)),
    (1.75, (0, 0, 0, 0, 0, 0, 0), "", "", (0, 0)),
]


def labels(text):
    return [s for s in text.split(",") if s]


@pytest.fixture
def table2_csv(tmp_path) -> Path:
    path = tmp_path / "table2.csv"
    rows = ["x1,x2,x3,y"] + [",".join(str(int(v)) for v in r) for r in TABLE2]
    path.write_text("\n".join(rows) + "\n")
    return path


def load_schema(stem):
    return json.loads(resources.files("topolasso.schemas").joinpath(f"{stem}.schema.json").read_text())


def random_regression(rng, n=None, m=None, noise=0.5):
    n = n or int(rng.integers(5, 101))
    m = m or int(rng.integers(1, 51))
    X = rng.standard_normal((n, m))
    if rng.random() < 0.3:
        # correlated columns make the path re-order and drop variables
        X[:, 1:] += 0.8 * X[:, :1]
    X -= X.mean(axis=0)
    beta = np.where(rng.random(m) < 0.3, rng.normal(0, 2, m), 0.0)
    y = X @ beta + noise * rng.standard_normal(n)
    return X, y - y.mean()
