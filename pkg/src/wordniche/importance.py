"""Relative importance of predictors of frequency change.

Ordinary least squares with an intercept, plus a variance decomposition
that averages each predictor's incremental explained variance over all
orderings in which the predictors can enter the model. The per-predictor
shares telescope within each ordering, so they sum exactly to the full
model's explained variance fraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np


@dataclass
class RegressionDesign:
    response: np.ndarray
    predictors: dict[str, np.ndarray]

    def __post_init__(self):
        self.response = np.asarray(self.response, dtype=np.float64)
        self.predictors = {
            k: np.asarray(v, dtype=np.float64) for k, v in self.predictors.items()
        }
        n = len(self.response)
        for name, col in self.predictors.items():
            if len(col) != n:
                raise ValueError(f"predictor {name} has length {len(col)}, response {n}")
            if not np.all(np.isfinite(col)):
                raise ValueError(f"predictor {name} has missing values")
        if not np.all(np.isfinite(self.response)):
            raise ValueError("response has missing values")
        if n <= len(self.predictors) + 1:
            raise ValueError("need more rows than predictors plus one")

    @property
    def n(self) -> int:
        return len(self.response)

    def matrix(self, names: tuple[str, ...] | None = None) -> np.ndarray:
        names = tuple(self.predictors) if names is None else names
        cols = [np.ones(self.n)] + [self.predictors[k] for k in names]
        return np.column_stack(cols)


@dataclass
class OlsFit:
    intercept: float
    coefficients: dict[str, float]
    r_squared: float
    residual_variance: float


def _collinear_columns(design: RegressionDesign) -> list[str]:
    """Predictors that are (numerically) linear combinations of the rest."""
    names = list(design.predictors)
    flagged = []
    for name in names:
        others = tuple(k for k in names if k != name)
        if not others:
            continue
        x = design.matrix(others)
        y = design.predictors[name]
        coef, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
        resid = y - x @ coef
        total = np.sum((y - y.mean()) ** 2)
        if total == 0 or np.sum(resid**2) <= 1e-10 * total:
            flagged.append(name)
    return flagged


def _check_rank(design: RegressionDesign) -> None:
    x = design.matrix()
    s = np.linalg.svd(x, compute_uv=False)
    if s[-1] <= 1e-10 * s[0]:
        bad = _collinear_columns(design)
        raise ValueError(f"rank-deficient design; collinear columns: {', '.join(bad) or 'unknown'}")


def _r_squared(design: RegressionDesign, names: tuple[str, ...]) -> float:
    y = design.response
    sst = np.sum((y - y.mean()) ** 2)
    if sst == 0:
        raise ValueError("response has zero variance")
    x = design.matrix(names)
    coef, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
    sse = np.sum((y - x @ coef) ** 2)
    return 1.0 - sse / sst


def ols_fit(design: RegressionDesign) -> OlsFit:
    """Least-squares fit with intercept; errors on rank-deficient designs."""
    _check_rank(design)
    names = tuple(design.predictors)
    x = design.matrix(names)
    y = design.response
    coef, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    sse = float(np.sum(resid**2))
    sst = float(np.sum((y - y.mean()) ** 2))
    dof = design.n - len(names) - 1
    return OlsFit(
        intercept=float(coef[0]),
        coefficients={k: float(c) for k, c in zip(names, coef[1:])},
        r_squared=1.0 - sse / sst,
        residual_variance=sse / dof if dof > 0 else float("nan"),
    )


def kruskal_importance(design: RegressionDesign) -> dict[str, float]:
    """Per-predictor share of explained response variance.

    For every ordering of the predictors, each predictor is credited with
    the gain in R-squared when it enters after its predecessors; the share
    is the mean over all orderings. Shares sum to the full-model R-squared.
    """
    _check_rank(design)
    names = tuple(design.predictors)
    cache: dict[frozenset, float] = {frozenset(): 0.0}

    def subset_r2(subset: frozenset) -> float:
        if subset not in cache:
            cache[subset] = _r_squared(design, tuple(k for k in names if k in subset))
        return cache[subset]

    totals = {name: 0.0 for name in names}
    orderings = list(permutations(names))
    for order in orderings:
        seen: frozenset = frozenset()
        for name in order:
            with_name = seen | {name}
            totals[name] += subset_r2(with_name) - subset_r2(seen)
            seen = with_name
    return {name: totals[name] / len(orderings) for name in names}
