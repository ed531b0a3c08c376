"""Trustworthiness of an embedding.

T(k) = 1 - 2 / (n k (2n - 3k - 1)) * sum_i sum_{j in U_k(i)} (r(i, j) - k)

where U_k(i) holds the points among i's k nearest neighbours in the
embedding that are not among its k nearest neighbours in the data, and
r(i, j) is the rank of j by distance from i in the data (nearest is 1).
Distances are Euclidean; ties are broken by ascending index.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionError, ParameterError

_CHUNK = 512


@dataclass(frozen=True)
class TrustworthinessReport:
    k_values: list
    scores: list
    n: int
    repeats: int
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _neighbor_order(D: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Argsort of each distance row with self placed first and ties by index."""
    block = D.copy()
    block[np.arange(len(rows)), rows] = -np.inf
    return np.argsort(block, axis=1, kind="stable")


def _check_k(k: int, n: int) -> None:
    if not (1 <= k and 2 * k < n):
        raise ParameterError(f"k={k} is out of range; need 1 <= k < n/2 with n={n}")


def trustworthiness(X, Y, k: int) -> float:
    X, Y = np.asarray(X, float), np.asarray(Y, float)
    if X.shape[0] != Y.shape[0]:
        raise DimensionError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    n = X.shape[0]
    _check_k(k, n)
    penalty = 0
    for start in range(0, n, _CHUNK):
        rows = np.arange(start, min(start + _CHUNK, n))
        order_x = _neighbor_order(cdist(X[rows], X, "sqeuclidean"), rows)
        ranks = np.empty_like(order_x)
        np.put_along_axis(ranks, order_x, np.arange(n)[None, :], axis=1)
        nn_y = _neighbor_order(cdist(Y[rows], Y, "sqeuclidean"), rows)[:, 1 : k + 1]
        r = np.take_along_axis(ranks, nn_y, axis=1)
        penalty += int(np.sum(np.maximum(r - k, 0)))
    return 1.0 - 2.0 * penalty / (n * k * (2.0 * n - 3.0 * k - 1.0))


def trustworthiness_curve(X, Y, k_values, repeats: int = 3, subsample: int | None = None,
                          seed: int = 0, name: str = "") -> TrustworthinessReport:
    """Mean trustworthiness over ``repeats`` seeded row subsamples, per k.

    With ``subsample`` equal to the row count every repeat uses all rows in
    their original order.
    """
    X, Y = np.asarray(X, float), np.asarray(Y, float)
    if X.shape[0] != Y.shape[0]:
        raise DimensionError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    n = X.shape[0]
    subsample = n if subsample is None else int(subsample)
    if not 1 <= subsample <= n:
        raise ParameterError(f"subsample must be in [1, {n}], got {subsample}")
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    k_values = [int(k) for k in k_values]
    if any(b <= a for a, b in zip(k_values, k_values[1:])):
        raise ParameterError(f"k values must be strictly increasing, got {k_values}")
    for k in k_values:
        _check_k(k, subsample)

    rng = np.random.default_rng(seed)
    totals = np.zeros(len(k_values))
    for _ in range(repeats):
        if subsample == n:
            idx = np.arange(n)
        else:
            idx = np.sort(rng.choice(n, size=subsample, replace=False))
        for c, k in enumerate(k_values):
            totals[c] += trustworthiness(X[idx], Y[idx], k)
    return TrustworthinessReport(
        k_values=k_values,
        scores=[float(s) for s in totals / repeats],
        n=subsample,
        repeats=repeats,
        name=name,
    )
