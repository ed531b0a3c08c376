"""Grid search over RBF gamma and perplexity, scored by trustworthiness."""
from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .embedding import OptimizerConfig, Variant, run_reduction
from .errors import DivergenceError, KernelTSNEError, ParameterError
from .kernels import KernelKind, KernelSpec
from .metrics import trustworthiness

DEFAULT_GAMMAS = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)
DEFAULT_PERPLEXITIES = (10.0, 20.0, 30.0, 40.0, 50.0)


@dataclass
class GridCell:
    gamma: float | None
    perplexity: float
    status: str = "ok"
    trustworthiness: float | None = None
    final_kl: float | None = None
    wall_time: float = 0.0
    error: str = ""
    Y: np.ndarray | None = dataclasses.field(default=None, repr=False)
    config: dict | None = dataclasses.field(default=None, repr=False)

    def row(self) -> dict:
        return {
            "gamma": self.gamma,
            "perplexity": self.perplexity,
            "status": self.status,
            "trustworthiness": self.trustworthiness,
            "final_kl": self.final_kl,
            "wall_time": self.wall_time,
            "error": self.error,
        }


def cell_config(base: OptimizerConfig, gamma: float | None, perplexity: float,
                overrides: dict | None = None) -> OptimizerConfig:
    changes = {"perplexity": float(perplexity)}
    if gamma is not None:
        changes["kernel"] = KernelSpec.rbf(gamma)
    changes.update(overrides or {})
    return dataclasses.replace(base, **changes)


def _run_cell(X, config: OptimizerConfig, gamma, perplexity, metric_k: int) -> GridCell:
    cell = GridCell(gamma=gamma, perplexity=perplexity)
    t0 = time.perf_counter()
    try:
        result = run_reduction(X, config)
        cell.trustworthiness = trustworthiness(X, result.Y, metric_k)
        cell.final_kl = result.final_kl
        cell.Y = result.Y
        cell.config = result.config
    except DivergenceError as exc:
        cell.status, cell.error = "failed", str(exc)
    except KernelTSNEError as exc:
        cell.status, cell.error = "failed", f"{type(exc).__name__}: {exc}"
    cell.wall_time = time.perf_counter() - t0
    return cell


def rank_cells(cells: list[GridCell]) -> list[GridCell]:
    """Successful cells by descending score, ties to smaller gamma then
    smaller perplexity; failed cells last in grid order."""
    def grid_key(c):
        return (-np.inf if c.gamma is None else c.gamma, c.perplexity)

    ok = sorted((c for c in cells if c.status == "ok"), key=lambda c: (-c.trustworthiness, *grid_key(c)))
    failed = sorted((c for c in cells if c.status != "ok"), key=grid_key)
    return ok + failed


def grid_search(X, base: OptimizerConfig, gammas=DEFAULT_GAMMAS, perplexities=DEFAULT_PERPLEXITIES,
                metric_k: int = 100, jobs: int = 1, overrides: dict | None = None) -> list[GridCell]:
    """Run every (gamma, perplexity) cell and return them ranked.

    Variants without an RBF kernel ignore gamma, so the grid collapses to
    perplexity only.  ``overrides`` maps ``(gamma, perplexity)`` to extra
    config fields for that cell.  A cell that diverges or fails validation
    is recorded as failed instead of aborting the search.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if not 1 <= metric_k < n / 2:
        raise ParameterError(f"metric k={metric_k} is out of range; need 1 <= k < n/2 with n={n}")
    uses_gamma = base.variant is not Variant.PLAIN and base.kernel.kind is KernelKind.RBF
    gammas = [float(g) for g in gammas] if uses_gamma else [None]
    perplexities = [float(p) for p in perplexities]
    overrides = overrides or {}

    tasks = []
    for g in gammas:
        for p in perplexities:
            extra = overrides.get((g, p), {})
            tasks.append((g, p, cell_config(base, g, p, extra)))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell, X, cfg, g, p, metric_k) for g, p, cfg in tasks]
            cells = [f.result() for f in futures]
    else:
        cells = [_run_cell(X, cfg, g, p, metric_k) for g, p, cfg in tasks]
    return rank_cells(cells)
