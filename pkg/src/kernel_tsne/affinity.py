"""High-dimensional (Gaussian, perplexity-calibrated) and low-dimensional
(Student-t) affinities.

Every function here takes a squared-distance matrix or an embedding and
returns dense ``n x n`` arrays.  Distances may come from plain squared
Euclidean geometry or from :func:`kernels.kernel_distance_matrix`; the
affinity code does not care which.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DimensionError, InputError, ParameterError
from .kernels import KernelSpec, kernel_distance_matrix, squared_euclidean

P_FLOOR = 1e-12
ENTROPY_TOL = 1e-5
MAX_BISECTION_STEPS = 50


@dataclass(frozen=True)
class ConditionalAffinities:
    """Row-stochastic matrix of ``p(j | i)`` and the per-point bandwidths."""

    values: np.ndarray
    sigmas: np.ndarray

    @property
    def betas(self) -> np.ndarray:
        return 1.0 / (2.0 * self.sigmas**2)


def _check_distances(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DimensionError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise InputError("distance matrix contains non-finite values")
    if np.any(D < 0):
        raise InputError("distance matrix has negative entries")
    return D


def _row_entropy(Dr: np.ndarray, beta: np.ndarray):
    """Natural-log entropy and normalized rows of ``exp(-beta * Dr)``.

    ``Dr`` holds each row's off-diagonal distances already shifted so the
    row minimum is zero, which keeps the exponentials from underflowing.
    """
    W = np.exp(-beta[:, None] * Dr)
    S = W.sum(1)
    H = np.log(S) + beta * (Dr * W).sum(1) / S
    return H, W / S[:, None]


def conditional_affinities(D, perplexity: float) -> ConditionalAffinities:
    """Gaussian conditionals ``p(j | i)`` with each row's bandwidth tuned so
    that ``2 ** entropy`` matches ``perplexity``.

    The search runs over the precision ``beta = 1 / (2 sigma^2)``, starting
    at 1, doubling or halving until the target is bracketed and bisecting
    after that; at most 50 steps, stopping once the entropy is within 1e-5
    nats of ``log(perplexity)``.
    """
    D = _check_distances(D)
    n = D.shape[0]
    if not 1 < perplexity < n:
        raise ParameterError(f"perplexity must satisfy 1 < perplexity < n={n}, got {perplexity}")

    off = ~np.eye(n, dtype=bool)
    Dr = D[off].reshape(n, n - 1)
    if np.any(np.all(Dr == 0, axis=1)):
        bad = int(np.flatnonzero(np.all(Dr == 0, axis=1))[0])
        raise DegenerateInputError(f"row {bad} has zero distance to every other point")
    Dr = Dr - Dr.min(1, keepdims=True)

    target = np.log(perplexity)
    beta = np.ones(n)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    H, rows = _row_entropy(Dr, beta)
    for _ in range(MAX_BISECTION_STEPS):
        diff = H - target
        active = np.abs(diff) > ENTROPY_TOL
        if not active.any():
            break
        # entropy falls as beta grows
        too_flat = active & (diff > 0)
        too_peaked = active & (diff < 0)
        lo[too_flat] = beta[too_flat]
        hi[too_peaked] = beta[too_peaked]
        beta = np.where(
            too_flat,
            np.where(np.isinf(hi), beta * 2.0, (beta + hi) / 2.0),
            np.where(too_peaked, (beta + lo) / 2.0, beta),
        )
        H_new, rows_new = _row_entropy(Dr[active], beta[active])
        H[active] = H_new
        rows[active] = rows_new

    missed = np.abs(np.exp(H) - perplexity) > 1e-3
    if missed.any():
        # e.g. a row whose distances are all equal has perplexity n - 1 for every beta
        warnings.warn(f"{int(missed.sum())} of {n} rows could not reach perplexity {perplexity:g}; "
                      f"first is row {int(np.flatnonzero(missed)[0])}", stacklevel=2)

    P = np.zeros((n, n))
    P[off] = rows.ravel()
    return ConditionalAffinities(values=P, sigmas=np.sqrt(1.0 / (2.0 * beta)))


def symmetrize(conditional: ConditionalAffinities | np.ndarray, floor: float = P_FLOOR) -> np.ndarray:
    """Joint affinities ``(p(j|i) + p(i|j)) / 2n``.

    Off-diagonal entries are floored at ``floor`` and the matrix renormalized
    so it still sums to one.
    """
    Pc = conditional.values if isinstance(conditional, ConditionalAffinities) else np.asarray(conditional, float)
    n = Pc.shape[0]
    P = (Pc + Pc.T) / (2.0 * n)
    P = np.maximum(P, floor)
    np.fill_diagonal(P, 0.0)
    P /= P.sum()
    return P


def joint_affinities(D, perplexity: float) -> np.ndarray:
    return symmetrize(conditional_affinities(D, perplexity))


def _normalize_weights(W: np.ndarray) -> np.ndarray:
    np.fill_diagonal(W, 0.0)
    return W / W.sum()


def student_t_affinities(Y) -> np.ndarray:
    """Low-dimensional joint affinities ``q_ij`` with a one-degree-of-freedom
    Student-t kernel."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 2:
        raise DimensionError(f"embedding must be 2-d with at least 2 rows, got shape {Y.shape}")
    return _normalize_weights(1.0 / (1.0 + squared_euclidean(Y)))


def default_alpha(m: int) -> float:
    return float(max(m - 1, 1))


def student_t_weights(d: np.ndarray, alpha: float) -> np.ndarray:
    """Unnormalized ``(1 + d / alpha) ** (-(alpha + 1) / 2)``."""
    if alpha == 1.0:
        return 1.0 / (1.0 + d)
    return (1.0 + d / alpha) ** (-(alpha + 1.0) / 2.0)


def kernel_student_t_affinities(spec: KernelSpec, Y, alpha: float | None = None) -> np.ndarray:
    """Student-t affinities over kernel-space distances of the embedding.

    ``alpha`` defaults to ``max(m - 1, 1)`` for an ``m``-dimensional
    embedding.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 2:
        raise DimensionError(f"embedding must be 2-d with at least 2 rows, got shape {Y.shape}")
    if alpha is None:
        alpha = default_alpha(Y.shape[1])
    if not alpha >= 1:
        raise ParameterError(f"alpha must be >= 1, got {alpha}")
    return _normalize_weights(student_t_weights(kernel_distance_matrix(spec, Y), alpha))


def row_perplexities(P: np.ndarray) -> np.ndarray:
    """``2 ** H`` of each row of a conditional-affinity matrix (bits)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log2(P), 0.0)
    return 2.0 ** (-terms.sum(1))


__all__ = [
    "ConditionalAffinities",
    "conditional_affinities",
    "symmetrize",
    "joint_affinities",
    "student_t_affinities",
    "kernel_student_t_affinities",
    "student_t_weights",
    "default_alpha",
    "row_perplexities",
    "squared_euclidean",
    "P_FLOOR",
]
