"""Initialization, cost, gradients and the momentum optimization loop.

Three variants share one loop:

* ``plain``  - Gaussian affinities on squared Euclidean distances, Student-t
  affinities on the embedding (classic t-SNE).
* ``kernel`` - Gaussian affinities on kernel-space distances of the data,
  Euclidean Student-t affinities on the embedding.
* ``e2e``    - kernel-space distances on both sides, with an ``alpha``
  degrees-of-freedom Student-t on the embedding side.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .affinity import (
    conditional_affinities,
    default_alpha,
    student_t_weights,
    symmetrize,
)
from .errors import DimensionError, DivergenceError, InputError, ParameterError
from .kernels import (
    LINEAR,
    KernelSpec,
    distances_from_gram,
    gram_matrix,
    kernel_distance_matrix,
    pair_gradient_weights,
    pair_gradients_fd,
    squared_euclidean,
)

Q_FLOOR = 1e-12
DIVERGENCE_LIMIT = 1e8
KL_STRIDE = 10
INIT_SCALE = 1e-4


class Variant(str, Enum):
    PLAIN = "plain"
    KERNEL_HIGH_DIM = "kernel"
    END_TO_END = "e2e"


@dataclass
class OptimizerConfig:
    """Settings for :func:`run_reduction`.

    ``learning_rate`` and ``alpha`` accept ``"auto"``; they resolve to
    ``max(n / early_exaggeration / 4, 50)`` and ``max(m - 1, 1)``.
    ``init`` is ``"pca"``, ``"kpca"`` or an explicit ``(n, m)`` array.
    Setting ``final_momentum`` switches the momentum after
    ``momentum_switch_iter`` iterations (off by default).
    """

    variant: Variant = Variant.PLAIN
    n_components: int = 2
    perplexity: float = 30.0
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec.rbf(1.0))
    n_iter: int = 1000
    early_exaggeration: float = 12.0
    early_exaggeration_iters: int = 250
    learning_rate: float | str = "auto"
    momentum: float = 0.5
    final_momentum: float | None = None
    momentum_switch_iter: int | None = None
    init: str | np.ndarray = "pca"
    alpha: float | str = "auto"
    seed: int = 0
    fd_gradient: bool = False
    fd_step: float = 1e-5

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.n_components < 1:
            raise ParameterError(f"n_components must be >= 1, got {self.n_components}")
        if not 0 <= self.momentum < 1:
            raise ParameterError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.final_momentum is not None and not 0 <= self.final_momentum < 1:
            raise ParameterError(f"final_momentum must be in [0, 1), got {self.final_momentum}")
        if self.early_exaggeration_iters < 0 or self.n_iter < self.early_exaggeration_iters:
            raise ParameterError(
                f"need 0 <= early_exaggeration_iters <= n_iter, got "
                f"{self.early_exaggeration_iters} and {self.n_iter}"
            )
        if self.early_exaggeration <= 0:
            raise ParameterError("early_exaggeration must be positive")
        if self.learning_rate != "auto" and not float(self.learning_rate) > 0:
            raise ParameterError(f"learning_rate must be positive or 'auto', got {self.learning_rate}")
        if self.alpha != "auto" and not float(self.alpha) >= 1:
            raise ParameterError(f"alpha must be >= 1 or 'auto', got {self.alpha}")
        if isinstance(self.init, str) and self.init not in ("pca", "kpca"):
            raise ParameterError(f"init must be 'pca', 'kpca' or an array, got {self.init!r}")
        if not self.fd_step > 0:
            raise ParameterError("fd_step must be positive")

    def resolve_learning_rate(self, n: int) -> float:
        if self.learning_rate == "auto":
            return max(n / self.early_exaggeration / 4.0, 50.0)
        return float(self.learning_rate)

    def resolve_alpha(self) -> float:
        if self.alpha == "auto":
            return default_alpha(self.n_components)
        return float(self.alpha)

    def resolved(self, n: int) -> dict:
        """The configuration with every automatic value made concrete."""
        init = self.init if isinstance(self.init, str) else "given"
        return {
            "variant": self.variant.value,
            "n_components": self.n_components,
            "perplexity": self.perplexity,
            "kernel": self.kernel.to_dict() if self.variant is not Variant.PLAIN else None,
            "n_iter": self.n_iter,
            "early_exaggeration": self.early_exaggeration,
            "early_exaggeration_iters": self.early_exaggeration_iters,
            "learning_rate": self.resolve_learning_rate(n),
            "learning_rate_mode": "auto" if self.learning_rate == "auto" else "fixed",
            "momentum": self.momentum,
            "final_momentum": self.final_momentum,
            "momentum_switch_iter": self.switch_iter(),
            "init": init,
            "alpha": self.resolve_alpha() if self.variant is Variant.END_TO_END else None,
            "seed": self.seed,
            "fd_gradient": self.fd_gradient,
        }

    def switch_iter(self) -> int | None:
        if self.final_momentum is None:
            return None
        return self.early_exaggeration_iters if self.momentum_switch_iter is None else self.momentum_switch_iter


@dataclass
class EmbeddingState:
    Y: np.ndarray
    M: np.ndarray
    iter: int = 0
    exaggerating: bool = True


@dataclass(frozen=True)
class ReductionResult:
    Y: np.ndarray
    P: np.ndarray
    kl_iterations: tuple
    kl_trace: tuple
    config: dict
    wall_time: float
    timings: dict

    @property
    def final_kl(self) -> float:
        return self.kl_trace[-1]

    def kl_at(self, iteration: int) -> float:
        return self.kl_trace[self.kl_iterations.index(iteration)]


# -- initialization ----------------------------------------------------------

def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _rescale(Y: np.ndarray, scale: float | None, ref: float) -> np.ndarray:
    if scale is None:
        return Y
    std0 = Y[:, 0].std()
    if std0 <= 1e-10 * max(ref, 1.0):
        return np.zeros_like(Y)
    return Y * (scale / std0)


def pca_init(X, m: int, scale: float | None = INIT_SCALE) -> np.ndarray:
    """Project centered data on its top ``m`` principal directions.

    The result is rescaled so the first coordinate has standard deviation
    ``scale`` (pass ``None`` to keep raw PCA scores).
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if m > d:
        raise ParameterError(f"target dimension {m} exceeds feature count {d}")
    Xc = X - X.mean(0)
    _, _, Vt = np.linalg.svd(Xc, full_matrices=False)
    V = _fix_signs(Vt[:m].T)
    Y = np.zeros((n, m))
    Y[:, : V.shape[1]] = Xc @ V
    return _rescale(Y, scale, np.abs(X).max(initial=0.0))


def _center_gram(K: np.ndarray) -> np.ndarray:
    row = K.mean(0)
    return K - row[None, :] - row[:, None] + K.mean()


def kernel_pca_init(spec: KernelSpec, X, m: int, scale: float | None = INIT_SCALE) -> np.ndarray:
    """Kernel PCA scores: top eigenvectors of the double-centered Gram matrix
    times the square roots of their eigenvalues."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if m > n:
        raise ParameterError(f"target dimension {m} exceeds sample count {n}")
    Kc = _center_gram(gram_matrix(spec, X))
    Kc = 0.5 * (Kc + Kc.T)
    vals, vecs = np.linalg.eigh(Kc)
    order = np.argsort(vals)[::-1][:m]
    vals, vecs = vals[order], _fix_signs(vecs[:, order])
    keep = vals >= 1e-12
    Y = np.zeros((n, m))
    Y[:, keep] = vecs[:, keep] * np.sqrt(vals[keep])
    return _rescale(Y, scale, np.sqrt(max(np.abs(Kc).max(initial=0.0), 0.0)))


# -- cost and gradients ------------------------------------------------------

def kl_cost(P, Q) -> float:
    """``sum p log(p / q)`` over off-diagonal pairs with ``p > 1e-12``."""
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    if P.shape != Q.shape:
        raise DimensionError(f"P and Q shapes differ: {P.shape} vs {Q.shape}")
    mask = P > Q_FLOOR
    np.fill_diagonal(mask, False)
    p = P[mask]
    return float(np.sum(p * np.log(p / np.maximum(Q[mask], Q_FLOOR))))


def _radial_sum(B: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # row i: sum_j B_ij (y_i - y_j)
    return B.sum(1)[:, None] * Y - B @ Y


def tsne_gradient(P, Q, Y) -> np.ndarray:
    """``4 sum_j (p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j)``."""
    Y = np.asarray(Y, float)
    W = 1.0 / (1.0 + squared_euclidean(Y))
    return 4.0 * _radial_sum((np.asarray(P) - np.asarray(Q)) * W, Y)


def e2e_kernel_gradient(P, Q, Y, spec: KernelSpec, alpha: float | None = None,
                        fd: bool = False, h: float = 1e-5) -> np.ndarray:
    """Gradient of the KL cost when the embedding affinities are Student-t
    over kernel-space distances.

    ``fd=True`` swaps the analytic pair gradients of the kernel for central
    differences.
    """
    Y = np.asarray(Y, float)
    if alpha is None:
        alpha = default_alpha(Y.shape[1])
    K = gram_matrix(spec, Y)
    return _e2e_gradient(np.asarray(P) - np.asarray(Q), K, distances_from_gram(K), Y, spec, alpha, fd, h)


def _e2e_gradient(PQ, K, d, Y, spec, alpha, fd, h):
    A = PQ / (1.0 + d / alpha)
    c = (alpha + 1.0) / alpha
    if fd:
        return c * np.einsum("ij,ijc->ic", A, pair_gradients_fd(spec, Y, h))
    return c * _radial_sum(A * pair_gradient_weights(spec, Y, K), Y)


# -- optimization ------------------------------------------------------------

def high_dim_distances(X, config: OptimizerConfig) -> np.ndarray:
    if config.variant is Variant.PLAIN:
        return squared_euclidean(X)
    return kernel_distance_matrix(config.kernel, X)


def initial_embedding(X, config: OptimizerConfig) -> np.ndarray:
    m = config.n_components
    if isinstance(config.init, str):
        if config.init == "kpca":
            spec = LINEAR if config.variant is Variant.PLAIN else config.kernel
            return kernel_pca_init(spec, X, m)
        return pca_init(X, m)
    Y0 = np.array(config.init, dtype=float)
    if Y0.shape != (X.shape[0], m):
        raise DimensionError(f"given init has shape {Y0.shape}, expected {(X.shape[0], m)}")
    return Y0


def exaggerated(P: np.ndarray, t: int, config: OptimizerConfig) -> np.ndarray:
    """Affinities used at iteration ``t`` (0-based); scaled, not renormalized."""
    if t < config.early_exaggeration_iters:
        return P * config.early_exaggeration
    return P


def run_reduction(X, config: OptimizerConfig,
                  callback: Callable[[EmbeddingState, np.ndarray], None] | None = None) -> ReductionResult:
    """Embed ``X`` with momentum gradient descent on the KL cost.

    ``callback(state, P_used)`` is called after every update.
    Raises :class:`DivergenceError` if the coordinates become non-finite or
    exceed 1e8 in magnitude.
    """
    t_start = time.perf_counter()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InputError(f"need a 2-d data matrix with at least 2 rows, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("data matrix contains non-finite values")
    n = X.shape[0]
    if n < 2 * config.perplexity + 1:
        warnings.warn(f"n={n} is small for perplexity {config.perplexity}; "
                      f"at least {int(2 * config.perplexity + 1)} points recommended", stacklevel=2)

    lr = config.resolve_learning_rate(n)
    alpha = config.resolve_alpha()
    e2e = config.variant is Variant.END_TO_END

    P = symmetrize(conditional_affinities(high_dim_distances(X, config), config.perplexity))
    t_aff = time.perf_counter()

    Y = initial_embedding(X, config)
    state = EmbeddingState(Y=Y, M=np.zeros_like(Y))
    t_init = time.perf_counter()

    kl_iters, kl_vals = [], []
    kernel_time = 0.0
    switch = config.switch_iter()

    def q_matrix(Y):
        nonlocal kernel_time
        if e2e:
            tk = time.perf_counter()
            K = gram_matrix(config.kernel, Y)
            d = distances_from_gram(K)
            kernel_time += time.perf_counter() - tk
            W = student_t_weights(d, alpha)
        else:
            K = None
            d = squared_euclidean(Y)
            W = 1.0 / (1.0 + d)
        np.fill_diagonal(W, 0.0)
        return W / W.sum(), K, d, W

    for t in range(config.n_iter):
        state.exaggerating = t < config.early_exaggeration_iters
        P_used = exaggerated(P, t, config)
        Q, K, d, W = q_matrix(state.Y)
        if t % KL_STRIDE == 0:
            kl_iters.append(t)
            kl_vals.append(kl_cost(P, Q))
        if e2e:
            G = _e2e_gradient(P_used - Q, K, d, state.Y, config.kernel, alpha, config.fd_gradient, config.fd_step)
        else:
            G = 4.0 * _radial_sum((P_used - Q) * W, state.Y)
        mom = config.final_momentum if switch is not None and t >= switch else config.momentum
        state.M = mom * state.M - lr * G
        state.Y = state.Y + state.M
        state.iter = t + 1
        if not np.all(np.isfinite(state.Y)) or np.abs(state.Y).max() > DIVERGENCE_LIMIT:
            raise DivergenceError(t + 1)
        if callback is not None:
            callback(state, P_used)

    Q = q_matrix(state.Y)[0]
    kl_iters.append(config.n_iter)
    kl_vals.append(kl_cost(P, Q))
    t_end = time.perf_counter()

    loop = t_end - t_init
    timings = {
        "affinity_s": t_aff - t_start,
        "init_s": t_init - t_aff,
        "loop_s": loop,
        "per_iteration_s": loop / max(config.n_iter, 1),
        "total_s": t_end - t_start,
    }
    if e2e:
        timings["kernel_matrix_s"] = kernel_time
        timings["kernel_matrix_per_iteration_s"] = kernel_time / max(config.n_iter, 1)
    return ReductionResult(
        Y=state.Y,
        P=P,
        kl_iterations=tuple(kl_iters),
        kl_trace=tuple(kl_vals),
        config=config.resolved(n),
        wall_time=t_end - t_start,
        timings=timings,
    )
