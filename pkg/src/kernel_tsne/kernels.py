"""Kernel evaluation, Gram and kernel-distance matrices, kernel gradients and
low-rank kernel approximations.

Only two kernels are supported: the RBF kernel ``exp(-gamma * |u - v|^2)``
and the linear kernel ``u . v``.  The linear kernel reproduces ordinary
squared Euclidean geometry, which makes it useful for checking the kernel
code paths against plain t-SNE.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import DimensionError, InputError, ParameterError, UnsupportedKernelError


class KernelKind(str, Enum):
    RBF = "rbf"
    LINEAR = "linear"


@dataclass(frozen=True)
class KernelSpec:
    """A kernel function and its parameters.

    ``gamma`` is only meaningful for the RBF kernel.
    """

    kind: KernelKind = KernelKind.RBF
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.RBF and not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ParameterError(f"RBF kernel needs gamma > 0, got {self.gamma}")

    @classmethod
    def rbf(cls, gamma: float) -> "KernelSpec":
        return cls(KernelKind.RBF, float(gamma))

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(KernelKind.LINEAR, 1.0)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is KernelKind.RBF:
            d["gamma"] = self.gamma
        return d


LINEAR = KernelSpec.linear()


def _as_vector(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {u.shape}")
    return u


def _as_matrix(X, min_rows: int = 1) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-d data matrix, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise InputError(f"need at least {min_rows} rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise InputError("data matrix contains non-finite values")
    return X


def eval_kernel(spec: KernelSpec, u, v) -> float:
    u, v = _as_vector(u), _as_vector(v)
    if u.shape != v.shape:
        raise DimensionError(f"vector lengths differ: {u.shape[0]} vs {v.shape[0]}")
    if spec.kind is KernelKind.RBF:
        diff = u - v
        return float(np.exp(-spec.gamma * np.dot(diff, diff)))
    return float(np.dot(u, v))


@lru_cache(maxsize=8)
def _lower_mask(n: int) -> np.ndarray:
    return np.tri(n, k=-1, dtype=bool)


def _mirror_upper(A: np.ndarray) -> np.ndarray:
    """Copy the upper triangle onto the lower one so ``A`` is exactly symmetric."""
    np.copyto(A, A.T.copy(), where=_lower_mask(A.shape[0]))
    return A


def distances_from_gram(G: np.ndarray) -> np.ndarray:
    """Kernel-trick squared distances from a Gram matrix (clamped, zero diagonal)."""
    diag = np.diag(G).copy()
    D = diag[:, None] - 2.0 * G + diag[None, :]
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return _mirror_upper(D)


def squared_euclidean(X) -> np.ndarray:
    """Pairwise squared Euclidean distances, via ``|x|^2 - 2 x.y + |y|^2``.

    This is exactly ``kernel_distance_matrix(LINEAR, X)``; both go through
    the same arithmetic so the two paths agree bitwise.
    """
    X = _as_matrix(X)
    return distances_from_gram(_mirror_upper(X @ X.T))


def cross_kernel(spec: KernelSpec, A, B) -> np.ndarray:
    """Rectangular kernel matrix ``K[i, j] = k(a_i, b_j)``."""
    A, B = _as_matrix(A), _as_matrix(B)
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"feature counts differ: {A.shape[1]} vs {B.shape[1]}")
    G = A @ B.T
    if spec.kind is KernelKind.LINEAR:
        return G
    sq = (A * A).sum(1)[:, None] - 2.0 * G + (B * B).sum(1)[None, :]
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.gamma * sq)


def gram_matrix(spec: KernelSpec, X) -> np.ndarray:
    X = _as_matrix(X, min_rows=2)
    G = _mirror_upper(X @ X.T)
    if spec.kind is KernelKind.LINEAR:
        return G
    K = np.exp(-spec.gamma * distances_from_gram(G))
    np.fill_diagonal(K, 1.0)
    return K


def kernel_distance_matrix(spec: KernelSpec, X) -> np.ndarray:
    """Squared distances in the kernel's feature space, by the kernel trick.

    ``D[i, j] = K[i, i] - 2 K[i, j] + K[j, j]``, with round-off negatives
    clamped to zero and an exactly zero diagonal.
    """
    return distances_from_gram(gram_matrix(spec, X))


def nystrom_gram(spec: KernelSpec, X, m_landmarks: int, seed: int = 0) -> np.ndarray:
    """Low-rank Gram approximation ``K_nm pinv(K_mm) K_nm^T`` from random landmarks."""
    X = _as_matrix(X, min_rows=1)
    n = X.shape[0]
    if not 1 <= m_landmarks <= n:
        raise ParameterError(f"m_landmarks must be in [1, {n}], got {m_landmarks}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=m_landmarks, replace=False))
    K_nm = cross_kernel(spec, X, X[idx])
    K_mm = K_nm[idx]
    K_mm = 0.5 * (K_mm + K_mm.T)
    K = K_nm @ np.linalg.pinv(K_mm, rcond=1e-10, hermitian=True) @ K_nm.T
    return _mirror_upper(K)


def rff_features(spec: KernelSpec, X, r: int, seed: int = 0) -> np.ndarray:
    """Random Fourier features ``sqrt(2/r) cos(X W + b)`` for the RBF kernel.

    Frequencies are drawn from N(0, 2*gamma*I) and phases from U[0, 2*pi),
    so ``Z @ Z.T`` is an unbiased estimate of the RBF Gram matrix.
    """
    if spec.kind is not KernelKind.RBF:
        raise UnsupportedKernelError("random Fourier features are only defined for the RBF kernel")
    if r < 1:
        raise ParameterError(f"r must be >= 1, got {r}")
    X = _as_matrix(X)
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, np.sqrt(2.0 * spec.gamma), size=(X.shape[1], r))
    b = rng.uniform(0.0, 2.0 * np.pi, size=r)
    return np.sqrt(2.0 / r) * np.cos(X @ W + b)


def kernel_pair_gradient(spec: KernelSpec, y_i, y_j) -> np.ndarray:
    """Gradient of ``k(y_i, y_i) - 2 k(y_i, y_j)`` with respect to ``y_i``."""
    y_i, y_j = _as_vector(y_i), _as_vector(y_j)
    if y_i.shape != y_j.shape:
        raise DimensionError(f"vector lengths differ: {y_i.shape[0]} vs {y_j.shape[0]}")
    diff = y_i - y_j
    if spec.kind is KernelKind.RBF:
        return 4.0 * spec.gamma * np.exp(-spec.gamma * np.dot(diff, diff)) * diff
    return 2.0 * diff


def kernel_pair_gradient_fd(spec: KernelSpec, y_i, y_j, h: float = 1e-5) -> np.ndarray:
    """Central-difference version of :func:`kernel_pair_gradient`."""
    if not h > 0:
        raise ParameterError(f"finite-difference step must be > 0, got {h}")
    y_i, y_j = _as_vector(y_i), _as_vector(y_j)
    if y_i.shape != y_j.shape:
        raise DimensionError(f"vector lengths differ: {y_i.shape[0]} vs {y_j.shape[0]}")

    grad = np.empty_like(y_i)
    for c in range(y_i.shape[0]):
        e = np.zeros_like(y_i)
        e[c] = h
        up, down = y_i + e, y_i - e
        # difference each kernel term separately so the constant k(y, y) of
        # the RBF kernel cancels before rounding
        self_term = eval_kernel(spec, up, up) - eval_kernel(spec, down, down)
        cross_term = eval_kernel(spec, up, y_j) - eval_kernel(spec, down, y_j)
        grad[c] = (self_term - 2.0 * cross_term) / (2.0 * h)
    return grad


def pair_gradient_weights(spec: KernelSpec, Y: np.ndarray, K: np.ndarray | None = None) -> np.ndarray:
    """Scalar ``s_ij`` with ``kernel_pair_gradient(y_i, y_j) = s_ij (y_i - y_j)``.

    Both supported kernels are radial in this sense, which lets full gradient
    matrices be assembled with one matrix product.  ``K`` may pass in an
    already computed ``gram_matrix(spec, Y)``.
    """
    if spec.kind is KernelKind.RBF:
        return 4.0 * spec.gamma * (gram_matrix(spec, Y) if K is None else K)
    n = np.asarray(Y).shape[0]
    return np.full((n, n), 2.0)


def pair_gradients_fd(spec: KernelSpec, Y: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """All pairwise finite-difference kernel gradients, shape ``(n, n, m)``.

    Entry ``[i, j]`` equals ``kernel_pair_gradient_fd(spec, Y[i], Y[j], h)``,
    computed in bulk.
    """
    if not h > 0:
        raise ParameterError(f"finite-difference step must be > 0, got {h}")
    Y = np.asarray(Y, dtype=float)
    n, m = Y.shape
    out = np.empty((n, n, m))

    def self_term(Yp):
        if spec.kind is KernelKind.RBF:
            return np.ones(n)
        return (Yp * Yp).sum(1)

    def cross_term(Yp):
        if spec.kind is KernelKind.RBF:
            diff = Yp[:, None, :] - Y[None, :, :]
            return np.exp(-spec.gamma * np.einsum("ijc,ijc->ij", diff, diff))
        return Yp @ Y.T

    for c in range(m):
        step = np.zeros(m)
        step[c] = h
        up, down = Y + step, Y - step
        diff = (self_term(up) - self_term(down))[:, None] - 2.0 * (cross_term(up) - cross_term(down))
        out[:, :, c] = diff / (2.0 * h)
    return out
