"""Multilinear multiplier norms on convolution hyperplanes.

A [k;Z] norm is the best constant in |sum_Gamma m prod f_j| <= C prod ||f_j||
with counting measure on the hyperplane sum(zeta_j) = 0. Exact evaluation is
an injective tensor norm (NP-hard for k >= 3), so k = 3 is estimated from
below by alternating maximization over the three test functions; exact
oracles exist for k = 2 (largest singular value) and for product multipliers
via the TT* identity, and those anchor the estimator's accuracy in tests.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Gamma3Multiplier:
    """Sparse multiplier on the k = 3 hyperplane, one row per support point.

    points_j holds (xi_j1, xi_j2, tau_j) per entry; rows must satisfy
    sum_j points_j = 0. Labels index the distinct argument values seen by
    each slot, which is all the alternating optimizer needs.
    """

    points1: np.ndarray
    points2: np.ndarray
    points3: np.ndarray
    values: np.ndarray
    labels: tuple = field(init=False, repr=False)
    slot_sizes: tuple = field(init=False)

    def __post_init__(self) -> None:
        pts = (self.points1, self.points2, self.points3)
        n = len(self.values)
        for p in pts:
            if p.shape != (n, 3):
                raise ValueError("points arrays must be (n, 3)")
        if n:
            closure = pts[0] + pts[1] + pts[2]
            if np.max(np.abs(closure)) > 1e-9:
                raise ValueError("support must lie on the zero-sum hyperplane")
        labels, sizes = [], []
        for p in pts:
            uniq, lab = np.unique(p.round(decimals=9), axis=0, return_inverse=True)
            labels.append(lab.astype(np.int64))
            sizes.append(len(uniq))
        object.__setattr__(self, "labels", tuple(labels))
        object.__setattr__(self, "slot_sizes", tuple(sizes))

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def is_empty(self) -> bool:
        return self.size == 0

    def restrict(self, keep: np.ndarray) -> "Gamma3Multiplier":
        return Gamma3Multiplier(
            self.points1[keep], self.points2[keep], self.points3[keep], self.values[keep]
        )


def _contract(labels, size, values, other1, other2) -> np.ndarray:
    """Partial contraction of the form against two fixed test functions."""
    w = values * other1 * other2
    re = np.bincount(labels, weights=w.real, minlength=size)
    im = np.bincount(labels, weights=w.imag, minlength=size)
    return re + 1j * im


def _als_run(labels, sizes, values, fs, iters: int, tol: float) -> float:
    best = 0.0
    for _ in range(iters):
        previous = best
        for j in range(3):
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            t = _contract(
                labels[j], sizes[j], values, fs[j1][labels[j1]], fs[j2][labels[j2]]
            )
            norm = np.linalg.norm(t)
            if norm == 0.0:
                return best
            fs[j] = np.conj(t) / norm
            best = norm
        if abs(best - previous) <= tol * max(best, 1e-300):
            break
    return float(best)


def estimate_3Z_norm(
    m: Gamma3Multiplier,
    restarts: int = 16,
    iters: int = 200,
    tol: float = 1e-8,
    seed: int = 0,
    workers: int = 1,
) -> float:
    """Lower-bound estimate of the [3;Z] norm by alternating maximization.

    With two slots fixed the optimal third is the normalized conjugate
    partial contraction, so each sweep is monotone; restarts guard the
    nonconvexity. Includes one deterministic all-ones start.
    """
    if m.is_empty:
        return 0.0
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    starts = []
    for r in range(restarts):
        if r == 0:
            fs = [np.ones(n, dtype=np.complex128) / np.sqrt(n) for n in m.slot_sizes]
        else:
            fs = []
            for n in m.slot_sizes:
                f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                fs.append(f / np.linalg.norm(f))
        starts.append(fs)

    def run(fs):
        return _als_run(m.labels, m.slot_sizes, m.values, fs, iters, tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(fs) for fs in starts]
    return max(results)


def gamma2_matrix(n: int, entry) -> np.ndarray:
    """Dense bilinear form of a multiplier on Gamma_2(Z_n): xi2 = -xi1 mod n.

    entry(xi1, xi2) gives the multiplier value on the hyperplane.
    """
    a = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        j = (-i) % n
        a[i, j] = entry(i, j)
    return a


def norm_2Z(matrix: np.ndarray) -> float:
    """Exact [2;Z] norm of a dense two-slot multiplier: top singular value."""
    if matrix.ndim != 2:
        raise ValueError("expected a 2-d bilinear form")
    if not np.any(matrix):
        return 0.0
    return float(np.linalg.norm(matrix, 2))


def ttstar_pair(m_values: np.ndarray) -> np.ndarray:
    """Two-slot multiplier m(xi1) conj(m(-xi2)) on Gamma_2(Z_n)."""
    m_values = np.asarray(m_values)
    n = len(m_values)
    return gamma2_matrix(n, lambda i, j: m_values[i] * np.conj(m_values[(-j) % n]))


def one_slot_pair(m_values: np.ndarray) -> np.ndarray:
    """Two-slot multiplier depending on xi1 only, on Gamma_2(Z_n)."""
    m_values = np.asarray(m_values)
    return gamma2_matrix(len(m_values), lambda i, j: m_values[i])


def estimate_2Z_norm(
    matrix: np.ndarray,
    restarts: int = 8,
    iters: int = 200,
    tol: float = 1e-10,
    seed: int = 0,
) -> float:
    """Alternating-maximization counterpart of norm_2Z, for cross-checks."""
    if not np.any(matrix):
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    n1, n2 = matrix.shape
    for r in range(restarts):
        if r == 0:
            g = np.ones(n2, dtype=np.complex128) / np.sqrt(n2)
        else:
            g = rng.standard_normal(n2) + 1j * rng.standard_normal(n2)
            g /= np.linalg.norm(g)
        value = 0.0
        for _ in range(iters):
            t = matrix @ g
            f = np.conj(t) / np.linalg.norm(t)
            t2 = matrix.T @ f
            norm = np.linalg.norm(t2)
            g = np.conj(t2) / norm
            if abs(norm - value) <= tol * max(norm, 1e-300):
                value = norm
                break
            value = norm
        best = max(best, float(value))
    return best
