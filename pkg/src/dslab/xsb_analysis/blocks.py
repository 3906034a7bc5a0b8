"""Dyadic frequency-modulation blocks and their multilinear norm bounds.

A block restricts each wave to a dyadic frequency shell ``<xi_j> ~ N_j``, a
dyadic modulation shell ``<lambda_j> ~ L_j`` with lambda_j = tau_j +
sign_j |xi_j|^2, and the resonance level ``<h> ~ H``. Shells are half-open
bracket annuli [C, 2C), so the unit shell absorbs everything below size one;
that mirrors the usual reduction to L_min, N_max of size at least one. The
"within a factor of 4" reading of ~ applies throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .multipliers import Gamma3Multiplier, estimate_3Z_norm

PLUS_PLUS_PLUS = "plus_plus_plus"
HIGH_PARALLEL = "high_parallel"
COHERENT = "coherent"
GENERIC = "generic"
CASES = (PLUS_PLUS_PLUS, HIGH_PARALLEL, COHERENT, GENERIC)

SIGN_PATTERNS = ((1, 1, 1), (1, 1, -1))


def _is_dyadic(x: float) -> bool:
    if x <= 0:
        return False
    e = math.log2(x)
    return abs(e - round(e)) < 1e-12


def resonance_h(xi1, xi2, xi3, signs=(1, 1, -1)) -> float:
    """Signed sum of dispersion relations sum_j sign_j |xi_j|^2.

    The frequency triple must close (xi1 + xi2 + xi3 = 0); on that
    hyperplane the (+,+,-) pattern collapses to -2 xi1.xi2, which vanishes
    exactly when xi1 and xi2 are orthogonal.
    """
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    xi3 = np.asarray(xi3, dtype=float)
    if xi1.shape != (2,) or xi2.shape != (2,) or xi3.shape != (2,):
        raise ValueError("frequencies must be 2-vectors")
    if len(signs) != 3 or any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be a triple of +1/-1")
    scale = max(1.0, np.max(np.abs([xi1, xi2, xi3])))
    if np.max(np.abs(xi1 + xi2 + xi3)) > 1e-9 * scale:
        raise ValueError("frequencies must sum to zero")
    return float(
        signs[0] * xi1 @ xi1 + signs[1] * xi2 @ xi2 + signs[2] * xi3 @ xi3
    )


@dataclass(frozen=True)
class DyadicBlockSpec:
    """Dyadic shell sizes for one block; see module docstring for shells."""

    n1: float
    n2: float
    n3: float
    l1: float
    l2: float
    l3: float
    h: float
    signs: tuple = (1, 1, -1)

    def __post_init__(self) -> None:
        for name in ("n1", "n2", "n3", "l1", "l2", "l3", "h"):
            if not _is_dyadic(getattr(self, name)):
                raise ValueError(f"{name} must be a positive dyadic real")
        for name in ("l1", "l2", "l3", "h"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if tuple(self.signs) not in SIGN_PATTERNS:
            raise ValueError(f"signs must be one of {SIGN_PATTERNS}")

    @property
    def n_sorted(self) -> tuple:
        return tuple(sorted((self.n1, self.n2, self.n3)))

    @property
    def l_sorted(self) -> tuple:
        return tuple(sorted((self.l1, self.l2, self.l3)))

    @property
    def is_admissible(self) -> bool:
        """The two vanishing conditions: without them the support is empty."""
        n_min, n_med, n_max = self.n_sorted
        l_min, l_med, l_max = self.l_sorted
        top = max(l_med, self.h)
        return n_max <= 4 * n_med and top / 4 <= l_max <= 4 * top


@dataclass(frozen=True)
class BlockLattice:
    """Discretization of the zero-sum hyperplane used for block supports."""

    xi_step: float = 0.5
    tau_step: float = 0.5
    max_support: int = 400_000

    def __post_init__(self) -> None:
        if self.xi_step <= 0 or self.tau_step <= 0:
            raise ValueError("steps must be positive")


def _shell_points_2d(n: float, step: float) -> np.ndarray:
    """Lattice points with <xi> in [n, 2n)."""
    hi_sq = 4 * n * n - 1.0
    if hi_sq <= 0:
        return np.empty((0, 2))
    r = math.floor(math.sqrt(hi_sq) / step)
    axis = np.arange(-r, r + 1) * step
    x, y = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([x.ravel(), y.ravel()])
    br_sq = 1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2
    keep = (br_sq >= n * n) & (br_sq < 4 * n * n)
    return pts[keep]


def _bracket_shell(values: np.ndarray, c: float) -> np.ndarray:
    br_sq = 1.0 + values**2
    return (br_sq >= c * c) & (br_sq < 4 * c * c)


def _tau_axis(l: float, n: float, step: float) -> np.ndarray:
    # |tau| <= |lambda| + |xi|^2 < 2l + 4n^2 on the shells
    extent = 2 * l + 4 * n * n + step
    r = math.floor(extent / step)
    return np.arange(-r, r + 1) * step


def block_multiplier(spec: DyadicBlockSpec, lattice: BlockLattice) -> Gamma3Multiplier:
    """Enumerate the 0/1 block multiplier on the discretized hyperplane.

    Returns an empty multiplier (not an error) when no lattice point meets
    every shell; the vanishing conditions make that the expected outcome for
    inadmissible specs.
    """
    step = lattice.xi_step
    xi1 = _shell_points_2d(spec.n1, step)
    xi2 = _shell_points_2d(spec.n2, step)
    empty = Gamma3Multiplier(
        np.empty((0, 3)), np.empty((0, 3)), np.empty((0, 3)), np.empty(0)
    )
    if not len(xi1) or not len(xi2):
        return empty

    xi3 = -(xi1[:, None, :] + xi2[None, :, :])
    br3_sq = 1.0 + np.sum(xi3**2, axis=2)
    pair_ok = (br3_sq >= spec.n3**2) & (br3_sq < 4 * spec.n3**2)
    s = spec.signs
    h_pair = (
        s[0] * np.sum(xi1**2, axis=1)[:, None]
        + s[1] * np.sum(xi2**2, axis=1)[None, :]
        + s[2] * (br3_sq - 1.0)
    )
    pair_ok &= _bracket_shell(h_pair, spec.h)
    i1, i2 = np.nonzero(pair_ok)
    if not len(i1):
        return empty
    if len(i1) > lattice.max_support:
        raise ValueError(f"{len(i1)} shell pairs exceed max_support")

    p1 = xi1[i1]
    p2 = xi2[i2]
    h_vals = h_pair[i1, i2]
    tau1_axis = _tau_axis(spec.l1, spec.n1, lattice.tau_step)
    tau2_axis = _tau_axis(spec.l2, spec.n2, lattice.tau_step)
    lam1 = tau1_axis[None, :] + s[0] * np.sum(p1**2, axis=1)[:, None]
    lam2 = tau2_axis[None, :] + s[1] * np.sum(p2**2, axis=1)[:, None]
    ok1 = _bracket_shell(lam1, spec.l1)
    ok2 = _bracket_shell(lam2, spec.l2)

    rows1, rows2, rows3 = [], [], []
    total = 0
    chunk = max(1, 2_000_000 // (len(tau1_axis) * len(tau2_axis) + 1))
    for lo in range(0, len(p1), chunk):
        hi = min(lo + chunk, len(p1))
        lam3 = (
            h_vals[lo:hi, None, None]
            - lam1[lo:hi, :, None]
            - lam2[lo:hi, None, :]
        )
        mask = ok1[lo:hi, :, None] & ok2[lo:hi, None, :]
        mask &= _bracket_shell(lam3, spec.l3)
        ip, it1, it2 = np.nonzero(mask)
        if not len(ip):
            continue
        total += len(ip)
        if total > lattice.max_support:
            raise ValueError(f"block support exceeds max_support = {lattice.max_support}")
        ip = ip + lo
        t1 = tau1_axis[it1]
        t2 = tau2_axis[it2]
        rows1.append(np.column_stack([p1[ip], t1]))
        rows2.append(np.column_stack([p2[ip], t2]))
        rows3.append(np.column_stack([-(p1[ip] + p2[ip]), -(t1 + t2)]))
    if not total:
        return empty
    return Gamma3Multiplier(
        np.vstack(rows1), np.vstack(rows2), np.vstack(rows3), np.ones(total)
    )


def _classify(spec: DyadicBlockSpec) -> str:
    if tuple(spec.signs) == (1, 1, 1):
        return PLUS_PLUS_PLUS
    ns = (spec.n1, spec.n2, spec.n3)
    ls = (spec.l1, spec.l2, spec.l3)
    # same-sign pair on top: both + slots at least as large as the - slot
    if min(ns[0], ns[1]) >= ns[2]:
        return HIGH_PARALLEL
    # mixed pair on top; the low + slot may carry the coherent modulation
    low = 0 if ns[0] <= ns[1] else 1
    high = 1 - low
    if spec.h / 4 <= ls[low] <= 4 * spec.h and ls[low] >= 4 * max(
        ls[high], ls[2], ns[low] ** 2
    ):
        return COHERENT
    return GENERIC


def block_bound(spec: DyadicBlockSpec) -> tuple[str, float]:
    """Case label plus the sharp block-norm bound for that case."""
    n_min, n_med, n_max = spec.n_sorted
    l_min, l_med, l_max = spec.l_sorted
    h = spec.h
    base = math.sqrt(l_min) * n_max**-0.5 * n_min**0.5
    case = _classify(spec)
    if case in (PLUS_PLUS_PLUS, HIGH_PARALLEL):
        value = base * math.sqrt(min(n_max * n_min, l_med))
    elif case == COHERENT:
        value = base * math.sqrt(min(h, h * l_med / n_min**2))
    else:
        value = base * math.sqrt(min(h, l_med)) * math.sqrt(min(1.0, h / n_min**2))
    return case, value


def check_block_bounds(
    specs,
    lattice: BlockLattice | None = None,
    restarts: int = 6,
    iters: int = 60,
    seed: int = 0,
    workers: int = 1,
) -> dict:
    """Estimate each block norm and compare with its case bound.

    C* is the smallest single constant with estimate <= C* * bound over the
    sweep (i.e. the max ratio); c_fit is the geometric mean ratio, a robust
    center to measure spread against.
    """
    if lattice is None:
        lattice = BlockLattice()
    rows = []
    for k, spec in enumerate(specs):
        if not spec.is_admissible:
            raise ValueError(f"spec #{k} violates the vanishing conditions")
        m = block_multiplier(spec, lattice)
        case, bound = block_bound(spec)
        est = estimate_3Z_norm(
            m, restarts=restarts, iters=iters, seed=seed + k, workers=workers
        )
        rows.append(
            {
                "spec": spec,
                "case": case,
                "support": m.size,
                "estimate": est,
                "bound": bound,
                "ratio": est / bound,
            }
        )
    ratios = [r["ratio"] for r in rows if r["support"] > 0]
    c_star = max(ratios) if ratios else 0.0
    c_fit = float(np.exp(np.mean(np.log(ratios)))) if ratios else 0.0
    return {"rows": rows, "c_star": c_star, "c_fit": c_fit}


def sample_block_specs(case: str, count: int, seed: int = 0, lattice=None):
    """Draw admissible specs of the requested case with nonempty support.

    Candidates whose support would exceed a probe cap (60k points, or the
    lattice's own cap if smaller) are redrawn: gigantic blocks add nothing to
    a bound sweep but dominate its runtime.
    """
    if lattice is None:
        lattice = BlockLattice()
    probe = BlockLattice(
        lattice.xi_step, lattice.tau_step, min(lattice.max_support, 60_000)
    )
    rng = np.random.default_rng(seed)
    out = []
    guard = 0
    while len(out) < count:
        guard += 1
        if guard > 200 * count:
            raise RuntimeError(f"sampler stalled for case {case!r}")
        spec = _draw_spec(case, rng)
        if spec is None or not spec.is_admissible:
            continue
        got, _ = block_bound(spec)
        if got != case:
            continue
        try:
            if block_multiplier(spec, probe).is_empty:
                continue
        except ValueError:
            continue
        out.append(spec)
    return out


def _dyadic_choice(rng, lo_exp: int, hi_exp: int) -> float:
    return float(2.0 ** rng.integers(lo_exp, hi_exp + 1))


def _draw_spec(case: str, rng):
    if case == PLUS_PLUS_PLUS:
        n_hi = _dyadic_choice(rng, 1, 2)
        ns = rng.permutation([n_hi, n_hi, _dyadic_choice(rng, 0, int(math.log2(n_hi)))])
        h = n_hi**2 * _dyadic_choice(rng, 0, 1)
        l_small = sorted(_dyadic_choice(rng, 0, 2) for _ in range(2))
        l_top = max(l_small[1], h) * rng.choice([1.0, 2.0])
        ls = rng.permutation([l_small[0], l_small[1], l_top])
        return DyadicBlockSpec(*ns, *ls, h, signs=(1, 1, 1))
    if case == HIGH_PARALLEL:
        n_hi = _dyadic_choice(rng, 1, 2)
        ns = [n_hi, n_hi * rng.choice([0.5, 1.0]), 0.0]
        ns[2] = _dyadic_choice(rng, 0, int(math.log2(min(ns[0], ns[1]))))
        h = _dyadic_choice(rng, 1, int(math.log2(2 * n_hi * n_hi)))
        l_small = sorted(_dyadic_choice(rng, 0, 2) for _ in range(2))
        l_top = max(l_small[1], h) * rng.choice([1.0, 2.0])
        ls = rng.permutation([l_small[0], l_small[1], l_top])
        return DyadicBlockSpec(*ns, *ls, h, signs=(1, 1, -1))
    if case == COHERENT:
        n_hi = _dyadic_choice(rng, 1, 2)
        low = int(rng.integers(0, 2))
        ns = [0.0, 0.0, n_hi]
        ns[1 - low] = n_hi
        ns[low] = 1.0
        h = _dyadic_choice(rng, 3, 4)
        ls = [0.0, 0.0, 0.0]
        ls[low] = h
        ls[1 - low] = _dyadic_choice(rng, 0, 1)
        ls[2] = _dyadic_choice(rng, 0, 1)
        return DyadicBlockSpec(*ns, *ls, h, signs=(1, 1, -1))
    if case == GENERIC:
        n_hi = _dyadic_choice(rng, 1, 2)
        low = int(rng.integers(0, 2))
        ns = [0.0, 0.0, n_hi]
        ns[1 - low] = n_hi * rng.choice([0.5, 1.0])
        ns[low] = _dyadic_choice(rng, 0, 1)
        if max(ns) > 4 * sorted(ns)[1]:
            return None
        h = _dyadic_choice(rng, 0, 2)
        l_small = sorted(_dyadic_choice(rng, 0, 2) for _ in range(2))
        l_top = max(l_small[1], h) * rng.choice([1.0, 2.0])
        ls = rng.permutation([l_small[0], l_small[1], l_top])
        return DyadicBlockSpec(*ns, *ls, h, signs=(1, 1, -1))
    raise ValueError(f"unknown case {case!r}")
