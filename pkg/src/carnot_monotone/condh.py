"""Rank of the product map ``(X_1, .., X_p) -> exp X_1 ... exp X_p`` at diagonal points.

A full-rank differential at ``(X, .., X)`` makes the map a submersion there,
hence open.  A rank deficiency says nothing about openness, so such reports
are marked inconclusive rather than negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHorizontal
from .lie_core import CarnotGroup, multiply

__all__ = ["GammaRankReport", "gamma", "gamma_rank", "find_min_submersion_p", "sphere_sweep", "sphere_directions"]

FD_STEP = 1e-5
RANK_RTOL = 1e-7


def _horizontal(g: CarnotGroup, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] == g.r and g.r != g.n:
        out = np.zeros(v.shape[:-1] + (g.n,))
        out[..., : g.r] = v
        return out
    if v.shape[-1] != g.n:
        raise ValueError(f"expected vectors of length {g.r} or {g.n}")
    if np.any(v[..., g.r:] != 0):
        raise NotHorizontal("arguments must lie in the first layer")
    return v


def gamma(g: CarnotGroup, args) -> np.ndarray:
    """``exp X_1 . exp X_2 ... exp X_p``; ``args`` has shape ``(..., p, n)`` or ``(..., p, r)``."""
    args = _horizontal(g, args)
    out = args[..., 0, :]
    for k in range(1, args.shape[-2]):
        out = multiply(g, out, args[..., k, :])
    return out


@dataclass(frozen=True)
class GammaRankReport:
    direction: np.ndarray
    p: int
    jacobian_rank: int
    full_rank_needed: int
    singular_values: np.ndarray
    step: float
    rtol: float

    @property
    def verdict(self) -> str:
        return "submersion" if self.jacobian_rank == self.full_rank_needed else "rank_deficient"

    @property
    def openness(self) -> str:
        return "open" if self.verdict == "submersion" else "inconclusive"

    def to_dict(self) -> dict:
        return {
            "direction": self.direction.tolist(),
            "p": self.p,
            "rank": self.jacobian_rank,
            "full_rank_needed": self.full_rank_needed,
            "singular_values": self.singular_values.tolist(),
            "verdict": self.verdict,
            "openness": self.openness,
            "step": self.step,
            "rtol": self.rtol,
        }


def gamma_jacobian(g: CarnotGroup, X, p: int, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian ``(n, p*r)`` of ``Gamma_p`` at ``(X, .., X)``."""
    X1 = _horizontal(g, X)[: g.r]
    base = np.tile(X1, (p, 1))
    m = p * g.r
    E = np.eye(m).reshape(m, p, g.r) * step
    plus = gamma(g, base[None] + E)
    minus = gamma(g, base[None] - E)
    return ((plus - minus) / (2 * step)).T


def gamma_rank(g: CarnotGroup, X, p: int, step: float = FD_STEP, rtol: float = RANK_RTOL) -> GammaRankReport:
    if p < 1:
        raise ValueError("p must be positive")
    J = gamma_jacobian(g, X, p, step)
    sv = np.linalg.svd(J, compute_uv=False)
    rank = int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0
    return GammaRankReport(_horizontal(g, X)[: g.r].copy(), p, rank, g.n, sv, step, rtol)


def find_min_submersion_p(g: CarnotGroup, X, p_max: int = 8, step: float = FD_STEP, rtol: float = RANK_RTOL):
    """Smallest ``p`` in ``2..p_max`` with a full-rank differential at the diagonal, else ``None``."""
    if p_max > 8:
        raise ValueError("p_max must not exceed 8")
    for p in range(2, p_max + 1):
        if gamma_rank(g, X, p, step, rtol).verdict == "submersion":
            return p
    return None


def sphere_directions(r: int, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform unit vectors in ``R^r``.

    Equally spaced angles for ``r = 2``, a Fibonacci lattice for ``r = 3``,
    normalized Gaussian draws otherwise.
    """
    if r == 1:
        return np.array([[1.0], [-1.0]] * ((count + 1) // 2))[:count]
    if r == 2:
        a = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if r == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        phi = np.pi * (1 + 5 ** 0.5) * k
        rho = np.sqrt(1 - z * z)
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    v = np.random.default_rng(seed).standard_normal((count, r))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sphere_sweep(g: CarnotGroup, p: int, directions: int = 100, seed: int = 0, step: float = FD_STEP,
                 rtol: float = RANK_RTOL) -> dict:
    dirs = sphere_directions(g.r, directions, seed)
    reports = [gamma_rank(g, X, p, step, rtol) for X in dirs]
    ranks = [rep.jacobian_rank for rep in reports]
    submersions = sum(rep.verdict == "submersion" for rep in reports)
    return {
        "group": g.name,
        "p": p,
        "directions": len(reports),
        "submersion": submersions,
        "rank_deficient": len(reports) - submersions,
        "worst_rank": min(ranks),
        "full_rank_needed": g.n,
        "deficient_directions": [rep.direction.tolist() for rep in reports if rep.verdict != "submersion"],
        "per_direction": [rep.to_dict() for rep in reports],
        "openness": "open" if submersions == len(reports) else "inconclusive",
    }
