"""Horizontal lines, the complementary subgroups ``N_X`` and line sampling.

A line is stored as ``(X, n)`` with ``X`` a unit vector of the first layer and
``n`` a point of ``N_X = exp(X^perp)``; its points are ``n . exp(tX)``.
Coordinates on ``N_X`` use the orthonormal completion ``(X, X_2, .., X_r)``
of ``X`` in the first layer followed by the adapted basis of the higher
layers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import rng
from .errors import BadGrid, EmptyWindow, NonPositiveLambda
from .lie_core import CarnotGroup, dilate, multiply, sphere_area

__all__ = [
    "Line",
    "LineBatch",
    "Window",
    "NBox",
    "LineMeasureSampler",
    "unit_direction",
    "frame",
    "n_coords",
    "n_embed",
    "flow",
    "decompose",
    "translate_line",
    "dilate_line",
    "sample_lines",
    "flow_jacobian_det",
]


def unit_direction(g: CarnotGroup, v) -> np.ndarray:
    """Embed a first-layer vector (length ``r`` or ``n``) as a unit vector of length ``n``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] == g.n:
        if np.any(np.abs(v[..., g.r:]) > 0):
            raise ValueError("a direction must lie in the first layer")
        v = v[..., : g.r]
    elif v.shape[-1] != g.r:
        raise ValueError(f"direction must have length {g.r} or {g.n}")
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("direction must be nonzero")
    out = np.zeros(v.shape[:-1] + (g.n,))
    out[..., : g.r] = v / norm
    return out


def frame(g: CarnotGroup, X) -> np.ndarray:
    """Orthonormal completion of ``X`` in the first layer, shape ``(..., r, r-1)``.

    Gram-Schmidt on the adapted basis vectors, skipping the one matching the
    largest-magnitude component of ``X`` and keeping the others in index order.
    """
    X = np.asarray(X, dtype=float)
    x1 = X[..., : g.r]
    batch = x1.shape[:-1]
    x1 = x1.reshape(-1, g.r)
    m, r = x1.shape
    if r == 1:
        return np.zeros(batch + (1, 0))
    pivot = np.argmax(np.abs(x1), axis=1)
    order = np.argsort(np.arange(r)[None, :] == pivot[:, None], axis=1, kind="stable")[:, : r - 1]
    cols = []
    for j in range(r - 1):
        v = np.zeros((m, r))
        v[np.arange(m), order[:, j]] = 1.0
        v -= np.sum(v * x1, axis=1, keepdims=True) * x1
        for f in cols:
            v -= np.sum(v * f, axis=1, keepdims=True) * f
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        cols.append(v)
    F = np.stack(cols, axis=-1)
    # orient (X, X_2, .., X_r) positively
    sign = np.sign(np.linalg.det(np.concatenate([x1[:, :, None], F], axis=2)))
    F[:, :, -1] *= sign[:, None]
    return F.reshape(batch + (r, r - 1))


def n_coords(g: CarnotGroup, X, p, F=None) -> np.ndarray:
    """Coordinates on ``N_X`` (length ``n-1``) of a point ``p`` of ``N_X``."""
    p = np.asarray(p, dtype=float)
    F = frame(g, X) if F is None else F
    a1 = np.einsum("...ij,...i->...j", F, p[..., : g.r])
    return np.concatenate([a1, p[..., g.r:]], axis=-1)


def n_embed(g: CarnotGroup, X, a, F=None) -> np.ndarray:
    """Point of ``N_X`` with coordinates ``a``."""
    a = np.asarray(a, dtype=float)
    F = frame(g, X) if F is None else F
    p1 = np.einsum("...ij,...j->...i", F, a[..., : g.r - 1])
    return np.concatenate([p1, a[..., g.r - 1:]], axis=-1)


def flow(g: CarnotGroup, X, p, t) -> np.ndarray:
    """``p . exp(tX)``."""
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    return multiply(g, p, t[..., None] * X)


def decompose(g: CarnotGroup, X, y):
    """Split ``y = n . exp(tX)`` with ``n`` in ``N_X``.

    The first layer of a product is the sum of the first layers, so ``t`` is
    the projection of the first-layer part of ``y`` on ``X``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    t = np.sum(y[..., : g.r] * X[..., : g.r], axis=-1)
    n = multiply(g, y, -t[..., None] * X)
    return n, t


@dataclass(frozen=True)
class Line:
    direction: np.ndarray
    base: np.ndarray

    def point(self, g: CarnotGroup, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return flow(g, self.direction, np.broadcast_to(self.base, t.shape + self.base.shape), t)


def translate_line(g: CarnotGroup, y, L: Line) -> Line:
    """The line ``y . L``; its base is ``y . n . exp(-t_y X)``."""
    y = np.asarray(y, dtype=float)
    t_y = float(np.dot(y[: g.r], L.direction[: g.r]))
    base = multiply(g, multiply(g, y, L.base), -t_y * L.direction)
    return Line(L.direction, base)


def dilate_line(g: CarnotGroup, lam: float, L: Line) -> Line:
    return Line(L.direction, dilate(g, lam, L.base))


@dataclass(frozen=True)
class NBox:
    """Axis box in ``N_X`` coordinates (the same box for every direction)."""

    lo: np.ndarray
    hi: np.ndarray

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def line_measure(self, g: CarnotGroup) -> float:
        """Measure of ``{(X, n) : a(n) in box}`` under sphere measure times Haar on ``N_X``."""
        return sphere_area(g.r) * self.volume


@dataclass(frozen=True)
class Window:
    """The open set ``shift . delta_scale(box)`` with ``box = (lo, hi)``.

    Left translations and dilations of a window stay windows, which is how
    pointwise-transported boxes are represented.
    """

    lo: np.ndarray
    hi: np.ndarray
    shift: np.ndarray | None = None
    scale: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise EmptyWindow("window corners must be 1-d arrays of equal length")
        if np.any(hi <= lo):
            raise EmptyWindow(f"window box is empty: lo={lo}, hi={hi}")
        if not self.scale > 0:
            raise NonPositiveLambda(f"window scale must be positive, got {self.scale}")
        shift = np.zeros_like(lo) if self.shift is None else np.asarray(self.shift, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def cube(cls, g: CarnotGroup, half_width: float = 1.0, center=None) -> "Window":
        c = np.zeros(g.n) if center is None else np.asarray(center, dtype=float)
        return cls(c - half_width, c + half_width)

    def translated(self, g: CarnotGroup, y) -> "Window":
        return Window(self.lo, self.hi, multiply(g, y, self.shift), self.scale)

    def dilated(self, g: CarnotGroup, lam: float) -> "Window":
        return Window(self.lo, self.hi, dilate(g, lam, self.shift), self.scale * lam)

    def to_local(self, g: CarnotGroup, p) -> np.ndarray:
        q = multiply(g, -self.shift, p)
        return q if self.scale == 1.0 else dilate(g, 1.0 / self.scale, q)

    def from_local(self, g: CarnotGroup, u) -> np.ndarray:
        q = u if self.scale == 1.0 else dilate(g, self.scale, u)
        return multiply(g, self.shift, q)

    def contains(self, g: CarnotGroup, p, margin: float = 0.0) -> np.ndarray:
        u = self.to_local(g, p)
        return np.all((u > self.lo + margin) & (u < self.hi - margin), axis=-1)

    def slab(self, g: CarnotGroup):
        """First-layer box ``(lo1, hi1)`` containing the window (exact)."""
        r = g.r
        lo1 = self.shift[:r] + self.scale * self.lo[:r]
        hi1 = self.shift[:r] + self.scale * self.hi[:r]
        return lo1, hi1

    def line_interval(self, g: CarnotGroup, X, base):
        """Parameter interval where the line's first layer lies in the slab.

        The first layer moves affinely along a line, so this interval is
        exact and contains every parameter at which the line is in the window.
        Empty intervals come back with ``a >= b``.
        """
        lo1, hi1 = self.slab(g)
        x = np.asarray(X, dtype=float)[..., : g.r]
        p = np.asarray(base, dtype=float)[..., : g.r]
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo1 - p) / x
            t2 = (hi1 - p) / x
        lower = np.where(x != 0, np.minimum(t1, t2), np.where((p > lo1) & (p < hi1), -np.inf, np.inf))
        upper = np.where(x != 0, np.maximum(t1, t2), np.where((p > lo1) & (p < hi1), np.inf, -np.inf))
        return lower.max(axis=-1), upper.min(axis=-1)

    def covering_nbox(self, g: CarnotGroup, n_points: int = 4096, n_dirs: int = 64, safety: float = 2.0) -> NBox:
        """A box of ``N_X`` coordinates containing the bases of all lines meeting the window.

        First-layer coordinates are bounded exactly by the largest first-layer
        norm over the slab; higher coordinates are bounded from samples of the
        window and widened by ``safety`` around their midpoint.
        """
        key = (g.key, n_points, n_dirs, safety)
        if key in self._cache:
            return self._cache[key]
        gen = np.random.default_rng(12345)
        corners = np.array(list(product(*zip(self.lo, self.hi)))) if g.n <= 12 else np.empty((0, g.n))
        inner = self.lo + (self.hi - self.lo) * gen.random((n_points, g.n))
        pts = self.from_local(g, np.concatenate([corners, inner]))
        dirs = gen.standard_normal((n_dirs, g.r))
        dirs = np.concatenate([dirs, np.eye(g.r), -np.eye(g.r)])
        X = unit_direction(g, dirs)
        lo1, hi1 = self.slab(g)
        r1 = np.sqrt(np.sum(np.maximum(lo1 ** 2, hi1 ** 2)))
        lo = np.full(g.n - 1, -r1)
        hi = np.full(g.n - 1, r1)
        if g.n > g.r:
            Xb = np.repeat(X, len(pts), axis=0)
            yb = np.tile(pts, (len(X), 1))
            nb, _ = decompose(g, Xb, yb)
            high = nb[:, g.r:]
            mid = 0.5 * (high.max(axis=0) + high.min(axis=0))
            half = 0.5 * (high.max(axis=0) - high.min(axis=0))
            half = safety * half + 1e-9 * (1.0 + np.abs(mid))
            lo[g.r - 1:] = mid - half
            hi[g.r - 1:] = mid + half
        box = NBox(lo, hi)
        self._cache[key] = box
        return box


@dataclass(frozen=True)
class LineBatch:
    directions: np.ndarray
    bases: np.ndarray
    ncoords: np.ndarray
    index: np.ndarray

    def __len__(self):
        return len(self.index)

    def lines(self):
        for X, n in zip(self.directions, self.bases):
            yield Line(X, n)


@dataclass(frozen=True)
class LineMeasureSampler:
    """Directions uniform on the unit sphere of the first layer, bases uniform in an ``NBox``.

    Line ``i`` depends only on ``(seed, i)``.
    """

    group: CarnotGroup
    seed: int = 0

    def batch(self, nbox: NBox, start: int, count: int) -> LineBatch:
        g = self.group
        z = rng.normal(self.seed, "line-direction", start, count, g.r)
        u = rng.uniform(self.seed, "line-base", start, count, g.n - 1)
        X = np.zeros((count, g.n))
        X[:, : g.r] = z / np.linalg.norm(z, axis=1, keepdims=True)
        a = nbox.lo + (nbox.hi - nbox.lo) * u
        bases = n_embed(g, X, a)
        return LineBatch(X, bases, a, np.arange(start, start + count))

    def batches(self, nbox: NBox, count: int, chunk: int = 4096):
        for start in range(0, count, chunk):
            yield self.batch(nbox, start, min(chunk, count - start))


def sample_lines(sampler: LineMeasureSampler, window, count: int):
    """Deterministic stream of :class:`Line` with bases uniform in ``window``.

    ``window`` is an :class:`NBox` or a :class:`Window` (whose covering box is used).
    """
    if isinstance(window, Window):
        window = window.covering_nbox(sampler.group)
    if np.any(window.hi <= window.lo):
        raise EmptyWindow("line window is empty")
    for b in sampler.batches(window, count):
        yield from b.lines()


def parameter_grid(a, b, h: float):
    """Uniform grids covering ``[a_i, b_i]`` exactly, padded to a common length.

    Returns ``(t, valid, step)`` with shapes ``(N, K)``, ``(N, K)``, ``(N,)``.
    Each line gets ``ceil((b-a)/h)`` equal steps, so its step is at most ``h``
    and both endpoints are sampled.
    """
    if not h > 0:
        raise BadGrid(f"grid step must be positive, got {h}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = np.where(b > a, b - a, 0.0)
    m = np.maximum(np.ceil(length / h - 1e-9).astype(int), 1)
    K = int(m.max()) + 1 if len(m) else 1
    k = np.arange(K)
    step = length / m
    t = a[:, None] + k[None, :] * step[:, None]
    valid = (k[None, :] <= m[:, None]) & (length[:, None] > 0)
    return t, valid, step


def flow_jacobian_det(g: CarnotGroup, X, a, t, step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian determinant of ``(t, a) -> n(a) . exp(tX)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    F = frame(g, X)

    def phi(aa, tt):
        return flow(g, X, n_embed(g, X, aa, F), tt)

    cols = [(phi(a, t + step) - phi(a, t - step)) / (2 * step)]
    for j in range(g.n - 1):
        e = np.zeros(g.n - 1)
        e[j] = step
        cols.append((phi(a + e, t) - phi(a - e, t)) / (2 * step))
    J = np.stack(cols, axis=-1)
    return np.linalg.det(J)
