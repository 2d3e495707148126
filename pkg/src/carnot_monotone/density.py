"""Homogeneous distances, ball volumes and density-based point classification.

The distance is the box gauge ``d(x, y) = N(x^{-1} y)`` with
``N(p) = max_i (kappa_i * |p_i|)^(1/i)``, ``|p_i|`` the Euclidean norm of the
layer-``i`` block.  ``kappa_1 = 1`` and ``kappa_i = c^(i-1)`` for ``i >= 2``,
where ``c`` is the largest value (found numerically, then divided by a 1.05
safety margin) for which ``N(pq) <= N(p) + N(q)`` holds on the sampled pairs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import rng
from .errors import DegenerateBall, NonPositiveRadius
from .lie_core import CarnotGroup, dilate, layer_norms, multiply

__all__ = [
    "BoxGauge",
    "box_gauge",
    "distance",
    "Estimate",
    "VolumeLawReport",
    "DensityProfile",
    "ball_volume_law",
    "sample_ball",
    "density_profile",
    "classify_point",
    "boundary_scan",
    "small_density_violations",
]

SAFETY = 1.05
CLASSES = ("interior", "exterior", "boundary", "undetermined")


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    samples: int
    seed: int

    def to_dict(self):
        return {"value": self.value, "stderr": self.stderr, "samples": self.samples, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class BoxGauge:
    group: CarnotGroup
    kappa: tuple[float, ...]
    kind: str = "box_gauge"

    def norm(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        norms = layer_norms(self.group, p)
        k = np.asarray(self.kappa)
        expo = 1.0 / np.arange(1, self.group.s + 1)
        return np.max((k * norms) ** expo, axis=-1)

    def __call__(self, x, y) -> np.ndarray:
        return self.norm(multiply(self.group, -np.asarray(x, dtype=float), y))

    def unit_ball_box(self):
        """Coordinate box ``(lo, hi)`` containing ``B(0, 1)``."""
        g = self.group
        half = np.concatenate([np.full(d, 1.0 / self.kappa[i]) for i, d in enumerate(g.strat.layer_dims)])
        return -half, half

    def to_dict(self):
        return {"kind": self.kind, "kappa": list(self.kappa)}


def _triangle_ratio(g: CarnotGroup, c: float, p, q) -> np.ndarray:
    kappa = np.array([1.0] + [c ** (i - 1) for i in range(2, g.s + 1)])
    gauge = BoxGauge(g, tuple(kappa))
    return gauge.norm(multiply(g, p, q)) / (gauge.norm(p) + gauge.norm(q))


def _sup_ratio(g: CarnotGroup, c: float, pairs: int, seed: int) -> float:
    gen = np.random.default_rng(seed)
    scales = np.exp(gen.uniform(-3, 3, (pairs, 2, g.s)))
    raw = gen.standard_normal((pairs, 2, g.n))
    layer = g.strat.layer_of - 1
    pts = raw * scales[:, :, layer]
    p, q = pts[:, 0], pts[:, 1]
    ratio = _triangle_ratio(g, c, p, q)
    # vectorized random-walk ascent from the worst pairs
    top = np.argsort(ratio)[-64:]
    z = np.concatenate([p[top], q[top]], axis=1)
    val = ratio[top]
    step = 0.1 * np.abs(z).mean(axis=1, keepdims=True)
    for _ in range(300):
        trial = z + step * gen.standard_normal(z.shape)
        tv = _triangle_ratio(g, c, trial[:, : g.n], trial[:, g.n:])
        better = tv > val
        z[better] = trial[better]
        val[better] = tv[better]
        step = np.where(better[:, None], step * 1.2, step * 0.9)
    return float(max(ratio.max(), val.max()))


@lru_cache(maxsize=None)
def _calibrate(g: CarnotGroup, pairs: int, seed: int) -> tuple[float, ...]:
    if g.s == 1:
        return (1.0,)
    lo, hi = 1e-6, 1.0
    while _sup_ratio(g, hi, pairs, seed) <= 1.0 + 1e-9 and hi < 1e6:
        lo, hi = hi, hi * 4.0
    for _ in range(40):
        mid = np.sqrt(lo * hi)
        if _sup_ratio(g, mid, pairs, seed) <= 1.0 + 1e-9:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.001:
            break
    c = lo / SAFETY
    return tuple([1.0] + [float(c ** (i - 1)) for i in range(2, g.s + 1)])


def box_gauge(g: CarnotGroup, pairs: int = 20000, seed: int = 0) -> BoxGauge:
    """Calibrated box gauge for ``g`` (cached per group)."""
    return BoxGauge(g, _calibrate(g, pairs, seed))


def distance(g: CarnotGroup, x, y, d: BoxGauge | None = None) -> np.ndarray:
    d = box_gauge(g) if d is None else d
    return d(x, y)


def sample_ball(d: BoxGauge, count: int, seed: int, stream, start: int = 0):
    """Uniform points of ``B(0, 1)`` by rejection from its coordinate box.

    Returns ``(points, proposals)``; the count of accepted points may be
    smaller than ``count`` only if the proposal budget runs out.
    """
    g = d.group
    lo, hi = d.unit_ball_box()
    out = []
    got = 0
    used = 0
    chunk = max(4 * count, 1024)
    while got < count:
        u = rng.uniform(seed, stream, start + used, chunk, g.n)
        used += chunk
        pts = lo + (hi - lo) * u
        pts = pts[d.norm(pts) < 1.0]
        out.append(pts)
        got += len(pts)
        if used > 1000 * max(count, 1):
            raise DegenerateBall("rejection sampling of the unit ball does not accept")
    return np.concatenate(out)[:count], used


@dataclass
class VolumeLawReport:
    radii: list
    volumes: list
    slope: float
    slope_stderr: float
    intercept: float
    Q: int
    samples: int
    seed: int

    def to_dict(self):
        return {
            "radii": list(map(float, self.radii)),
            "volumes": [v.to_dict() for v in self.volumes],
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "intercept": self.intercept,
            "Q": self.Q,
            "samples": self.samples,
            "seed": self.seed,
        }


def ball_volume_law(g: CarnotGroup, d: BoxGauge | None, radii, samples: int, seed: int = 0) -> VolumeLawReport:
    """Monte-Carlo volumes of ``B(0, r)`` and the fitted log-log slope.

    Each radius gets independent uniform draws in the box ``r``-dilated from
    the unit ball's coordinate box.
    """
    d = box_gauge(g) if d is None else d
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise NonPositiveRadius("radii must be positive")
    lo, hi = d.unit_ball_box()
    vols = []
    for k, r in enumerate(radii):
        blo, bhi = dilate(g, r, lo), dilate(g, r, hi)
        box_vol = float(np.prod(bhi - blo))
        hits = 0
        for start in range(0, samples, 1 << 18):
            m = min(1 << 18, samples - start)
            u = rng.uniform(seed, f"volume-{k}", start, m, g.n)
            hits += int(np.count_nonzero(d.norm(blo + (bhi - blo) * u) < r))
        frac = hits / samples
        se = np.sqrt(frac * (1 - frac) / samples)
        vols.append(Estimate(box_vol * frac, box_vol * se, samples, seed))
    y = np.log([v.value for v in vols])
    x = np.log(radii)
    w = np.array([v.value / v.stderr if v.stderr > 0 else 1e12 for v in vols])
    coef, cov = np.polyfit(x, y, 1, w=w, cov="unscaled") if len(x) > 2 else (np.polyfit(x, y, 1), np.zeros((2, 2)))
    return VolumeLawReport(list(radii), vols, float(coef[0]), float(np.sqrt(max(cov[0, 0], 0.0))),
                           float(coef[1]), g.Q, samples, seed)


@dataclass
class DensityProfile:
    point: np.ndarray
    radii: np.ndarray
    ratios: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.ratios])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([e.stderr for e in self.ratios])

    @property
    def h_values(self) -> np.ndarray:
        v = self.values
        return np.minimum(v, 1.0 - v)


def _unit_ball_table(d: BoxGauge, samples: int, seed: int, k: int) -> np.ndarray:
    pts, _ = sample_ball(d, samples, seed, f"density-radius-{k}")
    return pts


def density_profile(E, x, radii, samples_per_radius: int, d: BoxGauge | None = None, seed: int = 0,
                    group: CarnotGroup | None = None) -> DensityProfile:
    """Volume fractions ``mu(E ∩ B(x, r)) / mu(B(x, r))`` along decreasing radii.

    Radius ``k`` uses its own uniform sample ``u`` of the unit ball, mapped to
    ``x . delta_r(u)``; the same ``(seed, k)`` gives the same ``u`` for every
    centre and every radius value.
    """
    return density_profiles(E, np.atleast_2d(x), radii, samples_per_radius, d, seed, group)[0]


def density_profiles(E, points, radii, samples_per_radius: int, d: BoxGauge | None = None, seed: int = 0,
                     group: CarnotGroup | None = None, chunk: int = 256) -> list[DensityProfile]:
    g = group or (d.group if d is not None else E.group)
    d = box_gauge(g) if d is None else d
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise NonPositiveRadius("radii must be positive")
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")
    if samples_per_radius < 1:
        raise DegenerateBall("need at least one sample per radius")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    profiles = [DensityProfile(p.copy(), radii.copy()) for p in points]
    m = samples_per_radius
    for k, r in enumerate(radii):
        u = dilate(g, r, _unit_ball_table(d, m, seed, k))
        for start in range(0, len(points), chunk):
            xs = points[start: start + chunk]
            pts = multiply(g, xs[:, None, :], u[None, :, :])
            inside = E.member(pts.reshape(-1, g.n)).reshape(len(xs), m)
            frac = inside.mean(axis=1)
            se = np.sqrt(frac * (1.0 - frac) / m)
            for j, (f, s) in enumerate(zip(frac, se)):
                profiles[start + j].ratios.append(Estimate(float(f), float(s), m, seed))
    return profiles


def classify_point(profile: DensityProfile, eps: float, r_min: float = 0.0) -> str:
    """``boundary`` if ``min(ratio, 1 - ratio) >= eps`` at every radius ``>= r_min``;
    otherwise ``interior``/``exterior`` by the ratio at the smallest such radius."""
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    keep = profile.radii >= r_min
    if not np.any(keep):
        return "undetermined"
    v = profile.values[keep]
    h = np.minimum(v, 1.0 - v)
    if np.all(h >= eps):
        return "boundary"
    smallest = v[np.argmin(profile.radii[keep])]
    if smallest >= 1.0 - eps:
        return "interior"
    if smallest <= eps:
        return "exterior"
    return "undetermined"


@dataclass
class BoundaryScan:
    points: np.ndarray
    profiles: list
    classes: list
    eps: float
    r_min: float
    radii: np.ndarray
    gauge: BoxGauge
    seed: int

    def counts(self) -> dict:
        return {c: self.classes.count(c) for c in CLASSES}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n = self.points.shape[1]
        header = [f"x{i + 1}" for i in range(n)]
        for r in self.radii:
            header += [f"ratio_r{r:g}", f"stderr_r{r:g}"]
        writer.writerow(header + ["class"])
        for p, prof, c in zip(self.points, self.profiles, self.classes):
            row = [repr(float(v)) for v in p]
            for e in prof.ratios:
                row += [repr(e.value), repr(e.stderr)]
            writer.writerow(row + [c])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "eps": self.eps,
            "r_min": self.r_min,
            "radii": [float(r) for r in self.radii],
            "seed": self.seed,
            "distance": self.gauge.to_dict(),
            "points": len(self.classes),
            "counts": self.counts(),
        }


def grid_points(lo, hi, step: float) -> np.ndarray:
    axes = [np.arange(a, b + 0.5 * step, step) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def boundary_scan(E, box, grid_step: float, eps: float, radii, d: BoxGauge | None = None,
                  samples_per_radius: int = 400, r_min: float = 0.0, seed: int = 0,
                  group: CarnotGroup | None = None) -> BoundaryScan:
    """Classify every point of a regular grid over ``box = (lo, hi)``."""
    g = group or (d.group if d is not None else E.group)
    d = box_gauge(g) if d is None else d
    pts = grid_points(np.asarray(box[0], float), np.asarray(box[1], float), grid_step)
    profiles = density_profiles(E, pts, radii, samples_per_radius, d, seed, g)
    classes = [classify_point(p, eps, r_min) for p in profiles]
    return BoundaryScan(pts, profiles, classes, eps, r_min, np.asarray(radii, float), d, seed)


def small_density_violations(profiles, eps_test: float = 0.01) -> list[dict]:
    """Report points where ``0 < ratio < eps_test`` at some radius ``r`` yet the
    ratio at the next radius of the ladder is still positive (and the same for
    the complement).  Reported, never raised: the threshold is a test choice."""
    out = []
    for prof in profiles:
        v = prof.values
        for k in range(len(v) - 1):
            for label, a, b in (("E", v[k], v[k + 1]), ("complement", 1 - v[k], 1 - v[k + 1])):
                if 0 < a < eps_test and b > 0:
                    out.append({"point": prof.point.tolist(), "radius": float(prof.radii[k]),
                                "side": label, "ratio": float(a), "ratio_next": float(b)})
    return out
