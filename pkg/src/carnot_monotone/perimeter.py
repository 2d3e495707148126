"""Perimeter estimates through line integrals of one-dimensional perimeters.

The perimeter of ``E`` in a window is proportional to the integral over
lines of the number of essential transitions of ``1_E`` inside the window.
The proportionality constant is never computed: every comparison made here
(differences under common random numbers, ratios between scales) is between
estimates built from the same line measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .density import box_gauge
from .errors import BadGrid, EmptyWindow, PerturbationTouchesBoundary
from .lie_core import CarnotGroup, dilate, multiply
from .lines import Line, LineBatch, LineMeasureSampler, Window
from .monotone import _line_counts, _map_batches, trace_batch
from .sets import SetOracle, dilate_set, metric_ball, perturb

__all__ = [
    "PerimeterEstimate",
    "MinimalityReport",
    "per_line_perimeter",
    "estimate_perimeter",
    "minimality_test",
    "homogeneity_test",
    "random_interior_balls",
]


@dataclass(frozen=True)
class PerimeterEstimate:
    value_unnormalized: float
    stderr: float
    lines_used: int
    lines_meeting: int
    window: dict
    grid: dict
    seed: int

    @property
    def value(self) -> float:
        return self.value_unnormalized

    def to_dict(self) -> dict:
        return {
            "value": self.value_unnormalized,
            "stderr": self.stderr,
            "lines": self.lines_used,
            "lines_meeting": self.lines_meeting,
            "window": self.window,
            "grid": self.grid,
            "seed": self.seed,
        }


def _window_dict(w: Window) -> dict:
    return {"lo": w.lo.tolist(), "hi": w.hi.tolist(), "shift": w.shift.tolist(), "scale": w.scale}


def _check_grid(h, min_run):
    if not h > 0:
        raise BadGrid(f"grid step must be positive, got {h}")
    min_run = 4 * h if min_run is None else min_run
    if min_run < h:
        raise BadGrid(f"min_run must be at least h={h}, got {min_run}")
    return min_run


def per_line_perimeter(E: SetOracle, L: Line, window: Window, h: float = 0.01, min_run: float | None = None) -> int:
    """Transitions of ``1_E`` along ``L`` counted separately on each stretch inside ``window``."""
    min_run = _check_grid(h, min_run)
    batch = LineBatch(L.direction[None, :], L.base[None, :], np.zeros((1, E.group.n - 1)), np.zeros(1, dtype=int))
    block, _ = trace_batch(E, batch, window, h)
    return int(_line_counts(block.values, block.valid, block.step, min_run, block.inside)[0])


def _counts_for(E, others, window, h, min_run):
    def work(batch):
        block, extra = trace_batch(E, batch, window, h, others=others)
        counts = [_line_counts(block.values, block.valid, block.step, min_run, block.inside)]
        counts += [_line_counts(v, block.valid, block.step, min_run, block.inside) for v in extra]
        return np.stack(counts), block.meets
    return work


def _line_counts_matrix(E, others, sampler, window, count, h, min_run, chunk, workers):
    g = E.group
    nbox = window.covering_nbox(g)
    parts = _map_batches(_counts_for(E, others, window, h, min_run), sampler, nbox, count, chunk, workers)
    counts = np.concatenate([p[0] for p in parts], axis=1)
    meets = np.concatenate([p[1] for p in parts])
    return counts, meets, nbox.line_measure(g)


def estimate_perimeter(E: SetOracle, window: Window, sampler: LineMeasureSampler, count: int, h: float = 0.01,
                       min_run: float | None = None, chunk: int = 2048, workers: int = 1) -> PerimeterEstimate:
    """Unnormalized perimeter of ``E`` in ``window`` from ``count`` sampled lines."""
    if count < 1000:
        raise ValueError("count must be at least 1000")
    if not isinstance(window, Window):
        raise EmptyWindow("window must be a Window")
    min_run = _check_grid(h, min_run)
    counts, meets, measure = _line_counts_matrix(E, (), sampler, window, count, h, min_run, chunk, workers)
    c = counts[0].astype(float)
    return PerimeterEstimate(
        float(measure * c.mean()),
        float(measure * c.std(ddof=1) / np.sqrt(len(c))),
        count,
        int(meets.sum()),
        _window_dict(window),
        {"h": h, "min_run": min_run},
        sampler.seed,
    )


def _boundary_points(ball: SetOracle, m: int = 4000, seed: int = 0) -> np.ndarray:
    """Points spread over the sphere bounding a ball set (plus its centre)."""
    reg = ball.region
    g = ball.group
    gen = np.random.default_rng(seed)
    c, rad = reg["center"], reg["radius"]
    if reg["gauge"] is None:
        z = gen.standard_normal((m, g.n))
        u = z / np.linalg.norm(z, axis=1, keepdims=True)
        return np.concatenate([c[None, :], c + rad * u])
    gauge = reg["gauge"]
    z = gen.standard_normal((m, g.n)) * gen.uniform(0.05, 2.0, (m, g.s))[:, g.strat.layer_of - 1]
    u = dilate(g, 1.0 / gauge.norm(z), z)
    return np.concatenate([c[None, :], multiply(g, c, dilate(g, rad, u))])


def _check_inside(ball: SetOracle, window: Window, margin: float):
    if ball.region is None or ball.region.get("kind") != "ball":
        raise PerturbationTouchesBoundary("perturbations must be balls")
    g = ball.group
    pts = _boundary_points(ball)
    ok = window.contains(g, pts, margin / window.scale)
    if not np.all(ok):
        raise PerturbationTouchesBoundary(
            f"ball centre {ball.region['center'].tolist()} radius {ball.region['radius']} "
            f"is not inside the window with margin {margin}")


@dataclass
class MinimalityReport:
    base: PerimeterEstimate
    deltas: list = field(default_factory=list)
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "window": self.base.window,
            "lines": self.base.lines_used,
            "value": self.base.value,
            "stderr": self.base.stderr,
            "verdict": "PASS" if self.passed else "FAIL",
            "per_perturbation": self.deltas,
        }


def minimality_test(E: SetOracle, window: Window, perturbations, sampler: LineMeasureSampler, count: int,
                    h: float = 0.01, min_run: float | None = None, n_sigma: float = 3.0, chunk: int = 2048,
                    workers: int = 1) -> MinimalityReport:
    """Compare ``E`` with each competitor ``E △ ball`` on common sampled lines.

    ``delta = P(F) - P(E)`` is estimated from per-line differences, so the
    shared line noise cancels.  The verdict is PASS when every
    ``delta >= -n_sigma * stderr``.
    """
    if count < 1000:
        raise ValueError("count must be at least 1000")
    min_run = _check_grid(h, min_run)
    for ball in perturbations:
        _check_inside(ball, window, 2 * h)
    competitors = [perturb(E, b) for b in perturbations]
    counts, meets, measure = _line_counts_matrix(E, competitors, sampler, window, count, h, min_run, chunk, workers)
    c0 = counts[0].astype(float)
    base = PerimeterEstimate(float(measure * c0.mean()), float(measure * c0.std(ddof=1) / np.sqrt(count)), count,
                             int(meets.sum()), _window_dict(window), {"h": h, "min_run": min_run}, sampler.seed)
    report = MinimalityReport(base)
    for ball, cj in zip(perturbations, counts[1:]):
        diff = cj.astype(float) - c0
        delta = float(measure * diff.mean())
        se = float(measure * diff.std(ddof=1) / np.sqrt(count))
        ok = delta >= -n_sigma * se
        report.deltas.append({
            "center": ball.region["center"].tolist(),
            "radius": ball.region["radius"],
            "delta": delta,
            "stderr": se,
            "verdict": "PASS" if ok else "FAIL",
        })
        report.passed &= bool(ok)
    return report


def random_interior_balls(g: CarnotGroup, window: Window, k: int, seed: int, radii=(0.1, 0.4), d=None,
                          centers=None, margin: float = 0.0, max_tries: int = 10000) -> list:
    """``k`` box-gauge balls inside ``window`` (keeping ``margin`` from its boundary).

    Centres come from ``centers`` (an array, cycled through in order) or are
    drawn uniformly in the window box; radii are uniform in ``radii``.
    """
    d = box_gauge(g) if d is None else d
    gen = np.random.default_rng(seed)
    out = []
    for i in range(max_tries):
        if len(out) == k:
            break
        if centers is not None:
            c = np.asarray(centers, dtype=float)[i % len(centers)]
        else:
            c = window.from_local(g, window.lo + (window.hi - window.lo) * gen.random(g.n))
        ball = metric_ball(g, d, c, gen.uniform(*radii))
        try:
            _check_inside(ball, window, margin)
        except PerturbationTouchesBoundary:
            continue
        out.append(ball)
    if len(out) < k:
        raise PerturbationTouchesBoundary(f"found only {len(out)} of {k} interior balls")
    return out


@dataclass(frozen=True)
class HomogeneityReport:
    lam: float
    small: PerimeterEstimate
    large: PerimeterEstimate
    ratio: float
    ratio_stderr: float
    expected: float
    z: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "ratio": self.ratio,
            "ratio_stderr": self.ratio_stderr,
            "expected": self.expected,
            "z": self.z,
            "verdict": "PASS" if self.passed else "FAIL",
            "small": self.small.to_dict(),
            "large": self.large.to_dict(),
        }


def homogeneity_test(E: SetOracle, window: Window, lam: float, count: int, seed: int, h: float = 0.01,
                     min_run: float | None = None, n_sigma: float = 3.0, chunk: int = 2048,
                     workers: int = 1) -> HomogeneityReport:
    """Ratio ``P(delta_lam E, delta_lam W) / P(E, W)`` against ``lam^(Q-1)``.

    The two estimates use independent line streams (seeds ``seed`` and
    ``seed + 1``) and the grid is scaled with the set.  The combined standard
    error of the ratio comes from first-order propagation.
    """
    g = E.group
    min_run = _check_grid(h, min_run)
    small = estimate_perimeter(E, window, LineMeasureSampler(g, seed), count, h, min_run, chunk, workers)
    large = estimate_perimeter(dilate_set(E, lam), window.dilated(g, lam), LineMeasureSampler(g, seed + 1), count,
                               lam * h, lam * min_run, chunk, workers)
    expected = float(lam ** (g.Q - 1))
    if small.value == 0:
        ratio, se = (float("nan"), float("nan"))
        return HomogeneityReport(lam, small, large, ratio, se, expected, float("nan"), large.value == 0)
    ratio = large.value / small.value
    se = ratio * np.hypot(large.stderr / large.value if large.value else 0.0, small.stderr / small.value)
    z = (ratio - expected) / se if se > 0 else (0.0 if ratio == expected else float("inf"))
    return HomogeneityReport(lam, small, large, float(ratio), float(se), expected, float(z), bool(abs(z) <= n_sigma))
