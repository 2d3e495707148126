"""One-dimensional traces of sets on horizontal lines and monotonicity statistics.

A trace is the sampled indicator ``t -> 1_E(n . exp(tX))``.  Runs shorter
than ``min_run`` are treated as below resolution and merged into their
surroundings before transitions are counted; runs touching either end of
the sampled interval are kept, since their true extent is unknown.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .density import Estimate
from .errors import BadGrid
from .lines import Line, LineBatch, LineMeasureSampler, Window, flow, parameter_grid, unit_direction

__all__ = [
    "LineRestriction",
    "LineVerdict",
    "MonotonicityReport",
    "ConstantNormalReport",
    "restrict",
    "count_transitions",
    "trace_batch",
    "monotonicity_fraction",
    "constant_normal_test",
]

VERDICTS = ("empty", "full", "half_line_up", "half_line_down", "non_monotone")


@dataclass(frozen=True)
class LineRestriction:
    samples: np.ndarray
    T: float
    h: float
    center: float = 0.0

    @property
    def step(self) -> float:
        return 2.0 * self.T / (len(self.samples) - 1)

    @property
    def grid(self) -> np.ndarray:
        return self.center - self.T + self.step * np.arange(len(self.samples))


@dataclass(frozen=True)
class LineVerdict:
    transitions: int
    verdict: str
    min_feature: float


def restrict(E, L: Line, T: float, h: float, center: float = 0.0) -> LineRestriction:
    """Sample ``1_E`` along ``L`` on ``[center - T, center + T]``.

    The grid has ``ceil(2T/h) + 1`` equally spaced points, so the actual
    step is at most ``h``.
    """
    if not T > 0 or not 0 < h <= T / 10:
        raise BadGrid(f"need T > 0 and 0 < h <= T/10, got T={T}, h={h}")
    m = int(np.ceil(2 * T / h - 1e-9))
    t = center - T + (2 * T / m) * np.arange(m + 1)
    g = E.group
    pts = flow(g, L.direction, np.broadcast_to(L.base, (len(t), g.n)), t)
    return LineRestriction(E.member(pts), float(T), float(h), float(center))


def _runs(values: np.ndarray):
    values = np.asarray(values, dtype=bool)
    if len(values) == 0:
        return [], []
    cuts = np.flatnonzero(values[1:] != values[:-1]) + 1
    starts = np.concatenate([[0], cuts])
    lengths = np.diff(np.concatenate([starts, [len(values)]]))
    return [bool(values[s]) for s in starts], [int(n) for n in lengths]


def _filter_runs(vals: list, lengths: list, min_samples: float):
    """Merge interior runs shorter than ``min_samples`` into their neighbours.

    The shortest offending run goes first, the leftmost among equals.  In a
    two-valued sequence both neighbours of a run agree, so a merge joins
    three runs into one.
    """
    vals = list(vals)
    lengths = list(lengths)
    while len(vals) > 2:
        interior = [(lengths[i], i) for i in range(1, len(vals) - 1) if lengths[i] < min_samples]
        if not interior:
            break
        _, i = min(interior)
        lengths[i - 1] += lengths[i] + lengths[i + 1]
        del vals[i: i + 2], lengths[i: i + 2]
    return vals, lengths


def _verdict(vals: list, lengths: list, step: float) -> LineVerdict:
    transitions = len(vals) - 1
    if transitions == 0:
        verdict = "full" if vals[0] else "empty"
    elif transitions == 1:
        verdict = "half_line_down" if vals[0] else "half_line_up"
    else:
        verdict = "non_monotone"
    return LineVerdict(transitions, verdict, float(min(lengths) * step))


def count_transitions(r: LineRestriction, min_run: float) -> LineVerdict:
    """Essential 0/1 changes of a trace after removing runs below ``min_run``.

    Run length is the number of samples times the grid step.
    """
    if min_run < r.h - 1e-12:
        raise BadGrid(f"min_run must be at least h={r.h}, got {min_run}")
    vals, lengths = _runs(r.samples)
    vals, lengths = _filter_runs(vals, lengths, min_run / r.step - 1e-9)
    return _verdict(vals, lengths, r.step)


# -- batched traces ---------------------------------------------------------


@dataclass
class TraceBlock:
    """Traces of a batch of lines on their own grids over the window's slab interval."""

    batch: LineBatch
    t: np.ndarray
    valid: np.ndarray
    values: np.ndarray
    inside: np.ndarray
    step: np.ndarray

    @property
    def meets(self) -> np.ndarray:
        return np.any(self.inside, axis=1)


MAX_POINTS = 1 << 15


def trace_batch(E, batch: LineBatch, window: Window, h: float, T: float | None = None,
                others=()) -> tuple[TraceBlock, list]:
    """Evaluate ``E`` (and each set in ``others``) along every line of ``batch``.

    Each line is sampled on ``[a, b]``, the exact parameter interval where its
    first layer stays in the window's slab (intersected with ``[-T, T]`` when
    ``T`` is given).  Also records which samples lie in the window itself.
    """
    g = E.group
    a, b = window.line_interval(g, batch.directions, batch.bases)
    if T is not None:
        a, b = np.maximum(a, -T), np.minimum(b, T)
    a = np.where(np.isfinite(a), a, 0.0)
    b = np.where(np.isfinite(b), b, 0.0)
    t, valid, step = parameter_grid(a, b, h)
    N, K = t.shape
    inside = np.zeros((N, K), dtype=bool)
    values = np.zeros((N, K), dtype=bool)
    extra = [np.zeros((N, K), dtype=bool) for _ in others]
    # bound the number of points evaluated at once to keep temporaries small
    rows = max(1, MAX_POINTS // max(K, 1))
    for i in range(0, N, rows):
        sl = slice(i, i + rows)
        n = len(t[sl])
        pts = flow(g, np.repeat(batch.directions[sl], K, axis=0), np.repeat(batch.bases[sl], K, axis=0), t[sl].ravel())
        inside[sl] = window.contains(g, pts).reshape(n, K)
        values[sl] = E.member(pts).reshape(n, K)
        for out, F in zip(extra, others):
            out[sl] = F.member(pts).reshape(n, K)
    inside &= valid
    values &= valid
    for out in extra:
        out &= valid
    return TraceBlock(batch, t, valid, values, inside, step), extra


def _line_counts(values, valid, step, min_run, mask=None):
    """Transition counts per row, with short interior runs filtered.

    ``mask`` restricts counting to maximal stretches of ``True`` (each stretch
    is handled as its own trace); by default the whole valid range is used.
    Rows whose changes are all separated by at least ``min_run`` take a
    vectorized path.
    """
    mask = valid if mask is None else mask
    N, K = values.shape
    change = (values[:, 1:] != values[:, :-1]) & mask[:, 1:] & mask[:, :-1]
    counts = change.sum(axis=1)
    seg = np.cumsum(np.concatenate([mask[:, :1], mask[:, 1:] & ~mask[:, :-1]], axis=1), axis=1)
    rows, cols = np.nonzero(change)
    slow = np.zeros(N, dtype=bool)
    if len(rows) > 1:
        same = rows[1:] == rows[:-1]
        same &= seg[rows[1:], cols[1:]] == seg[rows[:-1], cols[:-1]]
        short = same & ((cols[1:] - cols[:-1]) * step[rows[1:]] < min_run - 1e-9 * step[rows[1:]])
        slow[rows[1:][short]] = True
    for i in np.flatnonzero(slow):
        total = 0
        for piece in _stretches(mask[i]):
            vals, lengths = _runs(values[i, piece])
            vals, lengths = _filter_runs(vals, lengths, min_run / step[i] - 1e-9)
            total += len(vals) - 1
        counts[i] = total
    return counts


def _stretches(mask):
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]]) + 1
    return [slice(s, e) for s, e in zip(starts, ends)]


def block_verdicts(block: TraceBlock, min_run: float, values=None):
    """Transition counts and verdict indices for every line of a block."""
    values = block.values if values is None else values
    counts = _line_counts(values, block.valid, block.step, min_run)
    first = values[:, 0]
    verdict = np.where(
        counts >= 2, 4,
        np.where(counts == 1, np.where(first, 3, 2), np.where(first, 1, 0)),
    )
    return counts, verdict


def _map_batches(fn, sampler, nbox, count, chunk, workers):
    batches = sampler.batches(nbox, count, chunk)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, batches))
    return [fn(b) for b in batches]


def _direction_bin(g, X):
    """Bin ``X`` by its largest first-layer component and that component's sign."""
    x = X[:, : g.r]
    j = np.argmax(np.abs(x), axis=1)
    neg = x[np.arange(len(x)), j] < 0
    return 2 * j + neg


@dataclass
class MonotonicityReport:
    lines_total: int
    lines_non_monotone: int
    fraction: Estimate
    per_direction: list
    params: dict
    directions: np.ndarray = field(repr=False, default=None)
    bases: np.ndarray = field(repr=False, default=None)
    transitions: np.ndarray = field(repr=False, default=None)
    verdicts: np.ndarray = field(repr=False, default=None)

    def summary(self) -> dict:
        return {
            "lines_total": self.lines_total,
            "lines_non_monotone": self.lines_non_monotone,
            "fraction": self.fraction.to_dict(),
            "per_direction": self.per_direction,
            "params": self.params,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.directions.shape[1]
        w.writerow([f"X{i + 1}" for i in range(n)] + [f"n{i + 1}" for i in range(n)] + ["verdict", "transitions"])
        for X, b, v, c in zip(self.directions, self.bases, self.verdicts, self.transitions):
            w.writerow([repr(float(x)) for x in X] + [repr(float(x)) for x in b] + [VERDICTS[v], int(c)])
        return buf.getvalue()


def _collect(E, sampler, window, count, h, min_run, T, chunk, workers):
    g = E.group
    if count < 1:
        raise ValueError("count must be positive")
    if min_run is None:
        min_run = 4 * h
    if min_run < h:
        raise BadGrid(f"min_run must be at least h={h}, got {min_run}")
    nbox = window.covering_nbox(g)

    def work(batch):
        block, _ = trace_batch(E, batch, window, h, T)
        counts, verdict = block_verdicts(block, min_run)
        m = block.meets
        return batch.directions[m], batch.bases[m], counts[m], verdict[m]

    parts = _map_batches(work, sampler, nbox, count, chunk, workers)
    X = np.concatenate([p[0] for p in parts])
    B = np.concatenate([p[1] for p in parts])
    C = np.concatenate([p[2] for p in parts])
    V = np.concatenate([p[3] for p in parts])
    return X, B, C, V, min_run


def monotonicity_fraction(E, sampler: LineMeasureSampler, window: Window, count: int, T: float | None = None,
                          h: float = 0.01, min_run: float | None = None, chunk: int = 2048,
                          workers: int = 1) -> MonotonicityReport:
    """Fraction of non-monotone lines among sampled lines that meet ``window``.

    ``count`` lines are drawn from the sampler; those never entering the
    window are discarded, and the binomial standard error refers to the
    remaining ones.
    """
    if count < 100:
        raise ValueError("count must be at least 100")
    g = E.group
    X, B, C, V, min_run = _collect(E, sampler, window, count, h, min_run, T, chunk, workers)
    total = len(V)
    bad = int(np.sum(V == 4))
    frac = bad / total if total else 0.0
    se = float(np.sqrt(frac * (1 - frac) / total)) if total else 0.0
    bins = _direction_bin(g, X) if total else np.zeros(0, dtype=int)
    per_dir = []
    for k in range(2 * g.r):
        sel = bins == k
        per_dir.append({
            "axis": k // 2 + 1,
            "sign": "-" if k % 2 else "+",
            "lines": int(sel.sum()),
            "non_monotone": int(np.sum(V[sel] == 4)),
        })
    params = {"count": count, "T": T, "h": h, "min_run": min_run, "seed": sampler.seed}
    return MonotonicityReport(total, bad, Estimate(frac, se, total, sampler.seed), per_dir, params, X, B, C, V)


@dataclass
class ConstantNormalReport:
    passed: bool
    best_candidate: np.ndarray
    best_violation: float
    violations: np.ndarray
    candidates: np.ndarray
    informative_lines: int
    noise: float

    def summary(self) -> dict:
        return {
            "passed": self.passed,
            "best_candidate": self.best_candidate.tolist() if self.best_candidate is not None else None,
            "best_violation": self.best_violation,
            "informative_lines": self.informative_lines,
            "noise": self.noise,
            "candidates": len(self.candidates),
        }


def candidate_grid(g, size: int = 64, seed: int = 0) -> np.ndarray:
    """First-layer unit vectors: the signed basis plus a quasi-uniform set."""
    r = g.r
    basis = np.concatenate([np.eye(r), -np.eye(r)])
    if r == 1:
        pts = basis
    elif r == 2:
        ang = 2 * np.pi * np.arange(size) / size
        pts = np.concatenate([basis, np.stack([np.cos(ang), np.sin(ang)], axis=1)])
    else:
        z = np.random.default_rng(seed).standard_normal((size, r))
        pts = np.concatenate([basis, z])
    return unit_direction(g, pts)[:, :r]


def constant_normal_test(E, sampler: LineMeasureSampler, count: int, window: Window | None = None,
                         h: float = 0.01, min_run: float | None = None, noise: float = 0.01,
                         candidates=None, chunk: int = 2048, workers: int = 1) -> ConstantNormalReport:
    """Look for a first-layer ``X_1`` making ``1_E`` nondecreasing along every ``X`` with ``<X, X_1> > 0``.

    For each candidate, the violation rate is the share of informative lines
    (at least one transition) with ``<X, X_1> > 0`` whose verdict is
    ``half_line_down`` or ``non_monotone``.  The test passes when some
    candidate stays at or below ``noise``; with no informative lines it
    passes vacuously.
    """
    if count < 100:
        raise ValueError("count must be at least 100")
    g = E.group
    window = Window.cube(g) if window is None else window
    X, _, _, V, _ = _collect(E, sampler, window, count, h, min_run, None, chunk, workers)
    cand = candidate_grid(g) if candidates is None else np.atleast_2d(np.asarray(candidates, dtype=float))[:, : g.r]
    informative = V >= 2
    bad = (V == 3) | (V == 4)
    dots = X[:, : g.r] @ cand.T
    rates = np.zeros(len(cand))
    for j in range(len(cand)):
        sel = informative & (dots[:, j] > 0)
        rates[j] = bad[sel].mean() if sel.any() else 0.0
    n_inf = int(informative.sum())
    if n_inf == 0:
        return ConstantNormalReport(True, None, 0.0, rates, cand, 0, noise)
    j = int(np.argmin(rates))
    return ConstantNormalReport(bool(rates[j] <= noise), cand[j], float(rates[j]), rates, cand, n_inf, noise)
