"""Membership oracles for subsets of a Carnot group.

A :class:`SetOracle` wraps a vectorized predicate on points in exponential
coordinates together with declared labels (``monotone``,
``precisely_monotone``, ``constant_normal``, ``local_minimizer``) and a plain
``definition`` mapping that round-trips through set definition files.
Labels are claims to be checked by the test suites, not facts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .density import BoxGauge, box_gauge
from .errors import ConfigError, NonPositiveRadius, ZeroNormal
from .lie_core import CarnotGroup, dilate, multiply

__all__ = [
    "SetOracle",
    "LABELS",
    "half_space",
    "vertical_half_space",
    "metric_ball",
    "empty_set",
    "full_set",
    "complement",
    "boolean_ops",
    "perturb",
    "translate_set",
    "dilate_set",
    "set_from_mapping",
]

LABELS = frozenset({"monotone", "precisely_monotone", "constant_normal", "local_minimizer"})


@dataclass(frozen=True, eq=False)
class SetOracle:
    group: CarnotGroup
    predicate: Callable[[np.ndarray], np.ndarray]
    labels: frozenset = frozenset()
    description: str = ""
    definition: dict = field(default_factory=dict)
    region: object = None

    def member(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.asarray(self.predicate(p), dtype=bool)

    def __contains__(self, p) -> bool:
        return bool(self.member(np.asarray(p, dtype=float)[None, :])[0])

    def has(self, label: str) -> bool:
        return label in self.labels


def half_space(g: CarnotGroup, normal, offset: float = 0.0) -> SetOracle:
    """``{p : <log p, normal> > offset}`` for the adapted scalar product on all of g.

    Normals supported in one of the first two layers give monotone sets
    (their defining coordinate is affine along every horizontal line);
    first-layer normals also give constant-normal sets.
    """
    nu = np.asarray(normal, dtype=float)
    if nu.shape != (g.n,):
        raise ValueError(f"normal must have length {g.n}")
    if not np.any(nu != 0):
        raise ZeroNormal("half-space normal must be nonzero")
    layers = set(g.strat.layer_of[nu != 0].tolist())
    labels = set()
    if layers <= {1} or layers <= {2}:
        labels |= {"monotone", "precisely_monotone", "local_minimizer"}
    if layers <= {1}:
        labels.add("constant_normal")
    offset = float(offset)
    return SetOracle(
        g,
        lambda p: p @ nu > offset,
        frozenset(labels),
        f"half-space <p, {nu.tolist()}> > {offset}",
        {"kind": "half_space", "normal": nu.tolist(), "offset": offset},
    )


def vertical_half_space(g: CarnotGroup, axis: int = 0) -> SetOracle:
    nu = np.zeros(g.n)
    nu[axis] = 1.0
    return half_space(g, nu, 0.0)


def metric_ball(g: CarnotGroup, distance_id, center, radius: float) -> SetOracle:
    """Open ball ``{p : d(center, p) < radius}``.

    ``distance_id`` is ``"box_gauge"`` (a calibrated :class:`BoxGauge` may be
    passed directly) or ``"coordinate"`` for the Euclidean ball in
    exponential coordinates.
    """
    if not radius > 0:
        raise NonPositiveRadius(f"radius must be positive, got {radius}")
    c = np.asarray(center, dtype=float)
    radius = float(radius)
    if isinstance(distance_id, BoxGauge):
        gauge = distance_id
        distance_id = "box_gauge"
    elif distance_id == "box_gauge":
        gauge = box_gauge(g)
    elif distance_id == "coordinate":
        gauge = None
    else:
        raise ValueError(f"unknown distance {distance_id!r}")
    if gauge is not None:
        def pred(p):
            return gauge.norm(multiply(g, -c, p)) < radius
    else:
        def pred(p):
            return np.sum((p - c) ** 2, axis=-1) < radius * radius
    return SetOracle(
        g, pred, frozenset(), f"{distance_id} ball centre {c.tolist()} radius {radius}",
        {"kind": "ball", "distance": distance_id, "center": c.tolist(), "radius": radius},
        region={"kind": "ball", "distance": distance_id, "center": c, "radius": radius, "gauge": gauge},
    )


def empty_set(g: CarnotGroup) -> SetOracle:
    return SetOracle(g, lambda p: np.zeros(p.shape[:-1], dtype=bool),
                     frozenset({"monotone", "precisely_monotone", "constant_normal", "local_minimizer"}),
                     "empty set", {"kind": "empty"})


def full_set(g: CarnotGroup) -> SetOracle:
    return SetOracle(g, lambda p: np.ones(p.shape[:-1], dtype=bool),
                     frozenset({"monotone", "precisely_monotone", "constant_normal", "local_minimizer"}),
                     "whole group", {"kind": "full"})


def complement(E: SetOracle) -> SetOracle:
    """``G \\ E``; every label is complement-stable and is kept."""
    return SetOracle(E.group, lambda p: ~E.member(p), E.labels, f"complement of ({E.description})",
                     {"kind": "complement", "of": E.definition}, E.region)


_OPS = {
    "intersection": np.logical_and,
    "union": np.logical_or,
    "symdiff": np.logical_xor,
    "difference": lambda a, b: a & ~b,
}


def boolean_ops(E: SetOracle, F: SetOracle, op: str) -> SetOracle:
    if op not in _OPS:
        raise ValueError(f"unknown set operation {op!r}; expected one of {sorted(_OPS)}")
    fn = _OPS[op]
    return SetOracle(E.group, lambda p: fn(E.member(p), F.member(p)), frozenset(),
                     f"({E.description}) {op} ({F.description})",
                     {"kind": op, "operands": [E.definition, F.definition]})


def perturb(E: SetOracle, ball: SetOracle) -> SetOracle:
    """Competitor ``E △ ball``; the ball is kept as the perturbation region."""
    F = boolean_ops(E, ball, "symdiff")
    return SetOracle(F.group, F.predicate, frozenset(), F.description, F.definition, ball.region)


def translate_set(E: SetOracle, y) -> SetOracle:
    """``y . E``; labels survive left translation."""
    g = E.group
    y = np.asarray(y, dtype=float)
    return SetOracle(g, lambda p: E.member(multiply(g, -y, p)), E.labels,
                     f"{y.tolist()} . ({E.description})",
                     {"kind": "translate", "by": y.tolist(), "of": E.definition})


def dilate_set(E: SetOracle, lam: float) -> SetOracle:
    """``delta_lam(E)``; labels survive dilation."""
    g = E.group
    lam = float(lam)
    dilate(g, lam, np.zeros(g.n))  # validates lam
    return SetOracle(g, lambda p: E.member(dilate(g, 1.0 / lam, p)), E.labels,
                     f"delta_{lam}({E.description})",
                     {"kind": "dilate", "by": lam, "of": E.definition})


def set_from_mapping(g: CarnotGroup, defn: dict) -> SetOracle:
    """Build a set from a definition mapping (as found in experiment files).

    Kinds: ``half_space`` (normal, offset), ``ball`` (center, radius,
    distance), ``complement`` (of), ``symdiff`` / ``intersection`` /
    ``union`` / ``difference`` (operands), ``translate`` / ``dilate``
    (by, of), ``empty``, ``full``.
    """
    if not isinstance(defn, dict) or "kind" not in defn:
        raise ConfigError(f"set definition needs a 'kind': {defn!r}")
    kind = defn["kind"]
    try:
        if kind == "half_space":
            return half_space(g, defn["normal"], defn.get("offset", 0.0))
        if kind == "ball":
            return metric_ball(g, defn.get("distance", "box_gauge"),
                               defn.get("center", [0.0] * g.n), defn["radius"])
        if kind == "empty":
            return empty_set(g)
        if kind == "full":
            return full_set(g)
        if kind == "complement":
            return complement(set_from_mapping(g, defn["of"]))
        if kind in _OPS:
            ops = [set_from_mapping(g, s) for s in defn["operands"]]
            if len(ops) < 2:
                raise ConfigError(f"{kind} needs at least two operands")
            out = ops[0]
            for other in ops[1:]:
                out = boolean_ops(out, other, kind)
            return out
        if kind == "translate":
            return translate_set(set_from_mapping(g, defn["of"]), defn["by"])
        if kind == "dilate":
            return dilate_set(set_from_mapping(g, defn["of"]), defn["by"])
    except KeyError as exc:
        raise ConfigError(f"set definition of kind {kind!r} is missing {exc}") from exc
    raise ConfigError(f"unknown set kind {kind!r}")
