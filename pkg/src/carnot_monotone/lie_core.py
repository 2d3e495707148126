"""Stratified nilpotent Lie algebras and their groups in exponential coordinates.

Points of the group and vectors of the Lie algebra are both plain ``numpy``
arrays of length ``n`` (or batches of shape ``(..., n)``) in a basis adapted
to the stratification.  Exponential coordinates of the first kind identify a
point with the algebra vector it is the exponential of, so ``exp`` and
``log`` are the identity on coordinates, the identity element is the zero
vector and the inverse is negation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .bch import bch_words
from .errors import (
    AntisymmetryViolation,
    CarnotError,
    GradingViolation,
    JacobiViolation,
    NonPositiveLambda,
)

__all__ = [
    "Stratification",
    "CarnotGroup",
    "build_group",
    "bracket",
    "multiply",
    "inverse",
    "dilate",
    "haar_volume_box",
    "dilate_box",
    "change_basis",
    "preset",
    "PRESETS",
    "load_group",
    "group_from_mapping",
]

JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class Stratification:
    layer_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if not dims:
            raise CarnotError("a stratification needs at least one layer")
        if any(d < 1 for d in dims):
            raise CarnotError(f"layer dimensions must be positive, got {dims}")
        object.__setattr__(self, "layer_dims", dims)

    @property
    def s(self) -> int:
        return len(self.layer_dims)

    @property
    def n(self) -> int:
        return sum(self.layer_dims)

    @property
    def r(self) -> int:
        return self.layer_dims[0]

    @property
    def Q(self) -> int:
        return sum((i + 1) * d for i, d in enumerate(self.layer_dims))

    @cached_property
    def layer_of(self) -> np.ndarray:
        """Layer number (1-based) of every basis index."""
        return np.repeat(np.arange(1, self.s + 1), self.layer_dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.layer_dims)]))

    def layer_slice(self, i: int) -> slice:
        """Coordinates of layer ``i`` (1-based)."""
        return slice(self.offsets[i - 1], self.offsets[i])

    @cached_property
    def weights(self) -> np.ndarray:
        """Dilation exponent of each coordinate."""
        return self.layer_of.astype(float)


@dataclass(frozen=True, eq=False)
class CarnotGroup:
    """A Carnot group given by its stratification and structure constants.

    ``constants[i, j, k]`` is the coefficient of ``e_k`` in ``[e_i, e_j]``.
    Build instances with :func:`build_group`, which validates the algebra.
    """

    strat: Stratification
    constants: np.ndarray
    name: str = "custom"
    _terms: tuple = field(default=(), repr=False)

    @property
    def n(self) -> int:
        return self.strat.n

    @property
    def r(self) -> int:
        return self.strat.r

    @property
    def s(self) -> int:
        return self.strat.s

    @property
    def Q(self) -> int:
        return self.strat.Q

    @property
    def bch_table(self):
        return bch_words(self.s) if self.s >= 1 else ()

    @cached_property
    def key(self) -> tuple:
        return (self.strat.layer_dims, self.constants.tobytes())

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, CarnotGroup) and self.key == other.key

    def identity(self) -> np.ndarray:
        return np.zeros(self.n)

    def nonzero_constants(self) -> list[tuple[int, int, int, float]]:
        return [(int(i), int(j), int(k), float(self.constants[i, j, k]))
                for i, j, k in zip(*np.nonzero(self.constants))]

    def __repr__(self):
        return f"CarnotGroup(name={self.name!r}, layers={list(self.strat.layer_dims)}, Q={self.Q})"


def _check_antisymmetry(c: np.ndarray):
    bad = np.argwhere(np.abs(c + c.transpose(1, 0, 2)) > 0)
    if len(bad):
        i, j, k = bad[0]
        raise AntisymmetryViolation(
            f"c[{i}][{j}][{k}] = {c[i, j, k]} but c[{j}][{i}][{k}] = {c[j, i, k]}"
        )


def jacobi_error(c: np.ndarray) -> np.ndarray:
    """Cyclic sum ``[[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j]`` for all triples."""
    a = np.einsum("ijm,mkl->ijkl", c, c)
    return a + a.transpose(1, 2, 0, 3) + a.transpose(2, 0, 1, 3)


def _check_jacobi(c: np.ndarray, tol: float):
    err = np.abs(jacobi_error(c)).max(axis=-1)
    if err.size and err.max() > tol:
        triple = np.unravel_index(np.argmax(err), err.shape)
        raise JacobiViolation(triple, err[triple])


def _check_grading(strat: Stratification, c: np.ndarray):
    layer = strat.layer_of
    for i, j, k in zip(*np.nonzero(c)):
        if layer[k] != layer[i] + layer[j]:
            raise GradingViolation(
                f"[e_{i + 1}, e_{j + 1}] has a component on e_{k + 1} (layer {layer[k]}), "
                f"expected layer {layer[i] + layer[j]}",
                triple=(int(i), int(j), int(k)),
            )
    first = strat.layer_slice(1)
    for i in range(1, strat.s):
        src = strat.layer_slice(i)
        dst = strat.layer_slice(i + 1)
        block = c[first, src, dst].reshape(-1, strat.layer_dims[i])
        rank = np.linalg.matrix_rank(block) if block.size else 0
        if rank < strat.layer_dims[i]:
            raise GradingViolation(
                f"[g_1, g_{i}] spans a {rank}-dimensional subspace of g_{i + 1} "
                f"(dimension {strat.layer_dims[i]})",
                rank_defect=(i + 1, strat.layer_dims[i] - rank),
            )


def build_group(strat, structure_constants, name: str = "custom", jacobi_tol: float = JACOBI_TOL) -> CarnotGroup:
    """Validate structure constants and assemble a :class:`CarnotGroup`.

    Raises :class:`AntisymmetryViolation`, :class:`GradingViolation` or
    :class:`JacobiViolation` naming the offending basis triple.
    """
    if not isinstance(strat, Stratification):
        strat = Stratification(tuple(strat))
    c = np.array(structure_constants, dtype=float)
    n = strat.n
    if c.shape != (n, n, n):
        raise CarnotError(f"structure constants must have shape {(n, n, n)}, got {c.shape}")
    _check_antisymmetry(c)
    _check_grading(strat, c)
    scale = max(1.0, float(np.abs(c).max()) ** 2) if c.size else 1.0
    _check_jacobi(c, jacobi_tol * scale)
    c.setflags(write=False)
    terms = tuple(zip(*np.nonzero(c))) if c.size else ()
    terms = tuple((int(i), int(j), int(k), float(c[i, j, k])) for i, j, k in terms)
    return CarnotGroup(strat=strat, constants=c, name=name, _terms=terms)


def bracket(g: CarnotGroup, a, b) -> np.ndarray:
    """Lie bracket ``[a, b]`` for vectors or broadcastable batches."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(shape)
    for i, j, k, v in g._terms:
        out[..., k] += v * a[..., i] * b[..., j]
    return out


def multiply(g: CarnotGroup, p, q) -> np.ndarray:
    """Group product in exponential coordinates (truncated BCH, exact)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = p + q
    if not g._terms:
        return out
    letters = (p, q)
    cache: dict[tuple[int, ...], np.ndarray] = {}

    def left_normed(word):
        val = cache.get(word)
        if val is None:
            if len(word) == 1:
                val = letters[word[0]]
            else:
                val = bracket(g, left_normed(word[:-1]), letters[word[-1]])
            cache[word] = val
        return val

    for coef, word in g.bch_table:
        if len(word) >= 2:
            out = out + float(coef) * left_normed(word)
    return out


def inverse(g: CarnotGroup, p) -> np.ndarray:
    return -np.asarray(p, dtype=float)


def _check_lambda(lam):
    if not np.all(np.asarray(lam) > 0):
        raise NonPositiveLambda(f"dilation factor must be positive, got {lam}")


def dilate(g: CarnotGroup, lam, p) -> np.ndarray:
    """Apply ``delta_lam``: layer ``i`` coordinates are scaled by ``lam**i``."""
    _check_lambda(lam)
    lam = np.asarray(lam, dtype=float)
    p = np.asarray(p, dtype=float)
    return p * np.power(lam[..., None], g.strat.weights)


def haar_volume_box(g: CarnotGroup, region) -> float:
    """Lebesgue (Haar) volume of an axis-aligned box ``(lo, hi)``."""
    lo, hi = (np.asarray(v, dtype=float) for v in region)
    if lo.shape != (g.n,) or hi.shape != (g.n,):
        raise CarnotError(f"box corners must have length {g.n}")
    return float(np.prod(np.clip(hi - lo, 0.0, None)))


def dilate_box(g: CarnotGroup, lam: float, region):
    lo, hi = (np.asarray(v, dtype=float) for v in region)
    return dilate(g, lam, lo), dilate(g, lam, hi)


def change_basis(g: CarnotGroup, M, name: str | None = None) -> CarnotGroup:
    """Rewrite ``g`` in the basis whose vectors are the columns of ``M``.

    ``M`` must be block diagonal with respect to the layers so the new basis
    is still adapted.  Coordinates convert as ``new = solve(M, old)``.
    """
    M = np.asarray(M, dtype=float)
    layer = g.strat.layer_of
    if np.any(np.abs(M[layer[:, None] != layer[None, :]]) > 0):
        raise GradingViolation("basis change must preserve the layers")
    Minv = np.linalg.inv(M)
    c = np.einsum("ia,jb,ijl,kl->abk", M, M, g.constants, Minv)
    c[np.abs(c) < 1e-14] = 0.0
    c = 0.5 * (c - c.transpose(1, 0, 2))
    return build_group(g.strat, c, name=name or f"{g.name}-rotated", jacobi_tol=1e-10)


def _constants_from_list(n: int, entries) -> np.ndarray:
    """Dense antisymmetric tensor from 1-based ``(i, j, k, value)`` entries."""
    c = np.zeros((n, n, n))
    seen: dict[tuple[int, int, int], float] = {}
    for entry in entries:
        if len(entry) != 4:
            raise CarnotError(f"structure constant entries are (i, j, k, value), got {entry!r}")
        i, j, k, v = int(entry[0]) - 1, int(entry[1]) - 1, int(entry[2]) - 1, float(entry[3])
        if min(i, j, k) < 0 or max(i, j, k) >= n:
            raise CarnotError(f"index out of range in entry {entry!r} for dimension {n}")
        if i == j:
            if v != 0:
                raise AntisymmetryViolation(f"[e_{i + 1}, e_{i + 1}] must vanish, got {v}")
            continue
        for key, val in (((i, j, k), v), ((j, i, k), -v)):
            if key in seen and seen[key] != val:
                raise AntisymmetryViolation(
                    f"inconsistent entries for [e_{key[0] + 1}, e_{key[1] + 1}] on e_{key[2] + 1}"
                )
            seen[key] = val
            c[key] = val
    return c


def _heisenberg(m: int) -> CarnotGroup:
    n = 2 * m + 1
    entries = [(a, a + m, n, 1.0) for a in range(1, m + 1)]
    return build_group((2 * m, 1), _constants_from_list(n, entries), name=f"H{m}")


def _free_step2(k: int) -> CarnotGroup:
    pairs = [(a, b) for a in range(1, k + 1) for b in range(a + 1, k + 1)]
    n = k + len(pairs)
    entries = [(a, b, k + 1 + idx, 1.0) for idx, (a, b) in enumerate(pairs)]
    return build_group((k, len(pairs)), _constants_from_list(n, entries), name=f"free2-{k}")


def _abelian(n: int) -> CarnotGroup:
    return build_group((n,), np.zeros((n, n, n)), name=f"R{n}")


def _engel() -> CarnotGroup:
    entries = [(1, 2, 3, 1.0), (1, 3, 4, 1.0)]
    return build_group((2, 1, 1), _constants_from_list(4, entries), name="engel")


PRESETS = {
    "R2": lambda: _abelian(2),
    "R3": lambda: _abelian(3),
    "H1": lambda: _heisenberg(1),
    "H2": lambda: _heisenberg(2),
    "free2-3": lambda: _free_step2(3),
    "engel": _engel,
}

_PRESET_CACHE: dict[str, CarnotGroup] = {}


def preset(name: str) -> CarnotGroup:
    """Return a shipped group: ``R<n>``, ``H1``, ``H2``, ``free2-3`` or ``engel``."""
    if name in _PRESET_CACHE:
        return _PRESET_CACHE[name]
    if name in PRESETS:
        g = PRESETS[name]()
    elif name.startswith("R") and name[1:].isdigit() and int(name[1:]) >= 1:
        g = _abelian(int(name[1:]))
    elif name.startswith("H") and name[1:].isdigit() and int(name[1:]) >= 1:
        g = _heisenberg(int(name[1:]))
    else:
        raise CarnotError(f"unknown preset group {name!r}; known: {sorted(PRESETS)}")
    _PRESET_CACHE[name] = g
    return g


def group_from_mapping(data: dict) -> CarnotGroup:
    """Build a group from a parsed definition (``layers``, ``constants``, ``name``)."""
    if "preset" in data:
        return preset(str(data["preset"]))
    if "layers" not in data:
        raise CarnotError("group definition needs 'layers' or 'preset'")
    strat = Stratification(tuple(data["layers"]))
    c = _constants_from_list(strat.n, data.get("constants", []))
    return build_group(strat, c, name=str(data.get("name", "custom")))


def load_group(source) -> CarnotGroup:
    """Load a preset by name or a TOML group definition file.

    File layout::

        name = "heisenberg"
        layers = [2, 1]
        constants = [[1, 2, 3, 1.0]]   # [e_1, e_2] = e_3, 1-based indices
    """
    path = Path(str(source))
    if not path.suffix and not path.exists():
        return preset(str(source))
    from ._toml import load_toml

    return group_from_mapping(load_toml(path))


def sphere_area(r: int) -> float:
    """Surface measure of the unit sphere in ``R^r`` (2 for ``r = 1``)."""
    return 2.0 * math.pi ** (r / 2) / math.gamma(r / 2)


def layer_norms(g: CarnotGroup, p) -> np.ndarray:
    """Euclidean norm of each layer block; shape ``(..., s)``."""
    p = np.asarray(p, dtype=float)
    return np.stack([np.linalg.norm(p[..., g.strat.layer_slice(i)], axis=-1)
                     for i in range(1, g.s + 1)], axis=-1)


def random_points(g: CarnotGroup, rng: np.random.Generator, size: int, scale: float = 1.0) -> np.ndarray:
    return scale * rng.standard_normal((size, g.n))
