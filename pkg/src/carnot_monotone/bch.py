"""Truncated Baker-Campbell-Hausdorff series as a table of Lie words.

The series ``log(exp X exp Y)`` is expanded in the free associative algebra on
two letters up to a given degree, then mapped to Lie elements with the
Dynkin-Specht-Wever projection: a homogeneous Lie polynomial ``P`` of degree
``m`` equals ``(1/m) * sum_w c_w [w]`` where ``[w]`` is the left-normed
bracket of the word ``w``.  For a nilpotent algebra of step ``s`` every
bracket of length ``> s`` vanishes, so truncation at ``s`` is exact.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

Word = tuple[int, ...]  # letters: 0 = X, 1 = Y


def _mul(a: dict[Word, Fraction], b: dict[Word, Fraction], max_degree: int) -> dict[Word, Fraction]:
    out: dict[Word, Fraction] = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            if len(wa) + len(wb) > max_degree:
                continue
            w = wa + wb
            out[w] = out.get(w, Fraction(0)) + ca * cb
    return {w: c for w, c in out.items() if c != 0}


@lru_cache(maxsize=None)
def bch_words(max_degree: int) -> tuple[tuple[Fraction, Word], ...]:
    """Return ``((coef, word), ...)`` with ``Z = sum coef * leftbracket(word)``.

    Words of length one give ``X + Y``; longer words carry their Dynkin
    coefficient already divided by the word length.  Words whose first two
    letters coincide are dropped since their left-normed bracket is zero.
    """
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    # exp(X) exp(Y) - 1
    w: dict[Word, Fraction] = {}
    for p in range(max_degree + 1):
        for q in range(max_degree + 1 - p):
            if p + q == 0:
                continue
            w[(0,) * p + (1,) * q] = Fraction(1, factorial(p) * factorial(q))
    log: dict[Word, Fraction] = {}
    power = dict(w)
    for k in range(1, max_degree + 1):
        sign = Fraction((-1) ** (k + 1), k)
        for word, c in power.items():
            log[word] = log.get(word, Fraction(0)) + sign * c
        power = _mul(power, w, max_degree)
    table = []
    for word, c in sorted(log.items(), key=lambda kv: (len(kv[0]), kv[0])):
        if c == 0:
            continue
        m = len(word)
        if m >= 2 and word[0] == word[1]:
            continue
        table.append((c / m, word))
    return tuple(table)
