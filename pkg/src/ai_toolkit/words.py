"""Enumeration and comparison of periodic symbol words."""
from __future__ import annotations

import numpy as np

from .core import SymbolSequence


def _key(word) -> tuple:
    # '-' sorts before '+'
    return tuple(int(s) for s in word)


def canonical(s: SymbolSequence) -> SymbolSequence:
    """Least rotation with ``-`` ordered before ``+``."""
    n = s.period
    best = min((s.rotated(k) for k in range(n)), key=_key)
    return best


def is_primitive(s: SymbolSequence) -> bool:
    n = s.period
    return all(s.rotated(k) != s for k in range(1, n))


def lyndon_words(max_period: int) -> list[SymbolSequence]:
    """One representative per primitive necklace, by period then lexicographically."""
    out = []
    for n in range(1, max_period + 1):
        for bits in range(2 ** n):
            w = SymbolSequence([1 if (bits >> (n - 1 - i)) & 1 else -1 for i in range(n)])
            if is_primitive(w) and canonical(w) == w:
                out.append(w)
    return out


def all_words(max_period: int) -> list[SymbolSequence]:
    out = []
    for n in range(1, max_period + 1):
        for bits in range(2 ** n):
            out.append(SymbolSequence([1 if (bits >> (n - 1 - i)) & 1 else -1 for i in range(n)]))
    return out


def same_necklace(u: SymbolSequence, v: SymbolSequence) -> bool:
    return u.period == v.period and canonical(u) == canonical(v)


def hamming_up_to_rotation(u: SymbolSequence, v: SymbolSequence) -> int:
    """Fewest differing symbols between ``u`` and any rotation of ``v``."""
    if u.period != v.period:
        raise ValueError("words of different periods")
    return min(int(np.sum(u.word != v.rotated(k).word)) for k in range(v.period))


def orbit_shift_distance(x, y) -> tuple[float, int]:
    """Smallest sup-distance between ``x`` and a cyclic shift of ``y``, and that shift."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        return float("inf"), -1
    dists = [float(np.max(np.abs(x - np.roll(y, -k)))) for k in range(y.size)]
    k = int(np.argmin(dists))
    return dists[k], k


def half_period_symmetric(x, tol: float = 1e-4) -> bool:
    x = np.asarray(x, dtype=float)
    n = x.size
    return n % 2 == 0 and float(np.max(np.abs(x - np.roll(x, n // 2)))) < tol
