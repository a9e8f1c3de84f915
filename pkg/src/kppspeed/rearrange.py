"""Discrete Schwarz periodic rearrangement and the inequalities that drive it."""
from __future__ import annotations

import numpy as np

from .grid import CoefField, GridFunction


def _rearranged_values(values: np.ndarray) -> np.ndarray:
    n = len(values)
    ordered = np.sort(values)[::-1]
    out = np.empty(n)
    # largest at the centre, then right/left alternately moving outwards
    positions = [n // 2]
    for step in range(1, n):
        offset = (step + 1) // 2
        positions.append(n // 2 + offset if step % 2 else n // 2 - offset)
    out[np.array(positions) % n] = ordered
    return out


def schwarz_rearrange(f: GridFunction) -> GridFunction:
    """Symmetric, unimodal, equimeasurable reordering of the samples of ``f``.

    The largest sample sits at index ``N/2``; the smallest lands on index 0.
    The result is a permutation of the input, mirror-symmetric about ``N/2``
    up to one sample (``N`` is even, so one side holds an extra slot).
    """
    return f.with_values(_rearranged_values(f.values))


def is_rearranged(f: GridFunction) -> bool:
    return bool(np.array_equal(schwarz_rearrange(f).values, f.values))


def dirichlet_energy(f: GridFunction) -> float:
    diff = np.roll(f.values, -1) - f.values
    return float(np.dot(diff, diff) / f.grid.h)


def polya_check(phi: GridFunction):
    """Return ``(energy of phi*, energy of phi)``; Polya says the first is no larger."""
    return dirichlet_energy(schwarz_rearrange(phi)), dirichlet_energy(phi)


def hardy_littlewood_check(b: CoefField, phi: GridFunction):
    """Return ``(int b phi^2, int b* phi*^2)``; the second is never smaller."""
    h = b.grid.h
    lhs = h * float(np.dot(b.values, phi.values**2))
    rhs = h * float(np.dot(schwarz_rearrange(b).values, schwarz_rearrange(phi).values ** 2))
    return lhs, rhs
