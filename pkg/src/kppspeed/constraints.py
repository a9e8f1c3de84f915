"""Constraint classes ``(1/L) int f(b) = beta`` and the box class, with their projections."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, DegenerateError, PreconditionError
from .grid import CoefField, GridFunction, PeriodicGrid

FEAS_RTOL = 1e-9
KINDS = ("power", "general", "box")


@dataclass(frozen=True)
class ConstraintSpec:
    """Constraint class for the coefficient.

    ``kind`` is ``"power"`` (``f(b) = b**p``, ``p > 1``), ``"general"``
    (caller-supplied increasing ``f`` with optional ``df``/``d2f``) or ``"box"``
    (``0 <= b <= height`` and mean ``alpha``).  With ``normalized=False`` the
    integral is not divided by ``L``.
    """

    L: float
    beta: float = 1.0
    kind: str = "power"
    p: float = 2.0
    f: Callable | None = field(default=None, compare=False)
    df: Callable | None = field(default=None, compare=False)
    d2f: Callable | None = field(default=None, compare=False)
    alpha: float = 1.0
    height: float = 2.0
    normalized: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown constraint kind {self.kind!r}; expected one of {KINDS}")
        if not self.L > 0:
            raise ConfigError(f"L must be positive, got {self.L}")
        if self.kind == "power" and not self.p > 1:
            raise ConfigError(f"power constraint needs p > 1, got {self.p}")
        if self.kind == "general" and self.f is None:
            raise ConfigError("general constraint needs a callable f")
        if self.kind == "box":
            if not 0 < self.alpha < self.height:
                raise ConfigError(f"box constraint needs 0 < alpha < height, got {self.alpha}, {self.height}")
            object.__setattr__(self, "beta", float(self.alpha))
        elif not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")

    @classmethod
    def parse(cls, text: str, L: float, beta: float = 1.0, normalized: bool = True) -> "ConstraintSpec":
        """Build from the CLI form ``p:<float>`` or ``box:<alpha>,<height>``."""
        kind, sep, rest = text.partition(":")
        try:
            if sep and kind == "p":
                return cls(L=L, beta=beta, kind="power", p=float(rest), normalized=normalized)
            if sep and kind == "box":
                a, h = (float(s) for s in rest.split(","))
                return cls(L=L, kind="box", alpha=a, height=h, normalized=normalized)
        except ValueError as exc:
            raise ConfigError(f"bad constraint {text!r}: {exc}") from exc
        raise ConfigError(f"bad constraint {text!r}; expected p:<float> or box:<alpha>,<h>")

    def describe(self) -> str:
        if self.kind == "power":
            return f"p:{self.p:g}"
        if self.kind == "box":
            return f"box:{self.alpha:g},{self.height:g}"
        return "general"

    # f and its derivatives -------------------------------------------------
    def fval(self, b):
        b = np.asarray(b, dtype=float)
        if self.kind == "power":
            return b**self.p
        if self.kind == "box":
            return b
        return np.asarray(self.f(b), dtype=float)

    def fprime(self, b):
        b = np.asarray(b, dtype=float)
        if self.kind == "power":
            return self.p * b ** (self.p - 1)
        if self.kind == "box":
            return np.ones_like(b)
        if self.df is None:
            raise PreconditionError("this operation needs f' for the general constraint")
        return np.asarray(self.df(b), dtype=float)

    def fsecond(self, b):
        b = np.asarray(b, dtype=float)
        if self.kind == "power":
            return self.p * (self.p - 1) * b ** (self.p - 2)
        if self.kind == "box":
            return np.zeros_like(b)
        if self.d2f is None:
            raise PreconditionError("this operation needs f'' for the general constraint")
        return np.asarray(self.d2f(b), dtype=float)

    def target(self) -> float:
        """Value of ``int f(b)`` (divided by ``L`` when normalised) on the constraint set."""
        return self.beta

    def level(self) -> float:
        """The feasible constant ``f^{-1}(beta)`` (``f^{-1}(beta / L)`` when not normalised)."""
        rhs = self.beta if self.normalized else self.beta / self.L
        if self.kind == "power":
            return rhs ** (1.0 / self.p)
        if self.kind == "box":
            return rhs
        hi = 1.0
        while float(self.fval(hi)) < rhs:
            hi *= 2
        return brentq(lambda s: float(self.fval(s)) - rhs, 0.0, hi, xtol=1e-15, rtol=1e-15)

    def grid(self, N: int = 256) -> PeriodicGrid:
        return PeriodicGrid(self.L, N)

    def constant(self, grid: PeriodicGrid) -> CoefField:
        return CoefField.constant(grid, self.level())


def constraint_value(b: GridFunction, spec: ConstraintSpec) -> float:
    total = b.grid.h * float(np.sum(spec.fval(b.values)))
    return total / b.grid.L if spec.normalized else total


def is_feasible(b: CoefField, spec: ConstraintSpec, rtol: float = FEAS_RTOL) -> bool:
    ok = abs(constraint_value(b, spec) - spec.target()) <= rtol * (1 + spec.target())
    if spec.kind == "box":
        ok = ok and float(np.max(b.values)) <= spec.height * (1 + 1e-12)
    return bool(ok)


def project_scale(b: GridFunction, spec: ConstraintSpec):
    """Scale ``b`` onto the constraint set: returns ``(mu * b, mu)``.

    ``mu`` solves the monotone scalar equation by a doubling bracket from
    ``[1e-8, 1]``, 60 bisection steps and up to 3 Newton steps.
    """
    vals = np.asarray(b.values, dtype=float)
    if np.any(vals < 0):
        raise PreconditionError("project_scale needs b >= 0")
    if not np.any(vals > 0):
        raise DegenerateError("b == 0 cannot be scaled onto the constraint set")
    grid = b.grid
    scale = 1.0 / grid.L if spec.normalized else 1.0
    target = spec.target()

    def G(mu):
        return grid.h * scale * float(np.sum(spec.fval(mu * vals))) - target

    lo, hi = 1e-8, 1.0
    while G(hi) < 0:
        lo, hi = hi, 2 * hi
        if hi > 1e300:
            raise DegenerateError("no feasible scaling found")
    if G(lo) > 0:
        lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if G(mid) < 0:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    if spec.kind != "general" or spec.df is not None:
        for _ in range(3):
            slope = grid.h * scale * float(np.dot(spec.fprime(mu * vals), vals))
            if slope <= 0:
                break
            new = mu - G(mu) / slope
            if not lo - (hi - lo) <= new <= hi + (hi - lo) or new <= 0:
                break
            mu = new
    return CoefField(grid, mu * vals), mu


def project_box(b: GridFunction, spec: ConstraintSpec) -> CoefField:
    """Euclidean projection onto ``{0 <= b <= height, mean(b) = alpha}``.

    The solution is ``clip(b - s, 0, height)``; ``s`` is bracketed by bisection
    and then solved exactly on the set of unclipped samples.
    """
    if spec.kind != "box":
        raise PreconditionError("project_box needs a box constraint")
    vals = np.asarray(b.values, dtype=float)
    grid = b.grid
    H = spec.height
    target = spec.alpha * grid.N if spec.normalized else spec.alpha * grid.N / grid.L

    def mass(s):
        return float(np.sum(np.clip(vals - s, 0.0, H)))

    lo, hi = float(vals.min()) - H, float(vals.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if mass(mid) > target:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    free = (vals - s > 0) & (vals - s < H)
    if np.any(free):
        n_top = np.count_nonzero(vals - s >= H)
        s_exact = (float(np.sum(vals[free])) + H * n_top - target) / np.count_nonzero(free)
        trial = np.clip(vals - s_exact, 0.0, H)
        if abs(np.sum(trial) - target) <= abs(mass(s) - target):
            s = s_exact
    return CoefField(grid, np.clip(vals - s, 0.0, H))


def project(b: GridFunction, spec: ConstraintSpec) -> CoefField:
    """The projection used by the ascent loop for ``spec``'s kind."""
    if spec.kind == "box":
        return project_box(b, spec)
    return project_scale(CoefField(b.grid, np.maximum(b.values, 0.0)), spec)[0]


def build_b1(spec: ConstraintSpec, N: int = 256) -> CoefField:
    """Single plateau of height ``h`` and width ``alpha L / h`` centred at ``L/2``.

    The width is snapped to the grid: ``2j + 1`` full samples around ``N/2``
    and the leftover mass split evenly over the two edge samples, so the
    discrete integral is exactly ``alpha L``.
    """
    if spec.kind != "box":
        raise PreconditionError("build_b1 needs a box constraint")
    grid = PeriodicGrid(spec.L, N)
    H = spec.height
    mean_target = spec.alpha if spec.normalized else spec.alpha / spec.L
    m = mean_target * N / H  # plateau width in samples
    vals = np.zeros(N)
    c = N // 2
    if m < 1:
        vals[c] = m * H
        return CoefField(grid, vals)
    j = math.floor((m - 1) / 2)
    vals[(c + np.arange(-j, j + 1)) % N] = H
    r = m - (2 * j + 1)
    vals[(c + j + 1) % N] += 0.5 * r * H
    vals[(c - j - 1) % N] += 0.5 * r * H
    return CoefField(grid, vals)
