"""Periodic grids, grid functions, quadrature and finite-difference stencils.

Every numeric module samples one period ``[0, L)`` at ``N`` equispaced nodes
``x_i = i * h`` with ``h = L / N``; the endpoint ``x = L`` is never stored.
Integrals use the periodic rectangle rule, which coincides with the
trapezoid rule on periodic data and is exact for trigonometric polynomials of
degree below ``N / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AliasingError, ConfigError, PreconditionError

# Default field comparison tolerances.
ATOL = 1e-12
RTOL = 1e-9


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform sampling of one period of length ``L`` with ``N`` nodes."""

    L: float
    N: int = 256

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise PreconditionError(f"period L must be positive and finite, got {self.L}")
        if int(self.N) != self.N or self.N < 16 or self.N % 2:
            raise PreconditionError(f"N must be an even integer >= 16, got {self.N}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    def refine(self, factor: int = 2) -> "PeriodicGrid":
        return PeriodicGrid(self.L, self.N * factor)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples of an ``L``-periodic function on a :class:`PeriodicGrid`."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.shape != (self.grid.N,):
            raise PreconditionError(
                f"expected {self.grid.N} samples, got array of shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise PreconditionError("grid function samples must be finite")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(grid.x))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.N, float(c)))

    def with_values(self, values):
        return type(self)(self.grid, values)

    def __len__(self):
        return self.grid.N

    def allclose(self, other, atol=ATOL, rtol=RTOL) -> bool:
        other_values = other.values if isinstance(other, GridFunction) else other
        return bool(np.allclose(self.values, other_values, atol=atol, rtol=rtol))


@dataclass(frozen=True, eq=False)
class CoefField(GridFunction):
    """Nonnegative coefficient ``b(x)``; the optimisation variable."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise PreconditionError(
                f"coefficient samples must be >= 0 (min = {self.values.min():.3e})"
            )

    def is_zero(self) -> bool:
        return not np.any(self.values > 0)


def _vals(f):
    return f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=float)


def integrate(f: GridFunction) -> float:
    """Periodic rectangle rule ``h * sum(f_i)``."""
    return float(f.grid.h * np.sum(f.values))


def inner(f: GridFunction, g) -> float:
    return float(f.grid.h * np.dot(f.values, _vals(g)))


def l2_norm(f: GridFunction) -> float:
    return math.sqrt(inner(f, f))


def mean(f: GridFunction) -> float:
    return float(np.mean(f.values))


def cos_mode(grid: PeriodicGrid, n: int) -> GridFunction:
    """Orthonormal cosine ``sqrt(2/L) cos(2 pi n x / L)``; ``n = 0`` gives ``1/sqrt(L)``."""
    if n == 0:
        return GridFunction.constant(grid, 1.0 / math.sqrt(grid.L))
    return GridFunction(grid, math.sqrt(2.0 / grid.L) * np.cos(2 * np.pi * n * grid.x / grid.L))


def sin_mode(grid: PeriodicGrid, n: int) -> GridFunction:
    """Orthonormal sine ``sqrt(2/L) sin(2 pi n x / L)``, ``n >= 1``."""
    return GridFunction(grid, math.sqrt(2.0 / grid.L) * np.sin(2 * np.pi * n * grid.x / grid.L))


def fourier_coeffs(f: GridFunction, n_max: int):
    """Inner products of ``f`` against the orthonormal trigonometric basis.

    Returns ``(u, v)`` with ``u[n] = <f, cos_mode(n)>`` for ``0 <= n <= n_max``
    and ``v[n] = <f, sin_mode(n)>`` (``v[0] = 0``).  ``u[0]`` is the coefficient
    of ``1/sqrt(L)``, i.e. ``sqrt(L)`` times the mean, so that Parseval reads
    ``u[0]**2 + sum(u[1:]**2 + v[1:]**2) = ||f||_2**2`` for band-limited ``f``.
    """
    grid = f.grid
    if n_max >= grid.N // 2:
        raise AliasingError(f"n_max = {n_max} must be < N/2 = {grid.N // 2}")
    # rfft gives sum_j f_j exp(-2 pi i n j / N)
    spec = np.fft.rfft(f.values)[: n_max + 1]
    scale = grid.h * math.sqrt(2.0 / grid.L)
    u = scale * spec.real
    v = -scale * spec.imag
    u[0] = grid.h * spec[0].real / math.sqrt(grid.L)
    v[0] = 0.0
    return u, v


def fourier_synthesis(grid: PeriodicGrid, u, v) -> GridFunction:
    """Inverse of :func:`fourier_coeffs` for band-limited data."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.full(grid.N, u[0] / math.sqrt(grid.L))
    for n in range(1, len(u)):
        out += u[n] * cos_mode(grid, n).values
        if n < len(v):
            out += v[n] * sin_mode(grid, n).values
    return GridFunction(grid, out)


def d1(f: GridFunction) -> np.ndarray:
    """Central first difference with periodic wrap."""
    y = f.values
    return (np.roll(y, -1) - np.roll(y, 1)) / (2 * f.grid.h)


def d2(f: GridFunction) -> np.ndarray:
    """Central second difference with periodic wrap."""
    y = f.values
    return (np.roll(y, -1) - 2 * y + np.roll(y, 1)) / f.grid.h**2


@dataclass(frozen=True)
class NormBoundsReport:
    level: float  # sqrt of (1/L) int b^2
    sup_deviation: float  # ||b - level||_inf
    first: float  # L ||b'||_inf
    second_l1: float  # L ||b''||_L1
    second_sup: float  # L^2 ||b''||_inf
    chain_holds: bool
    smooth: bool
    note: str


def norm_bounds_check(b: CoefField) -> NormBoundsReport:
    """Evaluate the sup-norm chain for a smooth periodic coefficient.

    The chain ``||b - sqrt(beta)||_inf <= L||b'||_inf <= L||b''||_L1 <= L^2||b''||_inf``
    is checked with ``beta`` taken as the mean of ``b**2``.  Derivatives are
    central differences; a field whose second difference is of the same size
    as its oscillation divided by ``h**2`` is flagged as non-smooth, in which
    case the finite-difference norms grow with ``N`` and the chain says nothing.
    """
    grid = b.grid
    level = math.sqrt(float(np.mean(b.values**2)))
    dev = float(np.max(np.abs(b.values - level)))
    bp = d1(b)
    bpp = d2(b)
    first = grid.L * float(np.max(np.abs(bp)))
    second_l1 = grid.L * grid.h * float(np.sum(np.abs(bpp)))
    second_sup = grid.L**2 * float(np.max(np.abs(bpp)))

    osc = float(np.ptp(b.values))
    smooth = osc == 0.0 or grid.h**2 * float(np.max(np.abs(bpp))) <= 0.05 * osc
    slack = 1e-12 * (1 + level) + grid.L * grid.h * float(np.max(np.abs(bpp)))
    chain = (
        dev <= first + slack
        and first <= second_l1 + slack
        and second_l1 <= second_sup + slack
    )
    note = "ok" if smooth else "non-smooth field: finite-difference norms blow up with N; chain inapplicable"
    return NormBoundsReport(level, dev, first, second_l1, second_sup, bool(chain), bool(smooth), note)


def write_coef_csv(path, b: GridFunction) -> None:
    """Write ``L=<float>,N=<int>`` then one sample per line at 17 significant digits."""
    lines = [f"L={b.grid.L:.17g},N={b.grid.N}"]
    lines += [f"{v:.17g}" for v in b.values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_coef_csv(path) -> CoefField:
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ConfigError(f"{path}: empty coefficient file")
    header = {}
    for item in text[0].split(","):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"{path}:1: malformed header {text[0]!r}")
        header[key.strip()] = val.strip()
    try:
        L = float(header["L"])
        N = int(header["N"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}:1: header needs L=<float>,N=<int>") from exc
    values = []
    for lineno, line in enumerate(text[1:], start=2):
        try:
            values.append(float(line.strip()))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: not a number: {line!r}") from exc
    if len(values) != N:
        raise ConfigError(f"{path}: header says N={N} but found {len(values)} samples")
    return CoefField(PeriodicGrid(L, N), values)


def random_smooth(grid: PeriodicGrid, rng: np.random.Generator, modes: int = 4, amplitude: float = 0.6) -> CoefField:
    """Positive random trigonometric polynomial with mean one.

    Mode ``n`` gets weight ``1/n``; the oscillation is rescaled so that its
    sup norm is ``amplitude`` (below one keeps the field strictly positive).
    """
    x = 2 * np.pi * grid.x / grid.L
    osc = np.zeros(grid.N)
    for n in range(1, modes + 1):
        a, b = rng.normal(size=2) / n
        osc += a * np.cos(n * x) + b * np.sin(n * x)
    peak = float(np.max(np.abs(osc)))
    if peak > 0:
        osc *= amplitude / peak
    return CoefField(grid, 1.0 + osc)
