"""Maximisation of ``c*`` over a constraint class, first- and second-order optimality checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .constraints import ConstraintSpec, build_b1, project, project_scale
from .eigen import principal_eigenpair
from .errors import ConvergenceError, DegenerateError, PreconditionError
from .grid import CoefField, GridFunction, PeriodicGrid, cos_mode, d2, fourier_coeffs
from .rearrange import schwarz_rearrange
from .speed import SpeedResult, minimal_speed

GAP_TOL = 1e-3
STALL_RTOL = 1e-10
STALL_ITERS = 20
MAX_ITER = 5000
MULTISTART_L = 5.0  # below this the constant start alone is used


@dataclass(frozen=True, eq=False)
class AscentReport:
    b_final: CoefField
    c_history: list
    el_residual: float
    criticality_gap: float
    iterations: int
    converged: bool
    reason: str = ""
    start: str = "init"
    result: SpeedResult | None = field(default=None, repr=False)

    @property
    def c_final(self) -> float:
        return self.c_history[-1]


def _tangent(g: np.ndarray, normal: np.ndarray) -> np.ndarray:
    nn = float(np.dot(normal, normal))
    if nn == 0:
        return g
    return g - (float(np.dot(g, normal)) / nn) * normal


def criticality_gap(b: CoefField, spec: ConstraintSpec, result: SpeedResult | None = None) -> float:
    """``max |psi psi_tilde - f'(b) / int f'(b)|`` at ``lam = lam(b)``."""
    fp = spec.fprime(b.values)
    total = b.grid.h * float(np.sum(fp))
    if total < 1e-12:
        raise DegenerateError(f"int f'(b) = {total:.3e} is too small to normalise")
    result = result if result is not None else minimal_speed(b)
    return float(np.max(np.abs(result.pair.density - fp / total)))


def el_residual(b: CoefField, spec: ConstraintSpec, result: SpeedResult | None = None) -> float:
    """Scaled sup-norm residual of ``b'' + 4 k b + 3 b^2 = C`` for the quadratic constraint.

    ``C = 3 beta + (4 k / L) int b`` and ``k = k(lam(b), b)``.
    """
    if spec.kind != "power" or spec.p != 2:
        raise PreconditionError("the Euler-Lagrange residual is defined for p = 2 only")
    result = result if result is not None else minimal_speed(b)
    k = result.k_at_min
    L = b.grid.L
    beta = spec.beta if spec.normalized else spec.beta / L
    C = 3 * beta + 4 * k / L * b.grid.h * float(np.sum(b.values))
    r = d2(b) + 4 * k * b.values + 3 * b.values**2 - C
    return float(np.max(np.abs(r)) / (1 + abs(C)))


def _ascend(b: CoefField, spec: ConstraintSpec, gap_tol, max_iter, label) -> AscentReport:
    L = b.grid.L
    smooth = spec.kind != "box"
    res = minimal_speed(b)
    history = [res.c_star]
    step = None
    quiet = 0
    gap = math.nan
    reason = "iteration cap"
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if smooth:
            gap = criticality_gap(b, spec, res)
            if gap < gap_tol:
                converged, reason = True, "criticality gap"
                break
        g = res.pair.density / res.lambda_star
        if smooth:
            # move along the constraint surface; the projection then only corrects curvature
            g = _tangent(g, spec.fprime(b.values))
        gmax = float(np.max(np.abs(g)))
        if gmax == 0:
            converged, reason = True, "zero gradient"
            break
        if step is None:
            step = 0.1 * L / gmax
        accepted = False
        while step * gmax > 1e-15 * (1 + float(np.max(b.values))):
            trial = schwarz_rearrange(project(GridFunction(b.grid, b.values + step * g), spec))
            try:
                trial_res = minimal_speed(trial)
            except (ConvergenceError, DegenerateError):
                step *= 0.5
                continue
            if trial_res.c_star >= history[-1]:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            reason = "line search stalled"
            converged = not smooth
            break
        rel = (trial_res.c_star - history[-1]) / history[-1]
        b, res = trial, trial_res
        history.append(res.c_star)
        step *= 1.2
        quiet = quiet + 1 if rel < STALL_RTOL else 0
        if quiet >= STALL_ITERS:
            converged, reason = True, "c* increments below threshold"
            break
    if smooth:
        gap = criticality_gap(b, spec, res)
    el = el_residual(b, spec, res) if spec.kind == "power" and spec.p == 2 else math.nan
    return AscentReport(b, history, el, gap, it, converged, reason, label, res)


def default_starts(spec: ConstraintSpec, N: int = 256, seed: int = 42):
    """Constant, a narrow plateau and one random field, each made feasible."""
    grid = PeriodicGrid(spec.L, N)
    starts = [("constant", spec.constant(grid))]
    if spec.kind == "box":
        starts.append(("plateau", build_b1(spec, N)))
    else:
        # unit-width plateau: the scale of the non-constant maximisers at large L
        width = min(0.5 * spec.L, 1.0)
        plateau = np.where(np.abs(grid.x - spec.L / 2) < 0.5 * width, 1.0, 0.05)
        starts.append(("plateau", project(GridFunction(grid, plateau), spec)))
    rng = np.random.default_rng(seed)
    starts.append(("random", project(GridFunction(grid, rng.random(N) + 0.1), spec)))
    return [(name, schwarz_rearrange(b)) for name, b in starts]


def maximize_cstar(
    spec: ConstraintSpec,
    init: CoefField | None = None,
    N: int = 256,
    gap_tol: float = GAP_TOL,
    max_iter: int = MAX_ITER,
    multistart: bool | None = None,
    seed: int = 42,
) -> AscentReport:
    """Projected, rearranged gradient ascent on ``c*`` over the class ``spec``.

    Each step moves along ``psi psi_tilde / lam(b)`` (with the ``f'(b)``
    component removed for smooth constraints), projects back onto the class
    and rearranges.  Step sizes start at ``0.1 L / max|gradient|``, halve on
    failure and grow by 1.2 on success, so the recorded speeds never decrease.

    Without ``init`` the constant start is used, and for ``L >= 5`` also a
    plateau and a random start; the best run is returned.
    """
    if init is not None:
        start = schwarz_rearrange(project(init, spec))
        return _ascend(start, spec, gap_tol, max_iter, "init")
    if multistart is None:
        multistart = spec.L >= MULTISTART_L
    starts = default_starts(spec, N, seed)
    if not multistart:
        starts = starts[:1]
    reports = [_ascend(b, spec, gap_tol, max_iter, name) for name, b in starts]
    return max(reports, key=lambda r: r.c_final)


class SeriesEstimate(NamedTuple):
    value: float
    tail_bound: float


def _mode_weights(grid: PeriodicGrid, b0: float, n_max: int):
    n = np.arange(1, n_max + 1)
    return 1.0 / ((n * np.pi / grid.L) ** 2 + b0)


def second_variation_k(b0_level: float, v: GridFunction, grid: PeriodicGrid | None = None, n_max: int | None = None) -> SeriesEstimate:
    """Second variation of ``k`` in ``b`` at the constant ``b0``, frozen ``lam = sqrt(b0)``.

    ``-(1/2L) sum_{n>=1} (u_n^2 + v_n^2) / ((n pi / L)^2 + b0)``, truncated at
    ``n_max`` (default ``N/2 - 1``).  ``tail_bound`` bounds the omitted part
    using the energy of ``v`` not captured by the kept modes.
    """
    grid = grid if grid is not None else v.grid
    if not b0_level > 0:
        raise PreconditionError("b0 must be positive")
    n_max = grid.N // 2 - 1 if n_max is None else n_max
    u, w = fourier_coeffs(v, n_max)
    energy = u[1:] ** 2 + w[1:] ** 2
    value = -float(np.sum(energy * _mode_weights(grid, b0_level, n_max))) / (2 * grid.L)
    total = grid.h * float(np.dot(v.values, v.values))
    rest = max(total - u[0] ** 2 - float(np.sum(energy)), 0.0)
    tail = rest / (((n_max + 1) * np.pi / grid.L) ** 2 + b0_level) / (2 * grid.L)
    return SeriesEstimate(value, tail)


def second_variation_cstar(b0_level: float, v: GridFunction, grid: PeriodicGrid | None = None) -> float:
    """Second variation of ``c*`` at the constant ``b0``, without projection onto a class."""
    grid = grid if grid is not None else v.grid
    skk = second_variation_k(b0_level, v, grid).value
    mass = grid.h * float(np.sum(v.values))
    return -skk / math.sqrt(b0_level) - mass**2 / (2 * grid.L**2 * b0_level**1.5)


def fd_hessian_k(b0_level: float, v: GridFunction, eps: float = 1e-3) -> float:
    """Central second difference of ``k`` along ``v`` at fixed ``lam = sqrt(b0)``."""
    grid = v.grid
    lam = math.sqrt(b0_level)
    base = np.full(grid.N, b0_level)
    k0 = -(b0_level + lam**2)
    kp = principal_eigenpair(CoefField(grid, base + eps * v.values), lam).k
    km = principal_eigenpair(CoefField(grid, base - eps * v.values), lam).k
    return (kp + km - 2 * k0) / eps**2


def fd_hessian_cstar(b0_level: float, v: GridFunction, eps=(1e-2, 1e-3)) -> float:
    """Richardson-extrapolated second difference of ``c*`` along ``v`` (error ``O(eps^2)``)."""
    grid = v.grid
    base = np.full(grid.N, b0_level)
    c0 = 2 * math.sqrt(b0_level)
    vals = []
    for e in eps:
        cp = minimal_speed(CoefField(grid, base + e * v.values)).c_star
        cm = minimal_speed(CoefField(grid, base - e * v.values)).c_star
        vals.append((cp + cm - 2 * c0) / e**2)
    e1, e2 = eps
    return (e1**2 * vals[1] - e2**2 * vals[0]) / (e1**2 - e2**2)


@dataclass(frozen=True)
class MaximalityVerdict:
    D: float
    verdict: str  # "local_max", "saddle" or "inconclusive"
    level: float
    corollary_local_max: bool | None = None  # power kind only
    corollary_threshold: float | None = None


def local_maximality_criterion(spec: ConstraintSpec, tol: float = 1e-12) -> MaximalityVerdict:
    """Sign test ``D = 2 f''(b0)(pi^2/L^2 + b0) - f'(b0)`` at ``b0 = f^{-1}(beta)``.

    For the power kind the closed-form condition is also evaluated: the
    constant is a local maximiser when ``p >= 3/2`` or
    ``b0 < 2(p-1) pi^2 / ((3-2p) L^2)``.
    """
    b0 = spec.level()
    f1 = float(spec.fprime(b0))
    f2 = float(spec.fsecond(b0))
    D = 2 * f2 * (math.pi**2 / spec.L**2 + b0) - f1
    scale = abs(f1) + abs(f2) * (math.pi**2 / spec.L**2 + b0)
    if abs(D) <= tol * (1 + scale):
        verdict = "inconclusive"
    else:
        verdict = "local_max" if D > 0 else "saddle"
    cor = thr = None
    if spec.kind == "power":
        p = spec.p
        if p >= 1.5:
            cor, thr = True, math.inf
        else:
            thr = 2 * (p - 1) * math.pi**2 / ((3 - 2 * p) * spec.L**2)
            cor = b0 < thr
    return MaximalityVerdict(D, verdict, b0, cor, thr)


def saddle_coefficient(spec: ConstraintSpec, n: int) -> float:
    """Predicted ``t^2`` coefficient of ``c*(P(b0 + t phi_n)) - c*(b0)``."""
    b0 = spec.level()
    L = spec.L
    ratio = float(spec.fsecond(b0)) / float(spec.fprime(b0))
    return (-ratio + 1 / (2 * ((n * math.pi / L) ** 2 + b0))) / (2 * L * math.sqrt(b0))


@dataclass(frozen=True)
class SaddleCheck:
    n: int
    ts: tuple
    deltas: tuple
    predicted: tuple

    @property
    def sign(self) -> int:
        return int(np.sign(self.deltas[-1]))

    @property
    def agrees(self) -> bool:
        return all(np.sign(d) == np.sign(q) for d, q in zip(self.deltas, self.predicted))


def saddle_direction_check(spec: ConstraintSpec, n: int, ts=(1e-2, 5e-3), N: int = 256) -> SaddleCheck:
    """Speed change along the projected cosine direction ``P(b0 + t phi_n)``."""
    grid = PeriodicGrid(spec.L, N)
    if not 1 <= n < N // 2:
        raise PreconditionError(f"mode n must satisfy 1 <= n < N/2, got {n}")
    b0 = spec.constant(grid)
    c0 = minimal_speed(b0).c_star
    phi = cos_mode(grid, n).values
    coef = saddle_coefficient(spec, n)
    deltas, pred = [], []
    for t in ts:
        bt, _ = project_scale(GridFunction(grid, b0.values + t * phi), spec)
        deltas.append(minimal_speed(bt).c_star - c0)
        pred.append(coef * t * t)
    return SaddleCheck(n, tuple(ts), tuple(deltas), tuple(pred))
