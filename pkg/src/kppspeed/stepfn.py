"""Two-valued periodic coefficients: exact dispersion, large-period limit and duty-cycle sweeps.

With ``w = exp(lam x) psi`` the eigenproblem becomes Hill's equation
``w'' + (b + k) w = 0`` and periodicity of ``psi`` becomes the Floquet
condition ``w(x + L) = exp(lam L) w(x)``.  Since the monodromy matrix ``M(k)``
has determinant one, the principal ``k`` is the smallest root of
``trace M(k) = 2 cosh(lam L)``.  The trace is evaluated in log scale so that
long periods and tall plateaus do not overflow.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._search import bisect, golden_section
from .errors import ConvergenceError, PreconditionError
from .grid import CoefField, PeriodicGrid
from .speed import SpeedResult, lambda_bracket, speed_bounds

LINEAR_EPS = 1e-12
SWEEP_COLUMNS = ("theta", "L", "beta", "p", "c_star", "lambda_star", "k")


@dataclass(frozen=True)
class StepProfile:
    """``mu_plus`` on ``[0, theta L)`` and ``mu_minus`` on ``[theta L, L)``, repeated."""

    theta: float
    mu_plus: float
    mu_minus: float = 0.0
    L: float = 1.0

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise PreconditionError(f"theta must lie in (0, 1], got {self.theta}")
        if not 0 <= self.mu_minus <= self.mu_plus:
            raise PreconditionError("need 0 <= mu_minus <= mu_plus")
        if not self.L > 0:
            raise PreconditionError(f"L must be positive, got {self.L}")

    @classmethod
    def constrained(cls, theta: float, L: float, beta: float = 1.0, p: float = 2.0) -> "StepProfile":
        """The plateau ``mu_theta = beta^(1/p) theta^(-1/p)`` with zero valley, so ``theta mu^p = beta``."""
        return cls(theta, beta ** (1 / p) * theta ** (-1 / p), 0.0, L)

    @property
    def alpha(self) -> float:
        return self.theta * self.mu_plus + (1 - self.theta) * self.mu_minus

    def pieces(self):
        out = [(self.mu_plus, self.theta * self.L)]
        if self.theta < 1:
            out.append((self.mu_minus, (1 - self.theta) * self.L))
        return out

    def to_coef(self, N: int = 256, center: bool = False) -> CoefField:
        """Sample onto a grid using hat-function weighted cell averages.

        Plain point sampling of a jump gives first-order errors; the hat
        weights make the discrete eigenvalue converge at second order.
        With ``center=True`` the plateau is centred at ``L/2``.
        """
        grid = PeriodicGrid(self.L, N)
        h = grid.h
        a = 0.5 * self.L * (1 - self.theta) if center else 0.0
        b = a + self.theta * self.L

        def hat_cdf(t):
            # integral of the unit-mass hat of half-width h from -inf to t
            t = np.clip(t / h, -1.0, 1.0)
            return np.where(t < 0, 0.5 * (1 + t) ** 2, 1 - 0.5 * (1 - t) ** 2)

        x = grid.x
        frac = np.zeros(N)
        for shift in (-self.L, 0.0, self.L):
            frac += hat_cdf(b + shift - x) - hat_cdf(a + shift - x)
        frac = np.clip(frac, 0.0, 1.0)
        return CoefField(grid, self.mu_minus + (self.mu_plus - self.mu_minus) * frac)


def _log_propagator(q: float, ell: float):
    """Propagator of ``w'' + q w = 0`` over length ``ell`` as ``(log scale, matrix)``."""
    if abs(q) < LINEAR_EPS:
        return 0.0, np.array([[1.0, ell], [0.0, 1.0]])
    if q > 0:
        om = math.sqrt(q)
        c, s = math.cos(om * ell), math.sin(om * ell)
        return 0.0, np.array([[c, s / om], [-om * s, c]])
    g = math.sqrt(-q)
    e = math.exp(-2 * g * ell)
    # cosh(g l) = e^{g l}/2 (1 + e), sinh(g l) = e^{g l}/2 (1 - e)
    return g * ell - math.log(2.0), np.array([[1 + e, (1 - e) / g], [g * (1 - e), 1 + e]])


def log_trace_gap(step: StepProfile, lam: float, k: float) -> float:
    """``log trace M(k) - log(2 cosh(lam L))``; ``-inf`` when the trace is not positive."""
    scale = 0.0
    M = np.eye(2)
    for mu, ell in step.pieces():
        s, P = _log_propagator(mu + k, ell)
        M = P @ M
        scale += s
    tr = M[0, 0] + M[1, 1]
    if tr <= 0:
        return -math.inf
    x = abs(lam) * step.L
    return scale + math.log(tr) - (x + math.log1p(math.exp(-2 * x)))


def k_bracket(step: StepProfile, lam: float):
    a, L = step.alpha, step.L
    lo = max(-(a + a * a * L * L + lam * lam), -(step.mu_plus + lam * lam))
    hi = min(-(a + lam * lam), -(step.mu_minus + lam * lam))
    pad = 1e-9 * (1 + abs(lo) + abs(hi))
    return lo - pad, hi + pad


def exact_k(step: StepProfile, lam: float, scan: int = 64) -> float:
    """Principal eigenvalue for a two-valued coefficient from the Floquet trace condition."""
    lam = float(lam)
    if step.theta == 1 or step.mu_plus == step.mu_minus:
        return -step.mu_plus - lam * lam
    lo, hi = k_bracket(step, lam)

    def gap(k):
        return log_trace_gap(step, lam, k)

    for _ in range(8):
        if gap(lo) > 0:
            break
        lo -= hi - lo
    else:
        raise ConvergenceError(f"trace condition has no sign change below k = {lo:.6g}")
    ks = np.linspace(lo, hi, scan + 1)
    prev = lo
    for k in ks[1:]:
        if gap(k) <= 0:
            a, b = bisect(gap, prev, k)
            return 0.5 * (a + b)
        prev = k
    # the bound says the root is below hi; allow one expansion before giving up
    for k in np.linspace(hi, hi + (hi - lo), scan + 1)[1:]:
        if gap(k) <= 0:
            a, b = bisect(gap, prev, k)
            return 0.5 * (a + b)
        prev = k
    raise ConvergenceError("trace condition has no sign change in the bracket")


def cstar_step(step: StepProfile, tol: float = 1e-10) -> SpeedResult:
    """``min_{lam > 0} -k(lam)/lam`` with :func:`exact_k` as the inner oracle."""
    a = step.alpha
    lo_b, hi_b = speed_bounds(a, step.L)
    lam_lo, lam_hi = lambda_bracket(a, step.L)
    lam, val = golden_section(lambda t: -exact_k(step, t) / t, 0.9 * lam_lo, 1.1 * lam_hi, tol=tol * (1 + lam_hi))
    return SpeedResult(val, lam, -val * lam, a, lo_b, hi_b, None)


def _j(m, theta, mu_plus, mu_minus):
    return theta * math.sqrt(m - mu_plus) + (1 - theta) * math.sqrt(m - mu_minus)


def hfr_limit_speed(theta: float, mu_plus: float, mu_minus: float = 0.0) -> float:
    """Large-period limit of ``c*`` for a two-valued coefficient.

    Minimises ``m / j(m)`` over ``m >= mu_plus`` with
    ``j(m) = theta sqrt(m - mu_plus) + (1 - theta) sqrt(m - mu_minus)``,
    the same minimum as over ``lam = j(m)`` of ``j^{-1}(lam) / lam``.
    """
    if not mu_plus > 0 or mu_minus > mu_plus:
        raise PreconditionError("need mu_plus > 0 and mu_minus <= mu_plus")

    def ratio(m):
        jm = _j(m, theta, mu_plus, mu_minus)
        return m / jm if jm > 0 else math.inf

    hi = 2 * mu_plus + 1
    while ratio(2 * hi) <= ratio(hi):
        hi *= 2
    _, val = golden_section(ratio, mu_plus, 2 * hi, tol=1e-13 * hi, max_iter=400)
    return val


def hfr_closed_form(theta: float, mu: float) -> float:
    """Closed form of :func:`hfr_limit_speed` when the valley is zero."""
    m = 8 * mu * theta**2 / (3 * theta**2 + 2 * theta - 1 + (1 - theta) * math.sqrt(9 * theta**2 - 2 * theta + 1))
    return m / _j(m, theta, mu, 0.0)


def _row(theta, L, beta, p, res: SpeedResult):
    return {"theta": theta, "L": L, "beta": beta, "p": p, "c_star": res.c_star,
            "lambda_star": res.lambda_star, "k": res.k_at_min}


@dataclass(frozen=True)
class ThetaSweep:
    theta_star: float
    c_star: float
    table: list


def sweep_theta(L: float, beta: float = 1.0, p: float = 2.0, thetas=None, refine: bool = True) -> ThetaSweep:
    """``c*`` of the constrained step over a duty-cycle grid, plus refinement of the argmax.

    The default grid is 60 log-spaced points in ``[1e-3, 1]``.  Refinement
    runs golden-section in ``log theta`` between the neighbours of the best
    grid point.
    """
    thetas = np.geomspace(1e-3, 1.0, 60) if thetas is None else np.asarray(thetas, dtype=float)

    def speed(theta):
        return cstar_step(StepProfile.constrained(float(theta), L, beta, p))

    table = [_row(float(t), L, beta, p, speed(t)) for t in thetas]
    cs = np.array([r["c_star"] for r in table])
    i = int(np.argmax(cs))
    theta_star, c_best = float(thetas[i]), float(cs[i])
    if refine and len(thetas) > 2:
        lo = math.log(thetas[max(i - 1, 0)])
        hi = math.log(thetas[min(i + 1, len(thetas) - 1)])
        if hi > lo:
            u, neg = golden_section(lambda s: -speed(math.exp(s)).c_star, lo, hi, tol=1e-7)
            if -neg > c_best:
                theta_star, c_best = math.exp(u), -neg
    return ThetaSweep(theta_star, c_best, table)


def rescaling_identity(beta: float, theta: float, L: float, p: float = 2.0):
    """Both sides of ``c*(beta^(1/p) b_theta,L) = beta^(1/2p) c*(b_theta,beta^(1/2p) L)``.

    ``b_theta,L`` is the unit-level step ``theta^(-1/p)`` on ``[0, theta L)``.
    """
    lhs = cstar_step(StepProfile.constrained(theta, L, beta, p)).c_star
    s = beta ** (1 / (2 * p))
    rhs = s * cstar_step(StepProfile.constrained(theta, s * L, 1.0, p)).c_star
    return lhs, rhs


def write_sweep_csv(path, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([f"{r[c]:.17g}" for c in SWEEP_COLUMNS])
