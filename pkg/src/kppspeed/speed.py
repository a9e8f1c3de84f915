"""Minimal wave speed ``c*(b) = min_{lam > 0} -k(lam, b) / lam`` and its derivatives.

Also hosts Nadin's variational formula for ``k``.  The discrete functional
:func:`nadin_functional` is the exact analogue of the continuous one for the
finite-difference operator of :mod:`kppspeed.eigen`: its minimum over positive
unit vectors equals the discrete principal eigenvalue, attained at
``sqrt(psi * psi_tilde)``.  It converges to
``int phi'^2 - int b phi^2 - lam^2 L^2 / int phi^-2`` as ``h -> 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._search import golden_section
from .eigen import EigenPair, check_spacing, dk_dlambda, principal_eigenpair, required_n
from .errors import DegenerateError, GridTooCoarseError, PreconditionError
from .grid import CoefField, GridFunction, PeriodicGrid, inner

LAMBDA_TOL = 1e-10
LAMBDA_H_CAP = 0.95  # largest h * lam searched


@dataclass(frozen=True, eq=False)
class SpeedResult:
    c_star: float
    lambda_star: float  # nan when b == 0
    k_at_min: float
    alpha: float
    lower_bound: float
    upper_bound: float
    pair: EigenPair | None = None

    @property
    def lambda_defined(self) -> bool:
        return not math.isnan(self.lambda_star)

    def lambda_bracket(self, L):
        return lambda_bracket(self.alpha, L)


def lambda_bracket(alpha: float, L: float):
    """Interval that must contain the minimiser ``lam(b)`` for mean ``alpha``."""
    r = math.sqrt(alpha + alpha**2 * L**2)
    return r - alpha * L, r + alpha * L


def speed_bounds(alpha: float, L: float):
    return 2 * math.sqrt(alpha), 2 * math.sqrt(alpha + alpha**2 * L**2)


def minimal_speed(b: CoefField, tol: float = LAMBDA_TOL) -> SpeedResult:
    """Compute ``c*(b)`` and the minimiser ``lam(b)``.

    Golden-section search on a slightly widened ``lam``-bracket, then up to
    three Newton steps on ``k - lam dk/dlam = 0``.  For ``b == 0`` the speed is
    zero and ``lambda_star`` is ``nan``.
    """
    grid = b.grid
    alpha = float(np.mean(b.values))
    lo_b, hi_b = speed_bounds(alpha, grid.L)
    if b.is_zero():
        return SpeedResult(0.0, math.nan, 0.0, 0.0, 0.0, 0.0, None)

    lam_lo, lam_hi = lambda_bracket(alpha, grid.L)
    lo, hi = 0.9 * lam_lo, 1.1 * lam_hi
    # the bracket is loose for large L; only search where the stencil is monotone
    cap = LAMBDA_H_CAP / grid.h
    capped = hi > cap
    hi = min(hi, cap)
    check_spacing(grid, lo)

    cache = {}
    start = [None]

    def pair_at(lam):
        if lam not in cache:
            p = principal_eigenpair(b, lam, start=start[0])
            start[0] = p.psi.values
            cache[lam] = p
        return cache[lam]

    def objective(lam):
        return -pair_at(lam).k / lam

    lam, _ = golden_section(objective, lo, hi, tol=1e-6 * (1 + hi))

    # Newton polish on F(lam) = k - lam k'(lam); F'(lam) = -lam k''(lam)
    for _ in range(3):
        p = pair_at(lam)
        dk = dk_dlambda(b, p)
        F = p.k - lam * dk
        delta = 1e-4 * (1 + lam)
        d2k = (dk_dlambda(b, pair_at(lam + delta)) - dk_dlambda(b, pair_at(lam - delta))) / (2 * delta)
        if d2k >= 0:
            break
        step = F / (lam * d2k)
        new = lam + step
        if not lo < new < hi:
            break
        lam = new
        if abs(step) <= tol * (1 + lam):
            break

    if capped and lam > hi - 1e-3 * (hi - lo):
        need = required_n(grid.L, 2 * lam)
        raise GridTooCoarseError(f"minimiser lam(b) is beyond the grid limit {hi:.4g}; use N >= {need}", need)
    p = pair_at(lam)
    return SpeedResult(
        c_star=-p.k / lam,
        lambda_star=lam,
        k_at_min=p.k,
        alpha=alpha,
        lower_bound=lo_b,
        upper_bound=hi_b,
        pair=p,
    )


def _check_test_function(phi: GridFunction) -> np.ndarray:
    vals = np.abs(phi.values)
    if np.min(vals) < 1e-12:
        raise DegenerateError("test function has a (near) zero sample; phi^-2 is not integrable")
    return vals


def _flux_term(grid: PeriodicGrid, lam: float, phi: np.ndarray):
    """Optimal link twists for the drift part of the discrete functional.

    Minimises ``sum_j w_j cosh(tau_j)`` over ``sum_j tau_j = N atanh(lam h)``
    with ``w_j = h phi_j phi_{j+1}``; the minimiser has ``w_j sinh(tau_j) = mu``.
    Returns ``(w, mu)``.
    """
    h = grid.h
    w = h * phi * np.roll(phi, -1)
    total = grid.N * math.atanh(lam * h)
    if total == 0.0:
        return w, 0.0
    s = math.copysign(1.0, total)
    per_link = math.sinh(abs(total) / grid.N)
    lo, hi = float(w.min()) * per_link, float(w.max()) * per_link

    def excess(m):
        return float(np.sum(np.arcsinh(m / w))) - abs(total)

    if hi == lo:
        mu = lo
    else:
        mu = brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    return w, s * mu


def nadin_functional(
    phi: GridFunction, lam: float, b: CoefField, normalize: bool = False, discrete: bool = True
) -> float:
    """Nadin's functional ``H(phi, lam, b)``.

    ``phi`` must have unit L2 norm unless ``normalize`` is set.  With
    ``discrete=True`` (default) the finite-difference version is used, whose
    minimum equals the eigenvalue from :func:`principal_eigenpair` exactly;
    ``discrete=False`` evaluates the continuum formula with a spectral
    derivative.
    """
    grid = b.grid
    vals = _check_test_function(phi)
    norm2 = grid.h * float(np.dot(vals, vals))
    if normalize:
        vals = vals / math.sqrt(norm2)
    elif abs(norm2 - 1.0) > 1e-8:
        raise PreconditionError(f"phi must have unit L2 norm (got {norm2:.6g}); pass normalize=True")
    lam = float(lam)
    pot = grid.h * float(np.dot(b.values, vals**2))

    if not discrete:
        k_wave = 2 * np.pi * np.fft.rfftfreq(grid.N, d=grid.h)
        dphi = np.fft.irfft(1j * k_wave * np.fft.rfft(vals), n=grid.N)
        kinetic = grid.h * float(np.dot(dphi, dphi))
        return kinetic - pot - lam**2 * grid.L**2 / (grid.h * float(np.sum(vals**-2)))

    check_spacing(grid, lam)
    h = grid.h
    dphi = (np.roll(vals, -1) - vals) / h
    kinetic = h * float(np.dot(dphi, dphi))
    w, mu = _flux_term(grid, lam, vals)
    # 1/h^2 - sqrt(pq) sqrt(1 + r^2) written without cancellation
    a = (lam * h) ** 2
    r2 = (mu / w) ** 2
    X = (1 - a) * (1 + r2)
    link = (a - r2 + a * r2) / (1 + np.sqrt(X))
    drift = 2.0 / h**2 * float(np.dot(w, link))
    return kinetic + drift - pot - lam**2 * grid.h * float(np.dot(vals, vals))


def nadin_gradient(phi: np.ndarray, lam: float, b: CoefField) -> np.ndarray:
    """Gradient of the discrete functional w.r.t. samples of a unit-norm ``phi``."""
    grid = b.grid
    h = grid.h
    w, mu = _flux_term(grid, lam, phi)
    sqrt_pq = math.sqrt(1.0 - (lam * h) ** 2) / h**2
    cosh_tau = np.sqrt(1 + (mu / w) ** 2)
    diag = 2.0 / h**2 - b.values - lam**2
    link_up = cosh_tau * np.roll(phi, -1)
    link_down = np.roll(cosh_tau, 1) * np.roll(phi, 1)
    # S(tau) phi in quadrature scaling: H = h phi^T S phi
    return 2 * h * (diag * phi - sqrt_pq * (link_up + link_down))


@dataclass(frozen=True, eq=False)
class NadinResult:
    phi: GridFunction
    H_min: float
    converged: bool
    iterations: int


def nadin_minimize(lam: float, b: CoefField, max_iter: int = 5000, tol: float = 1e-14) -> NadinResult:
    """Minimise the discrete Nadin functional by preconditioned projected gradient descent.

    An independent route to ``k(lam, b)``: it never touches the nonsymmetric
    eigenproblem.  Descent directions are preconditioned with the inverse of
    the circulant ``-D2 + sigma`` (applied by FFT), projected onto the tangent
    space of the unit sphere, and accepted by Armijo backtracking.  Iterates
    are clipped at ``1e-8`` and renormalised to stay positive.
    """
    grid = b.grid
    h = grid.h
    check_spacing(grid, lam)
    sigma = float(np.max(b.values)) + lam**2 + 1.0
    freq = np.arange(grid.N // 2 + 1)
    symbol = (2 - 2 * np.cos(2 * np.pi * freq / grid.N)) / h**2 + sigma

    def precondition(g):
        return np.fft.irfft(np.fft.rfft(g) / symbol, n=grid.N)

    def unit(v):
        v = np.maximum(v, 1e-8)
        return v / math.sqrt(h * np.dot(v, v))

    def value(v):
        return nadin_functional(GridFunction(grid, v), lam, b)

    phi = unit(np.ones(grid.N))
    H = value(phi)
    step = 1.0
    quiet = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = nadin_gradient(phi, lam, b)
        g -= (h * np.dot(g, phi)) * phi  # gradient of H / ||phi||^2 on the sphere
        d = -precondition(g)
        d -= (h * np.dot(d, phi)) * phi
        slope = float(np.dot(g, d))
        if slope >= 0 or not np.any(d):
            converged = True
            break
        accepted = False
        for _ in range(60):
            trial = unit(phi + step * d)
            H_trial = value(trial)
            if H_trial <= H + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        drop = H - H_trial
        phi, H = trial, H_trial
        step = min(step * 2.0, 1e6)
        quiet = quiet + 1 if drop <= tol * (1 + abs(H)) else 0
        if quiet >= 3:
            converged = True
            break
    return NadinResult(GridFunction(grid, phi), H, converged, it)


def dk_db(b: CoefField, lam: float, v, pair: EigenPair | None = None) -> float:
    """Gateaux derivative ``d k(lam, b)[v] = -int psi psi_tilde v``."""
    pair = pair if pair is not None else principal_eigenpair(b, lam)
    return -inner(GridFunction(b.grid, pair.density), v)


def dcstar_db(b: CoefField, v, result: SpeedResult | None = None) -> float:
    """Derivative ``d c*(b)[v] = <psi psi_tilde, v> / lam(b)``; the lam-term cancels."""
    result = result if result is not None else minimal_speed(b)
    if not result.lambda_defined:
        raise DegenerateError("c* is not differentiable at b == 0 (lam(b) undefined)")
    return inner(GridFunction(b.grid, result.pair.density), v) / result.lambda_star


def dlambda_db(b: CoefField, v, result: SpeedResult | None = None) -> float:
    """Derivative of the minimiser ``lam(b)`` via the implicit function theorem.

    ``d lam[v] = (d_b k[v] - lam d2_{b,lam} k[v]) / (lam d2_lam k)`` with both
    second derivatives from central differences in ``lam``.
    """
    result = result if result is not None else minimal_speed(b)
    if not result.lambda_defined:
        raise DegenerateError("lam(b) is undefined at b == 0")
    lam = result.lambda_star
    delta = 1e-4 * (1 + lam)
    k0 = result.pair.k
    p_plus = principal_eigenpair(b, lam + delta)
    p_minus = principal_eigenpair(b, lam - delta)
    d2k = (p_plus.k - 2 * k0 + p_minus.k) / delta**2
    if abs(d2k) < 1e-10:
        raise DegenerateError(f"d2k/dlam2 = {d2k:.3e}: lost strict concavity")
    dbk = dk_db(b, lam, v, result.pair)
    dblk = (dk_db(b, lam + delta, v, p_plus) - dk_db(b, lam - delta, v, p_minus)) / (2 * delta)
    return (dbk - lam * dblk) / (lam * d2k)


def envelope_residual(b: CoefField, result: SpeedResult | None = None) -> float:
    """Relative mismatch in ``lam(b) dk/dlam = k`` at the minimiser (central differences)."""
    result = result if result is not None else minimal_speed(b)
    lam = result.lambda_star
    delta = 1e-4 * (1 + lam)
    dk = (principal_eigenpair(b, lam + delta).k - principal_eigenpair(b, lam - delta).k) / (2 * delta)
    return abs(lam * dk - result.k_at_min) / abs(result.k_at_min)
