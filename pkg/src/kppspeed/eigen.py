"""Principal eigenpair of the periodic operator ``-psi'' - 2 lam psi' - (b + lam^2) psi``.

The operator is discretised with second-order central differences and
periodic wrap, giving a cyclic tridiagonal matrix ``A`` whose off-diagonals
``-1/h^2 -+ lam/h`` are nonpositive as long as ``h |lam| <= 1``.  For any
shift ``sigma`` above ``-k`` the matrix ``A + sigma I`` is then a nonsingular
M-matrix, so its inverse is entrywise positive and inverse iteration from the
all-ones vector converges to the Perron pair without ever leaving the
positive cone.

Shifts are refreshed from Collatz-Wielandt bounds
``min_i (Ax)_i/x_i <= k <= max_i (Ax)_i/x_i`` of the current positive iterate,
which keeps ``sigma > -k`` while pulling it towards ``-k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, GridTooCoarseError, PositivityError
from .grid import CoefField, GridFunction, PeriodicGrid, inner

EIG_TOL = 1e-10
MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Principal eigenvalue ``k`` with ``||psi||_2 = <psi_tilde, psi> = 1``."""

    lam: float
    k: float
    psi: GridFunction
    psi_tilde: GridFunction
    residual: float
    iterations: int = 0

    @property
    def density(self) -> np.ndarray:
        """The product ``psi * psi_tilde``; integrates to one."""
        return self.psi.values * self.psi_tilde.values


def required_n(L: float, lam: float) -> int:
    """Smallest even N with ``h < 1/max(1, |lam|)``."""
    n = math.floor(L * max(1.0, abs(lam))) + 1
    return max(16, n + (n % 2))


def check_spacing(grid: PeriodicGrid, lam: float) -> None:
    if grid.h * max(1.0, abs(lam)) >= 1.0:
        need = required_n(grid.L, lam)
        raise GridTooCoarseError(
            f"h = {grid.h:.4g} too large for lambda = {lam:.4g}; use N >= {need}", need
        )


def assemble_operator(b: CoefField, lam: float, adjoint: bool = False) -> sp.csc_matrix:
    """Sparse matrix of ``-L_{lam,b}`` (or its adjoint, which is the transpose)."""
    grid = b.grid
    check_spacing(grid, lam)
    n, h = grid.N, grid.h
    up = -1.0 / h**2 - lam / h  # coefficient of psi_{i+1}
    down = -1.0 / h**2 + lam / h  # coefficient of psi_{i-1}
    if adjoint:
        up, down = down, up
    diag = 2.0 / h**2 - b.values - lam**2
    idx = np.arange(n)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([idx, (idx + 1) % n, (idx - 1) % n])
    data = np.concatenate([diag, np.full(n, up), np.full(n, down)])
    return sp.csc_matrix((data, (rows, cols)), shape=(n, n))


def apply_operator(b: CoefField, lam: float, u, adjoint: bool = False) -> np.ndarray:
    """Matrix-free action of ``-L_{lam,b}`` on samples ``u``."""
    h = b.grid.h
    u = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    s = -1.0 if adjoint else 1.0
    nxt, prv = np.roll(u, -1), np.roll(u, 1)
    # nested differences avoid forming 2/h^2 - b, which loses the bits of b
    lap = ((nxt - u) - (u - prv)) / h**2
    return -lap - s * lam * (nxt - prv) / h - (b.values + lam**2) * u


def _residual_floor(grid: PeriodicGrid, lam: float) -> float:
    # rounding floor of ||(A - k)x||_inf / ||x||_inf for the 1/h^2 stencil
    return 64 * np.finfo(float).eps * (4.0 / grid.h**2 + 2 * abs(lam) / grid.h)


def principal_eigenpair(
    b: CoefField,
    lam: float,
    tol: float = EIG_TOL,
    max_iter: int = MAX_ITER,
    start: np.ndarray | None = None,
) -> EigenPair:
    """Principal eigenpair of ``-L_{lam,b}`` and its adjoint.

    Raises :class:`ConvergenceError` after ``max_iter`` solves and
    :class:`PositivityError` if a converged vector has a non-positive entry.
    """
    grid = b.grid
    lam = float(lam)
    A = assemble_operator(b, lam)
    eye = sp.identity(grid.N, format="csc")
    res_tol = max(tol, _residual_floor(grid, lam))

    x = np.ones(grid.N) if start is None else np.array(start, dtype=float)
    y = np.ones(grid.N)
    sigma = float(np.max(b.values)) + lam**2 + 1.0
    k_old = math.inf
    res = math.inf
    for it in range(1, max_iter + 1):
        lu = spla.splu((A + sigma * eye).tocsc())
        x = lu.solve(x)
        y = lu.solve(y, trans="T")
        x /= np.max(np.abs(x))
        y /= np.max(np.abs(y))
        Ax = apply_operator(b, lam, x)
        k = float(np.dot(y, Ax) / np.dot(y, x))
        res = float(np.max(np.abs(Ax - k * x)))
        res_adj = float(np.max(np.abs(apply_operator(b, lam, y, adjoint=True) - k * y)))
        if abs(k - k_old) <= 1e-12 * (1 + abs(k)) and max(res, res_adj) <= res_tol:
            break
        k_old = k
        if np.all(x > 0):
            ratios = Ax / x
            lo, hi = float(ratios.min()), float(ratios.max())
            # sigma > -lo >= -k keeps A + sigma I a nonsingular M-matrix
            sigma = -lo + max(hi - lo, 1e-9 * (1 + abs(lo)))
    else:
        raise ConvergenceError(
            f"inverse iteration did not converge in {max_iter} steps (residual {res:.3e})", res
        )

    if np.any(x <= 0) or np.any(y <= 0):
        raise PositivityError("principal eigenvector has a non-positive entry")
    psi = x / math.sqrt(grid.h * np.dot(x, x))
    psi_t = y / (grid.h * np.dot(y, psi))
    return EigenPair(
        lam=lam,
        k=k,
        psi=GridFunction(grid, psi),
        psi_tilde=GridFunction(grid, psi_t),
        residual=float(np.max(np.abs(apply_operator(b, lam, psi) - k * psi)) / np.max(psi)),
        iterations=it,
    )


def principal_eigenvalue(b: CoefField, lam: float, **kw) -> float:
    return principal_eigenpair(b, lam, **kw).k


def dk_dlambda(b: CoefField, pair: EigenPair) -> float:
    """Exact derivative of the discrete ``k`` in ``lam`` (first-order perturbation).

    ``d(-L)/d lam = -2 D1 - 2 lam``, so ``dk/dlam = <psi_tilde, (-2 D1 - 2 lam) psi>``.
    """
    lam = pair.lam
    psi = pair.psi.values
    h = b.grid.h
    dpsi = (np.roll(psi, -1) - np.roll(psi, 1)) / (2 * h)
    return inner(pair.psi_tilde, -2 * dpsi - 2 * lam * psi)


def rescaling_check(b: CoefField, lam: float):
    """Both sides of ``k(lam, b) = k(lam L, L^2 b(L .)) / L^2``.

    The right side is solved on the unit-period grid with the same sample count,
    independently of the left side.
    """
    L = b.grid.L
    lhs = principal_eigenvalue(b, lam)
    unit = CoefField(PeriodicGrid(1.0, b.grid.N), L**2 * b.values)
    rhs = principal_eigenvalue(unit, lam * L) / L**2
    return lhs, rhs
