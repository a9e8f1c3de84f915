"""Property suites behind ``kppspeed verify``.

Each check returns ``(passed, detail)``; :func:`run_suites` collects them
into records that the CLI writes to ``summary.json``.
"""
from __future__ import annotations

import math

import numpy as np

from . import constraints as cons
from .eigen import principal_eigenpair, principal_eigenvalue, rescaling_check
from .grid import (
    CoefField, GridFunction, PeriodicGrid, cos_mode, fourier_coeffs, fourier_synthesis,
    integrate, random_smooth,
)
from .optimize import local_maximality_criterion, saddle_direction_check, second_variation_k
from .pdesim import SimConfig, comparison_check, run_front
from .rearrange import schwarz_rearrange
from .speed import lambda_bracket, minimal_speed, envelope_residual
from .stepfn import StepProfile, cstar_step, exact_k, hfr_limit_speed, log_trace_gap, k_bracket


def _random_b(rng, L=1.0, N=256):
    return random_smooth(PeriodicGrid(L, N), rng, modes=int(rng.integers(1, 6)), amplitude=float(rng.uniform(0.1, 0.9)))


# grid ------------------------------------------------------------------
def check_integrate(rng, n):
    g = PeriodicGrid(2.0, 128)
    worst = 0.0
    for _ in range(n):
        f, h = rng.normal(size=(2, g.N))
        a, b = rng.normal(size=2)
        F, H = GridFunction(g, f), GridFunction(g, h)
        lin = integrate(GridFunction(g, a * f + b * h)) - (a * integrate(F) + b * integrate(H))
        shift = integrate(GridFunction(g, np.roll(f, int(rng.integers(g.N))))) - integrate(F)
        worst = max(worst, abs(lin), abs(shift))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def check_fourier_roundtrip(rng, n):
    g = PeriodicGrid(1.5, 128)
    worst = 0.0
    for _ in range(n):
        u, v = rng.normal(size=(2, 40))
        v[0] = 0.0
        f = fourier_synthesis(g, u, v)
        u2, v2 = fourier_coeffs(f, 39)
        worst = max(worst, float(np.max(np.abs(u2 - u)) + np.max(np.abs(v2 - v))) / float(np.max(np.abs(u))))
    return worst <= 1e-10, f"max relative error {worst:.2e}"


# eigen -----------------------------------------------------------------
def check_k_bounds(rng, n):
    bad = 0
    for _ in range(n):
        b = _random_b(rng, L=float(rng.uniform(0.5, 3)))
        a, L = float(np.mean(b.values)), b.grid.L
        for lam in (0.3, 1.0, 2.0):
            k = principal_eigenvalue(b, lam)
            if not a + lam**2 - 1e-9 <= -k <= a + a * a * L * L + lam**2 + 1e-9:
                bad += 1
    return bad == 0, f"{bad} violations"


def check_k_even(rng, n):
    worst = 0.0
    for _ in range(n):
        b = _random_b(rng)
        lam = float(rng.uniform(0.2, 2))
        worst = max(worst, abs(principal_eigenvalue(b, lam) - principal_eigenvalue(b, -lam)))
    return worst <= 1e-9, f"max |k(lam) - k(-lam)| = {worst:.2e}"


def check_k_concave(rng, n):
    worst = -math.inf
    neg = True
    for _ in range(n):
        b = _random_b(rng)
        ks = np.array([principal_eigenvalue(b, lam) for lam in np.linspace(0, 3, 13)])
        worst = max(worst, float(np.max(np.diff(ks, 2))))
        neg = neg and ks[0] < 0
    return worst <= 1e-9 and neg, f"max second difference {worst:.2e}, k(0) < 0: {neg}"


def check_k_monotone(rng, n):
    bad = 0
    for _ in range(n):
        b = _random_b(rng)
        bigger = CoefField(b.grid, b.values + rng.random(b.grid.N))
        if principal_eigenvalue(b, 1.0) < principal_eigenvalue(bigger, 1.0) - 1e-12:
            bad += 1
    return bad == 0, f"{bad} violations"


def check_residual(rng, n):
    worst = 0.0
    for _ in range(n):
        p = principal_eigenpair(_random_b(rng), float(rng.uniform(0, 2)))
        worst = max(worst, p.residual)
    return worst <= 1e-8, f"max scaled residual {worst:.2e}"


def check_rescaling(rng, n):
    worst = 0.0
    for _ in range(n):
        b = _random_b(rng, L=float(rng.uniform(0.5, 4)))
        lhs, rhs = rescaling_check(b, float(rng.uniform(0.2, 1.5)))
        worst = max(worst, abs(lhs - rhs) / (1 + abs(lhs)))
    return worst <= 1e-9, f"max relative gap {worst:.2e}"


# speed -----------------------------------------------------------------
def check_speed_bounds(rng, n):
    bad = 0
    for _ in range(n):
        b = _random_b(rng, L=float(rng.uniform(0.5, 3)))
        r = minimal_speed(b)
        a, L = r.alpha, b.grid.L
        lo, hi = lambda_bracket(a, L)
        k_lo = a + lo**2
        k_hi = a + a * a * L * L + hi**2
        ok = (r.lower_bound - 1e-9 <= r.c_star <= r.upper_bound + 1e-9
              and lo - 1e-9 <= r.lambda_star <= hi + 1e-9
              and k_lo - 1e-9 <= -r.k_at_min <= k_hi + 1e-9)
        bad += not ok
    return bad == 0, f"{bad} violations"


def check_envelope(rng, n):
    worst = max(envelope_residual(_random_b(rng)) for _ in range(n))
    return worst <= 1e-4, f"max relative envelope residual {worst:.2e}"


def check_constant_speeds(rng, n):
    g = PeriodicGrid(1.0, 256)
    worst = max(abs(minimal_speed(CoefField.constant(g, c)).c_star - 2 * math.sqrt(c)) for c in (0.25, 1.0, 4.0))
    return worst <= 1e-8, f"max error {worst:.2e}"


def check_speed_monotone_in_L(rng, n):
    cs = [cstar_step(StepProfile(0.5, 2.0, 0.0, L)).c_star for L in (0.5, 1, 2, 4)]
    ok = all(b >= a - 1e-9 for a, b in zip(cs, cs[1:]))
    return ok, "c* along L = 0.5, 1, 2, 4: " + ", ".join(f"{c:.6f}" for c in cs)


# rearrange ---------------------------------------------------------------
def check_rearrangement(rng, n):
    bad = 0
    for _ in range(n):
        b = CoefField(PeriodicGrid(1.0, 128), 2 * rng.random(128))
        s = schwarz_rearrange(b)
        ok = (np.array_equal(np.sort(s.values), np.sort(b.values))
              and np.array_equal(schwarz_rearrange(s).values, s.values)
              and minimal_speed(s).c_star >= minimal_speed(b).c_star - 1e-6)
        for p in (1.5, 2.0, 3.0):
            ok = ok and math.isclose(np.sum(s.values**p), np.sum(b.values**p), rel_tol=1e-13)
        bad += not ok
    return bad == 0, f"{bad} violations"


# constraints -------------------------------------------------------------
def check_projections(rng, n):
    bad = 0
    for _ in range(n):
        b = _random_b(rng)
        spec = cons.ConstraintSpec(L=1.0, beta=float(rng.uniform(0.5, 4)), p=float(rng.uniform(1.2, 3)))
        pb, _ = cons.project_scale(b, spec)
        ppb, mu2 = cons.project_scale(pb, spec)
        ok = cons.is_feasible(pb, spec) and abs(mu2 - 1) <= 1e-9 and cons.is_feasible(schwarz_rearrange(pb), spec)
        box = cons.ConstraintSpec(L=1.0, kind="box", alpha=1.0, height=2.0)
        qb = cons.project_box(GridFunction(b.grid, 3 * rng.random(b.grid.N)), box)
        ok = ok and cons.is_feasible(qb, box) and cons.is_feasible(schwarz_rearrange(qb), box)
        bad += not ok
    return bad == 0, f"{bad} violations"


def check_b1_max(rng, n):
    spec = cons.ConstraintSpec(L=1.0, kind="box", alpha=1.0, height=2.0)
    c1 = minimal_speed(cons.build_b1(spec)).c_star
    worst = -math.inf
    for _ in range(n):
        b = cons.project_box(GridFunction(spec.grid(), 3 * rng.random(256)), spec)
        for field in (b, schwarz_rearrange(b)):
            worst = max(worst, minimal_speed(field).c_star - c1)
    return worst <= 1e-6, f"c*(b1) = {c1:.8f}, max excess {worst:.2e}"


# optimize ----------------------------------------------------------------
def check_second_variation_sign(rng, n):
    g = PeriodicGrid(1.0, 128)
    worst = -math.inf
    for _ in range(n):
        v = GridFunction(g, rng.normal(size=g.N))
        worst = max(worst, second_variation_k(float(rng.uniform(0.2, 3)), v).value)
    mean_only = second_variation_k(1.0, GridFunction.constant(g, 2.0)).value
    return worst <= 0 and abs(mean_only) <= 1e-14, f"max value {worst:.2e}, mean-only value {mean_only:.1e}"


def check_D_vs_saddle(rng, n):
    cases = [(2.0, 1.0, 1.0), (2.0, 4.0, 10.0), (1.25, 4.0, math.pi), (1.25, 0.5, math.pi), (1.5, 2.0, 2.0)]
    bad = []
    for p, beta, L in cases:
        spec = cons.ConstraintSpec(L=L, beta=beta, p=p)
        verdict = local_maximality_criterion(spec).verdict
        s = saddle_direction_check(spec, 1)
        if (verdict == "local_max") != (s.sign < 0):
            bad.append((p, beta, L))
    return not bad, f"disagreements: {bad}"


# stepfn ------------------------------------------------------------------
def _random_step(rng):
    mp = float(rng.uniform(0.5, 4))
    return StepProfile(float(rng.uniform(0.1, 0.9)), mp, float(rng.uniform(0, mp)), float(rng.uniform(0.5, 3)))


def check_exact_vs_grid(rng, n):
    worst = 0.0
    for _ in range(n):
        s = _random_step(rng)
        lam = float(rng.uniform(0.2, 1.5))
        worst = max(worst, abs(exact_k(s, lam) - principal_eigenvalue(s.to_coef(2048), lam)))
    return worst <= 1e-4, f"max |exact - grid| = {worst:.2e}"


def check_trace_monotone(rng, n):
    bad = 0
    for _ in range(n):
        s = _random_step(rng)
        lam = float(rng.uniform(0.2, 1.5))
        lo, hi = k_bracket(s, lam)
        gaps = [log_trace_gap(s, lam, k) for k in np.linspace(lo, hi, 40)]
        bad += not np.all(np.diff(gaps) < 0)
    return bad == 0, f"{bad} non-monotone traces"


def check_hfr(rng, n):
    c1 = hfr_limit_speed(1.0, 2.0, 0.0)
    ts = np.linspace(0.2, 1.0, 41)
    vals = np.array([hfr_limit_speed(t, 2.0, 0.0) for t in ts])
    jumps = float(np.max(np.abs(np.diff(vals))))
    return abs(c1 - 2 * math.sqrt(2)) <= 1e-10 and jumps < 0.05, f"c(1) = {c1:.12f}, max step {jumps:.3e}"


# pdesim ------------------------------------------------------------------
def check_pde(rng, n):
    g = PeriodicGrid(1.0, 256)
    b = CoefField.constant(g, 1.0)
    cfg = SimConfig(b, T=40.0, dt=0.05)
    r = run_front(cfg)
    gap = comparison_check(
        SimConfig(b, T=10.0, dt=0.05, domain_half_width=40.0),
        lambda x: 0.5 * (np.abs(x) <= 1),
        lambda x: (np.abs(x) <= 2).astype(float),
    )
    ok = r.speed_estimate >= 2 - 0.1 and gap <= 1e-10
    return ok, f"speed {r.speed_estimate:.4f}, comparison gap {gap:.1e}"


SUITES = {
    "grid": [check_integrate, check_fourier_roundtrip],
    "eigen": [check_k_bounds, check_k_even, check_k_concave, check_k_monotone, check_residual, check_rescaling],
    "speed": [check_speed_bounds, check_envelope, check_constant_speeds, check_speed_monotone_in_L],
    "rearrange": [check_rearrangement],
    "constraints": [check_projections, check_b1_max],
    "optimize": [check_second_variation_sign, check_D_vs_saddle],
    "stepfn": [check_exact_vs_grid, check_trace_monotone, check_hfr],
    "pdesim": [check_pde],
}


def run_suites(names, seed: int = 42, n: int = 5):
    """Run the named suites (``"all"`` for every one) and return a list of records."""
    if "all" in names:
        names = list(SUITES)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    records = []
    for suite in names:
        for check in SUITES[suite]:
            rng = np.random.default_rng([seed, len(records)])
            ok, detail = check(rng, n)
            records.append({"suite": suite, "check": check.__name__.removeprefix("check_"),
                            "passed": bool(ok), "detail": detail})
    return records
