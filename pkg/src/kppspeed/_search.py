import math

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2


def golden_section(f, a, b, tol=1e-8, max_iter=200):
    """Minimise a unimodal ``f`` on ``[a, b]``; returns ``(x_min, f(x_min))``."""
    a, b = min(a, b), max(a, b)
    h = b - a
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    for _ in range(max_iter):
        if h <= tol:
            break
        if yc < yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
    return (c, yc) if yc < yd else (d, yd)


def bisect(g, lo, hi, steps=200, xtol=0.0):
    """Bisection for a sign change of ``g`` on ``[lo, hi]`` with ``g(lo) > 0 >= g(hi)``."""
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= xtol:
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi
