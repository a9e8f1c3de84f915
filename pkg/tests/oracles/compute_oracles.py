"""Independent high-precision oracles for values frozen into the test-suite.

Run with ``python3 tests/oracles/compute_oracles.py``.  Uses mpmath only
(no kppspeed code): closed-form two-piece Floquet traces and direct
minimisation in 40-digit arithmetic.
"""
import mpmath as mp

mp.mp.dps = 40


def trace(mu_p, mu_m, theta, L, k):
    """Closed-form trace of the two-piece monodromy of w'' + (b + k) w = 0."""
    def piece(q, ell):
        if q == 0:
            return mp.mpf(1), ell, mp.mpf(0)
        if q > 0:
            w = mp.sqrt(q)
            return mp.cos(w * ell), mp.sin(w * ell) / w, -w * mp.sin(w * ell)
        g = mp.sqrt(-q)
        return mp.cosh(g * ell), mp.sinh(g * ell) / g, g * mp.sinh(g * ell)
    c1, s1, d1 = piece(mu_p + k, theta * L)
    c2, s2, d2 = piece(mu_m + k, (1 - theta) * L)
    return 2 * c1 * c2 + s1 * d2 + s2 * d1


def exact_k(mu_p, mu_m, theta, L, lam):
    target = 2 * mp.cosh(lam * L)
    f = lambda k: trace(mu_p, mu_m, theta, L, k) - target
    alpha = theta * mu_p + (1 - theta) * mu_m
    lo = -(mu_p + lam**2)
    hi = -(alpha + lam**2)
    return mp.findroot(f, (lo, hi), solver="illinois")


def cstar(mu_p, mu_m, theta, L):
    obj = lambda lam: -exact_k(mu_p, mu_m, theta, L, lam) / lam
    # stationarity of -k/lam via a derivative root
    dobj = lambda lam: mp.diff(obj, lam)
    lam = mp.findroot(dobj, (mp.mpf("0.8"), mp.mpf("1.3")), solver="anderson")
    return obj(lam), lam


def hfr_closed(theta, mu):
    m = 8 * mu * theta**2 / (3 * theta**2 + 2 * theta - 1 + (1 - theta) * mp.sqrt(9 * theta**2 - 2 * theta + 1))
    return m / (theta * mp.sqrt(m - mu) + (1 - theta) * mp.sqrt(m))


if __name__ == "__main__":
    print("exact_k(step 0.5,2,0,L=1, lam=1) =", mp.nstr(exact_k(2, 0, mp.mpf("0.5"), 1, 1), 20))
    print("exact_k(step 0.3,3,0.5,L=2, lam=0.7) =", mp.nstr(exact_k(3, mp.mpf("0.5"), mp.mpf("0.3"), 2, mp.mpf("0.7")), 20))
    c, lam = cstar(2, 0, mp.mpf("0.5"), 1)
    print("c*(step 0.5,2,0,L=1) =", mp.nstr(c, 20), " lam =", mp.nstr(lam, 20))
    th = mp.mpf("0.3")
    print("hfr closed form theta=0.3, mu=theta^-1/2 =", mp.nstr(hfr_closed(th, th ** mp.mpf("-0.5")), 20))
    print("second variation of k, phi_1, L=1, b0=1 =", mp.nstr(-mp.mpf(1) / 2 / (mp.pi**2 + 1), 20))
    print("second variation of c*, phi_1, L=1, b0=1 =", mp.nstr(mp.mpf(1) / 2 / (mp.pi**2 + 1), 20))
