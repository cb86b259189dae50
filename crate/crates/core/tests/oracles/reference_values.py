"""Independent reference values frozen into the Rust test suite.

Run with `python3 reference_values.py`. Uses mpmath (50 digits) for closed
forms and characteristic-polynomial roots, and scipy's Pade expm for the
thermal survival minima. Nothing here shares code with the Rust crate.
"""
import math

import mpmath as mp
import numpy as np
from scipy.linalg import expm

mp.mp.dps = 50


def block(w1, w2, w3, omega, freqs, gs, ns):
    d = len(freqs)
    delta = sum(n * f for n, f in zip(ns, freqs))
    h = mp.zeros(d + 2, d + 2)
    h[0, 0] = w1 + delta
    h[1, 1] = w2 + delta
    h[0, 1] = h[1, 0] = omega
    for k in range(d):
        h[k + 2, k + 2] = w3 + delta + freqs[k]
        h[1, k + 2] = h[k + 2, 1] = gs[k] * mp.sqrt(ns[k] + 1)
    return h


def fig1_block0():
    h = block(20, 19, 0, 1, [19], [1], [0])
    # characteristic polynomial of the 3x3 block, roots at 50 digits
    lam = mp.mpf
    a, b, c = h[0, 0], h[1, 1], h[2, 2]
    # det(H - x) = (a-x)[(b-x)(c-x) - 1] - (c-x)
    coeffs = mp.taylor(lambda x: (a - x) * ((b - x) * (c - x) - 1) - (c - x), 0, 3)
    roots = sorted(mp.polyroots(coeffs[::-1], maxsteps=200, extraprec=200), key=lambda r: mp.re(r))
    roots = [mp.re(r) for r in roots]
    out = []
    for r in roots:
        # eigenvector (1, (r-a), ((r-a)/(r-c))) up to normalisation
        v = [mp.mpf(1), r - a, (r - a) / (r - c)]
        norm2 = sum(x * x for x in v)
        out.append((r, 1 / norm2))
    print("fig1 n=0 eigen/weights:")
    for r, w in out:
        print("   ", mp.nstr(r, 20), mp.nstr(w, 20))
    print("fig1 n=0 survival:")
    for t in (0, 0.5, 1.0):
        u = mp.expm(-1j * h * t)
        print("   ", t, mp.nstr(abs(u[0, 0]) ** 2, 20))


def closed_forms():
    print("overlap m=M=O=1,c=10:", mp.nstr(100 / mp.sqrt(11604), 20))
    eps = mp.mpf("1e-4")
    q = (1 - eps) ** mp.mpf("0.25")
    exact = 4 * mp.sqrt((1 + q) / (1 - q))
    asym = 8 * mp.sqrt(2) * eps ** mp.mpf("-0.5")
    print("c_eps(1e-4): exact", mp.nstr(exact, 20), "asym", mp.nstr(asym, 20),
          "rel", mp.nstr(abs(asym / exact - 1), 6))
    print("20/ln2:", mp.nstr(20 / mp.log(2), 20))
    d = 20
    g = 1 / (mp.mpf(2) ** d * mp.factorial(d))
    s = (2 * mp.pi * d) ** mp.mpf(-0.5) * mp.mpf(2) ** -d * mp.mpf(d) ** -d * mp.e ** d
    print("G_20:", mp.nstr(g, 20), "stirling/exact-1:", mp.nstr(s / g - 1, 10))
    # Fig-2 band, eps = 0.1
    w23 = mp.mpf(19)
    freqs = [w23 * mp.mpf(r) for r in ("1", "0.996", "0.992", "0.987")]
    offs = [abs(0 - 20 + f) for f in freqs]
    m, M = min(offs), max(offs)
    wav = mp.exp(sum(mp.log(f) for f in freqs) / 4)
    gav = mp.mpf("0.5")
    ts = 2 ** 7 * mp.e * M ** 2 * wav / (m ** 2 * gav ** 2 * 4) / mp.mpf("0.1")
    print("fig2 band m, M:", mp.nstr(m, 20), mp.nstr(M, 20), "T_s(0.1):", mp.nstr(ts, 20))
    # Fig-1 thresholds at eps = 0.2
    eps = mp.mpf("0.2")
    q = (1 - eps) ** mp.mpf("0.25")
    ce = 4 * mp.sqrt((1 + q) / (1 - q))
    ne = int(mp.floor(ce ** 2)) + 1
    te = -2 * 19 * ne / mp.log(1 - eps)
    print("fig1 eps=0.2: c_eps", mp.nstr(ce, 20), "n_eps", ne, "T_eps", mp.nstr(te, 20))


def fig2_cutoffs():
    w23 = 19.0
    freqs = [w23 * r for r in (1, 0.996, 0.992, 0.987)]
    t = 10 * w23
    tol = 1e-3

    def ok(ns):
        return mp.fprod(1 - mp.exp(-(n + 1) * mp.mpf(f) / t) for n, f in zip(ns, freqs)) >= 1 - mp.mpf(tol)

    # greedy: grow the mode with the largest marginal tail
    ns = [0, 0, 0, 0]
    while not ok(ns):
        j = max(range(4), key=lambda k: mp.exp(-(ns[k] + 1) * mp.mpf(freqs[k]) / t))
        ns[j] += 1
    minimal = all(not ok([n - (i == k) for i, n in enumerate(ns)]) for k in range(4))
    print("fig2 cutoffs at 10 w23:", ns, "locally minimal:", minimal,
          "blocks:", math.prod(n + 1 for n in ns))


def fig1_minima(tail=1e-8):
    freqs, g, w = [19.0], 1.0, 19.0
    n_t = 400
    dt = 10.0 / (n_t - 1)
    print("fig1 min P (expm propagation, tail %g):" % tail)
    for ratio in (0.1, 1, 10, 100):
        t = ratio * w
        x = math.exp(-w / t)
        n_max = 0
        while x ** (n_max + 1) > tail:
            n_max += 1
        p = np.zeros(n_t)
        for n in range(n_max + 1):
            h = np.array([[20.0, 1, 0], [1, 19.0, g * math.sqrt(n + 1)], [0, g * math.sqrt(n + 1), 19.0]])
            u = expm(-1j * h * dt)
            v = np.zeros(3, complex)
            v[0] = 1
            s = np.empty(n_t)
            for j in range(n_t):
                s[j] = abs(v[0]) ** 2
                v = u @ v
            p += (1 - x) * x ** n * s
        print("   ", ratio, "blocks", n_max + 1, "minP %.12f" % p.min())


def fig2_low_minima(tail=1e-7):
    """Dense eigh per block, box cutoffs grown until the dropped mass is below tail."""
    import itertools

    freqs = np.array([1, 0.996, 0.992, 0.987]) * 19.0
    t = np.linspace(0, 10, 400)
    print("fig2 min P (eigh, tail %g):" % tail)
    for ratio in (0.1, 1.0):
        x = np.exp(-freqs / (ratio * 19.0))
        ns = np.zeros(4, int)
        while 1 - np.prod(1 - x ** (ns + 1)) > tail:
            ns[np.argmax(x ** (ns + 1))] += 1
        p = np.zeros_like(t)
        for n in itertools.product(*[range(c + 1) for c in ns]):
            n = np.array(n)
            d = n @ freqs
            h = np.diag([20.0 + d, 19.0 + d] + list(d + freqs))
            h[0, 1] = h[1, 0] = 1.0
            for k in range(4):
                h[1, k + 2] = h[k + 2, 1] = 0.5 * math.sqrt(n[k] + 1)
            e, v = np.linalg.eigh(h)
            a = (v[0] ** 2) @ np.exp(-1j * np.outer(e, t))
            p += np.prod((1 - x) * x ** n) * abs(a) ** 2
        print("   ", ratio, "cutoffs", list(ns), "minP", repr(p.min()))


if __name__ == "__main__":
    fig1_block0()
    closed_forms()
    fig2_cutoffs()
    fig1_minima()
    fig2_low_minima()
