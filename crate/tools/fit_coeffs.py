#!/usr/bin/env python3
"""Weighted minimax (Remez) fits for the fastmath kernels.

Prints Rust constant arrays that are checked into
crates/core/src/fastmath/coeffs.rs. Re-run after changing a degree:

    python3 tools/fit_coeffs.py > /tmp/coeffs.txt
"""

import mpmath as mp

mp.mp.dps = 60


def remez(f, weight, a, b, degree, iters=40, grid=4000):
    """Minimise max |weight(x) * (p(x) - f(x))| over [a, b] for deg-`degree` p."""
    n = degree + 2
    # Chebyshev-distributed initial reference.
    ref = [
        (a + b) / 2 - (b - a) / 2 * mp.cos(mp.pi * i / (n - 1)) for i in range(n)
    ]
    ref[0] = a + (b - a) * mp.mpf("1e-6")
    ref[-1] = b - (b - a) * mp.mpf("1e-6")
    xs = [a + (b - a) * mp.mpf(i) / grid for i in range(grid + 1)]
    xs[0] = a + (b - a) * mp.mpf("1e-9")
    xs[-1] = b - (b - a) * mp.mpf("1e-9")
    fx = [f(x) for x in xs]
    wx = [weight(x) for x in xs]
    coeffs = None
    err_level = None
    for _ in range(iters):
        m = mp.matrix(n, n)
        rhs = mp.matrix(n, 1)
        for i, x in enumerate(ref):
            for j in range(degree + 1):
                m[i, j] = x ** j
            m[i, degree + 1] = (-1) ** i / weight(x)
            rhs[i] = f(x)
        sol = mp.lu_solve(m, rhs)
        coeffs = [sol[j] for j in range(degree + 1)]
        err_level = abs(sol[degree + 1])

        def err(i):
            return wx[i] * (mp.polyval(coeffs[::-1], xs[i]) - fx[i])

        e = [err(i) for i in range(len(xs))]
        # Locate alternating extrema on the grid.
        ext = []
        i = 0
        while i < len(xs):
            j = i
            s = mp.sign(e[i])
            best = i
            while j < len(xs) and mp.sign(e[j]) == s:
                if abs(e[j]) > abs(e[best]):
                    best = j
                j += 1
            ext.append(best)
            i = j
        while len(ext) > n:
            # drop the smaller end extremum
            if abs(e[ext[0]]) < abs(e[ext[-1]]):
                ext.pop(0)
            else:
                ext.pop()
        if len(ext) < n:
            break
        new_ref = [xs[k] for k in ext]
        max_err = max(abs(e[k]) for k in ext)
        ref = new_ref
        if max_err - err_level < err_level * mp.mpf("1e-6"):
            break
    max_err = max(abs(wx[i] * (mp.polyval(coeffs[::-1], xs[i]) - fx[i])) for i in range(len(xs)))
    return coeffs, max_err


def atanh_ratio(w):
    # atanh(sqrt(w)) / sqrt(w) with the removable singularity at 0.
    if w < mp.mpf("1e-40"):
        return mp.mpf(1) + w / 3
    s = mp.sqrt(w)
    return mp.atanh(s) / s


def fmt(name, cs):
    body = ",\n".join("    {}".format(repr(float(c))) for c in cs)
    return "pub(crate) const {}: [f64; {}] = [\n{},\n];".format(name, len(cs), body)


def main():
    ln2 = mp.log(2)

    # fastlog: ln(x) = z * R(z^2), x in [sqrt(1/2), sqrt(2)].
    wmax = (3 - 2 * mp.sqrt(2)) ** 2
    r = lambda w: 2 * atanh_ratio(w)
    for deg in (4, 5):
        cs, e = remez(r, lambda w: 1 / r(w), mp.mpf(0), wmax, deg)
        print("// fastlog deg {} max rel err {}".format(deg, mp.nstr(e, 5)))
    cs, e = remez(r, lambda w: 1 / r(w), mp.mpf(0), wmax, 5)
    print(fmt("LN_ATANH", cs))

    # log2_frac: log2(x) = z * (C0 + w * Q(w)), x in [1, 2], w = z^2 in [0, 1/9].
    c0 = 2 / ln2
    p = lambda w: 2 * atanh_ratio(w) / ln2

    def q(w):
        if w < mp.mpf("1e-40"):
            return c0 / 3
        return (p(w) - c0) / w

    for deg in (8, 9, 10):
        cs, e = remez(q, lambda w: w / p(w) + mp.mpf("1e-30"), mp.mpf(0), mp.mpf(1) / 9, deg)
        print("// log2_frac tail deg {} max rel err {}".format(deg, mp.nstr(e, 5)))
    cs, e = remez(q, lambda w: w / p(w) + mp.mpf("1e-30"), mp.mpf(0), mp.mpf(1) / 9, 9)
    print(fmt("LOG2_TAIL", cs))
    hi = float(c0)
    lo = float(c0 - mp.mpf(hi))
    print("// LOG2_LEAD = ({!r}, {!r})".format(hi, lo))

    # exp2_frac: 2^x = 1 + x * Q(x), x in [0, 1].
    def e2(x):
        if x < mp.mpf("1e-40"):
            return ln2
        return (mp.power(2, x) - 1) / x

    for deg in (9, 10, 11):
        cs, e = remez(e2, lambda x: x / mp.power(2, x) + mp.mpf("1e-30"), mp.mpf(0), mp.mpf(1), deg)
        print("// exp2_frac deg {} max rel err {}".format(deg, mp.nstr(e, 5)))
    cs, e = remez(e2, lambda x: x / mp.power(2, x) + mp.mpf("1e-30"), mp.mpf(0), mp.mpf(1), 10)
    print(fmt("EXP2_TAIL", cs))

    # cos: sin(pi t) = t * (2 + (w - 1/4) * T(w)), w = t^2 in [0, 1/4].
    def s(w):
        if w < mp.mpf("1e-40"):
            return mp.pi - mp.pi ** 3 * w / 6
        return mp.sin(mp.pi * mp.sqrt(w)) / mp.sqrt(w)

    quarter = mp.mpf(1) / 4

    def t(w):
        if abs(w - quarter) < mp.mpf("1e-30"):
            return mp.diff(s, quarter)
        return (s(w) - 2) / (w - quarter)

    wt = lambda w: abs(w - quarter) / s(w) + mp.mpf("1e-30")
    cs, e = remez(t, wt, mp.mpf(0), quarter, 4)
    print("// cos2pi deg 4 max rel err {}".format(mp.nstr(e, 5)))
    print(fmt("SIN_PI_TAIL", cs))


if __name__ == "__main__":
    main()
