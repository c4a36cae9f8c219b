"""Independent high-precision values of -div(|grad U|^{p-2} grad U).

U is written from its definition (fundamental solution minus its reflection)
and differentiated numerically with mpmath at 40 digits, so nothing here
shares code with the closed form in the package.  Run this file to regenerate
the values frozen in test_potentials.py.
"""

import mpmath as mp

mp.mp.dps = 40


def U(N, p, r, y):
    omega = 2 * mp.pi ** (mp.mpf(N) / 2) / mp.gamma(mp.mpf(N) / 2)
    C = (p - 1) / (N - p) * omega ** (-1 / (p - 1))
    k = (N - p) / (p - 1)
    dm = mp.sqrt(r * r + (y - 1) ** 2)
    dp = mp.sqrt(r * r + (y + 1) ** 2)
    return C * (dm ** (-k) - dp ** (-k))


def minus_p_laplacian(N, p, r, y):
    N, p, r, y = mp.mpf(N), mp.mpf(p), mp.mpf(r), mp.mpf(y)

    def flux(rr, yy):
        ur = mp.diff(lambda t: U(N, p, t, yy), rr)
        uy = mp.diff(lambda t: U(N, p, rr, t), yy)
        g = mp.sqrt(ur * ur + uy * uy) ** (p - 2)
        return g * ur, g * uy

    dr = mp.diff(lambda t: flux(t, y)[0], r)
    dy = mp.diff(lambda t: flux(r, t)[1], y)
    ar = flux(r, y)[0]
    return -(dr + (N - 2) * ar / r + dy)


POINTS = [
    (5, 3.0, 0.2, 0.5),
    (5, 3.0, 1.5, 2.0),
    (3, 1.5, 0.7, 1.4),
    (3, 1.5, 0.2, 0.5),
    (6, 5.0, 0.7, 1.4),
    (6, 5.0, 0.2, 0.5),
    (4, 2.5, 0.7, 1.4),
]

if __name__ == "__main__":
    for N, p, r, y in POINTS:
        print((N, p, r, y), mp.nstr(minus_p_laplacian(N, p, r, y), 17))
