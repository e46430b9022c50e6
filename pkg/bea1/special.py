"""Special functions for the randomness tests.

igamc follows the Cephes series / continued-fraction split that the NIST
test suite itself uses.
"""

from __future__ import annotations

import math

MACHEP = 1.11022302462515654042e-16
MAXLOG = 7.09782712893383996843e2
BIG = 4.503599627370496e15
BIGINV = 2.22044604925031308085e-16


def erfc(x: float) -> float:
    return math.erfc(x)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def igam(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if x < 0 or a <= 0:
        raise ValueError(f"igam domain error: a={a}, x={x}")
    if x == 0:
        return 0.0
    if x > 1.0 and x > a:
        return 1.0 - igamc(a, x)

    ax = a * math.log(x) - x - math.lgamma(a)
    if ax < -MAXLOG:
        return 0.0
    ax = math.exp(ax)

    r = a
    c = 1.0
    ans = 1.0
    while True:
        r += 1.0
        c *= x / r
        ans += c
        if c / ans <= MACHEP:
            break
    return ans * ax / a


def igamc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if x < 0 or a <= 0:
        raise ValueError(f"igamc domain error: a={a}, x={x}")
    if x == 0:
        return 1.0
    if x < 1.0 or x < a:
        return 1.0 - igam(a, x)

    ax = a * math.log(x) - x - math.lgamma(a)
    if ax < -MAXLOG:
        return 0.0
    ax = math.exp(ax)

    y = 1.0 - a
    z = x + y + 1.0
    c = 0.0
    pkm2 = 1.0
    qkm2 = x
    pkm1 = x + 1.0
    qkm1 = z * x
    ans = pkm1 / qkm1
    while True:
        c += 1.0
        y += 1.0
        z += 2.0
        yc = y * c
        pk = pkm1 * z - pkm2 * yc
        qk = qkm1 * z - qkm2 * yc
        if qk != 0:
            r = pk / qk
            t = abs((ans - r) / r)
            ans = r
        else:
            t = 1.0
        pkm2, pkm1 = pkm1, pk
        qkm2, qkm1 = qkm1, qk
        if abs(pk) > BIG:
            pkm2 *= BIGINV
            pkm1 *= BIGINV
            qkm2 *= BIGINV
            qkm1 *= BIGINV
        if t <= MACHEP:
            break
    return ans * ax
