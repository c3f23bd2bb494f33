"""Slow, literal reference implementations used as test oracles.

Everything here is written as explicit loops over the defining sums and
shares no code with the package.
"""

import math


def autocov_loop(c, h):
    n = len(c)
    s = 0.0
    for t in range(h, n):
        s += c[t] * c[t - h]
    return s / n


def autocorr_loop(x, centre, max_lag):
    """rho(1..max_lag) of x - centre, with centre a scalar or a sequence."""
    n = len(x)
    if isinstance(centre, (int, float)):
        centre = [centre] * n
    c = [x[t] - centre[t] for t in range(n)]
    g0 = autocov_loop(c, 0)
    return [autocov_loop(c, h) / g0 for h in range(1, max_lag + 1)]


def boot_autocov_loop(c, xi, h):
    n = len(c)
    s = 0.0
    for t in range(h, n):
        s += xi[t] * c[t] * xi[t - h] * c[t - h]
    return s / n


def gauss(u):
    return math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def nw_loop(y, b, leave_out=False, normalize=True):
    """Nadaraya-Watson fit at every t = 1..n with weights K((t-j)/(nb))/(nb)."""
    n = len(y)
    h = n * b
    out = []
    for t in range(1, n + 1):
        num = 0.0
        den = 0.0
        for j in range(1, n + 1):
            if leave_out and j == t:
                continue
            w = gauss((t - j) / h) / h
            num += w * y[j - 1]
            den += w
        out.append(num / den if normalize else num)
    return out


def cv_loop(y, b):
    fit = nw_loop(y, b, leave_out=True)
    return sum((f - v) ** 2 for f, v in zip(fit, y))
