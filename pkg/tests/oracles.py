"""Independent reference computations used to freeze expected values."""

import math

import numpy as np


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2))


def bisect(f, lo: float, hi: float, tol: float = 1e-13) -> float:
    flo = f(lo)
    assert flo * f(hi) <= 0, "root not bracketed"
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


def normal_quantile(p: float) -> float:
    return bisect(lambda x: normal_cdf(x) - p, -40.0, 40.0)


def max_of_iid_normals_quantile(k: int, p: float) -> float:
    """c with P(max of k iid N(0,1) <= c) = p, i.e. Phi(c)^k = p."""
    return bisect(lambda c: normal_cdf(c) ** k - p, -40.0, 40.0)


def brute_asif(loss_table, members):
    """Enumerate actions and members: (first argmin action, min worst-case loss)."""
    best_a, best = 0, None
    for a, row in enumerate(loss_table):
        inside = [float(v) for v, keep in zip(row, members) if keep]
        worst = max(inside) if inside else 0.0
        if best is None or worst < best:
            best_a, best = a, worst
    return best_a, best


def brute_lemma(q_of_r, alpha: float, C: float, n_a: int = 201, n_r: int = 2001) -> float:
    """Dense search of a*q(r-)(1-C) + (1-a)*q(r+)(r+ - C) over a <= alpha, r-, r+ >= C."""
    a_vals = np.linspace(0.0, alpha, n_a)
    r = np.linspace(0.0, 1.0, n_r)
    q = np.array([q_of_r(x) for x in r])
    top = q.max()
    above = r >= C
    tail = np.max(q[above] * (r[above] - C)) if above.any() else 0.0
    return float(np.max(a_vals * top * (1 - C) + (1 - a_vals) * tail))
