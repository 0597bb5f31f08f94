"""Pure-Python scalar kernels.

Reference implementation of the hot loop evaluated by the optimizers.  The
Cython module ``_kernels`` mirrors every function here with identical
signatures and return conventions; :mod:`nlaqkd._backend` picks one at import.

Conventions shared by both backends:

* all arguments and results are Python floats (``kind`` is an int code);
* physically invalid inputs yield ``nan`` rather than raising, so sweeps can
  pass through infeasible regions;
* entropies are in bits, variances in shot-noise units.
"""

from math import log, log1p, log2, nan, sqrt

GG02 = 0
IDEAL = 1
QS = 2
SPC = 3

TOL_PHYS = 1e-9
# rates smaller than this many ulps of the entropies they are built from are
# indistinguishable from zero and reported as exactly zero
RATE_FLOOR = 64.0 * 2.220446049250313e-16


def g_entropy(x):
    if x <= 0.0:
        return 0.0 if x > -TOL_PHYS else nan
    return (x + 1.0) * log2(x + 1.0) - x * log2(x)


def symplectic_pair(a, b, c):
    """(d1, d2) of the block-form CM, both clamped at 1 within TOL_PHYS."""
    c2 = c * c
    det_ab = a * b - c2
    delta = a * a + b * b - 2.0 * c2
    # delta^2 - 4 I4 factorises as (a-b)^2 ((a+b)^2 - 4c^2)
    disc = (a + b) * (a + b) - 4.0 * c2
    if disc < 0.0:
        if disc < -TOL_PHYS * (a + b) * (a + b):
            return nan, nan
        disc = 0.0
    d1 = sqrt(0.5 * (delta + abs(a - b) * sqrt(disc)))
    if det_ab <= 0.0 or d1 <= 0.0:
        return nan, nan
    d2 = det_ab / d1
    if d2 < 1.0:
        if d2 < 1.0 - TOL_PHYS:
            return nan, nan
        d2 = 1.0
    if d1 < 1.0:
        d1 = 1.0
    return d1, d2


def mutual_information(a, b, c):
    """Heterodyne (Alice) / homodyne (Bob) mutual information of the block-form CM."""
    if b <= 0.0:
        return nan
    x = c * c / (b * (a + 1.0))
    if x >= 1.0:
        return nan
    return -0.5 * log1p(-x) / log(2.0)


def conditional_det_root(a, b, c):
    """sqrt(det) of Alice's CM conditioned on Bob's homodyne outcome."""
    if b <= 0.0:
        return nan
    x = a * (a - c * c / b)
    if x < 1.0:
        if x < 1.0 - TOL_PHYS:
            return nan
        return 1.0
    return sqrt(x)


def holevo_terms(a, b, c):
    """``(chi, scale)`` where ``scale`` sums the magnitudes of the three entropies."""
    d1, d2 = symplectic_pair(a, b, c)
    d3 = conditional_det_root(a, b, c)
    if d1 != d1 or d3 != d3:
        return nan, nan
    g1 = g_entropy(0.5 * (d1 - 1.0))
    g2 = g_entropy(0.5 * (d2 - 1.0))
    g3 = g_entropy(0.5 * (d3 - 1.0))
    return g1 + g2 - g3, g1 + g2 + g3


def holevo(a, b, c):
    return holevo_terms(a, b, c)[0]


def gg02_block(V, T, eps):
    # T (V + chi) written as 1 + T (V - 1 + eps) to stay exact as T -> 0
    return V, 1.0 + T * (V - 1.0 + eps), sqrt(T) * sqrt(V * V - 1.0)


def ideal_params(V, T, eps, g):
    """Equivalent GG02 parameters behind an ideal NLA; ``ok`` is the gain constraint."""
    k = g * g - 1.0
    den = 2.0 - T * k * (V - 1.0 + eps)
    if den <= 0.0:
        return nan, nan, nan, False
    V_id = V + T * k * (V * V - 1.0) / den
    T_id = g * g * T / (1.0 + T * k * (T * eps * k * (eps - 2.0) / 4.0 - eps + 1.0))
    eps_id = eps - 0.5 * T * eps * k * (eps - 2.0)
    return V_id, T_id, eps_id, True


# The post-selected moments below are rational functions of
#   u = eta T (V + eps - 1),  e = eta T eps,  s = eta tau.
# Their numerators are expanded so that the O(1) terms, which cancel
# identically, never appear: accuracy is kept when u and s are ~1e-12.


def qs_block(V, T, eps, eta, tau):
    """Post-selected (a, b, c) and total success probability of quantum scissors."""
    s = eta * tau
    e = eta * T * eps
    u = eta * T * (V + eps - 1.0)
    d = 8.0 * s + u * (4.0 + u) * (1.0 + s)
    if not d > 0.0:
        return nan, nan, nan, nan
    p = 4.0 * d / ((2.0 + u) * (4.0 + u) ** 2)
    n_v = (
        e * (32.0 + u * (8.0 - u * (4.0 + u)) - s * (32.0 + u * (16.0 + u * (4.0 + u))))
        - s * (64.0 + u * (48.0 + u * (24.0 + 6.0 * u)))
        - u * (64.0 + u * (40.0 + 6.0 * u))
    )
    a = -1.0 - (V + 1.0) * n_v / ((2.0 + u) * (4.0 + u) * d)
    b = -1.0 + 2.0 * (8.0 * s + u * (4.0 + u) * (2.0 - (1.0 - eta) * tau)) / d
    c = -4.0 * eta * sqrt(tau * (1.0 - tau)) * (2.0 + u) * sqrt(T) * sqrt(V * V - 1.0) / d
    return a, b, c, p


def spc_block(V, T, eps, eta, tau):
    """Post-selected (a, b, c) and success probability of single-photon catalysis."""
    s = eta * tau
    e = eta * T * eps
    rho = T * (V + eps - 1.0)
    u = eta * rho
    v = u * (1.0 - tau)
    d = 4.0 * s + v * (2.0 + v)
    if not d > 0.0:
        return nan, nan, nan, nan
    p = d / (2.0 + v) ** 2
    n_v = v * (8.0 + v * (6.0 + v)) + s * (8.0 - 4.0 * v) - e * (1.0 - tau) * (4.0 + 2.0 * v - 8.0 * s)
    n_w = (
        -16.0 * s
        + rho * v * (4.0 * eta - tau * (8.0 + v * (6.0 + v)))
        + u * (32.0 - tau * (32.0 + 8.0 * tau))
        + v * (24.0 * tau - 48.0 - 8.0 * s + v * (12.0 * tau - 20.0 + v * (2.0 * tau - 4.0)))
    )
    n_z = v * (8.0 - 4.0 * eta + v * (6.0 + v)) - 8.0 * eta * (1.0 - 2.0 * tau)
    k = (2.0 + v) * d
    a = -1.0 + (V + 1.0) * n_v / k
    b = -1.0 - n_w / k
    c = -sqrt(tau * T) * sqrt(V * V - 1.0) * n_z / k
    return a, b, c, p


def tau_qs(g):
    return 1.0 / (1.0 + g * g)


def tau_spc(g):
    # rationalised to avoid cancellation at large g
    return 2.0 / (4.0 + g * g + g * sqrt(8.0 + g * g))


def kgr(kind, V, T, eps, beta, eta, g):
    """Key rate at one point: ``(I_AB, chi_BE, p_success, K, feasible)``."""
    if kind == GG02:
        a, b, c = gg02_block(V, T, eps)
        p = 1.0
    elif kind == IDEAL:
        V_id, T_id, eps_id, ok = ideal_params(V, T, eps, g)
        if not ok:
            return nan, nan, nan, nan, False
        a, b, c = gg02_block(V_id, T_id, eps_id)
        p = 1.0 / (g * g)
    elif kind == QS:
        a, b, c, p = qs_block(V, T, eps, eta, tau_qs(g))
    elif kind == SPC:
        a, b, c, p = spc_block(V, T, eps, eta, tau_spc(g))
    else:
        return nan, nan, nan, nan, False
    if not (p > 0.0 and b > 0.0):
        return nan, nan, nan, nan, False
    mi = mutual_information(a, b, c)
    chi, scale = holevo_terms(a, b, c)
    if mi != mi or chi != chi:
        return nan, nan, nan, nan, False
    k = p * (beta * mi - chi)
    if abs(k) <= RATE_FLOOR * p * (beta * mi + scale):
        k = 0.0
    return mi, chi, p, k, True


def kgr_value(kind, V, T, eps, beta, eta, g):
    """Key rate alone, ``-inf`` where infeasible (objective for the optimizers)."""
    k = kgr(kind, V, T, eps, beta, eta, g)[3]
    return k if k == k else -INF


INF = float("inf")
_INVPHI = (sqrt(5.0) - 1.0) / 2.0


def _golden(kind, T, eps, beta, eta, g, lo, hi, tol):
    """Golden-section maximisation on [lo, hi]; returns (K, V, evals) of the best point seen."""
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1 = kgr_value(kind, x1, T, eps, beta, eta, g)
    f2 = kgr_value(kind, x2, T, eps, beta, eta, g)
    evals = 2
    best_k, best_v = (f1, x1) if f1 >= f2 else (f2, x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = kgr_value(kind, x1, T, eps, beta, eta, g)
            fx, xx = f1, x1
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = kgr_value(kind, x2, T, eps, beta, eta, g)
            fx, xx = f2, x2
        evals += 1
        if fx > best_k or (fx == best_k and xx < best_v):
            best_k, best_v = fx, xx
    return best_k, best_v, evals


def maximize_v(kind, T, eps, beta, eta, g, vmin, vmax, n_grid, n_brackets, tol):
    """Grid-then-golden maximisation of the key rate over ``V`` in ``[vmin, vmax]``.

    Returns ``(K, V, evals)``; ``K`` is ``-inf`` and ``V`` is ``nan`` when
    every grid point is infeasible.
    """
    ratio = vmax / vmin
    vs = [vmin * ratio ** (i / (n_grid - 1)) for i in range(n_grid)]
    ks = [kgr_value(kind, v, T, eps, beta, eta, g) for v in vs]
    evals = n_grid
    best_k, best_v = -INF, nan
    peaks = []
    for i in range(n_grid):
        k = ks[i]
        if k == -INF:
            continue
        if k > best_k:
            best_k, best_v = k, vs[i]
        left = ks[i - 1] if i > 0 else -INF
        right = ks[i + 1] if i < n_grid - 1 else -INF
        if k > left and k >= right:
            peaks.append((-k, i))
    if best_k == -INF:
        return -INF, nan, evals
    peaks.sort()
    for _, i in peaks[:n_brackets]:
        lo = vs[i - 1] if i > 0 else vs[0]
        hi = vs[i + 1] if i < n_grid - 1 else vs[n_grid - 1]
        k, v, n = _golden(kind, T, eps, beta, eta, g, lo, hi, tol)
        evals += n
        if k > best_k or (k == best_k and v < best_v):
            best_k, best_v = k, v
    return best_k, best_v, evals
