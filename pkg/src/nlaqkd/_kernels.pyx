# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scalar kernels.

Line-for-line mirror of :mod:`nlaqkd._kernels_py`; the two must agree to
rounding (enforced by ``tests/test_backends.py``).
"""

from libc.math cimport log, log1p, log2, sqrt, fabs, pow, NAN, INFINITY

GG02 = 0
IDEAL = 1
QS = 2
SPC = 3

TOL_PHYS = 1e-9
RATE_FLOOR = 64.0 * 2.220446049250313e-16
INF = INFINITY

cdef double _TOL = 1e-9
cdef double _FLOOR = 64.0 * 2.220446049250313e-16
cdef double _INVPHI = 0.6180339887498949


cdef inline double _g(double x) nogil:
    if x <= 0.0:
        return 0.0 if x > -_TOL else NAN
    return (x + 1.0) * log2(x + 1.0) - x * log2(x)


cdef inline int _symplectic(double a, double b, double c, double* d1, double* d2) nogil:
    cdef double c2 = c * c
    cdef double det_ab = a * b - c2
    cdef double delta = a * a + b * b - 2.0 * c2
    cdef double disc = (a + b) * (a + b) - 4.0 * c2
    if disc < 0.0:
        if disc < -_TOL * (a + b) * (a + b):
            return 0
        disc = 0.0
    d1[0] = sqrt(0.5 * (delta + fabs(a - b) * sqrt(disc)))
    if det_ab <= 0.0 or d1[0] <= 0.0:
        return 0
    d2[0] = det_ab / d1[0]
    if d2[0] < 1.0:
        if d2[0] < 1.0 - _TOL:
            return 0
        d2[0] = 1.0
    if d1[0] < 1.0:
        d1[0] = 1.0
    return 1


cdef inline double _mutual(double a, double b, double c) nogil:
    if b <= 0.0:
        return NAN
    cdef double x = c * c / (b * (a + 1.0))
    if x >= 1.0:
        return NAN
    return -0.5 * log1p(-x) / log(2.0)


cdef inline double _cond_root(double a, double b, double c) nogil:
    if b <= 0.0:
        return NAN
    cdef double x = a * (a - c * c / b)
    if x < 1.0:
        if x < 1.0 - _TOL:
            return NAN
        return 1.0
    return sqrt(x)


cdef inline double _holevo_terms(double a, double b, double c, double* scale) nogil:
    cdef double d1, d2
    if not _symplectic(a, b, c, &d1, &d2):
        return NAN
    cdef double d3 = _cond_root(a, b, c)
    if d3 != d3:
        return NAN
    cdef double g1 = _g(0.5 * (d1 - 1.0))
    cdef double g2 = _g(0.5 * (d2 - 1.0))
    cdef double g3 = _g(0.5 * (d3 - 1.0))
    scale[0] = g1 + g2 + g3
    return g1 + g2 - g3


cdef inline double _holevo(double a, double b, double c) nogil:
    cdef double scale
    return _holevo_terms(a, b, c, &scale)


cdef inline void _gg02(double V, double T, double eps, double* out) nogil:
    out[0] = V
    out[1] = 1.0 + T * (V - 1.0 + eps)
    out[2] = sqrt(T) * sqrt(V * V - 1.0)


cdef inline int _ideal(double V, double T, double eps, double g, double* out) nogil:
    cdef double k = g * g - 1.0
    cdef double den = 2.0 - T * k * (V - 1.0 + eps)
    if den <= 0.0:
        return 0
    out[0] = V + T * k * (V * V - 1.0) / den
    out[1] = g * g * T / (1.0 + T * k * (T * eps * k * (eps - 2.0) / 4.0 - eps + 1.0))
    out[2] = eps - 0.5 * T * eps * k * (eps - 2.0)
    return 1


# numerators expanded so the identically cancelling O(1) terms never appear
cdef inline void _qs(double V, double T, double eps, double eta, double tau, double* out) nogil:
    cdef double s = eta * tau
    cdef double e = eta * T * eps
    cdef double u = eta * T * (V + eps - 1.0)
    cdef double d = 8.0 * s + u * (4.0 + u) * (1.0 + s)
    if not d > 0.0:
        out[0] = out[1] = out[2] = out[3] = NAN
        return
    cdef double n_v = (
        e * (32.0 + u * (8.0 - u * (4.0 + u)) - s * (32.0 + u * (16.0 + u * (4.0 + u))))
        - s * (64.0 + u * (48.0 + u * (24.0 + 6.0 * u)))
        - u * (64.0 + u * (40.0 + 6.0 * u))
    )
    out[0] = -1.0 - (V + 1.0) * n_v / ((2.0 + u) * (4.0 + u) * d)
    out[1] = -1.0 + 2.0 * (8.0 * s + u * (4.0 + u) * (2.0 - (1.0 - eta) * tau)) / d
    out[2] = -4.0 * eta * sqrt(tau * (1.0 - tau)) * (2.0 + u) * sqrt(T) * sqrt(V * V - 1.0) / d
    out[3] = 4.0 * d / ((2.0 + u) * (4.0 + u) * (4.0 + u))


cdef inline void _spc(double V, double T, double eps, double eta, double tau, double* out) nogil:
    cdef double s = eta * tau
    cdef double e = eta * T * eps
    cdef double rho = T * (V + eps - 1.0)
    cdef double u = eta * rho
    cdef double v = u * (1.0 - tau)
    cdef double d = 4.0 * s + v * (2.0 + v)
    if not d > 0.0:
        out[0] = out[1] = out[2] = out[3] = NAN
        return
    cdef double n_v = v * (8.0 + v * (6.0 + v)) + s * (8.0 - 4.0 * v) - e * (1.0 - tau) * (4.0 + 2.0 * v - 8.0 * s)
    cdef double n_w = (
        -16.0 * s
        + rho * v * (4.0 * eta - tau * (8.0 + v * (6.0 + v)))
        + u * (32.0 - tau * (32.0 + 8.0 * tau))
        + v * (24.0 * tau - 48.0 - 8.0 * s + v * (12.0 * tau - 20.0 + v * (2.0 * tau - 4.0)))
    )
    cdef double n_z = v * (8.0 - 4.0 * eta + v * (6.0 + v)) - 8.0 * eta * (1.0 - 2.0 * tau)
    cdef double k = (2.0 + v) * d
    out[0] = -1.0 + (V + 1.0) * n_v / k
    out[1] = -1.0 - n_w / k
    out[2] = -sqrt(tau * T) * sqrt(V * V - 1.0) * n_z / k
    out[3] = d / ((2.0 + v) * (2.0 + v))


cdef inline double _tau_qs(double g) nogil:
    return 1.0 / (1.0 + g * g)


cdef inline double _tau_spc(double g) nogil:
    # rationalised to avoid cancellation at large g
    return 2.0 / (4.0 + g * g + g * sqrt(8.0 + g * g))


cdef int _kgr(int kind, double V, double T, double eps, double beta, double eta, double g, double* res) nogil:
    """res = (I, chi, p, K); returns feasibility."""
    cdef double buf[4]
    cdef double p
    if kind == 0:
        _gg02(V, T, eps, buf)
        p = 1.0
    elif kind == 1:
        if not _ideal(V, T, eps, g, buf):
            return 0
        _gg02(buf[0], buf[1], buf[2], buf)
        p = 1.0 / (g * g)
    elif kind == 2:
        _qs(V, T, eps, eta, _tau_qs(g), buf)
        p = buf[3]
    elif kind == 3:
        _spc(V, T, eps, eta, _tau_spc(g), buf)
        p = buf[3]
    else:
        return 0
    if not (p > 0.0 and buf[1] > 0.0):
        return 0
    cdef double mi = _mutual(buf[0], buf[1], buf[2])
    cdef double scale
    cdef double chi = _holevo_terms(buf[0], buf[1], buf[2], &scale)
    if mi != mi or chi != chi:
        return 0
    res[0] = mi
    res[1] = chi
    res[2] = p
    res[3] = p * (beta * mi - chi)
    # below the rounding error of the entropies the sign is meaningless
    if fabs(res[3]) <= _FLOOR * p * (beta * mi + scale):
        res[3] = 0.0
    return 1


cdef inline double _kval(int kind, double V, double T, double eps, double beta, double eta, double g) nogil:
    cdef double res[4]
    if _kgr(kind, V, T, eps, beta, eta, g, res):
        return res[3]
    return -INFINITY


cdef void _golden(int kind, double T, double eps, double beta, double eta, double g,
                  double lo, double hi, double tol, double* best_k, double* best_v, long* evals) nogil:
    cdef double x1 = hi - _INVPHI * (hi - lo)
    cdef double x2 = lo + _INVPHI * (hi - lo)
    cdef double f1 = _kval(kind, x1, T, eps, beta, eta, g)
    cdef double f2 = _kval(kind, x2, T, eps, beta, eta, g)
    cdef double fx, xx
    evals[0] += 2
    if f1 >= f2:
        best_k[0] = f1
        best_v[0] = x1
    else:
        best_k[0] = f2
        best_v[0] = x2
    while hi - lo > tol:
        if f1 >= f2:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = _kval(kind, x1, T, eps, beta, eta, g)
            fx = f1
            xx = x1
        else:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = _kval(kind, x2, T, eps, beta, eta, g)
            fx = f2
            xx = x2
        evals[0] += 1
        if fx > best_k[0] or (fx == best_k[0] and xx < best_v[0]):
            best_k[0] = fx
            best_v[0] = xx


# ---------------------------------------------------------------------------
# Python-visible wrappers, same signatures as the pure-Python module


def g_entropy(double x):
    return _g(x)


def symplectic_pair(double a, double b, double c):
    cdef double d1, d2
    if not _symplectic(a, b, c, &d1, &d2):
        return NAN, NAN
    return d1, d2


def mutual_information(double a, double b, double c):
    return _mutual(a, b, c)


def conditional_det_root(double a, double b, double c):
    return _cond_root(a, b, c)


def holevo_terms(double a, double b, double c):
    cdef double scale = NAN
    cdef double chi = _holevo_terms(a, b, c, &scale)
    if chi != chi:
        return NAN, NAN
    return chi, scale


def holevo(double a, double b, double c):
    return _holevo(a, b, c)


def gg02_block(double V, double T, double eps):
    cdef double out[3]
    _gg02(V, T, eps, out)
    return out[0], out[1], out[2]


def ideal_params(double V, double T, double eps, double g):
    cdef double out[3]
    if not _ideal(V, T, eps, g, out):
        return NAN, NAN, NAN, False
    return out[0], out[1], out[2], True


def qs_block(double V, double T, double eps, double eta, double tau):
    cdef double out[4]
    _qs(V, T, eps, eta, tau, out)
    return out[0], out[1], out[2], out[3]


def spc_block(double V, double T, double eps, double eta, double tau):
    cdef double out[4]
    _spc(V, T, eps, eta, tau, out)
    return out[0], out[1], out[2], out[3]


def tau_qs(double g):
    return _tau_qs(g)


def tau_spc(double g):
    return _tau_spc(g)


def kgr(int kind, double V, double T, double eps, double beta, double eta, double g):
    cdef double res[4]
    if not _kgr(kind, V, T, eps, beta, eta, g, res):
        return NAN, NAN, NAN, NAN, False
    return res[0], res[1], res[2], res[3], True


def kgr_value(int kind, double V, double T, double eps, double beta, double eta, double g):
    return _kval(kind, V, T, eps, beta, eta, g)


def maximize_v(int kind, double T, double eps, double beta, double eta, double g,
               double vmin, double vmax, int n_grid, int n_brackets, double tol):
    cdef double ratio = vmax / vmin
    cdef double[::1] vs = _empty(n_grid)
    cdef double[::1] ks = _empty(n_grid)
    cdef int i, j, npk = 0
    cdef long evals = n_grid
    cdef double best_k = -INFINITY, best_v = NAN, k, v, left, right, lo, hi
    for i in range(n_grid):
        vs[i] = vmin * pow(ratio, i / <double>(n_grid - 1))
        ks[i] = _kval(kind, vs[i], T, eps, beta, eta, g)
    peaks = []
    for i in range(n_grid):
        k = ks[i]
        if k == -INFINITY:
            continue
        if k > best_k:
            best_k = k
            best_v = vs[i]
        left = ks[i - 1] if i > 0 else -INFINITY
        right = ks[i + 1] if i < n_grid - 1 else -INFINITY
        if k > left and k >= right:
            peaks.append((-k, i))
    if best_k == -INFINITY:
        return -INFINITY, NAN, evals
    peaks.sort()
    for _, j in peaks[:n_brackets]:
        lo = vs[j - 1] if j > 0 else vs[0]
        hi = vs[j + 1] if j < n_grid - 1 else vs[n_grid - 1]
        _golden(kind, T, eps, beta, eta, g, lo, hi, tol, &k, &v, &evals)
        if k > best_k or (k == best_k and v < best_v):
            best_k = k
            best_v = v
    return best_k, best_v, evals


cdef double[::1] _empty(int n):
    from array import array
    return array("d", [0.0]) * n
