"""Maximisation of the key rate and the derived robustness figures.

The inner problem (best ``V`` at fixed gain) runs entirely inside the compiled
kernel: a log-spaced grid locates local maxima and golden-section search
refines the best few.  The outer problem over the gain repeats the same
strategy in ``log g`` on top of it.  Infeasible points score ``-inf`` so the
searches step over them.

Excess-noise tolerance and maximum distance are found by bisection on the
sign of the optimized rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

from ._backend import kernels
from .channel import ChannelParams, channel_from_distance
from .protocols import ProtocolKind, ProtocolSpec, gain_bound_ideal, spc_gain

__all__ = [
    "BracketError",
    "DEFAULT_V_BOX",
    "DistanceResult",
    "DistanceStatus",
    "MtenResult",
    "OptimizationResult",
    "V_MAX_ALLOWED",
    "V_MIN_ALLOWED",
    "default_gain_box",
    "max_distance",
    "mten",
    "optimize_v",
    "optimize_vg",
]

DEFAULT_V_BOX = (1.001, 100.0)
V_MIN_ALLOWED = 1.001
V_MAX_ALLOWED = 1e3
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class BracketError(ValueError):
    """The requested interval does not bracket a sign change of the rate."""


@dataclass(frozen=True)
class OptimizationResult:
    """Best key rate found and where it sits.

    ``kgr`` and ``v_opt`` are ``nan`` when every point searched was
    infeasible.  ``g_opt`` is ``None`` for GG02.
    """

    kgr: float
    v_opt: float
    g_opt: float | None
    evaluations: int
    converged: bool
    at_boundary: bool

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.kgr)


@dataclass(frozen=True)
class MtenResult:
    """Largest excess noise keeping the optimized rate positive.

    ``eps_max`` is the last noise level found positive and ``bracket`` the
    width of the final bisection interval above it.  ``eps_max`` is ``None``
    when the rate is not positive even without excess noise.
    """

    eps_max: float | None
    bracket: float
    evaluations: int

    @property
    def tolerant(self) -> bool:
        return self.eps_max is not None


class DistanceStatus(enum.Enum):
    FINITE = "finite"
    UNBOUNDED = "unbounded"  # still positive at the far end of the search box
    NONE = "none"  # never positive inside the search box


@dataclass(frozen=True)
class DistanceResult:
    status: DistanceStatus
    distance: float | None
    bracket: tuple[float, float] | None


def _fixed_gain(spec: ProtocolSpec) -> float:
    if spec.kind is ProtocolKind.GG02:
        return 1.0
    if spec.gain is None:
        raise ValueError(f"{spec.kind.label} needs a gain; use optimize_vg to choose one")
    return float(spec.gain)


def _check_v_box(v_box: tuple[float, float]) -> tuple[float, float]:
    lo, hi = float(v_box[0]), float(v_box[1])
    if not (V_MIN_ALLOWED <= lo < hi <= V_MAX_ALLOWED):
        raise ValueError(f"modulation box must satisfy {V_MIN_ALLOWED} <= lo < hi <= {V_MAX_ALLOWED}, got {v_box}")
    return lo, hi


def _near(x: float, lo: float, hi: float, rel: float) -> bool:
    return abs(x - lo) <= rel * lo or abs(hi - x) <= rel * hi


def optimize_v(
    spec: ProtocolSpec,
    channel: ChannelParams,
    v_box: tuple[float, float] = DEFAULT_V_BOX,
    *,
    n_grid: int = 64,
    n_brackets: int = 3,
    tol: float = 1e-6,
) -> OptimizationResult:
    """Maximise the key rate over ``V`` at the gain fixed in ``spec``."""
    lo, hi = _check_v_box(v_box)
    if n_grid < 3:
        raise ValueError("n_grid must be at least 3")
    g = _fixed_gain(spec)
    K, V, evals = kernels.maximize_v(
        int(spec.kind), channel.T, channel.epsilon, spec.beta, spec.eta, g, lo, hi, int(n_grid), int(n_brackets), tol
    )
    g_out = None if spec.kind is ProtocolKind.GG02 else g
    if not math.isfinite(K):
        return OptimizationResult(math.nan, math.nan, g_out, evals, False, False)
    return OptimizationResult(K, V, g_out, evals, True, _near(V, lo, hi, 10.0 * tol))


def default_gain_box(spec: ProtocolSpec, channel: ChannelParams, v_box: tuple[float, float] = DEFAULT_V_BOX) -> tuple[float, float]:
    """Gain interval searched when ``optimize_vg`` is not given one.

    The useful gains grow like ``1/sqrt(T)``, so the upper end follows the
    channel: ideal NLA up to its feasibility bound at the smallest ``V``;
    QS and SPC down to a transmissivity ``min(1e-4, T/1e3)``.
    """
    kind = spec.kind
    if kind is ProtocolKind.GG02:
        raise ValueError("GG02 has no gain")
    if kind is ProtocolKind.IDEAL:
        hi = gain_bound_ideal(v_box[0], channel)
        if not math.isfinite(hi):
            hi = 1e4
        return 1.0 + 1e-6, hi
    tau_min = min(1e-4, channel.T * 1e-3)
    if kind is ProtocolKind.QS:
        return 1.0, math.sqrt(1.0 / tau_min - 1.0)
    return spc_gain(0.5 - 1e-4), spc_gain(tau_min)


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float, int]:
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    evals = 2
    best = (f1, x1) if f1 >= f2 else (f2, x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
            cand = (f1, x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
            cand = (f2, x2)
        evals += 1
        if cand[0] > best[0]:
            best = cand
    return best[0], best[1], evals


def optimize_vg(
    spec: ProtocolSpec,
    channel: ChannelParams,
    v_box: tuple[float, float] = DEFAULT_V_BOX,
    g_box: tuple[float, float] | None = None,
    *,
    n_grid_v: int = 64,
    n_grid_g: int = 48,
    n_brackets: int = 3,
    tol_v: float = 1e-6,
    tol_log_g: float = 1e-6,
) -> OptimizationResult:
    """Maximise the key rate jointly over ``V`` and the gain.

    GG02 has no gain and falls through to :func:`optimize_v`.
    """
    if spec.kind is ProtocolKind.GG02:
        return optimize_v(spec, channel, v_box, n_grid=n_grid_v, n_brackets=n_brackets, tol=tol_v)
    vlo, vhi = _check_v_box(v_box)
    g_lo, g_hi = default_gain_box(spec, channel, v_box) if g_box is None else (float(g_box[0]), float(g_box[1]))
    if spec.kind is ProtocolKind.IDEAL and g_lo < 1.0:
        raise ValueError("ideal NLA gains start at 1")
    if spec.kind is ProtocolKind.QS and g_lo < 1.0:
        raise ValueError("quantum-scissors gains below 1 need a transmissivity above 1/2")
    if not 0.0 < g_lo < g_hi:
        raise ValueError(f"gain box must satisfy 0 < lo < hi, got {(g_lo, g_hi)}")

    kind = int(spec.kind)
    T, eps = channel.T, channel.epsilon
    evals = 0
    best_v = {}

    def inner(log_g: float) -> float:
        nonlocal evals
        K, V, n = kernels.maximize_v(
            kind, T, eps, spec.beta, spec.eta, math.exp(log_g), vlo, vhi, n_grid_v, n_brackets, tol_v
        )
        evals += n
        best_v[log_g] = V
        return K

    a, b = math.log(g_lo), math.log(g_hi)
    xs = [a + (b - a) * i / (n_grid_g - 1) for i in range(n_grid_g)]
    ks = [inner(x) for x in xs]
    best_k, best_x = -math.inf, math.nan
    peaks = []
    for i, k in enumerate(ks):
        if k == -math.inf:
            continue
        if k > best_k:
            best_k, best_x = k, xs[i]
        left = ks[i - 1] if i > 0 else -math.inf
        right = ks[i + 1] if i < n_grid_g - 1 else -math.inf
        if k > left and k >= right:
            peaks.append((-k, i))
    if best_k == -math.inf:
        return OptimizationResult(math.nan, math.nan, None, evals, False, False)
    for _, i in sorted(peaks)[:n_brackets]:
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, n_grid_g - 1)]
        k, x, _ = _golden_max(inner, lo, hi, tol_log_g)
        if k > best_k:
            best_k, best_x = k, x
    V = best_v[best_x]
    at_boundary = _near(V, vlo, vhi, 10.0 * tol_v) or abs(best_x - a) <= 10.0 * tol_log_g or abs(b - best_x) <= 10.0 * tol_log_g
    return OptimizationResult(best_k, V, math.exp(best_x), evals, True, at_boundary)


def _best_rate(spec: ProtocolSpec, channel: ChannelParams, v_box, g_box) -> tuple[float, int]:
    if spec.gain is None and spec.kind is not ProtocolKind.GG02:
        res = optimize_vg(spec, channel, v_box, g_box)
    else:
        res = optimize_v(spec, channel, v_box)
    return (res.kgr if res.feasible else -math.inf), res.evaluations


def mten(
    spec: ProtocolSpec,
    kappa: float,
    distance: float,
    eps_box: tuple[float, float] = (0.0, 0.5),
    *,
    width: float = 1e-4,
    v_box: tuple[float, float] = DEFAULT_V_BOX,
    g_box: tuple[float, float] | None = None,
) -> MtenResult:
    """Maximum tolerable excess noise at ``distance``.

    The gain is optimized when ``spec.gain`` is ``None``, otherwise held.
    Raises :class:`BracketError` if the rate is still positive at the top of
    ``eps_box``.
    """
    lo, hi = float(eps_box[0]), float(eps_box[1])
    if not 0.0 <= lo < hi:
        raise ValueError(f"excess-noise box must satisfy 0 <= lo < hi, got {eps_box}")
    evals = 0

    def positive(eps: float) -> bool:
        nonlocal evals
        k, n = _best_rate(spec, channel_from_distance(kappa, distance, eps), v_box, g_box)
        evals += n
        return k > 0.0

    if not positive(lo):
        return MtenResult(None, hi - lo, evals)
    if positive(hi):
        raise BracketError(f"rate still positive at excess noise {hi}; widen eps_box")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return MtenResult(lo, hi - lo, evals)


def max_distance(
    spec: ProtocolSpec,
    kappa: float,
    epsilon: float,
    d_box: tuple[float, float] = (0.0, 1000.0),
    *,
    step: float = 10.0,
    tol: float = 0.1,
    v_box: tuple[float, float] = DEFAULT_V_BOX,
    g_box: tuple[float, float] | None = None,
) -> DistanceResult:
    """Largest distance with a positive optimized rate.

    A coarse scan with spacing ``step`` finds the last positive point, which
    is then refined by bisection to ``tol`` km.
    """
    d_lo, d_hi = float(d_box[0]), float(d_box[1])
    if not 0.0 <= d_lo < d_hi:
        raise ValueError(f"distance box must satisfy 0 <= lo < hi, got {d_box}")
    if not 0.0 < tol <= step:
        raise ValueError("need 0 < tol <= step")

    def positive(d: float) -> bool:
        return _best_rate(spec, channel_from_distance(kappa, d, epsilon), v_box, g_box)[0] > 0.0

    n = max(int(math.ceil((d_hi - d_lo) / step)), 1)
    grid = [min(d_lo + i * step, d_hi) for i in range(n + 1)]
    signs = [positive(d) for d in grid]
    if not any(signs):
        return DistanceResult(DistanceStatus.NONE, None, None)
    last = max(i for i, s in enumerate(signs) if s)
    if last == n:
        return DistanceResult(DistanceStatus.UNBOUNDED, None, (d_hi, d_hi))
    lo, hi = grid[last], grid[last + 1]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return DistanceResult(DistanceStatus.FINITE, lo, (lo, hi))
