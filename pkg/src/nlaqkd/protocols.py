"""Key generation rates of GG02 with and without noiseless linear amplification.

Four protocols share one pipeline: build the (possibly post-selected) Alice-Bob
CM, evaluate the heterodyne/homodyne mutual information and Eve's Holevo
bound, and weight ``beta I - chi`` by the success probability.  For the
physical amplifiers the post-selected state is non-Gaussian and the rate is
the Gaussian lower bound computed from its CM.

Infeasible points (violated gain constraint, vanishing success probability,
non-physical CM) are reported through ``KeyRateBreakdown.feasible`` instead of
raising, because optimizers routinely step through them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from ._backend import kernels
from .channel import ChannelParams
from .gaussian import PhysicalityError, SymmetricBlockCM, g_entropy

__all__ = [
    "KeyRateBreakdown",
    "NlaAuxiliaries",
    "ProtocolKind",
    "ProtocolSpec",
    "asymptotic_effective_params",
    "gain_bound_ideal",
    "ideal_nla_map",
    "kgr",
    "kgr_gg02",
    "kgr_ideal",
    "kgr_physical",
    "nla_auxiliaries",
    "plob_bound",
    "plob_bound_asymptotic",
    "qs_cm_and_prob",
    "spc_cm_and_prob",
    "spc_gain",
    "tau_qs",
    "tau_spc",
]


class ProtocolKind(enum.IntEnum):
    GG02 = kernels.GG02
    IDEAL = kernels.IDEAL
    QS = kernels.QS
    SPC = kernels.SPC

    @classmethod
    def parse(cls, name: str) -> "ProtocolKind":
        key = name.strip().lower()
        aliases = {"gg02": cls.GG02, "ideal": cls.IDEAL, "idealnla": cls.IDEAL, "qs": cls.QS, "spc": cls.SPC}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown protocol {name!r}; expected one of gg02, ideal, qs, spc") from None

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class ProtocolSpec:
    """Protocol choice plus the parameters that are not optimized.

    ``gain`` is ignored for GG02 and may be ``None`` when the optimizer is
    expected to choose it.
    """

    kind: ProtocolKind
    beta: float = 0.95
    eta: float = 1.0
    gain: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"reconciliation efficiency must lie in [0, 1], got {self.beta}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"detector efficiency must lie in (0, 1], got {self.eta}")
        if self.gain is not None:
            if self.kind is ProtocolKind.IDEAL and self.gain < 1.0:
                raise ValueError("ideal NLA gain must satisfy g >= 1")
            if self.gain < 0.0:
                raise ValueError("gain must be non-negative")

    def with_gain(self, gain: float | None) -> "ProtocolSpec":
        return ProtocolSpec(self.kind, self.beta, self.eta, gain)

    def with_eta(self, eta: float) -> "ProtocolSpec":
        return ProtocolSpec(self.kind, self.beta, eta, self.gain)


@dataclass(frozen=True)
class KeyRateBreakdown:
    mutual_info: float
    holevo: float
    p_success: float
    kgr: float
    feasible: bool

    @classmethod
    def infeasible(cls) -> "KeyRateBreakdown":
        nan = math.nan
        return cls(nan, nan, nan, nan, False)


@dataclass(frozen=True)
class NlaAuxiliaries:
    w: float
    q: float
    r: float
    tau: float


# ---------------------------------------------------------------------------
# gains and beamsplitters


def tau_qs(g: float) -> float:
    """Quantum-scissors transmissivity giving amplitude gain ``g``."""
    if g < 0.0:
        raise ValueError("gain must be non-negative")
    return kernels.tau_qs(float(g))


def tau_spc(g: float) -> float:
    """Catalysis transmissivity in ``(0, 1/2]`` giving amplitude gain ``g``."""
    if g < 0.0:
        raise ValueError("gain must be non-negative")
    return kernels.tau_spc(float(g))


def spc_gain(tau: float) -> float:
    """Inverse of :func:`tau_spc`: ``(1 - 2 tau) / sqrt(tau)``."""
    return (1.0 - 2.0 * tau) / math.sqrt(tau)


def gain_bound_ideal(V: float, channel: ChannelParams) -> float:
    """Largest gain keeping the ideal-NLA equivalent variance finite."""
    s = channel.T * (V + channel.epsilon - 1.0)
    return math.inf if s <= 0.0 else math.sqrt(1.0 + 2.0 / s)


# ---------------------------------------------------------------------------
# covariance matrices


def ideal_nla_map(V: float, channel: ChannelParams, g: float) -> tuple[float, float, float] | None:
    """Equivalent GG02 ``(V, T, epsilon)`` behind an ideal NLA of gain ``g``.

    Returns ``None`` when the gain constraint is violated.
    """
    if g < 1.0:
        raise ValueError("ideal NLA gain must satisfy g >= 1")
    if V < 1.0:
        raise ValueError("modulation variance must satisfy V >= 1")
    V_id, T_id, eps_id, ok = kernels.ideal_params(float(V), channel.T, channel.epsilon, float(g))
    if not ok:
        return None
    return V_id, T_id, eps_id


def nla_auxiliaries(V: float, channel: ChannelParams, eta: float, tau: float) -> NlaAuxiliaries:
    s = V + channel.epsilon - 1.0
    T = channel.T
    return NlaAuxiliaries(
        w=1.0 + eta * T * s,
        q=1.0 + eta * T * (1.0 - tau) * s,
        r=1.0 + T * s,
        tau=tau,
    )


def _check_physical_inputs(V: float, eta: float) -> None:
    if V < 1.0:
        raise ValueError("modulation variance must satisfy V >= 1")
    if not 0.0 < eta <= 1.0:
        raise ValueError("detector efficiency must lie in (0, 1]")


def _post_selected(block, label: str) -> tuple[SymmetricBlockCM, float]:
    a, b, c, p = block
    if not p > 0.0:
        raise ArithmeticError(f"{label} success probability is not positive ({p})")
    cm = SymmetricBlockCM(a, b, c)
    if not cm.is_physical(1e-6):
        raise PhysicalityError(f"{label} post-selected CM is not physical: {cm}")
    return cm, p


def qs_cm_and_prob(V: float, channel: ChannelParams, g: float, eta: float) -> tuple[SymmetricBlockCM, float]:
    """Post-selected CM and success probability (both click patterns) of QS."""
    _check_physical_inputs(V, eta)
    if g <= 0.0:
        raise ValueError("quantum-scissors gain must be positive")
    block = kernels.qs_block(float(V), channel.T, channel.epsilon, float(eta), tau_qs(g))
    return _post_selected(block, "QS")


def spc_cm_and_prob(V: float, channel: ChannelParams, g: float, eta: float) -> tuple[SymmetricBlockCM, float]:
    """Post-selected CM and success probability of single-photon catalysis."""
    _check_physical_inputs(V, eta)
    block = kernels.spc_block(float(V), channel.T, channel.epsilon, float(eta), tau_spc(g))
    return _post_selected(block, "SPC")


# ---------------------------------------------------------------------------
# key rates


def kgr(spec: ProtocolSpec, V: float, channel: ChannelParams) -> KeyRateBreakdown:
    """Key rate of ``spec`` at modulation ``V``; the gain is taken from ``spec``."""
    if V < 1.0:
        raise ValueError("modulation variance must satisfy V >= 1")
    g = 1.0 if spec.kind is ProtocolKind.GG02 else spec.gain
    if g is None:
        raise ValueError(f"{spec.kind.label} needs an explicit gain")
    I, chi, p, K, ok = kernels.kgr(int(spec.kind), float(V), channel.T, channel.epsilon, spec.beta, spec.eta, float(g))
    if not ok:
        return KeyRateBreakdown.infeasible()
    return KeyRateBreakdown(I, chi, p, K, True)


def kgr_gg02(V: float, channel: ChannelParams, beta: float) -> KeyRateBreakdown:
    return kgr(ProtocolSpec(ProtocolKind.GG02, beta), V, channel)


def kgr_ideal(V: float, channel: ChannelParams, beta: float, g: float) -> KeyRateBreakdown:
    """Ideal NLA with the optimistic success probability ``1/g^2``."""
    return kgr(ProtocolSpec(ProtocolKind.IDEAL, beta, 1.0, g), V, channel)


def kgr_physical(
    kind: ProtocolKind | str,
    V: float,
    channel: ChannelParams,
    beta: float,
    eta: float,
    g: float,
) -> KeyRateBreakdown:
    kind = ProtocolKind.parse(kind) if isinstance(kind, str) else ProtocolKind(kind)
    if kind not in (ProtocolKind.QS, ProtocolKind.SPC):
        raise ValueError("kgr_physical handles QS and SPC only")
    return kgr(ProtocolSpec(kind, beta, eta, g), V, channel)


# ---------------------------------------------------------------------------
# long-distance diagnostics and bounds


def asymptotic_effective_params(V: float, channel: ChannelParams, g: float) -> tuple[float, float, float, float]:
    """Effective ``(T_p, eps_p, dV_p, Z_gg)`` of a physical NLA for ``T << 1``.

    ``Z_gg`` is the correlation a GG02 link with the effective parameters
    would show; the true post-selected correlation never exceeds it.
    """
    if V < 1.0:
        raise ValueError("modulation variance must satisfy V >= 1")
    if g <= 0.0:
        raise ValueError("gain must be positive")
    g2T = g * g * channel.T
    T_p = g2T / (1.0 + g2T * (V + channel.epsilon - 1.0) / 2.0)
    dV = T_p * (V * V - 1.0) / 2.0
    eps_p = channel.epsilon - dV
    V_p = V + dV
    Z_gg = math.sqrt(T_p * (V_p * V_p - 1.0))
    return T_p, eps_p, dV, Z_gg


def plob_bound(channel: ChannelParams) -> float:
    """Repeaterless secret-key capacity bound of the thermal-loss channel."""
    T = channel.T
    if not 0.0 < T < 1.0:
        raise ValueError("the repeaterless bound needs 0 < T < 1")
    n = channel.n_eps
    return -math.log2(1.0 - T) - n * math.log2(T) - g_entropy(n)


def plob_bound_asymptotic(channel: ChannelParams) -> float:
    """Leading small-``T`` behaviour of :func:`plob_bound` (``epsilon > 0``)."""
    eps = channel.epsilon
    if eps <= 0.0:
        return channel.T / math.log(2.0)
    return channel.T * (2.0 - eps * (1.0 - math.log(eps / 2.0))) / (2.0 * math.log(2.0))
