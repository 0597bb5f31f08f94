"""Thermal-loss fibre channel."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .gaussian import SymmetricBlockCM

__all__ = ["ChannelParams", "DEFAULT_KAPPA", "channel_from_distance", "channel_from_transmissivity", "gg02_cm"]

DEFAULT_KAPPA = 0.2  # dB/km, standard telecom fibre at 1550 nm


@dataclass(frozen=True)
class ChannelParams:
    """Thermal-loss channel seen by Bob's mode.

    Attributes
    ----------
    kappa : float
        Loss coefficient in dB/km (``nan`` when built from ``T`` directly).
    distance : float
        Fibre length in km.
    T : float
        Transmissivity ``10 ** (-kappa * distance / 10)``.
    epsilon : float
        Excess noise in shot-noise units.
    """

    kappa: float
    distance: float
    T: float
    epsilon: float

    @property
    def chi(self) -> float:
        """Added noise ``(1 - T)/T + epsilon``."""
        return (1.0 - self.T) / self.T + self.epsilon

    @property
    def n_eps(self) -> float:
        """Mean photon number of the environment bath.

        Undefined for a lossless channel with excess noise; that case raises.
        """
        if self.T >= 1.0:
            if self.epsilon == 0.0:
                return 0.0
            raise ValueError("thermal photon number diverges for T = 1 with epsilon > 0")
        return self.T * self.epsilon / (2.0 * (1.0 - self.T))


def channel_from_distance(kappa: float, distance: float, epsilon: float) -> ChannelParams:
    if not kappa > 0.0:
        raise ValueError(f"loss coefficient must be positive, got {kappa}")
    if distance < 0.0:
        raise ValueError(f"distance must be non-negative, got {distance}")
    if epsilon < 0.0:
        raise ValueError(f"excess noise must be non-negative, got {epsilon}")
    T = 10.0 ** (-kappa * distance / 10.0)
    return ChannelParams(kappa, distance, T, epsilon)


def channel_from_transmissivity(T: float, epsilon: float) -> ChannelParams:
    """Channel specified by its transmissivity; ``distance`` uses the default fibre."""
    if not 0.0 < T <= 1.0:
        raise ValueError(f"transmissivity must lie in (0, 1], got {T}")
    if epsilon < 0.0:
        raise ValueError(f"excess noise must be non-negative, got {epsilon}")
    distance = -10.0 * math.log10(T) / DEFAULT_KAPPA
    return ChannelParams(DEFAULT_KAPPA, distance, T, epsilon)


def gg02_cm(V: float, channel: ChannelParams) -> SymmetricBlockCM:
    """Alice-Bob CM after the TMSV half has crossed ``channel``."""
    if V < 1.0:
        raise ValueError(f"modulation variance must satisfy V >= 1, got {V}")
    T = channel.T
    return SymmetricBlockCM(V, T * (V + channel.chi), math.sqrt(T) * math.sqrt(V * V - 1.0))
