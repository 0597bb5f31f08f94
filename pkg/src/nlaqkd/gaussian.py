"""Two-mode Gaussian states in the symmetric block form.

Every CM handled here has the shape ``[[a I, c Z], [c Z, b I]]`` with ``Z``
the Pauli z matrix, in shot-noise units.  Alice measures heterodyne and Bob
homodyne; the homodyne measurement enters only through its analytic
``z -> 0`` limit, never through a finite regulariser.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

__all__ = [
    "MeasurementKind",
    "PhysicalityError",
    "SymmetricBlockCM",
    "SymplecticSpectrum",
    "TOL_PHYS",
    "conditional_cm_homodyne",
    "g_entropy",
    "holevo_information",
    "mutual_information_homodyne",
    "symplectic_spectrum",
    "von_neumann_entropy",
]

TOL_PHYS = 1e-9


class PhysicalityError(ArithmeticError):
    """A covariance matrix violates the uncertainty principle beyond tolerance."""


class MeasurementKind(enum.Enum):
    HETERODYNE = "heterodyne"
    HOMODYNE = "homodyne"


@dataclass(frozen=True)
class SymmetricBlockCM:
    a: float
    b: float
    c: float

    @property
    def invariants(self) -> tuple[float, float, float, float]:
        """Local symplectic invariants ``(det A, det B, det C, det CM)``."""
        a, b, c = self.a, self.b, self.c
        return a * a, b * b, -c * c, (a * b - c * c) ** 2

    def to_matrix(self) -> np.ndarray:
        a, b, c = self.a, self.b, self.c
        return np.array(
            [[a, 0.0, c, 0.0], [0.0, a, 0.0, -c], [c, 0.0, b, 0.0], [0.0, -c, 0.0, b]]
        )

    def is_physical(self, tol: float = TOL_PHYS) -> bool:
        if self.a < 1.0 - tol or self.b < 1.0 - tol:
            return False
        d1, d2 = kernels.symplectic_pair(self.a, self.b, self.c)
        return d2 == d2 and d2 >= 1.0 - tol


@dataclass(frozen=True)
class SymplecticSpectrum:
    d1: float
    d2: float
    delta: float


def g_entropy(x: float) -> float:
    """Entropy in bits of a thermal state with mean photon number ``x``."""
    if x < 0.0:
        raise ValueError(f"g_entropy needs x >= 0, got {x}")
    return kernels.g_entropy(float(x))


def symplectic_spectrum(cm: SymmetricBlockCM) -> SymplecticSpectrum:
    I1, I2, I3, _ = cm.invariants
    d1, d2 = kernels.symplectic_pair(float(cm.a), float(cm.b), float(cm.c))
    if d1 != d1:
        raise PhysicalityError(f"non-physical covariance matrix {cm}")
    return SymplecticSpectrum(d1, d2, I1 + I2 + 2.0 * I3)


def von_neumann_entropy(cm: SymmetricBlockCM) -> float:
    """Joint entropy ``S_AB`` in bits."""
    spec = symplectic_spectrum(cm)
    return kernels.g_entropy(0.5 * (spec.d1 - 1.0)) + kernels.g_entropy(0.5 * (spec.d2 - 1.0))


def conditional_cm_homodyne(cm: SymmetricBlockCM) -> np.ndarray:
    """Alice's 2x2 CM after Bob homodynes the ``q`` quadrature."""
    if cm.b <= 0.0:
        raise ValueError("Bob's variance must be positive")
    return np.diag([cm.a - cm.c * cm.c / cm.b, cm.a])


def mutual_information_homodyne(cm: SymmetricBlockCM) -> float:
    """Alice-Bob mutual information (bits) for heterodyne/homodyne detection."""
    if cm.b <= 0.0:
        raise ValueError("Bob's variance must be positive")
    value = kernels.mutual_information(float(cm.a), float(cm.b), float(cm.c))
    if value != value:
        raise PhysicalityError(f"conditional variance is not positive for {cm}")
    return value


def holevo_information(cm: SymmetricBlockCM) -> float:
    """Eve's Holevo bound (bits) under reverse reconciliation."""
    symplectic_spectrum(cm)
    value = kernels.holevo(float(cm.a), float(cm.b), float(cm.c))
    if value != value:
        raise PhysicalityError(f"conditional CM is not physical for {cm}")
    return value

