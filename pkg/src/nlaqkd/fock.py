"""Brute-force truncated Fock-space simulation of the NLA circuits.

This module is deliberately independent of the Gaussian closed forms in
:mod:`nlaqkd.protocols`: states are propagated in the photon-number basis
and the covariance matrix is read off from quadrature moments.  It is used
as a verification oracle, so clarity wins over speed.

A :class:`DensityOperator` is stored as a weighted ensemble of (unnormalised)
pure tensors, ``rho = sum_k |psi_k><psi_k|``.  Linear optics and diagonal
POVMs act on each member independently, so a multimode state never has to be
materialised as a dense matrix until it has been reduced to a few modes.

Quadratures follow ``q = a + a^dag`` and ``p = i (a^dag - a)`` so that the
vacuum variance equals one (shot-noise units).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import ChannelParams
from .protocols import tau_qs, tau_spc

__all__ = [
    "CutoffError",
    "DensityOperator",
    "GeneralTwoModeCM",
    "apply_beamsplitter",
    "apply_two_mode_unitary",
    "beamsplitter_unitary",
    "fock_state",
    "onoff_povm_element",
    "simulate_qs",
    "simulate_spc",
    "thermal_loss",
    "thermal_state",
    "tmsv_state",
]

TRUNCATION_TOL = 1e-6
ANCILLA_TAIL_TOL = 1e-8
# members dropped by compress() when their weight is this small relative to the trace
_COMPRESS_RTOL = 1e-15


class CutoffError(ValueError):
    """Raised when a Fock cutoff discards more weight than allowed."""


@dataclass
class DensityOperator:
    """Multimode state in a truncated Fock basis.

    Parameters
    ----------
    dims : tuple of int
        Truncation dimension of every mode (photon numbers ``0..dim-1``).
    members : list of ndarray
        Unnormalised pure components, each of shape ``dims``.  The trace of
        the represented operator is the post-selection probability for
        conditioned states and 1 otherwise.
    """

    dims: tuple[int, ...]
    members: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def pure(cls, psi: np.ndarray) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex)
        return cls(tuple(psi.shape), [psi])

    @classmethod
    def from_matrix(cls, rho: np.ndarray, dims: Sequence[int]) -> "DensityOperator":
        dims = tuple(int(d) for d in dims)
        rho = np.asarray(rho, dtype=complex)
        rho = 0.5 * (rho + rho.conj().T)
        evals, evecs = np.linalg.eigh(rho)
        if evals.min(initial=0.0) < -1e-8 * max(evals.max(initial=0.0), 1.0):
            raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {evals.min():.3e})")
        members = []
        cutoff = _COMPRESS_RTOL * max(evals.sum(), 0.0)
        for lam, vec in zip(evals, evecs.T):
            if lam > cutoff:
                members.append((math.sqrt(lam) * vec).reshape(dims))
        return cls(dims, members)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def trace(self) -> float:
        return float(sum(np.vdot(m, m).real for m in self.members))

    def stacked(self) -> np.ndarray:
        """Members as one array of shape ``(n_members, prod(dims))``."""
        n = int(np.prod(self.dims))
        if not self.members:
            return np.zeros((0, n), dtype=complex)
        return np.stack([np.asarray(m, dtype=complex).reshape(n) for m in self.members])

    @property
    def matrix(self) -> np.ndarray:
        """Dense density matrix on the tensor-product basis (row-major mode order)."""
        X = self.stacked()
        return X.T @ X.conj()

    def eigenvalues(self) -> np.ndarray:
        """Spectrum of the density matrix (zeros beyond the ensemble rank omitted)."""
        X = self.stacked()
        if X.shape[0] <= X.shape[1]:
            gram = X.conj() @ X.T
            return np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
        rho = X.T @ X.conj()
        return np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))

    def compress(self) -> "DensityOperator":
        """Re-express the ensemble with at most ``prod(dims)`` orthogonal members."""
        n = int(np.prod(self.dims))
        if len(self.members) <= 1 or len(self.members) <= n // 4:
            return self
        # orthogonal decomposition through the SVD of the stacked amplitudes
        _, sv, vh = np.linalg.svd(self.stacked(), full_matrices=False)
        lam = sv * sv
        cutoff = _COMPRESS_RTOL * lam.sum()
        members = [(s_ * vh[k]).reshape(self.dims) for k, s_ in enumerate(sv) if lam[k] > cutoff]
        return DensityOperator(self.dims, members)

    def pad(self, mode: int, dim: int) -> "DensityOperator":
        """Enlarge the truncation of ``mode`` to ``dim`` with zero amplitudes."""
        if dim <= self.dims[mode]:
            return self
        widths = [(0, 0)] * self.n_modes
        widths[mode] = (0, dim - self.dims[mode])
        dims = list(self.dims)
        dims[mode] = dim
        return DensityOperator(tuple(dims), [np.pad(m, widths) for m in self.members])

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        members = [np.multiply.outer(x, y) for x in self.members for y in other.members]
        return DensityOperator(self.dims + other.dims, members)

    def partial_trace(self, modes: Sequence[int]) -> "DensityOperator":
        """Trace out ``modes``; each retained Fock slice becomes an ensemble member."""
        modes = sorted(set(modes))
        keep = [k for k in range(self.n_modes) if k not in modes]
        dims = tuple(self.dims[k] for k in keep)
        members = []
        for m in self.members:
            moved = np.moveaxis(m, modes, list(range(len(modes))))
            flat = moved.reshape((-1,) + dims)
            for piece in flat:
                if np.any(piece):
                    members.append(piece)
        return DensityOperator(dims, members).compress()

    def apply_diagonal(self, mode: int, diag: np.ndarray) -> "DensityOperator":
        """Conjugate by ``sqrt(Pi)`` with ``Pi`` diagonal in the Fock basis of ``mode``."""
        diag = np.asarray(diag, dtype=float)
        if diag.shape != (self.dims[mode],):
            raise ValueError("diagonal operator does not match the mode dimension")
        shape = [1] * self.n_modes
        shape[mode] = -1
        root = np.sqrt(np.clip(diag, 0.0, None)).reshape(shape)
        return DensityOperator(self.dims, [m * root for m in self.members])

    def expectation(self, op: np.ndarray) -> complex:
        """``Tr[rho op]`` for a dense operator on the full tensor-product space."""
        n = int(np.prod(self.dims))
        total = 0.0 + 0.0j
        for m in self.members:
            v = m.reshape(n)
            total += np.vdot(v, op @ v)
        return total

    def photon_number(self, mode: int) -> float:
        """Unnormalised ``Tr[rho n_mode]``."""
        k = np.arange(self.dims[mode], dtype=float)
        shape = [1] * self.n_modes
        shape[mode] = -1
        k = k.reshape(shape)
        return float(sum((np.abs(m) ** 2 * k).sum() for m in self.members))

    def fock_population(self, index: Sequence[int]) -> float:
        return float(sum(abs(m[tuple(index)]) ** 2 for m in self.members))


# ---------------------------------------------------------------------------
# state preparation


def fock_state(n: int, dim: int | None = None) -> DensityOperator:
    dim = n + 1 if dim is None else dim
    if n >= dim:
        raise ValueError("photon number exceeds the cutoff")
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return DensityOperator.pure(psi)


def _tmsv_lambda(V: float) -> float:
    return math.sqrt((V - 1.0) / (V + 1.0))


def tmsv_truncation_weight(V: float, dim: int) -> float:
    """Probability mass of the TMSV above photon number ``dim - 1``."""
    lam2 = (V - 1.0) / (V + 1.0)
    return lam2**dim


def tmsv_state(V: float, dim: int = 20, *, check: bool = True) -> DensityOperator:
    """Two-mode squeezed vacuum ``sqrt(1-l^2) sum_n l^n |n,n>`` truncated at ``dim``.

    Raises
    ------
    CutoffError
        If the discarded weight exceeds ``TRUNCATION_TOL``.
    """
    if V < 1.0:
        raise ValueError("TMSV variance must satisfy V >= 1")
    if dim < 2:
        raise ValueError("cutoff must be at least 2")
    weight = tmsv_truncation_weight(V, dim)
    if check and weight > TRUNCATION_TOL:
        raise CutoffError(f"TMSV cutoff {dim} discards weight {weight:.3e} at V={V}")
    lam = _tmsv_lambda(V)
    amps = lam ** np.arange(dim, dtype=float)
    amps /= np.linalg.norm(amps)
    psi = np.diag(amps).astype(complex)
    return DensityOperator.pure(psi)


def thermal_dim(n_mean: float, tol: float = ANCILLA_TAIL_TOL) -> int:
    """Smallest cutoff whose thermal tail weight ``(n/(n+1))^dim`` is below ``tol``."""
    if n_mean <= 0.0:
        return 1
    ratio = n_mean / (n_mean + 1.0)
    return max(1, int(math.ceil(math.log(tol) / math.log(ratio))))


def thermal_state(n_mean: float, dim: int | None = None) -> DensityOperator:
    if n_mean < 0.0:
        raise ValueError("thermal photon number must be non-negative")
    dim = thermal_dim(n_mean) if dim is None else dim
    if n_mean == 0.0:
        probs = np.zeros(dim)
        probs[0] = 1.0
    else:
        ratio = n_mean / (n_mean + 1.0)
        probs = ratio ** np.arange(dim) / (n_mean + 1.0)
        tail = ratio**dim
        if tail > TRUNCATION_TOL:
            raise CutoffError(f"thermal cutoff {dim} discards weight {tail:.3e}")
        probs /= probs.sum()
    members = []
    for k, p in enumerate(probs):
        if p > 0.0:
            psi = np.zeros(dim, dtype=complex)
            psi[k] = math.sqrt(p)
            members.append(psi)
    return DensityOperator((dim,), members)


# ---------------------------------------------------------------------------
# linear optics


def beamsplitter_unitary(M: np.ndarray, d_in: tuple[int, int], d_out: int) -> np.ndarray:
    """Fock representation of the passive two-mode map ``b_i = sum_j M_ij a_j``.

    Returns a tensor ``U[k, l, n1, n2] = <k, l| U |n1, n2>`` for inputs below
    ``d_in`` and outputs below ``d_out``.  Built by expanding
    ``U a_j^dag U^dag = sum_i M_ij a_i^dag`` on each input Fock state, which is
    exact because the map conserves total photon number.
    """
    M = np.asarray(M, dtype=float)
    U = np.zeros((d_out, d_out, d_in[0], d_in[1]), dtype=float)
    lf = [math.lgamma(k + 1) for k in range(d_in[0] + d_in[1] + 1)]
    for n1 in range(d_in[0]):
        # coefficients of (M11 x + M21 y)^n1 in powers of x
        p1 = np.array([1.0])
        for _ in range(n1):
            p1 = np.convolve(p1, [M[1, 0], M[0, 0]])
        for n2 in range(d_in[1]):
            p2 = np.array([1.0])
            for _ in range(n2):
                p2 = np.convolve(p2, [M[1, 1], M[0, 1]])
            poly = np.convolve(p1, p2)  # index = power of x
            n = n1 + n2
            if n >= 2 * d_out - 1:
                continue
            norm = -0.5 * (lf[n1] + lf[n2])
            for k, coef in enumerate(poly):
                l = n - k
                if coef == 0.0 or k >= d_out or l >= d_out:
                    continue
                U[k, l, n1, n2] = coef * math.exp(norm + 0.5 * (lf[k] + lf[l]))
    return U


def apply_two_mode_unitary(state: DensityOperator, modes: tuple[int, int], M: np.ndarray) -> DensityOperator:
    """Apply the passive linear map ``M`` on ``modes`` without truncation loss.

    Both modes are enlarged to hold every photon the input can carry, so
    photon number is conserved exactly.
    """
    i, j = modes
    if i == j:
        raise ValueError("beamsplitter needs two distinct modes")
    d_in = (state.dims[i], state.dims[j])
    d_out = d_in[0] + d_in[1] - 1
    U = beamsplitter_unitary(M, d_in, d_out)
    dims = list(state.dims)
    dims[i] = dims[j] = d_out
    members = []
    for m in state.members:
        moved = np.moveaxis(m, (i, j), (-2, -1))
        out = np.einsum("klab,...ab->...kl", U, moved, optimize=True)
        members.append(np.moveaxis(out, (-2, -1), (i, j)))
    return DensityOperator(tuple(dims), members)


def beamsplitter_matrix(tau: float) -> np.ndarray:
    """Mode map ``b_i = sqrt(tau) a_i + sqrt(1-tau) a_j``, ``b_j = -sqrt(1-tau) a_i + sqrt(tau) a_j``."""
    t, r = math.sqrt(tau), math.sqrt(1.0 - tau)
    return np.array([[t, r], [-r, t]])


def apply_beamsplitter(state: DensityOperator, modes: tuple[int, int], tau: float) -> DensityOperator:
    if not 0.0 <= tau <= 1.0:
        raise ValueError("beamsplitter transmissivity must lie in [0, 1]")
    return apply_two_mode_unitary(state, modes, beamsplitter_matrix(tau))


def thermal_loss(
    state: DensityOperator,
    mode: int,
    T: float,
    n_eps: float,
    ancilla_dim: int | None = None,
) -> DensityOperator:
    """Mix ``mode`` with a thermal bath of ``n_eps`` photons at transmissivity ``T``.

    The environment mode is appended, mixed by ``b = sqrt(T) a + sqrt(1-T) e``
    and traced out.
    """
    if not 0.0 < T <= 1.0:
        raise ValueError("transmissivity must lie in (0, 1]")
    if n_eps < 0.0:
        raise ValueError("thermal photon number must be non-negative")
    if T == 1.0:
        return state
    env = thermal_state(n_eps, ancilla_dim)
    joint = state.tensor(env)
    e = joint.n_modes - 1
    joint = apply_beamsplitter(joint, (mode, e), T)
    return joint.partial_trace([e])


def onoff_povm_element(outcome: str, eta: float, dim: int) -> np.ndarray:
    """Diagonal of the on/off detector element with efficiency ``eta``."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("detector efficiency must lie in (0, 1]")
    off = (1.0 - eta) ** np.arange(dim, dtype=float)
    if outcome == "off":
        return off
    if outcome == "on":
        return 1.0 - off
    raise ValueError("outcome must be 'on' or 'off'")


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class GeneralTwoModeCM:
    """Full 4x4 covariance matrix in the ordering (q_A, p_A, q_B, p_B)."""

    matrix: np.ndarray
    means: np.ndarray

    @property
    def a(self) -> float:
        return 0.5 * float(self.matrix[0, 0] + self.matrix[1, 1])

    @property
    def b(self) -> float:
        return 0.5 * float(self.matrix[2, 2] + self.matrix[3, 3])

    @property
    def c(self) -> float:
        return 0.5 * float(self.matrix[0, 2] - self.matrix[1, 3])

    def block_form(self) -> np.ndarray:
        """The symmetric block-form matrix closest to this CM."""
        a, b, c = self.a, self.b, self.c
        return np.array(
            [[a, 0, c, 0], [0, a, 0, -c], [c, 0, b, 0], [0, -c, 0, b]],
            dtype=float,
        )

    def off_pattern(self) -> float:
        """Largest deviation from the form ``[[a I, c sz], [c sz, b I]]``."""
        return float(np.max(np.abs(self.matrix - self.block_form())))


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def covariance_matrix(state: DensityOperator) -> GeneralTwoModeCM:
    """Quadrature covariance matrix of a two-mode state, normalised by its trace."""
    if state.n_modes != 2:
        raise ValueError("covariance_matrix expects a two-mode state")
    # one padding level makes second moments exact for the truncated support
    dA, dB = state.dims[0] + 1, state.dims[1] + 1
    padded = state.pad(0, dA).pad(1, dB)
    X = padded.stacked().reshape(-1, dA, dB)
    tr = float(np.vdot(X, X).real)
    if tr <= 0.0:
        raise ValueError("state has zero trace")
    aA, aB = _ladder(dA), _ladder(dB)
    ops = [(aA + aA.T, 0), (1j * (aA.T - aA), 0), (aB + aB.T, 1), (1j * (aB.T - aB), 1)]
    # amplitudes with each quadrature applied to its own mode
    applied = []
    for op, mode in ops:
        if mode == 0:
            applied.append(np.einsum("ij,mjb->mib", op, X))
        else:
            applied.append(np.einsum("ij,maj->mai", op, X))
    means = np.array([np.vdot(X, y).real / tr for y in applied])
    cm = np.empty((4, 4))
    for i in range(4):
        for j in range(i, 4):
            # <R_i R_j + R_j R_i>/2 = Re <R_i psi | R_j psi> for Hermitian R
            val = np.vdot(applied[i], applied[j]).real / tr - means[i] * means[j]
            cm[i, j] = cm[j, i] = val
    return GeneralTwoModeCM(cm, means)


# ---------------------------------------------------------------------------
# protocol circuits


@dataclass(frozen=True)
class OracleResult:
    cm: GeneralTwoModeCM
    p_success: float
    state: DensityOperator
    min_eigenvalue: float


def _channel_output(V: float, channel: ChannelParams, dim: int, ancilla_dim: int | None) -> DensityOperator:
    state = tmsv_state(V, dim)
    n_eps = channel.n_eps if channel.T < 1.0 else 0.0
    return thermal_loss(state, 1, channel.T, n_eps, ancilla_dim)


def _finish(state: DensityOperator, factor: float) -> OracleResult:
    state = state.compress()
    min_eig = float(state.eigenvalues().min(initial=0.0))
    return OracleResult(covariance_matrix(state), factor * state.trace, state, min_eig)


def simulate_qs(
    V: float,
    channel: ChannelParams,
    g: float | None,
    eta: float,
    dim: int = 20,
    *,
    ancilla_dim: int | None = None,
    tau: float | None = None,
    branch: str = "on-off",
) -> OracleResult:
    """Quantum-scissors circuit in the Fock basis.

    Modes are ordered (A, B, B1, B2): B1 carries the single-photon ancilla and
    B2 the vacuum ancilla.  B1 and B2 are mixed at ``tau``, then B and B1 at a
    balanced beamsplitter; the (on, off) pattern on (B, B1) heralds success
    and B2 becomes Bob's amplified mode.  The success probability doubles the
    single-branch trace, as the mirrored pattern is symmetric.
    """
    tau = tau_qs(g) if tau is None else tau
    state = _channel_output(V, channel, dim, ancilla_dim)
    state = state.tensor(fock_state(1)).tensor(fock_state(0))
    # c1 = sqrt(tau) a1 - sqrt(1-tau) a2, c2 = sqrt(1-tau) a1 + sqrt(tau) a2
    state = apply_beamsplitter(state, (3, 2), tau)
    # b_B = (a_B + c1)/sqrt2, b_B1 = (-a_B + c1)/sqrt2
    state = apply_beamsplitter(state, (1, 2), 0.5)
    first, second = {"on-off": ("on", "off"), "off-on": ("off", "on")}[branch]
    state = state.apply_diagonal(1, onoff_povm_element(first, eta, state.dims[1]))
    state = state.apply_diagonal(2, onoff_povm_element(second, eta, state.dims[2]))
    state = state.partial_trace([1, 2])
    return _finish(state, 2.0)


def simulate_spc(
    V: float,
    channel: ChannelParams,
    g: float | None,
    eta: float,
    dim: int = 20,
    *,
    ancilla_dim: int | None = None,
    tau: float | None = None,
) -> OracleResult:
    """Single-photon catalysis circuit in the Fock basis.

    Modes are ordered (A, B, B1).  The single photon in B1 meets the signal
    at transmissivity ``tau``; an "on" click on the reflected mode B1 heralds
    success.
    """
    tau = tau_spc(g) if tau is None else tau
    state = _channel_output(V, channel, dim, ancilla_dim)
    state = state.tensor(fock_state(1))
    state = apply_beamsplitter(state, (1, 2), tau)
    state = state.apply_diagonal(2, onoff_povm_element("on", eta, state.dims[2]))
    state = state.partial_trace([2])
    return _finish(state, 1.0)
