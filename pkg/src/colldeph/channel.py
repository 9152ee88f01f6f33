"""Collective dephasing of N qubits in a field of arbitrary orientation.

Every qubit precesses about the same unit axis ``n`` with a random frequency
drawn from a spectral distribution. Averaging the collective rotation over the
distribution gives

    rho(t) = sum_{j,k} M_jk(t) Theta_j rho(0) Theta_k,   M_jk(t) = phi((j - k) t),

where ``Theta_j`` projects onto the span of tensor products with exactly ``j``
factors of ``Lambda_-`` and ``phi`` is the characteristic function of the
frequency distribution. Time is dimensionless (rate times time).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateOrientation, DimensionMismatch, UnsupportedQubitCount
from .linalg import I2, PAULI, hermitize, kron_all
from .states import SUPPORTED_QUBITS, validate_density


@dataclass(frozen=True)
class FieldOrientation:
    """Unit vector along the magnetic field; normalized on construction."""

    n: tuple[float, float, float]

    def __init__(self, *components):
        if len(components) == 1:
            components = tuple(components[0])
        if len(components) != 3:
            raise ValueError(f"orientation needs 3 components, got {len(components)}")
        v = np.asarray(components, dtype=float)
        if not np.all(np.isfinite(v)):
            raise DegenerateOrientation(f"non-finite orientation {components}")
        norm = float(np.linalg.norm(v))
        if norm < 1e-12:
            raise DegenerateOrientation("orientation vector has zero length")
        object.__setattr__(self, "n", tuple(float(x) for x in v / norm))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.n)

    def sigma(self) -> np.ndarray:
        """``n . sigma``."""
        return sum(c * p for c, p in zip(self.n, PAULI))


class SpectralKind(str, Enum):
    STANDARD_CAUCHY = "standard-cauchy"
    SHIFTED_LORENTZIAN = "shifted-lorentzian"


@dataclass(frozen=True)
class SpectralModel:
    """Lorentzian frequency distribution through its characteristic function.

    ``phi(t) = exp(i * center * t - width * |t|)``; the standard Cauchy case
    (center 0, width 1) gives ``exp(-|t|)``.
    """

    kind: SpectralKind = SpectralKind.STANDARD_CAUCHY
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SpectralKind(self.kind))
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.kind is SpectralKind.STANDARD_CAUCHY and (self.center != 0.0 or self.width != 1.0):
            raise ValueError("standard Cauchy model has center 0 and width 1")

    @classmethod
    def lorentzian(cls, center: float, width: float) -> "SpectralModel":
        return cls(SpectralKind.SHIFTED_LORENTZIAN, float(center), float(width))

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        out = np.exp(-self.width * np.abs(t))
        if self.center:
            out = out * np.exp(1j * self.center * t)
        return out

    def density(self, omega):
        """Normalized Lorentzian density (used only by quadrature checks)."""
        omega = np.asarray(omega, dtype=float)
        return self.width / (np.pi * ((omega - self.center) ** 2 + self.width**2))


STANDARD_CAUCHY = SpectralModel()


def _check_qubits(n: int) -> None:
    if n not in SUPPORTED_QUBITS:
        raise UnsupportedQubitCount(f"qubit count must be one of {SUPPORTED_QUBITS}, got {n}")


def _as_orientation(orientation) -> FieldOrientation:
    if isinstance(orientation, FieldOrientation):
        return orientation
    return FieldOrientation(orientation)


def projectors(orientation) -> tuple[np.ndarray, np.ndarray]:
    """``Lambda_+/- = (I +/- n.sigma) / 2``."""
    ns = _as_orientation(orientation).sigma()
    return (I2 + ns) / 2, (I2 - ns) / 2


def theta_operators(orientation, n: int) -> list[np.ndarray]:
    """Projectors ``Theta_0 .. Theta_n``.

    ``Theta_j`` sums the ``C(n, j)`` distinct placements of ``j`` factors
    ``Lambda_-`` among ``n - j`` factors ``Lambda_+``; this equals the full
    symmetric-group sum with its ``1/(j!(n-j)!)`` weight.
    """
    _check_qubits(n)
    plus, minus = projectors(orientation)
    thetas = []
    for j in range(n + 1):
        acc = np.zeros((2**n, 2**n), dtype=complex)
        for where in itertools.combinations(range(n), j):
            acc += kron_all(minus if q in where else plus for q in range(n))
        thetas.append(acc)
    return thetas


def toeplitz_matrix(spectral: SpectralModel, n: int, t: float) -> np.ndarray:
    """``M[j, k] = phi((j - k) t)`` for ``j, k = 0..n``."""
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    idx = np.arange(n + 1)
    return np.asarray(spectral.phi((idx[:, None] - idx[None, :]) * float(t)), dtype=complex)


@dataclass(frozen=True)
class DephasingChannel:
    num_qubits: int
    orientation: FieldOrientation
    spectral: SpectralModel = STANDARD_CAUCHY
    thetas: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_qubits(self.num_qubits)
        object.__setattr__(self, "orientation", _as_orientation(self.orientation))
        mats = theta_operators(self.orientation, self.num_qubits)
        for m in mats:
            m.setflags(write=False)
        object.__setattr__(self, "thetas", tuple(mats))

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def _check(self, rho0) -> np.ndarray:
        r = np.asarray(rho0, dtype=complex)
        if r.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"state of shape {r.shape} does not fit {self.num_qubits} qubits")
        return validate_density(r)

    def _sandwich(self, rho: np.ndarray, weights: np.ndarray) -> np.ndarray:
        th = self.thetas
        left = [t @ rho for t in th]
        out = np.zeros_like(rho)
        for j, lj in enumerate(left):
            for k, tk in enumerate(th):
                w = weights[j, k]
                if w != 0:
                    out += w * (lj @ tk)
        return hermitize(out)

    def evolve(self, rho0, t: float) -> np.ndarray:
        rho = self._check(rho0)
        if t == 0:
            return rho.copy()
        return self._sandwich(rho, toeplitz_matrix(self.spectral, self.num_qubits, t))

    def asymptotic(self, rho0) -> np.ndarray:
        """t -> infinity limit ``sum_j Theta_j rho Theta_j``."""
        rho = self._check(rho0)
        return self._sandwich(rho, np.eye(self.num_qubits + 1))

    def unitary(self, omega: float, t: float) -> np.ndarray:
        """Collective propagator ``exp(-i omega t n.sigma / 2)^(x n)`` for one frequency."""
        a = 0.5 * omega * t
        u = math.cos(a) * I2 - 1j * math.sin(a) * self.orientation.sigma()
        return kron_all([u] * self.num_qubits)


def evolve(ch: DephasingChannel, rho0, t: float) -> np.ndarray:
    return ch.evolve(rho0, t)


def asymptotic(ch: DephasingChannel, rho0) -> np.ndarray:
    return ch.asymptotic(rho0)


def quadrature_evolve(ch: DephasingChannel, rho0, t: float, half_width: float = 200.0,
                      nodes: int = 100_001) -> np.ndarray:
    """Average ``U rho U^dagger`` over a truncated Lorentzian by trapezoid quadrature.

    Brute-force reference for :meth:`DephasingChannel.evolve` that never
    touches the ``Theta`` decomposition. The probability mass beyond the
    cutoff is assigned to the plain average of the integrand over the outer
    half of the grid, where the oscillating terms have already averaged out;
    this needs ``half_width * width * t`` well above one.
    """
    sp = ch.spectral
    omega = np.linspace(sp.center - half_width * sp.width, sp.center + half_width * sp.width, nodes)
    w = sp.density(omega) * (omega[1] - omega[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    a = 0.5 * omega * t
    ns = ch.orientation.sigma()
    u1 = np.cos(a)[:, None, None] * I2 - 1j * np.sin(a)[:, None, None] * ns
    rho = np.asarray(rho0, dtype=complex)
    outer = np.abs(omega - sp.center) > 0.5 * half_width * sp.width
    core = np.zeros_like(rho)
    tail = np.zeros_like(rho)
    for chunk in np.array_split(np.arange(nodes), max(1, nodes // 5000)):
        u = u1[chunk]
        for _ in range(ch.num_qubits - 1):
            u = np.einsum("wab,wcd->wacbd", u, u1[chunk]).reshape(len(chunk), u.shape[1] * 2, u.shape[2] * 2)
        conj = u @ rho @ np.conj(np.swapaxes(u, 1, 2))
        core += np.tensordot(w[chunk], conj, axes=1)
        tail += conj[outer[chunk]].sum(axis=0)
    return core + (1.0 - w.sum()) * tail / outer.sum()
