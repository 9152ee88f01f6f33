"""Dense complex matrix kernels for qubit registers.

Convention used across the package: qubit 0 is the leftmost tensor factor and
the most significant bit of a computational-basis index, so ``|01>`` is index 1
and ``kron(a, b)`` acts with ``a`` on qubit 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable

import numpy as np

from .errors import NotHermitian, ShapeMismatch

HERMITIAN_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

for _m in (I2, *PAULI):
    _m.setflags(write=False)


@dataclass(frozen=True)
class QubitRegisterShape:
    num_qubits: int

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ShapeMismatch(f"need at least one qubit, got {self.num_qubits}")

    @property
    def local_dims(self) -> tuple[int, ...]:
        return (2,) * self.num_qubits

    @property
    def dim(self) -> int:
        return 2**self.num_qubits


def as_square(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ShapeMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def num_qubits_of(m) -> int:
    dim = np.shape(m)[0]
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ShapeMismatch(f"dimension {dim} is not a power of two")
    return n


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def hermiticity_error(m) -> float:
    a = as_square(m)
    return float(np.max(np.abs(a - a.conj().T)))


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_error(m) <= tol


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``result[i1*db + i2, j1*db + j2] = a[i1, j1] * b[i2, j2]``."""
    return np.kron(as_square(a), as_square(b))


def kron_all(mats: Iterable) -> np.ndarray:
    return reduce(kron, mats)


def _check_hermitian(m) -> np.ndarray:
    a = as_square(m)
    err = hermiticity_error(a)
    if err > HERMITIAN_TOL:
        raise NotHermitian(f"max |m - m^H| = {err:.3e} exceeds {HERMITIAN_TOL:.0e}")
    return hermitize(a)


def hermitian_eigvals(m) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in ascending order.

    Raises NotHermitian when the matrix deviates from Hermitian by more than
    1e-10 in any entry; smaller deviations are symmetrized away first.
    """
    return np.linalg.eigvalsh(_check_hermitian(m))


def hermitian_eigh(m) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
    return np.linalg.eigh(_check_hermitian(m))


def min_eigval(m) -> float:
    return float(hermitian_eigvals(m)[0])


def _resolve_qubits(shape, m: np.ndarray) -> int:
    if isinstance(shape, QubitRegisterShape):
        n = shape.num_qubits
    elif shape is None:
        n = num_qubits_of(m)
    else:
        n = int(shape)
    if m.shape[0] != 2**n:
        raise ShapeMismatch(f"matrix of dim {m.shape[0]} does not match {n} qubits")
    return n


def partial_transpose(m, shape, subset: Iterable[int]) -> np.ndarray:
    """Transpose the row/column indices belonging to the qubits in ``subset``.

    ``shape`` is a :class:`QubitRegisterShape`, a qubit count, or ``None`` to
    infer it from the matrix dimension.
    """
    a = as_square(m)
    n = _resolve_qubits(shape, a)
    qubits = sorted(set(int(q) for q in subset))
    if any(q < 0 or q >= n for q in qubits):
        raise ShapeMismatch(f"subset {qubits} not within qubits 0..{n - 1}")
    if not qubits:
        return a.copy()
    t = a.reshape((2,) * (2 * n))
    perm = list(range(2 * n))
    for q in qubits:
        perm[q], perm[n + q] = perm[n + q], perm[q]
    return np.ascontiguousarray(t.transpose(perm)).reshape(a.shape)


def expectation(op, rho) -> float:
    """Real part of Tr(op rho); both operands are taken to be Hermitian."""
    return float(np.real(np.einsum("ij,ji->", as_square(op), as_square(rho))))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
