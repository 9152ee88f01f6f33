"""Initial states: named pure states, white-noise mixing, seeded random pure states.

Pure states are 1-D complex arrays of length ``2**n``; density matrices are
2-D complex arrays. Basis index bits read left to right as qubit 0, 1, ...
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlphaOutOfRange, InvalidState, ShapeMismatch, UnsupportedQubitCount
from .linalg import hermitian_eigvals, hermiticity_error, num_qubits_of

SUPPORTED_QUBITS = (2, 3, 4)
RNG_ALGORITHM = "pcg64-boxmuller"

NORM_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-9


def _check_qubits(n: int) -> int:
    if n not in SUPPORTED_QUBITS:
        raise UnsupportedQubitCount(f"qubit count must be one of {SUPPORTED_QUBITS}, got {n}")
    return n


def ket(bits: str) -> np.ndarray:
    """Computational basis state from a bit string, e.g. ``ket("010")``."""
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"not a bit string: {bits!r}")
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def _superpose(n: int, terms: dict[str, complex]) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    for bits, amp in terms.items():
        v[int(bits, 2)] += amp
    return v / np.linalg.norm(v)


def ghz(n: int) -> np.ndarray:
    _check_qubits(n)
    return _superpose(n, {"0" * n: 1, "1" * n: 1})


def w(n: int) -> np.ndarray:
    _check_qubits(n)
    terms = {format(1 << k, f"0{n}b"): 1 for k in range(n)}
    return _superpose(n, terms)


def dicke24() -> np.ndarray:
    return _superpose(4, {b: 1 for b in ("0011", "1100", "0101", "0110", "1001", "1010")})


def singlet4() -> np.ndarray:
    terms = {"0011": 1, "1100": 1, "0101": -0.5, "0110": -0.5, "1001": -0.5, "1010": -0.5}
    return _superpose(4, terms)


def cluster4() -> np.ndarray:
    return _superpose(4, {"0000": 1, "0011": 1, "1100": 1, "1111": -1})


def chi4() -> np.ndarray:
    terms = {"1111": math.sqrt(2), "0001": 1, "0010": 1, "0100": 1, "1000": 1}
    return _superpose(4, terms)


# name -> (factory taking the qubit count, qubit counts it supports)
NAMED_STATES = {
    "ghz": (ghz, SUPPORTED_QUBITS),
    "w": (w, SUPPORTED_QUBITS),
    "dicke": (lambda n: dicke24(), (4,)),
    "singlet": (lambda n: singlet4(), (4,)),
    "cluster": (lambda n: cluster4(), (4,)),
    "chi": (lambda n: chi4(), (4,)),
}


def named_state(name: str, n: int) -> np.ndarray:
    try:
        factory, allowed = NAMED_STATES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown state {name!r}; known: {sorted(NAMED_STATES)}") from None
    if n not in allowed:
        raise UnsupportedQubitCount(f"state {name!r} is defined for {allowed} qubits, not {n}")
    return factory(n)


def projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    return np.outer(v, v.conj())


def white_noise_mix(psi, alpha: float) -> np.ndarray:
    """``alpha |psi><psi| + (1 - alpha) I / 2**n``.

    ``psi`` may also be a density matrix, in which case it replaces the projector.
    """
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    a = np.asarray(psi, dtype=complex)
    rho = projector(a) if a.ndim == 1 else a
    dim = rho.shape[0]
    return alpha * rho + (1.0 - alpha) / dim * np.eye(dim)


def validate_pure(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1:
        raise InvalidState(f"pure state must be a vector, got shape {v.shape}")
    num_qubits_of(np.empty((v.size, v.size)))
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > NORM_TOL:
        raise InvalidState(f"state norm {norm!r} differs from 1")
    return v


def validate_density(rho, num_qubits: int | None = None) -> np.ndarray:
    """Return ``rho`` as a complex array or raise InvalidState/ShapeMismatch."""
    r = np.asarray(rho, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise InvalidState(f"density matrix must be square, got shape {r.shape}")
    n = num_qubits_of(r)
    if num_qubits is not None and n != num_qubits:
        raise ShapeMismatch(f"expected {num_qubits} qubits, got {n}")
    herr = hermiticity_error(r)
    if herr > 1e-10:
        raise InvalidState(f"not Hermitian (max deviation {herr:.3e})")
    tr = np.trace(r).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidState(f"trace {tr!r} differs from 1")
    lo = hermitian_eigvals(r)[0]
    if lo < -PSD_TOL:
        raise InvalidState(f"min eigenvalue {lo:.3e} below -{PSD_TOL:.0e}")
    return r


# ---------------------------------------------------------------- random states


@dataclass(frozen=True)
class RandomStateSeed:
    """Seed for :func:`random_pure`.

    Uniform doubles come from numpy's PCG64 bit generator. Each amplitude
    consumes two uniforms ``u1, u2`` (in that order); Box-Muller turns them
    into ``z1 = r cos(2 pi u2)``, ``z2 = r sin(2 pi u2)`` with
    ``r = sqrt(-2 ln(1 - u1))``. ``z1`` is the real part, ``z2`` the imaginary
    part, amplitudes are filled in basis-index order, then the vector is
    normalized.
    """

    seed: int
    algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.algorithm != RNG_ALGORITHM:
            raise ValueError(f"unsupported algorithm tag {self.algorithm!r}")

    def derive(self, index: int) -> "RandomStateSeed":
        """Per-sample seed: the first 64-bit word of ``SeedSequence([seed, index])``."""
        word = np.random.SeedSequence([self.seed, index]).generate_state(1, dtype=np.uint64)[0]
        return RandomStateSeed(int(word), self.algorithm)


def gaussian_pairs(rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    u = rng.random(2 * count).reshape(count, 2)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    phase = 2.0 * np.pi * u[:, 1]
    return r * np.cos(phase), r * np.sin(phase)


def random_pure(n: int, seed: RandomStateSeed | int) -> np.ndarray:
    """Haar-random pure state on ``n`` qubits, reproducible per seed."""
    _check_qubits(n)
    if not isinstance(seed, RandomStateSeed):
        seed = RandomStateSeed(int(seed))
    rng = np.random.Generator(np.random.PCG64(seed.seed))
    re, im = gaussian_pairs(rng, 2**n)
    v = re + 1j * im
    return v / np.linalg.norm(v)


def random_ensemble(n: int, count: int, seed: RandomStateSeed | int) -> list[np.ndarray]:
    if not isinstance(seed, RandomStateSeed):
        seed = RandomStateSeed(int(seed))
    return [random_pure(n, seed.derive(i)) for i in range(count)]


# ------------------------------------------------------------- text matrix format


def format_matrix(m) -> str:
    """Plain-text matrix: ``dim N`` then one ``row col re im`` line per entry."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {a.shape}")
    lines = [f"dim {a.shape[0]}"]
    for (i, j), z in np.ndenumerate(a):
        lines.append(f"{i} {j} {z.real:.17g} {z.imag:.17g}")
    return "\n".join(lines) + "\n"


def parse_matrix(lines) -> np.ndarray:
    """Inverse of :func:`format_matrix`; ``lines`` is an iterable of strings."""
    it = (ln.strip() for ln in lines)
    it = (ln for ln in it if ln and not ln.startswith("#"))
    header = next(it, None)
    if header is None:
        raise ValueError("empty matrix text")
    parts = header.split()
    if len(parts) != 2 or parts[0] != "dim":
        raise ValueError(f"expected 'dim N' header, got {header!r}")
    dim = int(parts[1])
    if dim < 1:
        raise ValueError(f"bad dimension {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    seen = np.zeros((dim, dim), dtype=bool)
    for _ in range(dim * dim):
        ln = next(it, None)
        if ln is None:
            raise ValueError(f"expected {dim * dim} entries, text ended early")
        f = ln.split()
        if len(f) != 4:
            raise ValueError(f"malformed entry line {ln!r}")
        i, j = int(f[0]), int(f[1])
        m[i, j] = complex(float(f[2]), float(f[3]))
        seen[i, j] = True
    if not seen.all():
        raise ValueError("matrix text has duplicate or missing entries")
    return m


def write_matrix(path, m) -> None:
    Path(path).write_text(format_matrix(m))


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return parse_matrix(fh)


def load_state_file(path) -> np.ndarray:
    """Read and validate a density matrix stored in the text format."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return validate_density(read_matrix(path))
