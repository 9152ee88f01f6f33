"""Genuine multipartite negativity via fully decomposable witnesses.

For a state ``rho`` on ``n`` qubits the monotone is ``E = max(0, -min Tr(W rho))``
over operators ``W`` that, for every bipartition ``M``, split as
``W = P_M + Q_M^{T_M}`` with ``0 <= P_M <= I`` and ``0 <= Q_M <= I``.

The program is posed as the dual of a standard-form SDP: ``W`` and each
``Q_M`` are free Hermitian matrices (the dual vector, in an orthonormal
Hermitian basis), and ``Q_M``, ``I - Q_M``, ``P_M = W - Q_M^{T_M}`` and
``I - P_M`` are the PSD dual slack blocks. The dual objective is
``-Tr(W rho)``, so the solver's dual value is ``E`` before clamping.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import sdp
from .errors import CertificateInvalid, NumericalFailure, ShapeMismatch, UnsupportedQubitCount
from .linalg import hermitian_eigvals, hermitize, num_qubits_of, partial_transpose
from .states import SUPPORTED_QUBITS, format_matrix, parse_matrix, validate_density

DECOMPOSITION_TOL = 1e-6
BOUND_TOL = 1e-7
MONOTONE_CAP = 0.5


@dataclass(frozen=True, order=True)
class Bipartition:
    """Unordered split ``M | complement``, stored as its canonical side ``M``.

    The canonical side is the smaller one; for equal sizes it is the side
    containing qubit 0.
    """

    num_qubits: int
    subset: tuple[int, ...]

    @classmethod
    def of(cls, num_qubits: int, subset) -> "Bipartition":
        s = tuple(sorted(set(int(q) for q in subset)))
        if not s or len(s) >= num_qubits or s[0] < 0 or s[-1] >= num_qubits:
            raise ValueError(f"{s} is not a nonempty proper subset of {num_qubits} qubits")
        comp = tuple(q for q in range(num_qubits) if q not in s)
        if len(comp) < len(s) or (len(comp) == len(s) and comp < s):
            s = comp
        return cls(num_qubits, s)

    @property
    def complement(self) -> tuple[int, ...]:
        return tuple(q for q in range(self.num_qubits) if q not in self.subset)

    @property
    def label(self) -> str:
        return ",".join(map(str, self.subset))

    def __str__(self) -> str:
        return "".join("ABCD"[q] for q in self.subset) + "|" + "".join("ABCD"[q] for q in self.complement)


def bipartitions(n: int) -> list[Bipartition]:
    """All ``2**(n-1) - 1`` canonical bipartitions, singletons first."""
    if n not in SUPPORTED_QUBITS:
        raise UnsupportedQubitCount(f"qubit count must be one of {SUPPORTED_QUBITS}, got {n}")
    out = []
    for size in range(1, n // 2 + 1):
        for s in itertools.combinations(range(n), size):
            bp = Bipartition.of(n, s)
            if bp.subset == s:
                out.append(bp)
    return out


@dataclass
class WitnessCertificate:
    """A fully decomposable witness with its per-bipartition decompositions."""

    num_qubits: int
    witness: np.ndarray
    decompositions: dict[Bipartition, tuple[np.ndarray, np.ndarray]]

    def to_text(self) -> str:
        parts = [f"# fully decomposable witness certificate\nqubits {self.num_qubits}\n",
                 "section W\n", format_matrix(self.witness)]
        for bp, (pm, qm) in self.decompositions.items():
            parts += [f"section P {bp.label}\n", format_matrix(pm),
                      f"section Q {bp.label}\n", format_matrix(qm)]
        return "".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "WitnessCertificate":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines or lines[0].split()[0] != "qubits":
            raise ValueError("certificate text must start with 'qubits N'")
        n = int(lines[0].split()[1])
        sections: list[tuple[list[str], list[str]]] = []
        for ln in lines[1:]:
            if ln.startswith("section"):
                sections.append((ln.split()[1:], []))
            elif sections:
                sections[-1][1].append(ln)
            else:
                raise ValueError(f"matrix data before any section: {ln!r}")
        witness = None
        ps: dict[Bipartition, np.ndarray] = {}
        qs: dict[Bipartition, np.ndarray] = {}
        for head, body in sections:
            mat = parse_matrix(body)
            if head == ["W"]:
                witness = mat
            elif len(head) == 2 and head[0] in ("P", "Q"):
                bp = Bipartition.of(n, [int(q) for q in head[1].split(",")])
                (ps if head[0] == "P" else qs)[bp] = mat
            else:
                raise ValueError(f"unknown section {' '.join(head)!r}")
        if witness is None:
            raise ValueError("certificate has no W section")
        if set(ps) != set(qs):
            raise ValueError("every bipartition needs both a P and a Q section")
        return cls(n, witness, {bp: (ps[bp], qs[bp]) for bp in sorted(ps)})

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "WitnessCertificate":
        with open(path) as fh:
            return cls.from_text(fh.read())


@dataclass
class GmeResult:
    value: float
    certificate: WitnessCertificate
    raw_optimum: float
    status: sdp.SdpStatus
    iterations: int
    gap: float
    diagnostics: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


# ---------------------------------------------------------------- problem assembly


@lru_cache(maxsize=None)
def _hermitian_basis(d: int) -> sp.csr_matrix:
    """Rows are row-major vectorizations of an orthonormal Hermitian basis of d x d matrices."""
    rows, cols, vals = [], [], []
    r = 0
    s = 1 / np.sqrt(2)
    for k in range(d):
        rows.append(r), cols.append(k * d + k), vals.append(1.0)
        r += 1
    for k in range(d):
        for l in range(k + 1, d):
            rows += [r, r]
            cols += [k * d + l, l * d + k]
            vals += [s, s]
            r += 1
            rows += [r, r]
            cols += [k * d + l, l * d + k]
            vals += [1j * s, -1j * s]
            r += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(d * d, d * d), dtype=complex)


@lru_cache(maxsize=None)
def _pt_permutation(n: int, subset: tuple[int, ...]) -> np.ndarray:
    """Index map with ``vec(X^{T_M}) = vec(X)[perm]``."""
    d = 2**n
    idx = np.arange(d * d).reshape(d, d)
    return partial_transpose(idx, n, subset).real.astype(int).reshape(-1)


@lru_cache(maxsize=None)
def _structure(n: int):
    """Coefficient matrices and block layout for ``n`` qubits (independent of the state)."""
    d = 2**n
    dd = d * d
    splits = bipartitions(n)
    nvar = dd * (1 + len(splits))
    basis = _hermitian_basis(d)
    eye = np.eye(d, dtype=complex)
    blocks, objective, coeffs = [], [], []

    def embed(parts):
        # parts: list of (variable offset, sparse dd x dd); stacked into an (nvar, dd) matrix
        out = sp.lil_matrix((nvar, dd), dtype=complex)
        for offset, mat in parts:
            out[offset:offset + dd, :] = mat
        return out.tocsr()

    for k, bp in enumerate(splits):
        q_off = dd * (k + 1)
        basis_pt = basis[:, _pt_permutation(n, bp.subset)]
        blocks += [(f"Q[{bp.label}]", d), (f"I-Q[{bp.label}]", d),
                   (f"P[{bp.label}]", d), (f"I-P[{bp.label}]", d)]
        objective += [None, eye, None, eye]
        coeffs += [embed([(q_off, -basis)]),
                   embed([(q_off, basis)]),
                   embed([(0, -basis), (q_off, basis_pt)]),
                   embed([(0, basis), (q_off, -basis_pt)])]
    return splits, blocks, objective, coeffs, basis


def witness_problem(rho) -> sdp.SdpProblem:
    """Standard-form SDP whose dual optimum is ``-min Tr(W rho)``."""
    r = np.asarray(rho, dtype=complex)
    n = num_qubits_of(r)
    splits, blocks, objective, coeffs, basis = _structure(n)
    dd = r.size
    rhs = np.zeros(dd * (1 + len(splits)))
    rhs[:dd] = -np.real(basis.conj() @ r.reshape(-1))
    return sdp.SdpProblem(blocks, objective, coeffs, rhs, check=False)


def _unvec(basis, coeffs, d):
    return hermitize(np.asarray(basis.T @ coeffs).reshape(d, d))


def _repair(witness, pairs):
    """Shift and rescale so every ``P``, ``Q`` lies exactly within ``[0, I]``.

    Adding ``eps I`` to each ``P`` and ``Q`` adds ``2 eps I`` to ``W`` and keeps
    every decomposition exact; a common rescaling then fixes the upper bound.
    """
    eigs = [hermitian_eigvals(m) for pq in pairs.values() for m in pq]
    eps = max(0.0, -min(e[0] for e in eigs))
    top = max(e[-1] for e in eigs) + eps
    scale = 1.0 / max(1.0, top)
    if eps == 0.0 and scale == 1.0:
        return witness, pairs
    d = witness.shape[0]
    eye = np.eye(d)
    witness = scale * (witness + 2 * eps * eye)
    pairs = {bp: (scale * (pm + eps * eye), scale * (qm + eps * eye)) for bp, (pm, qm) in pairs.items()}
    return witness, pairs


def genuine_negativity(rho, gap_tolerance: float = 1e-7, feas_tolerance: float = 1e-8,
                       max_iterations: int = 200) -> GmeResult:
    """Genuine multipartite negativity of ``rho`` together with its witness certificate.

    ``value`` is zero when no fully decomposable witness detects the state
    (the state is then a PPT mixture). The certificate is audited before it is
    returned.
    """
    r = validate_density(rho)
    n = num_qubits_of(r)
    if n not in SUPPORTED_QUBITS:
        raise UnsupportedQubitCount(f"qubit count must be one of {SUPPORTED_QUBITS}, got {n}")
    d = 2**n
    dd = d * d
    problem = witness_problem(r)
    sol = sdp.solve(problem, gap_tolerance=gap_tolerance, feas_tolerance=feas_tolerance,
                    max_iterations=max_iterations, check_rank=False)
    if sol.status in (sdp.SdpStatus.NUMERICAL_FAILURE, sdp.SdpStatus.INFEASIBLE):
        raise NumericalFailure(f"witness SDP ended with status {sol.status.value} "
                               f"(gap {sol.gap:.2e}, residuals {sol.primal_residual:.2e}/"
                               f"{sol.dual_residual:.2e})")
    splits, _, _, _, basis = _structure(n)
    y = sol.dual_vector
    witness = _unvec(basis, y[:dd], d)
    pairs = {}
    for k, bp in enumerate(splits):
        qm = _unvec(basis, y[dd * (k + 1):dd * (k + 2)], d)
        pairs[bp] = (hermitize(witness - partial_transpose(qm, n, bp.subset)), qm)
    witness, pairs = _repair(witness, pairs)
    cert = WitnessCertificate(n, witness, pairs)
    expectation = verify_certificate(r, cert)
    value = max(0.0, -expectation)
    return GmeResult(
        value=value,
        certificate=cert,
        raw_optimum=sol.dual_value,
        status=sol.status,
        iterations=sol.iterations,
        gap=sol.gap,
        diagnostics={"primal_value": sol.primal_value, "dual_value": sol.dual_value,
                     "primal_residual": sol.primal_residual, "dual_residual": sol.dual_residual,
                     "witness_expectation": expectation},
    )


def verify_certificate(rho, cert: WitnessCertificate) -> float:
    """Audit ``cert`` from scratch and return ``Tr(W rho)``.

    Checks, for every bipartition of the register, that
    ``||W - (P + Q^{T_M})||_F <= 1e-6`` and that the eigenvalues of ``P`` and
    ``Q`` lie in ``[-1e-7, 1 + 1e-7]``. A negative return value certifies
    genuine multipartite entanglement.
    """
    r = np.asarray(rho, dtype=complex)
    n = cert.num_qubits
    w = np.asarray(cert.witness, dtype=complex)
    if r.shape != w.shape or r.shape != (2**n, 2**n):
        raise ShapeMismatch(f"state shape {r.shape} does not match a {n}-qubit certificate")
    if float(np.max(np.abs(w - w.conj().T))) > 1e-10:
        raise CertificateInvalid("hermitian", "witness is not Hermitian")
    required = set(bipartitions(n))
    missing = required - set(cert.decompositions)
    if missing:
        raise CertificateInvalid("coverage", f"no decomposition for {sorted(map(str, missing))}")
    for bp in sorted(required):
        pm, qm = (np.asarray(x, dtype=complex) for x in cert.decompositions[bp])
        resid = np.linalg.norm(w - (pm + partial_transpose(qm, n, bp.subset)))
        if resid > DECOMPOSITION_TOL:
            raise CertificateInvalid("decomposition", f"{bp}: ||W - (P + Q^T_M)||_F = {resid:.3e}", bp)
        for name, mat in (("P", pm), ("Q", qm)):
            try:
                ev = hermitian_eigvals(mat)
            except Exception as exc:
                raise CertificateInvalid("hermitian", f"{bp}: {name} is not Hermitian", bp) from exc
            if ev[0] < -BOUND_TOL:
                raise CertificateInvalid("lower-bound", f"{bp}: {name} has eigenvalue {ev[0]:.3e} < 0", bp)
            if ev[-1] > 1 + BOUND_TOL:
                raise CertificateInvalid("upper-bound", f"{bp}: {name} has eigenvalue {ev[-1]:.6f} > 1", bp)
    return float(np.real(np.einsum("ij,ji->", w, r)))


def bipartite_negativity(rho) -> float:
    """Sum of the magnitudes of the negative eigenvalues of ``rho^{T_0}`` (two qubits)."""
    ev = hermitian_eigvals(partial_transpose(rho, 2, [0]))
    return float(-ev[ev < 0].sum())
