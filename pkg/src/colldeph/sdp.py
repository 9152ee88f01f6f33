"""Dense primal-dual interior-point solver for small complex semidefinite programs.

Standard form over Hermitian PSD blocks ``X_b``::

    minimize    sum_b <C_b, X_b>
    subject to  sum_b <A_cb, X_b> = r_c          for every constraint c
                X_b >= 0

with the real inner product ``<A, X> = Re Tr(A^H X)``. The dual is::

    maximize    r . y
    subject to  Z_b = C_b - sum_c y_c A_cb >= 0

The method is an infeasible-start path-following scheme with
Nesterov-Todd scaling and a Mehrotra predictor-corrector step. Constraint
coefficients are stored per block as sparse ``(rows, d*d)`` matrices holding
the row-major vectorization of each ``A_cb``; the Schur complement is dense.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import NotHermitian, RankDeficientConstraints, ShapeMismatch
from .linalg import HERMITIAN_TOL, dagger, hermitize

log = logging.getLogger(__name__)

STEP_FRACTION = 0.98
STALL_WINDOW = 30
STALL_LEVEL = 1e-4
# objective magnitude beyond which an unbounded side certifies the other side infeasible
DIVERGENCE_LEVEL = 1e12
RANK_TOL = 1e-11
REFINE_STEPS = 2
# a breakdown still counts as near-optimal if the best iterate is within this factor of every tolerance
NEAR_FACTOR = 100.0


class SdpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near-optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max-iterations"
    NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True)
class Block:
    label: str
    dim: int


class SdpProblem:
    """Block-structured SDP in standard form.

    Parameters
    ----------
    blocks:
        ``(label, dim)`` pairs, one per Hermitian PSD variable block.
    objective:
        One Hermitian ``dim x dim`` matrix per block (``None`` for zero).
    coefficients:
        One sparse matrix of shape ``(m, dim*dim)`` per block; row ``c`` is the
        row-major vectorization of ``A_cb``.
    rhs:
        Length-``m`` real vector.
    """

    def __init__(self, blocks, objective, coefficients, rhs, check: bool = True):
        self.blocks = [b if isinstance(b, Block) else Block(str(b[0]), int(b[1])) for b in blocks]
        if any(b.dim < 1 for b in self.blocks):
            raise ShapeMismatch("block dimensions must be positive")
        if len({b.label for b in self.blocks}) != len(self.blocks):
            raise ShapeMismatch("block labels must be unique")
        self.rhs = np.asarray(rhs, dtype=float).ravel()
        m = self.rhs.size
        if len(objective) != len(self.blocks) or len(coefficients) != len(self.blocks):
            raise ShapeMismatch("need one objective matrix and one coefficient matrix per block")
        self.objective = []
        for b, c in zip(self.blocks, objective):
            c = np.zeros((b.dim, b.dim), complex) if c is None else np.asarray(c, dtype=complex)
            if c.shape != (b.dim, b.dim):
                raise ShapeMismatch(f"objective for block {b.label!r} has shape {c.shape}")
            self.objective.append(c)
        self._coeffs = []
        self._rows = []
        for b, a in zip(self.blocks, coefficients):
            a = sp.csr_matrix(a, dtype=complex)
            if a.shape != (m, b.dim * b.dim):
                raise ShapeMismatch(f"coefficients for block {b.label!r} have shape {a.shape}, "
                                    f"expected {(m, b.dim * b.dim)}")
            a.eliminate_zeros()
            rows = np.flatnonzero(np.diff(a.indptr))
            self._rows.append(rows)
            self._coeffs.append(a[rows])
        self._groups = None
        self._partition = None
        if check:
            self._check_hermitian()

    # -- construction helpers

    @classmethod
    def from_equalities(cls, blocks, objective, equalities) -> "SdpProblem":
        """Build from explicit constraint matrices.

        ``objective`` maps block label (or index) to matrix; ``equalities`` is a
        sequence of ``(terms, rhs)`` where ``terms`` maps block label (or index)
        to the coefficient matrix of that block.
        """
        blocks = [b if isinstance(b, Block) else Block(str(b[0]), int(b[1])) for b in blocks]
        index = {b.label: i for i, b in enumerate(blocks)}

        def resolve(key):
            return key if isinstance(key, int) else index[key]

        obj = [None] * len(blocks)
        items = objective.items() if isinstance(objective, Mapping) else enumerate(objective)
        for key, mat in items:
            obj[resolve(key)] = mat
        rows, cols, vals = ([[] for _ in blocks] for _ in range(3))
        rhs = []
        for c, (terms, r) in enumerate(equalities):
            rhs.append(float(r))
            for key, mat in terms.items():
                bi = resolve(key)
                a = np.asarray(mat, dtype=complex).reshape(-1)
                if a.size != blocks[bi].dim ** 2:
                    raise ShapeMismatch(f"constraint {c}: block {blocks[bi].label!r} has wrong shape")
                nz = np.flatnonzero(a)
                rows[bi].extend([c] * nz.size)
                cols[bi].extend(nz.tolist())
                vals[bi].extend(a[nz].tolist())
        m = len(rhs)
        coeffs = [sp.csr_matrix((vals[i], (rows[i], cols[i])), shape=(m, b.dim ** 2), dtype=complex)
                  for i, b in enumerate(blocks)]
        return cls(blocks, obj, coeffs, rhs)

    # -- accessors

    @property
    def num_constraints(self) -> int:
        return self.rhs.size

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def coefficient_rows(self, b: int) -> tuple[np.ndarray, sp.csr_matrix]:
        """Constraint indices touching block ``b`` and their compact coefficient rows."""
        return self._rows[b], self._coeffs[b]

    def constraint_matrix(self, c: int, b: int) -> np.ndarray:
        d = self.blocks[b].dim
        rows, a = self._rows[b], self._coeffs[b]
        pos = np.searchsorted(rows, c)
        if pos < rows.size and rows[pos] == c:
            return a[pos].toarray().reshape(d, d)
        return np.zeros((d, d), dtype=complex)

    def apply(self, xs: Sequence[np.ndarray]) -> np.ndarray:
        """``A(X)``: the vector of constraint left-hand sides."""
        out = np.zeros(self.num_constraints)
        for rows, a, x in zip(self._rows, self._coeffs, xs):
            if rows.size:
                out[rows] += np.real(a.conj() @ np.asarray(x).reshape(-1))
        return out

    def adjoint(self, y: np.ndarray) -> list[np.ndarray]:
        """``A*(y)``: per-block ``sum_c y_c A_cb``."""
        out = []
        for blk, rows, a in zip(self.blocks, self._rows, self._coeffs):
            if rows.size:
                out.append(np.asarray(a.T @ y[rows]).reshape(blk.dim, blk.dim))
            else:
                out.append(np.zeros((blk.dim, blk.dim), dtype=complex))
        return out

    @property
    def row_groups(self) -> dict[tuple[int, ...], tuple[np.ndarray, list]]:
        """Blocks sharing the same constraint rows, with those rows split into contiguous runs."""
        if self._groups is None:
            by_rows: dict[bytes, list[int]] = {}
            for k, rows in enumerate(self._rows):
                if rows.size:
                    by_rows.setdefault(rows.tobytes(), []).append(k)
            groups = {}
            for ks in by_rows.values():
                rows = self._rows[ks[0]]
                cuts = np.flatnonzero(np.diff(rows) != 1) + 1
                starts = np.concatenate(([0], cuts))
                stops = np.concatenate((cuts, [rows.size]))
                runs = [(int(a), int(b), int(rows[a])) for a, b in zip(starts, stops)]
                groups[tuple(ks)] = (rows, runs)
            self._groups = groups
        return self._groups

    @property
    def schur_partition(self) -> tuple[list[np.ndarray], np.ndarray]:
        """Split constraints into interior groups plus a border for block elimination.

        Constraints are grouped by the set of blocks they touch. Groups are
        taken greedily (fewest blocks first) as interior while their block sets
        stay pairwise disjoint; Schur entries between two interior groups are
        then structurally zero. Everything else is the border.
        """
        if self._partition is None:
            m = self.num_constraints
            touch: list[list[int]] = [[] for _ in range(m)]
            for k, rows in enumerate(self._rows):
                for r in rows.tolist():
                    touch[r].append(k)
            by_sig: dict[tuple[int, ...], list[int]] = {}
            for r in range(m):
                by_sig.setdefault(tuple(touch[r]), []).append(r)
            used: set[int] = set()
            interior = []
            for sig, rows in sorted(by_sig.items(), key=lambda kv: (len(kv[0]), kv[1][0])):
                if sig and used.isdisjoint(sig):
                    used.update(sig)
                    interior.append(np.array(rows))
            inner = np.concatenate(interior) if interior else np.zeros(0, dtype=int)
            border = np.setdiff1d(np.arange(m), inner)
            if len(interior) < 2:
                interior, border = [], np.arange(m)
            self._partition = (interior, border)
        return self._partition

    def objective_value(self, xs) -> float:
        return float(sum(np.real(np.vdot(c, x)) for c, x in zip(self.objective, xs)))

    def _check_hermitian(self) -> None:
        for blk, c in zip(self.blocks, self.objective):
            err = float(np.max(np.abs(c - c.conj().T)))
            if err > HERMITIAN_TOL:
                raise NotHermitian(f"objective of block {blk.label!r} not Hermitian ({err:.2e})")
        for blk, a in zip(self.blocks, self._coeffs):
            if a.shape[0] == 0:
                continue
            d = blk.dim
            perm = np.arange(d * d).reshape(d, d).T.reshape(-1)
            diff = a - a[:, perm].conj()
            err = float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
            if err > HERMITIAN_TOL:
                raise NotHermitian(f"a constraint matrix on block {blk.label!r} is not Hermitian ({err:.2e})")

    def gram(self) -> np.ndarray:
        """``A A*`` as an ``m x m`` real matrix."""
        m = self.num_constraints
        g = np.zeros((m, m))
        for rows, a in zip(self._rows, self._coeffs):
            if rows.size:
                g[np.ix_(rows, rows)] += np.real((a.conj() @ a.T).toarray())
        return g

    def check_rank(self) -> None:
        """Raise RankDeficientConstraints if the constraints are linearly dependent."""
        m = self.num_constraints
        if m == 0:
            return
        g = self.gram()
        scale = float(np.max(np.diag(g)))
        if scale <= 0:
            raise RankDeficientConstraints("all constraints are zero")
        _, _, rank, info = scipy.linalg.lapack.dpstrf(g / scale, lower=1, tol=RANK_TOL)
        if info < 0:
            raise RankDeficientConstraints("pivoted Cholesky of the constraint Gram matrix failed")
        if rank < m:
            raise RankDeficientConstraints(f"constraint matrix has rank {rank} < {m} constraints")


@dataclass
class IterationRecord:
    iteration: int
    primal_value: float
    dual_value: float
    primal_residual: float
    dual_residual: float
    mu: float
    step_primal: float
    step_dual: float


@dataclass
class SdpSolution:
    status: SdpStatus
    primal_value: float
    dual_value: float
    block_values: list[np.ndarray]
    dual_vector: np.ndarray
    dual_slacks: list[np.ndarray]
    iterations: int
    gap: float
    primal_residual: float
    dual_residual: float
    history: list[IterationRecord] = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL


# ---------------------------------------------------------------- the solver


class _Scaling:
    """Nesterov-Todd scaling ``G`` of one block: ``G^-1 X G^-H = G^H Z G = diag(lam)``."""

    __slots__ = ("g", "ginv", "lam", "w")

    def __init__(self, x: np.ndarray, z: np.ndarray):
        lx = np.linalg.cholesky(x)
        lz = np.linalg.cholesky(z)
        u, s, vh = np.linalg.svd(dagger(lz) @ lx)
        v = dagger(vh)
        self.g = lx @ v / np.sqrt(s)
        self.ginv = (np.sqrt(s)[:, None] * vh) @ np.linalg.inv(lx)
        self.lam = s
        self.w = self.g @ dagger(self.g)

    def scale_primal(self, dx):
        return self.ginv @ dx @ dagger(self.ginv)

    def scale_dual(self, dz):
        return dagger(self.g) @ dz @ self.g

    def max_step(self, scaled: np.ndarray) -> float:
        r = 1.0 / np.sqrt(self.lam)
        h = hermitize(r[:, None] * scaled * r[None, :])
        lo = np.linalg.eigvalsh(h)[0]
        return math.inf if lo >= 0 else -1.0 / lo

    def unscale_rc(self, v: np.ndarray) -> np.ndarray:
        """``G L^-1(v) G^H`` where ``L(U) = (lam U + U lam) / 2``."""
        lam = self.lam
        rt = 2.0 * v / (lam[:, None] + lam[None, :])
        return self.g @ rt @ dagger(self.g)


MAX_RUNS = 8


def _scatter(target: np.ndarray, values: np.ndarray, rows: np.ndarray, runs) -> None:
    """``target[ix_(rows, rows)] += values`` using slices when rows form few runs."""
    if len(runs) > MAX_RUNS:
        target[np.ix_(rows, rows)] += values
        return
    for a0, a1, ta in runs:
        for b0, b1, tb in runs:
            target[ta:ta + a1 - a0, tb:tb + b1 - b0] += values[a0:a1, b0:b1]


REGULARIZATION = (0.0, 1e-15, 1e-13, 1e-11, 1e-9)


def _cholesky(mat: np.ndarray):
    """Cholesky factor with a diagonal shift fallback; returns ``(factor, shift)`` or ``None``."""
    m = mat.shape[0]
    top = float(np.max(np.diag(mat))) if m else 0.0
    for reg in REGULARIZATION:
        shifted = mat if reg == 0.0 else mat + reg * top * np.eye(m)
        try:
            factor = scipy.linalg.cho_factor(shifted, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(factor[0])):
            return factor, reg
    return None


def _schur_solver(schur: np.ndarray, partition=None):
    """Solver for the Schur complement system, falling back to pivoted LU.

    Near a degenerate optimum the assembled matrix can lose definiteness to
    rounding; LU with partial pivoting still gives a usable direction there.
    Returns ``None`` only if that fails as well.
    """
    solver = _cholesky_solver(schur, partition)
    if solver is not None:
        return solver
    log.debug("schur complement indefinite; using LU")
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu = scipy.linalg.lu_factor(schur, check_finite=False)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError, ValueError):
            return None
    if not np.all(np.isfinite(lu[0])):
        return None
    return lambda r: scipy.linalg.lu_solve(lu, r, check_finite=False)


def _cholesky_solver(schur: np.ndarray, partition=None):
    """Cholesky-based solver for the Schur complement system.

    Plain Cholesky, or block elimination when ``partition`` (interior groups,
    border) is given: each interior diagonal block is factored on its own and
    only the border Schur complement is dense. A numerically indefinite factor
    gets a small multiple of its largest diagonal entry added; two rounds of
    iterative refinement against the unmodified matrix then recover accuracy.
    Returns ``None`` when every shift fails.
    """
    m = schur.shape[0]
    if m == 0:
        return lambda r: np.zeros(0)
    interior, border = partition if partition is not None else ([], None)
    if not interior:
        got = _cholesky(schur)
        if got is None:
            return None
        factor, reg = got
        base = lambda r: scipy.linalg.cho_solve(factor, r, check_finite=False)  # noqa: E731
        shifted = reg > 0
    else:
        parts = []
        shifted = False
        reduced = schur[np.ix_(border, border)].copy()
        for rows in interior:
            got = _cholesky(schur[np.ix_(rows, rows)])
            if got is None:
                return None
            factor, reg = got
            shifted |= reg > 0
            coupling = schur[np.ix_(rows, border)]
            solved = scipy.linalg.cho_solve(factor, coupling, check_finite=False)
            reduced -= coupling.T @ solved
            parts.append((rows, factor, coupling))
        got = _cholesky(0.5 * (reduced + reduced.T))
        if got is None:
            return None
        rfactor, reg = got
        shifted |= reg > 0

        def base(r):
            rb = r[border].copy()
            inner = []
            for rows, factor, coupling in parts:
                t = scipy.linalg.cho_solve(factor, r[rows], check_finite=False)
                inner.append(t)
                rb -= coupling.T @ t
            x = np.empty_like(r)
            xb = scipy.linalg.cho_solve(rfactor, rb, check_finite=False)
            x[border] = xb
            for (rows, factor, coupling), t in zip(parts, inner):
                x[rows] = t - scipy.linalg.cho_solve(factor, coupling @ xb, check_finite=False)
            return x

    if not shifted:
        return base
    log.debug("schur complement regularized")

    def refined(r):
        x = base(r)
        for _ in range(2):
            x = x + base(r - schur @ x)
        return x

    return refined


def _inner(a, b) -> float:
    return float(np.real(np.vdot(a, b)))


def solve(p: SdpProblem, gap_tolerance: float = 1e-7, feas_tolerance: float = 1e-8,
          max_iterations: int = 200, check_rank: bool = True) -> SdpSolution:
    """Solve ``p``; see the module docstring for the problem form.

    On ``OPTIMAL`` the primal/dual gap is at most ``gap_tolerance`` and both
    residuals (max-abs entry) are at most ``feas_tolerance``. ``INFEASIBLE``
    means the residuals stalled above ``STALL_LEVEL`` for ``STALL_WINDOW``
    iterations or one objective diverged (the other side is then infeasible).
    ``NEAR_OPTIMAL`` replaces a numerical breakdown when the best iterate is
    within ``NEAR_FACTOR`` of every tolerance.
    Every non-optimal status returns the best iterate seen.
    """
    if check_rank:
        p.check_rank()
    m = p.num_constraints
    nblk = p.num_blocks
    dims = [b.dim for b in p.blocks]
    n_total = sum(dims)
    b = p.rhs
    cmax = max((float(np.max(np.abs(c))) for c in p.objective), default=0.0)
    xi = 1.0 + cmax
    xs = [xi * np.eye(d, dtype=complex) for d in dims]
    zs = [xi * np.eye(d, dtype=complex) for d in dims]
    y = np.zeros(m)

    history: list[IterationRecord] = []
    best = None
    best_score = math.inf
    status = SdpStatus.MAX_ITERATIONS
    stall = 0
    rnorm_prev = math.inf

    def residuals(xs, y, zs):
        rp = b - p.apply(xs)
        aty = p.adjoint(y)
        rd = [c - z - a for c, z, a in zip(p.objective, zs, aty)]
        return rp, rd

    schur = np.empty((m, m))
    it = 0
    while True:
        rp, rd = residuals(xs, y, zs)
        pobj = p.objective_value(xs)
        dobj = float(b @ y)
        gap = abs(pobj - dobj)
        prim_res = float(np.max(np.abs(rp))) if m else 0.0
        dual_res = max(float(np.max(np.abs(r))) for r in rd) if nblk else 0.0
        mu = sum(_inner(x, z) for x, z in zip(xs, zs)) / n_total

        score = max(gap / gap_tolerance, prim_res / feas_tolerance, dual_res / feas_tolerance)
        if score < best_score:
            best_score = score
            best = ([x.copy() for x in xs], y.copy(), [z.copy() for z in zs], pobj, dobj, gap,
                    prim_res, dual_res, it)

        if gap <= gap_tolerance and prim_res <= feas_tolerance and dual_res <= feas_tolerance:
            status = SdpStatus.OPTIMAL
            break
        if it >= max_iterations:
            status = SdpStatus.MAX_ITERATIONS
            break

        if max(abs(pobj), abs(dobj)) > DIVERGENCE_LEVEL * (1.0 + cmax + float(np.max(np.abs(b), initial=0.0))):
            status = SdpStatus.INFEASIBLE
            break
        rnorm = max(prim_res, dual_res)
        if rnorm > STALL_LEVEL and rnorm > 0.5 * rnorm_prev:
            stall += 1
        else:
            stall = 0
        rnorm_prev = min(rnorm_prev, rnorm)
        if stall >= STALL_WINDOW:
            status = SdpStatus.INFEASIBLE
            break

        try:
            scal = [_Scaling(x, z) for x, z in zip(xs, zs)]
        except np.linalg.LinAlgError:
            log.debug("iteration %d: scaling factorization failed", it)
            status = SdpStatus.NUMERICAL_FAILURE
            break

        schur.fill(0.0)
        for group, (rows, runs) in p.row_groups.items():
            acc = np.zeros((rows.size, rows.size))
            for k in group:
                a = p.coefficient_rows(k)[1]
                kw = np.kron(scal[k].w, scal[k].w.T)
                ak = np.asarray(a.conj() @ kw)
                acc += np.real(np.asarray(a @ ak.T)).T
            _scatter(schur, 0.5 * (acc + acc.T), rows, runs)
        solve_schur = _schur_solver(schur, p.schur_partition)
        if solve_schur is None:
            log.debug("iteration %d: Schur matrix is not positive definite", it)
            status = SdpStatus.NUMERICAL_FAILURE
            break

        wrdw = [s.w @ r @ s.w for s, r in zip(scal, rd)]

        def schur_apply(v):
            return p.apply([s.w @ a @ s.w for s, a in zip(scal, p.adjoint(v))])

        def direction(rcs):
            h = [a - c for a, c in zip(wrdw, rcs)]
            rhs = rp + p.apply(h)
            dy = solve_schur(rhs)
            # the assembled Schur matrix loses accuracy near the optimum; refine against the exact operator
            for _ in range(REFINE_STEPS):
                res = rhs - schur_apply(dy)
                if float(np.max(np.abs(res))) <= 1e-14 * (1.0 + float(np.max(np.abs(rhs)))):
                    break
                dy = dy + solve_schur(res)
            atdy = p.adjoint(dy)
            dzs = [hermitize(r - a) for r, a in zip(rd, atdy)]
            dxs = [hermitize(c - s.w @ dz @ s.w) for c, s, dz in zip(rcs, scal, dzs)]
            return dxs, dy, dzs

        def step_lengths(dxs, dzs):
            ap = min(min(s.max_step(s.scale_primal(dx)) for s, dx in zip(scal, dxs)), 1e300)
            ad = min(min(s.max_step(s.scale_dual(dz)) for s, dz in zip(scal, dzs)), 1e300)
            return min(1.0, STEP_FRACTION * ap), min(1.0, STEP_FRACTION * ad)

        # predictor
        dxs, dy, dzs = direction([-x for x in xs])
        ap, ad = step_lengths(dxs, dzs)
        mu_aff = sum(_inner(x + ap * dx, z + ad * dz) for x, dx, z, dz in zip(xs, dxs, zs, dzs)) / n_total
        sigma = min(1.0, max(0.0, mu_aff / mu) ** 3) if mu > 0 else 0.0

        # corrector
        rcs = []
        for s, dx, dz in zip(scal, dxs, dzs):
            dxt = s.scale_primal(dx)
            dzt = s.scale_dual(dz)
            v = sigma * mu * np.eye(s.lam.size) - np.diag(s.lam**2) - 0.5 * (dxt @ dzt + dzt @ dxt)
            rcs.append(s.unscale_rc(v))
        dxs, dy, dzs = direction(rcs)
        ap, ad = step_lengths(dxs, dzs)

        if not (np.isfinite(ap) and np.isfinite(ad)) or max(ap, ad) < 1e-12:
            log.debug("iteration %d: step lengths collapsed (%g, %g)", it, ap, ad)
            status = SdpStatus.NUMERICAL_FAILURE
            break

        xs = [hermitize(x + ap * dx) for x, dx in zip(xs, dxs)]
        y = y + ad * dy
        zs = [hermitize(z + ad * dz) for z, dz in zip(zs, dzs)]
        it += 1
        history.append(IterationRecord(it, pobj, dobj, prim_res, dual_res, mu, ap, ad))

    if status is not SdpStatus.OPTIMAL:
        xs, y, zs, pobj, dobj, gap, prim_res, dual_res, _ = best
        if status is SdpStatus.NUMERICAL_FAILURE and best_score <= NEAR_FACTOR:
            status = SdpStatus.NEAR_OPTIMAL
        log.debug("sdp solve ended with status %s after %d iterations", status.value, it)
    return SdpSolution(status=status, primal_value=pobj, dual_value=dobj, block_values=xs,
                       dual_vector=y, dual_slacks=zs, iterations=it, gap=gap,
                       primal_residual=prim_res, dual_residual=dual_res, history=history)


# ---------------------------------------------------------------- text dump


def _write_entries(lines: list, mat: np.ndarray) -> None:
    nz = np.argwhere(mat != 0)
    lines.append(str(len(nz)))
    for i, j in nz:
        z = mat[i, j]
        lines.append(f"{i} {j} {z.real:.17g} {z.imag:.17g}")


def format_problem(p: SdpProblem) -> str:
    """Plain-text dump for cross-checking with external solvers.

    Layout (one item per line)::

        sdp-problem 1
        blocks <K>
        block <label> <dim>                  (K lines)
        objective <block index> <nnz>        (one per block, then nnz entry lines)
        constraints <m>
        constraint <c> <rhs> <terms>         (then per term:)
        term <block index> <nnz>             (then nnz entry lines)

    Entry lines are ``row col re im`` with 17 significant digits; blocks are
    indexed from 0 in the order listed.
    """
    lines = ["sdp-problem 1", f"blocks {p.num_blocks}"]
    lines += [f"block {blk.label} {blk.dim}" for blk in p.blocks]
    for k, c in enumerate(p.objective):
        body: list = []
        _write_entries(body, c)
        lines.append(f"objective {k} {body[0]}")
        lines += body[1:]
    lines.append(f"constraints {p.num_constraints}")
    per_constraint: dict[int, list[int]] = {}
    for k in range(p.num_blocks):
        for c in p.coefficient_rows(k)[0]:
            per_constraint.setdefault(int(c), []).append(k)
    for c in range(p.num_constraints):
        ks = per_constraint.get(c, [])
        lines.append(f"constraint {c} {p.rhs[c]:.17g} {len(ks)}")
        for k in ks:
            body = []
            _write_entries(body, p.constraint_matrix(c, k))
            lines.append(f"term {k} {body[0]}")
            lines += body[1:]
    return "\n".join(lines) + "\n"


def parse_problem(text: str) -> SdpProblem:
    it = iter([ln.split() for ln in text.splitlines() if ln.strip()])

    def expect(tag):
        f = next(it)
        if f[0] != tag:
            raise ValueError(f"expected '{tag}', got {' '.join(f)!r}")
        return f

    if expect("sdp-problem")[1] != "1":
        raise ValueError("unsupported dump version")
    nb = int(expect("blocks")[1])
    blocks = []
    for _ in range(nb):
        f = expect("block")
        blocks.append(Block(f[1], int(f[2])))

    def read_matrix(d, nnz):
        mat = np.zeros((d, d), dtype=complex)
        for _ in range(nnz):
            i, j, re, im = next(it)
            mat[int(i), int(j)] = complex(float(re), float(im))
        return mat

    objective = [None] * nb
    for _ in range(nb):
        f = expect("objective")
        k = int(f[1])
        objective[k] = read_matrix(blocks[k].dim, int(f[2]))
    m = int(expect("constraints")[1])
    equalities = []
    for _ in range(m):
        f = expect("constraint")
        terms = {}
        for _ in range(int(f[3])):
            g = expect("term")
            k = int(g[1])
            terms[k] = read_matrix(blocks[k].dim, int(g[2]))
        equalities.append((terms, float(f[2])))
    return SdpProblem.from_equalities(blocks, objective, equalities)


def dump_problem(p: SdpProblem, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_problem(p))


def load_problem(path) -> SdpProblem:
    with open(path) as fh:
        return parse_problem(fh.read())
