"""Svetlichny operators, their expectation on dephasing states, and closed-form decay curves.

Each party measures one of two dichotomic observables, ``M`` (unprimed) or
``M'`` (primed). The n-party Svetlichny operator is

    S_n = sum over x in {M, M'}^n of  s(j(x)) * X_1 (x) X_2 (x) ... (x) X_n

where ``j(x)`` counts the parties using the unprimed observable and
``s(j) = -1, -1, +1, +1`` for ``j mod 4 = 0, 1, 2, 3``. For three parties
this is ``M M M + M M M' + M M' M + M' M M - M' M' M' - M' M' M - M' M M' - M M' M'``.
Hybrid local models obey ``|<S_n>| <= 2**(n-1)``; quantum states reach at
most ``2**(n-1) * sqrt(2)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import DephasingChannel, FieldOrientation
from .errors import DimensionMismatch, NonMonotoneTrajectory, UnknownFamily, UnsupportedPartyCount
from .linalg import PAULI, kron_all, num_qubits_of
from .states import ghz, w, white_noise_mix

SUPPORTED_PARTIES = (3, 4)
W_ANGLE_DEG = 54.736
W_ANGLE = math.radians(W_ANGLE_DEG)
GHZ_ANGLE_SUM = -math.pi / 4
ORIENTATION_X = (1.0, 0.0, 0.0)
ORIENTATION_211 = (2 / math.sqrt(6), 1 / math.sqrt(6), 1 / math.sqrt(6))

_SIGN_BY_UNPRIMED = (-1.0, -1.0, 1.0, 1.0)
# refinement moves must beat the grid optimum by more than rounding noise
_IMPROVE_TOL = 1e-12
_TIE_TOL = 1e-9


def classical_bound(n: int) -> float:
    return float(2 ** (n - 1))


def quantum_bound(n: int) -> float:
    return 2 ** (n - 1) * math.sqrt(2)


@dataclass(frozen=True)
class DichotomicObservable:
    """``b . sigma`` for a unit Bloch vector ``b``; eigenvalues are -1 and +1."""

    bloch: tuple[float, float, float]

    def __post_init__(self):
        b = np.asarray(self.bloch, dtype=float)
        if b.shape != (3,):
            raise ValueError(f"Bloch vector needs 3 components, got {self.bloch}")
        norm = float(np.linalg.norm(b))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"Bloch vector must have unit length, got norm {norm}")
        object.__setattr__(self, "bloch", tuple(float(x) for x in b / norm))

    @classmethod
    def combo(cls, x: float = 0.0, y: float = 0.0, z: float = 0.0) -> "DichotomicObservable":
        return cls((x, y, z))

    @property
    def matrix(self) -> np.ndarray:
        return sum(c * p for c, p in zip(self.bloch, PAULI))


@dataclass(frozen=True)
class SvetlichnySetting:
    """Per-party ``(M, M')`` pairs plus a tag describing how they were built."""

    pairs: tuple[tuple[DichotomicObservable, DichotomicObservable], ...]
    family: str = "explicit"
    params: tuple[float, ...] = ()

    @property
    def num_parties(self) -> int:
        return len(self.pairs)

    def swapped(self) -> "SvetlichnySetting":
        return SvetlichnySetting(tuple((b, a) for a, b in self.pairs), self.family + "-swapped", self.params)

    @property
    def tag(self) -> str:
        if not self.params:
            return self.family
        # angles in degrees, ';'-separated so the tag needs no CSV quoting
        return f"{self.family}[" + ";".join(f"{math.degrees(p):.6g}" for p in self.params) + "]"


def _ghz_pair(theta: float) -> tuple[DichotomicObservable, DichotomicObservable]:
    # (M, M') = R(theta) (sigma_y, sigma_x)
    c, s = math.cos(theta), math.sin(theta)
    return DichotomicObservable((-s, c, 0.0)), DichotomicObservable((c, s, 0.0))


def ghz_family(*angles: float) -> SvetlichnySetting:
    """Party A measures ``sigma_y`` / ``sigma_x``; party K the same pair rotated by ``angles[K-1]``."""
    if len(angles) == 1 and isinstance(angles[0], (tuple, list, np.ndarray)):
        angles = tuple(angles[0])
    if len(angles) + 1 not in SUPPORTED_PARTIES:
        raise UnsupportedPartyCount(f"need {[n - 1 for n in SUPPORTED_PARTIES]} angles, got {len(angles)}")
    pairs = (_ghz_pair(0.0),) + tuple(_ghz_pair(a) for a in angles)
    return SvetlichnySetting(pairs, "ghz", tuple(float(a) for a in angles))


def ghz_default(n: int, total: float = GHZ_ANGLE_SUM) -> SvetlichnySetting:
    """GHZ-family setting with the angle sum split evenly over parties B, C, ..."""
    return ghz_family(*([total / (n - 1)] * (n - 1)))


def w_family(theta: float = W_ANGLE, n: int = 3) -> SvetlichnySetting:
    """Every party: ``M = cos t sigma_x + sin t sigma_z``, ``M' = cos t sigma_x - sin t sigma_z``."""
    if n not in SUPPORTED_PARTIES:
        raise UnsupportedPartyCount(f"party count must be one of {SUPPORTED_PARTIES}, got {n}")
    c, s = math.cos(theta), math.sin(theta)
    pair = (DichotomicObservable((c, 0.0, s)), DichotomicObservable((c, 0.0, -s)))
    return SvetlichnySetting((pair,) * n, "w", (float(theta),))


def term_sign(num_unprimed: int) -> float:
    return _SIGN_BY_UNPRIMED[num_unprimed % 4]


def svetlichny_operator(setting: SvetlichnySetting) -> np.ndarray:
    n = setting.num_parties
    if n not in SUPPORTED_PARTIES:
        raise UnsupportedPartyCount(f"party count must be one of {SUPPORTED_PARTIES}, got {n}")
    mats = [(a.matrix, b.matrix) for a, b in setting.pairs]
    op = np.zeros((2**n, 2**n), dtype=complex)
    for choice in itertools.product((0, 1), repeat=n):
        unprimed = choice.count(0)
        op += term_sign(unprimed) * kron_all(mats[k][c] for k, c in enumerate(choice))
    return op


def expectation(op: np.ndarray, rho) -> float:
    """``Tr(S rho)``; the imaginary residue must stay below 1e-10."""
    r = np.asarray(rho, dtype=complex)
    if r.shape != op.shape:
        raise DimensionMismatch(f"operator {op.shape} and state {r.shape} differ in shape")
    z = np.einsum("ij,ji->", op, r)
    if abs(z.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary part {z.imag:.3e}")
    return float(z.real)


# ------------------------------------------------------------- angle optimization


def correlation_tensor(rho) -> np.ndarray:
    """``T[p1, .., pn] = Tr(rho sigma_p1 (x) .. (x) sigma_pn)`` with p in (x, y, z)."""
    r = np.asarray(rho, dtype=complex)
    n = num_qubits_of(r)
    t = np.empty((3,) * n)
    for idx in itertools.product(range(3), repeat=n):
        t[idx] = np.real(np.einsum("ij,ji->", kron_all(PAULI[i] for i in idx), r))
    return t


def _sign_tensor(n: int) -> np.ndarray:
    s = np.empty((2,) * n)
    for choice in itertools.product((0, 1), repeat=n):
        s[choice] = term_sign(choice.count(0))
    return s


def _ghz_coeffs(theta: np.ndarray) -> np.ndarray:
    """Shape ``(G, 2, 3)``: Bloch vectors of ``(M, M')`` for each rotation angle."""
    c, s = np.cos(theta), np.sin(theta)
    z = np.zeros_like(theta)
    return np.stack([np.stack([-s, c, z], -1), np.stack([c, s, z], -1)], axis=-2)


def _w_coeffs(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    z = np.zeros_like(theta)
    return np.stack([np.stack([c, z, s], -1), np.stack([c, z, -s], -1)], axis=-2)


def _ghz_partial(t: np.ndarray, grids: Sequence[np.ndarray]) -> np.ndarray:
    """Contract every party except the last; returns ``(prod(grid sizes), 6)``.

    Column ``3 * x + p`` pairs with Bloch component ``p`` of the last party's
    observable ``x`` (0 unprimed, 1 primed).
    """
    n = t.ndim
    acc = np.tensordot(t, _ghz_coeffs(np.zeros(1))[0], axes=([0], [1]))  # (p2..pn, x1)
    for g in grids:
        acc = np.tensordot(acc, _ghz_coeffs(np.asarray(g, float)), axes=([0], [2]))
    # acc axes: p_n, x1, (G, x) per contracted party
    m = len(grids)
    order = [0] + [2 + 2 * k for k in range(m)] + [1] + [3 + 2 * k for k in range(m)]
    acc = np.transpose(acc, order)  # p_n, G..., x1, x...
    acc = np.tensordot(acc, _sign_tensor(n), axes=(list(range(m + 1, 2 * m + 2)), list(range(m + 1))))
    # acc axes: p_n, G..., x_n
    acc = np.moveaxis(acc, 0, -1)  # G..., x_n, p_n
    return acc.reshape(-1, 6) if m else acc.reshape(1, 6)


def ghz_family_values(rho, grids: Sequence[np.ndarray]) -> np.ndarray:
    """``<S>`` on the outer product of angle grids for parties B, C, (D)."""
    t = correlation_tensor(rho)
    head = _ghz_partial(t, grids[:-1])
    vals = head @ _last_party_matrix(grids[-1])
    return vals.reshape([len(g) for g in grids])


def _last_party_matrix(grid) -> np.ndarray:
    # head columns run over (x_n, p_n); match that order
    c = _ghz_coeffs(np.asarray(grid, float))  # (G, x, p)
    return c.reshape(len(c), 6).T


def _grid_argmax(t: np.ndarray, grid: np.ndarray, chunk: int = 4096) -> tuple[tuple[int, ...], float]:
    """First (C-order) near-maximizer of ``|<S>|`` over ``grid ** (n - 1)``, scanned in row chunks.

    Values within ``_TIE_TOL`` of the maximum count as ties, so the lexicographically
    smallest angle tuple wins regardless of rounding.
    """
    m = t.ndim - 1
    head = _ghz_partial(t, [grid] * (m - 1))
    tail = _last_party_matrix(grid)
    per_chunk = []
    for start in range(0, len(head), chunk):
        block = np.abs(head[start:start + chunk] @ tail).ravel()
        top = float(block.max())
        first = int(np.argmax(block >= top - _TIE_TOL))
        per_chunk.append((top, start * len(grid) + first, float(block[first])))
    overall = max(c[0] for c in per_chunk)
    _, flat, value = next(c for c in per_chunk if c[0] >= overall - _TIE_TOL)
    return tuple(int(i) for i in np.unravel_index(flat, (len(grid),) * m)), value


def w_family_values(rho, thetas: np.ndarray) -> np.ndarray:
    t = correlation_tensor(rho)
    n = t.ndim
    sign = _sign_tensor(n)
    out = np.empty(len(thetas))
    for i, c in enumerate(_w_coeffs(np.asarray(thetas, dtype=float))):
        acc = t
        for _ in range(n):
            acc = np.tensordot(acc, c, axes=([0], [1]))  # consume p_k, append x_k
        out[i] = float(np.sum(sign * acc))
    return out


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    inv = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def optimize_angles(rho, family: str, grid_step_deg: float = 1.0, sweeps: int = 4):
    """Maximize ``|<S>|`` over a setting family.

    ``family`` is ``"ghz"`` (angles of parties B, C, (D) in ``[-pi, pi)``) or
    ``"w"`` (one shared angle in ``[0, pi/2]``; the other quadrants are
    images of it under relabelings that leave ``|<S>|`` unchanged). A 1-degree
    grid is refined by per-coordinate golden-section search. Returns
    ``(angles, value, setting)``.
    """
    r = np.asarray(rho, dtype=complex)
    n = num_qubits_of(r)
    if n not in SUPPORTED_PARTIES:
        raise UnsupportedPartyCount(f"party count must be one of {SUPPORTED_PARTIES}, got {n}")
    step = math.radians(grid_step_deg)
    if family == "ghz":
        grid = -math.pi + step * np.arange(int(round(2 * math.pi / step)))
        idx, best = _grid_argmax(correlation_tensor(r), grid)
        angles = [float(grid[i]) for i in idx]
        op_value = lambda a: abs(float(ghz_family_values(r, [[x] for x in a]).ravel()[0]))  # noqa: E731
        for _ in range(sweeps):
            for k in range(n - 1):
                def along(x, k=k):
                    trial = list(angles)
                    trial[k] = x
                    return op_value(trial)
                x, v = _golden_max(along, angles[k] - step, angles[k] + step)
                if v > best + _IMPROVE_TOL:
                    best, angles[k] = v, x
        return tuple(angles), best, ghz_family(*angles)
    if family == "w":
        grid = step * np.arange(int(round((math.pi / 2) / step)) + 1)
        vals = np.abs(w_family_values(r, grid))
        i = int(np.argmax(vals))
        theta, best = float(grid[i]), float(vals[i])
        x, v = _golden_max(lambda a: abs(float(w_family_values(r, np.array([a]))[0])),
                           max(0.0, theta - step), min(math.pi / 2, theta + step))
        if v > best + _IMPROVE_TOL:
            theta, best = x, v
        return (theta,), best, w_family(theta, n)
    raise UnknownFamily(f"unknown setting family {family!r}; use 'ghz' or 'w'")


# ---------------------------------------------------------------- closed forms


def _w100(alpha, t, theta=W_ANGLE):
    return (alpha * math.sin(theta) * math.exp(-3 * t) / 2
            * (3 + 9 * math.exp(2 * t) + math.cos(2 * theta) * (-3 + 7 * math.exp(2 * t))))


def _w100_stable(alpha, t, theta=W_ANGLE):
    # same expression with the exponentials multiplied through, finite at t = inf
    e1, e3 = math.exp(-t), math.exp(-3 * t)
    return alpha * math.sin(theta) / 2 * (3 * e3 + 9 * e1 + math.cos(2 * theta) * (-3 * e3 + 7 * e1))


def _w211(alpha, t):
    e1, e2 = math.exp(-t), math.exp(-2 * t)
    # 1.3 a e^{-3t} (0.444 + e^t)(1.83 + e^t(-0.5134 + e^t)), expanded in powers of e^{-t}
    return 1.3 * alpha * (0.444 * e1 + 1.0) * (1.83 * e2 - 0.5134 * e1 + 1.0)


CLOSED_FORMS: dict[str, Callable[[float, float], float]] = {
    "GHZ3_n100": lambda a, t: a * (3 * math.exp(-2 * t) + 5) / math.sqrt(2),
    "GHZ3_n211": lambda a, t: a * (20 + 1095 * math.exp(-t) + 372 * math.exp(-2 * t)
                                   + 241 * math.exp(-3 * t)) / (216 * math.sqrt(2)),
    "W3_n100": _w100_stable,
    "W3_n211": _w211,
    "GHZ4_n100": lambda a, t: a * (19 + 12 * math.exp(-2 * t) + math.exp(-4 * t)) / (2 * math.sqrt(2)),
    "GHZ4_n211": lambda a, t: a * (329 + 6440 * math.exp(-t) + 2996 * math.exp(-2 * t)
                                   + 3352 * math.exp(-3 * t) + 707 * math.exp(-4 * t)) / (864 * math.sqrt(2)),
}


@dataclass(frozen=True)
class Family:
    name: str
    state: str
    num_qubits: int
    orientation: tuple[float, float, float]

    def initial_state(self, alpha: float) -> np.ndarray:
        psi = ghz(self.num_qubits) if self.state == "ghz" else w(self.num_qubits)
        return white_noise_mix(psi, alpha)

    def channel(self) -> DephasingChannel:
        return DephasingChannel(self.num_qubits, FieldOrientation(self.orientation))

    def setting(self) -> SvetlichnySetting:
        if self.state == "ghz":
            return ghz_default(self.num_qubits)
        return w_family(W_ANGLE, self.num_qubits)

    @property
    def threshold(self) -> float:
        return classical_bound(self.num_qubits)


FAMILIES = {
    "GHZ3_n100": Family("GHZ3_n100", "ghz", 3, ORIENTATION_X),
    "GHZ3_n211": Family("GHZ3_n211", "ghz", 3, ORIENTATION_211),
    "W3_n100": Family("W3_n100", "w", 3, ORIENTATION_X),
    "W3_n211": Family("W3_n211", "w", 3, ORIENTATION_211),
    "GHZ4_n100": Family("GHZ4_n100", "ghz", 4, ORIENTATION_X),
    "GHZ4_n211": Family("GHZ4_n211", "ghz", 4, ORIENTATION_211),
}

# maximal violation each closed form must reproduce at t = 0 (per unit alpha), with tolerance
_T0_TARGETS = {
    "GHZ3_n100": (4 * math.sqrt(2), 1e-12),
    "GHZ3_n211": (4 * math.sqrt(2), 1e-12),
    "GHZ4_n100": (8 * math.sqrt(2), 1e-12),
    "GHZ4_n211": (8 * math.sqrt(2), 1e-12),
    "W3_n100": (4.3546, 1e-4),
    "W3_n211": (4.3546, 2e-2 * 4.3546),
}


def _self_check() -> None:
    for name, (target, tol) in _T0_TARGETS.items():
        got = CLOSED_FORMS[name](1.0, 0.0)
        if abs(got - target) > tol:
            raise AssertionError(f"closed form {name} gives {got} at t=0, expected {target}")
    assert abs(_w100(1.0, 0.7) - _w100_stable(1.0, 0.7)) < 1e-12


_self_check()


def analytic_oracle(family: str, alpha: float, t: float) -> float:
    """Closed-form ``|<S>|`` for one of the six named decay families; ``t`` may be ``inf``."""
    try:
        f = CLOSED_FORMS[family]
    except KeyError:
        raise UnknownFamily(f"unknown family {family!r}; known: {sorted(CLOSED_FORMS)}") from None
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return float(f(alpha, t))


def pipeline_value(family: str, alpha: float, t: float) -> float:
    """``|<S>|`` for a named family computed by evolving the state numerically."""
    try:
        fam = FAMILIES[family]
    except KeyError:
        raise UnknownFamily(f"unknown family {family!r}; known: {sorted(FAMILIES)}") from None
    ch = fam.channel()
    rho0 = fam.initial_state(alpha)
    rho = ch.asymptotic(rho0) if math.isinf(t) else ch.evolve(rho0, t)
    return abs(expectation(svetlichny_operator(fam.setting()), rho))


# ---------------------------------------------------------------- death times


def _bisect(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def death_time(target, alpha: float | None = None, threshold: float | None = None,
               horizon: float = 20.0, step: float = 0.01, tol: float = 1e-6) -> float | None:
    """Time at which ``|<S>(t)|`` falls to the hybrid-local bound for good.

    ``target`` is a family name (``alpha`` required, closed form used), a
    ``(channel, rho0, setting)`` triple (numerical evolution), or a callable
    ``t -> |<S>(t)|`` (``threshold`` required). The trajectory is sampled on
    a grid of ``step`` over ``[0, horizon]`` and the crossing is bisected to
    ``tol``. Returns ``None`` if ``|<S>(0)|`` does not exceed the threshold and
    ``math.inf`` if the trajectory is still above it at the horizon.

    Raises NonMonotoneTrajectory (carrying every bracketed crossing) when the
    grid shows the trajectory crossing the threshold more than once.
    """
    if isinstance(target, str):
        if alpha is None:
            raise ValueError("alpha is required for a named family")
        fam = FAMILIES.get(target)
        if fam is None:
            raise UnknownFamily(f"unknown family {target!r}")
        traj = lambda t: analytic_oracle(target, alpha, t)  # noqa: E731
        threshold = fam.threshold if threshold is None else threshold
    elif isinstance(target, tuple):
        ch, rho0, setting = target
        op = svetlichny_operator(setting)
        traj = lambda t: abs(expectation(op, ch.evolve(rho0, t)))  # noqa: E731
        threshold = classical_bound(setting.num_parties) if threshold is None else threshold
    elif callable(target):
        if threshold is None:
            raise ValueError("threshold is required with a callable trajectory")
        traj = target
    else:
        raise TypeError(f"unsupported death_time target {target!r}")

    excess = lambda t: traj(t) - threshold  # noqa: E731
    if excess(0.0) <= 0:
        return None
    grid = np.linspace(0.0, horizon, int(round(horizon / step)) + 1)
    vals = np.array([excess(float(t)) for t in grid])
    above = vals > 0
    flips = np.flatnonzero(above[1:] != above[:-1])
    if flips.size == 0:
        return math.inf
    crossings = [_bisect(excess, float(grid[i]), float(grid[i + 1]), tol) for i in flips]
    if flips.size > 1:
        raise NonMonotoneTrajectory(f"trajectory crosses the threshold {flips.size} times", crossings)
    return crossings[0]


def ghz3_n100_death_time(alpha: float) -> float | None:
    """Closed-form inversion of the GHZ3_n100 decay: ``0.5 ln(3 / (4 sqrt2 / alpha - 5))``."""
    if alpha * 4 * math.sqrt(2) <= 4:
        return None
    return 0.5 * math.log(3.0 / (4 * math.sqrt(2) / alpha - 5))
