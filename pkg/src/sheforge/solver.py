"""Newton-Raphson solution of the selective harmonic elimination system.

For ``s`` bridges the unknowns are the switching angles theta_1..theta_s and
the equations are

    sum_k cos(theta_k)      = s * m
    sum_k cos(n_i theta_k)  = 0      for each eliminated order n_i

with ``s - 1`` eliminated orders. Newton runs on a batch of starting points
at once so that the multi-start and grid fallbacks cost about as much as a
single solve.
"""
from dataclasses import dataclass, field
import itertools
import math

import numpy as np

from .errors import DomainError, InfeasibleError, NumericalError
from .harmonics import HALF_PI, SwitchingAngleSet, analytic_thd

EPS_ANGLE = 1e-6
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50
MAX_HALVINGS = 10
N_JITTER = 20
JITTER_DEG = 8.0
GRID_POINTS = 12


@dataclass(frozen=True)
class HarmonicSet:
    """Harmonic orders to eliminate (sorted, distinct, each >= 2)."""

    orders: tuple

    def __post_init__(self):
        orders = tuple(int(n) for n in self.orders)
        if any(n < 2 for n in orders):
            raise DomainError("eliminated orders must be >= 2")
        if len(set(orders)) != len(orders):
            raise DomainError("eliminated orders must be distinct")
        if list(orders) != sorted(orders):
            raise DomainError("eliminated orders must be ascending")
        object.__setattr__(self, "orders", orders)

    def __len__(self):
        return len(self.orders)

    def __iter__(self):
        return iter(self.orders)

    @property
    def s(self):
        return len(self.orders) + 1

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if not text:
            return cls(())
        return cls(tuple(sorted(int(t) for t in text.split(","))))

    @classmethod
    def default(cls, s=4):
        """Lowest non-triplen odd orders from 5 up: {5, 7, 11} for s = 4."""
        return cls(tuple(itertools.islice((n for n in itertools.count(5, 2) if n % 3), s - 1)))

    @classmethod
    def low_odd(cls, s=4):
        """Lowest odd orders from 3 up: {3, 5, 7} for s = 4."""
        return cls(tuple(range(3, 3 + 2 * (s - 1), 2)))

    def __str__(self):
        return ",".join(str(n) for n in self.orders)


PRESETS = {"default": HarmonicSet.default, "low-odd": HarmonicSet.low_odd}


def _angles_array(angles):
    theta = np.asarray(angles, dtype=np.float64)
    if theta.ndim != 1 or theta.size < 1:
        raise DomainError("angles must be a non-empty 1-D sequence")
    return theta


def _check_dims(theta, hset):
    if len(hset) != theta.shape[-1] - 1:
        raise DomainError(
            f"{theta.shape[-1]} angles need {theta.shape[-1] - 1} eliminated orders, got {len(hset)}"
        )


def residual_vector(angles, m, hset):
    """(sum cos(theta) - s*m, sum cos(n_i*theta) ...) for the given angles."""
    theta = _angles_array(angles)
    _check_dims(theta, hset)
    orders = np.asarray(hset.orders, dtype=np.float64)
    r = np.empty(theta.size)
    r[0] = np.sum(np.cos(theta)) - theta.size * m
    r[1:] = np.cos(np.outer(orders, theta)).sum(axis=1)
    return r


def jacobian(angles, hset):
    theta = _angles_array(angles)
    _check_dims(theta, hset)
    orders = np.asarray(hset.orders, dtype=np.float64)
    J = np.empty((theta.size, theta.size))
    J[0] = -np.sin(theta)
    J[1:] = -orders[:, None] * np.sin(np.outer(orders, theta))
    return J


def _batch_residual(T, m, orders):
    # T: (..., s)
    r0 = np.cos(T).sum(axis=-1, keepdims=True) - T.shape[-1] * m
    rn = np.cos(orders[:, None] * T[..., None, :]).sum(axis=-1)
    return np.concatenate([r0, rn], axis=-1)


def _batch_jacobian(T, orders):
    j0 = -np.sin(T)[..., None, :]
    jn = -orders[:, None] * np.sin(orders[:, None] * T[..., None, :])
    return np.concatenate([j0, jn], axis=-2)


def gauss_solve(A, b):
    """Solve A x = b for a batch of small dense systems by partial pivoting.

    A has shape (B, s, s) and b shape (B, s). Singular members come back as
    NaN rows rather than raising, so one bad start does not sink the batch.
    """
    A = np.array(A, dtype=np.float64, copy=True)
    b = np.array(b, dtype=np.float64, copy=True)
    B, s, _ = A.shape
    rows = np.arange(B)
    singular = np.zeros(B, dtype=bool)
    for col in range(s):
        piv = col + np.argmax(np.abs(A[:, col:, col]), axis=1)
        # swap pivot row into place
        a_col, a_piv = A[rows, col].copy(), A[rows, piv].copy()
        A[rows, col], A[rows, piv] = a_piv, a_col
        b_col, b_piv = b[rows, col].copy(), b[rows, piv].copy()
        b[rows, col], b[rows, piv] = b_piv, b_col
        p = A[:, col, col]
        bad = np.abs(p) < 1e-300
        singular |= bad
        p = np.where(bad, 1.0, p)
        f = A[:, col + 1:, col] / p[:, None]
        A[:, col + 1:, col:] -= f[:, :, None] * A[:, col, None, col:]
        b[:, col + 1:] -= f * b[:, col, None]
    x = np.zeros((B, s))
    for row in range(s - 1, -1, -1):
        acc = b[:, row] - np.einsum("ij,ij->i", A[:, row, row + 1:], x[:, row + 1:])
        d = A[:, row, row]
        x[:, row] = acc / np.where(d == 0.0, 1.0, d)
    x[singular] = np.nan
    return x


def _project(T):
    return np.sort(np.clip(T, EPS_ANGLE, HALF_PI - EPS_ANGLE), axis=-1)


def _is_valid(T):
    return (
        np.all(np.isfinite(T), axis=-1)
        & (T[..., 0] > 0.0)
        & (T[..., -1] < HALF_PI)
        & np.all(np.diff(T, axis=-1) > 0.0, axis=-1)
    )


def _newton_batch(T0, m, orders, tol, max_iter):
    """Damped, projected Newton on every row of T0.

    Returns final iterates, their residual inf-norms and iteration counts.
    """
    T = _project(np.array(T0, dtype=np.float64))
    B = T.shape[0]
    r = _batch_residual(T, m, orders)
    norm = np.max(np.abs(r), axis=-1)
    iters = np.zeros(B, dtype=int)
    active = (norm >= tol) & np.isfinite(norm)
    halvings = 0.5 ** np.arange(MAX_HALVINGS + 1)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Ta = T[idx]
        step = gauss_solve(_batch_jacobian(Ta, orders), -r[idx])
        finite = np.all(np.isfinite(step), axis=-1)
        # non-finite steps retire the start; the caller moves on to other starts
        active[idx[~finite]] = False
        idx, Ta, step = idx[finite], Ta[finite], step[finite]
        if idx.size == 0:
            break
        trial = _project(Ta[:, None, :] + halvings[None, :, None] * step[:, None, :])
        tnorm = np.max(np.abs(_batch_residual(trial, m, orders)), axis=-1)
        better = tnorm < norm[idx, None]
        moved = better.any(axis=1)
        # a start whose residual no halving can reduce has stalled
        active[idx[~moved]] = False
        idx, trial, tnorm, better = idx[moved], trial[moved], tnorm[moved], better[moved]
        choice = np.argmax(better, axis=1)
        pick = np.arange(idx.size)
        T[idx] = trial[pick, choice]
        norm[idx] = tnorm[pick, choice]
        iters[idx] += 1
        r[idx] = _batch_residual(T[idx], m, orders)
        active[idx] = (norm[idx] >= tol) & np.isfinite(norm[idx])
    return T, norm, iters


def default_guess(s):
    """theta_k = arcsin((2k - 1) / (2s)), a natural-sampling estimate."""
    k = np.arange(1, s + 1)
    return np.arcsin((2 * k - 1) / (2.0 * s))


def grid_starts(s, points=GRID_POINTS):
    grid = (np.arange(points) + 0.5) * HALF_PI / points
    return np.array(list(itertools.combinations(grid, s)))


@dataclass(frozen=True)
class AngleSolution:
    m: float
    angles: tuple
    residual_norm: float
    iterations: int
    converged: bool
    hset: HarmonicSet = field(default_factory=HarmonicSet.default)
    stage: str = "guess"

    @property
    def s(self):
        return len(self.angles)

    @property
    def angle_set(self):
        return SwitchingAngleSet(self.angles)

    def degrees(self):
        return np.degrees(np.asarray(self.angles))

    def to_dict(self):
        return {
            "m": self.m,
            "s": self.s,
            "harmonics": list(self.hset.orders),
            "angles_rad": list(self.angles),
            "angles_deg": [float(d) for d in self.degrees()],
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "stage": self.stage,
        }


def _check_m(m):
    if not (math.isfinite(m) and 0.0 < m < 1.0):
        raise InfeasibleError(
            f"modulation index {m} is infeasible: sum cos(theta) must lie strictly inside (0, s)"
        )


def newton_solve(m, hset=None, guess="default", tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0, s=None):
    """Solve for switching angles at per-unit modulation index ``m``.

    Tries ``guess`` first, then ``N_JITTER`` seeded perturbations of it, then
    a coarse grid of ordered starts. Among converged candidates in a stage the
    one nearest the guess wins, which keeps sweeps on one branch. If nothing
    converges the lowest-residual iterate is returned with ``converged=False``.
    """
    _check_m(m)
    if tol <= 0:
        raise DomainError("tol must be positive")
    if hset is None:
        hset = HarmonicSet.default(4 if s is None else s)
    s = hset.s
    orders = np.asarray(hset.orders, dtype=np.float64)
    if isinstance(guess, str):
        if guess != "default":
            raise DomainError(f"unknown guess {guess!r}")
        g = default_guess(s)
    else:
        g = np.asarray(guess, dtype=np.float64).ravel()
        if g.size != s:
            raise DomainError(f"guess has {g.size} angles, expected {s}")
        if not np.all(np.isfinite(g)):
            g = default_guess(s)
    g = _project(g)
    rng = np.random.default_rng(seed)
    stages = (
        ("guess", g[None, :]),
        ("jitter", g[None, :] + rng.normal(0.0, math.radians(JITTER_DEG), size=(N_JITTER, s))),
        ("grid", grid_starts(s)),
    )
    best = None
    total_iters = 0
    for name, starts in stages:
        T, norm, iters = _newton_batch(starts, m, orders, tol, max_iter)
        total_iters += int(iters.sum())
        ok = (norm < tol) & _is_valid(T)
        if ok.any():
            cand = np.flatnonzero(ok)
            dist = np.max(np.abs(T[cand] - g), axis=-1)
            j = cand[np.argmin(dist)]
            return AngleSolution(float(m), tuple(float(t) for t in T[j]), float(norm[j]),
                                 int(iters[j]), True, hset, name)
        finite = np.isfinite(norm)
        if finite.any():
            j = int(np.flatnonzero(finite)[np.argmin(norm[finite])])
            if best is None or norm[j] < best[1]:
                best = (T[j], float(norm[j]), name)
    if best is None:
        raise NumericalError(f"Newton produced no finite iterate at m={m}")
    return AngleSolution(float(m), tuple(float(t) for t in best[0]), best[1],
                         total_iters, False, hset, best[2])


# --- tables -----------------------------------------------------------------

FLAG_NOT_CONVERGED = "not_converged"
FLAG_M_RANGE = "m_out_of_range"
FLAG_BAD_CELL = "bad_cell"
FLAG_ANGLES = "angle_order"
FLAG_RESIDUAL = "residual_above_tol"
FLAG_THD = "thd_mismatch"


@dataclass(frozen=True)
class AngleRow:
    m: float
    angles_deg: tuple
    thd_pct: float
    flags: tuple = ()

    @property
    def ok(self):
        return not self.flags

    def angles_rad(self):
        return np.radians(np.asarray(self.angles_deg, dtype=np.float64))

    def same_data(self, other):
        a = np.array((self.m, *self.angles_deg, self.thd_pct))
        b = np.array((other.m, *other.angles_deg, other.thd_pct))
        return a.shape == b.shape and np.array_equal(a, b, equal_nan=True)


@dataclass
class AngleTable:
    s: int
    rows: list = field(default_factory=list)
    hset: HarmonicSet = None
    max_order: int = 49

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def converged_rows(self):
        return [r for r in self.rows if r.ok]

    def m_values(self):
        return np.array([r.m for r in self.rows])

    def same_data(self, other):
        return (self.s == other.s and len(self) == len(other)
                and all(a.same_data(b) for a, b in zip(self.rows, other.rows)))


def m_grid(m_start, m_end, step):
    if step <= 0:
        raise DomainError("step must be positive")
    if m_start > m_end:
        return np.empty(0)
    n = int(math.floor((m_end - m_start) / step + 1e-9)) + 1
    return np.round(m_start + step * np.arange(n), 12)


def sweep_solutions(m_start, m_end, step, hset=None, tol=DEFAULT_TOL, max_order=49, seed=0, s=4):
    """Solve on a grid of modulation indices with continuation.

    Each converged solution seeds the next grid point. Points that do not
    converge keep NaN angles and carry the ``not_converged`` flag.
    """
    if hset is None:
        hset = HarmonicSet.default(s)
    grid = m_grid(m_start, m_end, step)
    if grid.size and not (0.0 < grid[0] and grid[-1] < 1.0):
        raise DomainError("sweep must stay inside 0 < m < 1")
    table = AngleTable(hset.s, [], hset, max_order)
    guess = "default"
    for m in grid:
        sol = newton_solve(float(m), hset, guess=guess, tol=tol, seed=seed)
        if sol.converged:
            guess = np.asarray(sol.angles)
            row = AngleRow(float(m), tuple(float(d) for d in sol.degrees()),
                           100.0 * analytic_thd(sol.angles, max_order))
        else:
            row = AngleRow(float(m), (math.nan,) * hset.s, math.nan, (FLAG_NOT_CONVERGED,))
        table.rows.append(row)
    return table


@dataclass
class RowAudit:
    m: float
    residual: list
    residual_norm: float
    thd_pct: float
    stored_thd_pct: float
    flags: list

    def to_dict(self):
        return {
            "m": self.m,
            "residual": self.residual,
            "residual_3sf": [f"{v:.3g}" for v in self.residual] if self.residual else None,
            "residual_norm": self.residual_norm,
            "thd_pct": self.thd_pct,
            "stored_thd_pct": self.stored_thd_pct,
            "flags": self.flags,
        }


@dataclass
class AuditReport:
    harmonics: list
    rows: list

    @property
    def flag_count(self):
        return sum(len(r.flags) for r in self.rows)

    def to_dict(self):
        return {"harmonics": self.harmonics, "flag_count": self.flag_count,
                "rows": [r.to_dict() for r in self.rows]}


def audit_table(table, hset=None, residual_tol=1e-8, thd_tol=1e-6, max_order=49):
    """Recompute residuals and THD for every row of an angle table.

    Problems become row flags; nothing here raises for bad rows.
    """
    if hset is None:
        hset = table.hset if table.hset is not None else HarmonicSet.default(table.s)
    rows = []
    for row in table.rows:
        flags = [f for f in row.flags if f != FLAG_NOT_CONVERGED]
        if FLAG_NOT_CONVERGED in row.flags:
            flags.append(FLAG_NOT_CONVERGED)
        theta = row.angles_rad()
        if not (math.isfinite(row.m) and 0.0 < row.m < 1.0) and FLAG_M_RANGE not in flags:
            flags.append(FLAG_M_RANGE)
        if theta.size != hset.s or not np.all(np.isfinite(theta)) or not math.isfinite(row.m):
            if FLAG_BAD_CELL not in flags and FLAG_NOT_CONVERGED not in flags:
                flags.append(FLAG_BAD_CELL)
            rows.append(RowAudit(row.m, None, math.nan, math.nan, row.thd_pct, flags))
            continue
        if not _is_valid(theta) and FLAG_ANGLES not in flags:
            flags.append(FLAG_ANGLES)
        r = residual_vector(theta, row.m, hset)
        rnorm = float(np.max(np.abs(r)))
        if rnorm >= residual_tol:
            flags.append(FLAG_RESIDUAL)
        thd = 100.0 * analytic_thd(theta, max_order)
        if not (math.isfinite(row.thd_pct) and abs(thd - row.thd_pct) <= thd_tol):
            flags.append(FLAG_THD)
        rows.append(RowAudit(row.m, [float(v) for v in r], rnorm, thd, row.thd_pct, flags))
    return AuditReport(list(hset.orders), rows)
