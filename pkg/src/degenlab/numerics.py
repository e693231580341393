"""Shared numerical primitives.

Log-domain scalars for quantities that overflow binary64, counter-based
seeding, rectangular grids, double-exponential quadrature tuned for
inverse-square-root endpoint singularities, bracketed root finding, ground
states of symmetric tridiagonal matrices, and anisotropic shortest-path
distance fields on grids.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

__all__ = [
    "LogVal",
    "Seed",
    "Grid2D",
    "DistanceField",
    "QuadratureError",
    "BracketError",
    "quad_singular",
    "brent_root",
    "tridiag_ground",
    "grid_distance",
]

_LN_MAX = math.log(np.finfo(float).max)


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; carries the last estimate and level count."""

    def __init__(self, message: str, estimate: float, levels: int):
        super().__init__(f"{message} (estimate={estimate!r}, levels={levels})")
        self.estimate = estimate
        self.levels = levels


class BracketError(ValueError):
    """Root bracket does not straddle a sign change."""


@functools.total_ordering
@dataclass(frozen=True)
class LogVal:
    """A nonnegative real stored as (ln value, sign).

    ``sign`` is 1 for positive values and 0 for an exact zero (``ln_value``
    is then normalized to ``-inf``).  ``ln_value = +inf`` with ``sign = 1``
    is permitted as an explicit saturated state for quantities whose
    logarithm itself overflows; arithmetic propagates it monotonically.
    """

    ln_value: float
    sign: int = 1

    def __post_init__(self) -> None:
        if self.sign not in (0, 1):
            raise ValueError(f"sign must be 0 or 1, got {self.sign}")
        if math.isnan(self.ln_value):
            raise ValueError("ln_value must not be NaN")
        if self.sign == 0:
            object.__setattr__(self, "ln_value", float("-inf"))
        else:
            object.__setattr__(self, "ln_value", float(self.ln_value))

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls) -> "LogVal":
        return cls(float("-inf"), 0)

    @classmethod
    def one(cls) -> "LogVal":
        return cls(0.0, 1)

    @classmethod
    def from_float(cls, x: float) -> "LogVal":
        if x < 0:
            raise ValueError(f"LogVal represents nonnegative reals, got {x}")
        if x == 0:
            return cls.zero()
        return cls(math.log(x), 1)

    @classmethod
    def from_ln(cls, ln_value: float) -> "LogVal":
        return cls(ln_value, 1)

    # -- conversions -------------------------------------------------------
    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.ln_value > _LN_MAX:
            return float("inf")
        return math.exp(self.ln_value)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    # -- arithmetic --------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "LogVal":
        if isinstance(other, LogVal):
            return other
        if isinstance(other, (int, float)):
            return LogVal.from_float(float(other))
        return NotImplemented

    def __mul__(self, other) -> "LogVal":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.sign == 0 or o.sign == 0:
            return LogVal.zero()
        return LogVal(self.ln_value + o.ln_value, 1)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogVal":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o.sign == 0:
            raise ZeroDivisionError("LogVal division by zero")
        if self.sign == 0:
            return LogVal.zero()
        return LogVal(self.ln_value - o.ln_value, 1)

    def __pow__(self, exponent: float) -> "LogVal":
        if self.sign == 0:
            if exponent <= 0:
                raise ValueError("0 ** nonpositive exponent is undefined")
            return LogVal.zero()
        return LogVal(self.ln_value * exponent, 1)

    def __add__(self, other) -> "LogVal":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.sign == 0:
            return o
        if o.sign == 0:
            return self
        return LogVal(float(np.logaddexp(self.ln_value, o.ln_value)), 1)

    __radd__ = __add__

    def __sub__(self, other) -> "LogVal":
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o.sign == 0:
            return self
        if self < o:
            raise ValueError("LogVal subtraction would be negative")
        if self.ln_value == o.ln_value:
            return LogVal.zero()
        return LogVal(
            self.ln_value + math.log1p(-math.exp(o.ln_value - self.ln_value)), 1
        )

    # -- ordering ----------------------------------------------------------
    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return (self.sign, self.ln_value) == (o.sign, o.ln_value)

    def __lt__(self, other) -> bool:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.sign != o.sign:
            return self.sign < o.sign
        return self.ln_value < o.ln_value

    def __hash__(self):
        return hash((self.sign, self.ln_value))

    def __repr__(self) -> str:
        if self.sign == 0:
            return "LogVal.zero()"
        return f"LogVal(ln={self.ln_value!r})"


def logval_sum(values: Sequence[LogVal]) -> LogVal:
    """Sum of LogVals via a single log-sum-exp pass."""
    lns = [v.ln_value for v in values if v.sign == 1]
    if not lns:
        return LogVal.zero()
    arr = np.asarray(lns, dtype=float)
    m = float(np.max(arr))
    if math.isinf(m):
        return LogVal.from_ln(m)
    return LogVal.from_ln(m + math.log(float(np.sum(np.exp(arr - m)))))


@dataclass(frozen=True)
class Seed:
    """64-bit key for the counter-based (Philox) generator."""

    value: int

    def __post_init__(self) -> None:
        if not (0 <= int(self.value) < 2**64):
            raise ValueError(f"Seed must fit in 64 bits, got {self.value}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.value))

    def split(self, index: int) -> "Seed":
        """Derive an independent child seed (disjoint Philox key)."""
        mixed = (self.value * 6364136223846793005 + 1442695040888963407 + index) % 2**64
        return Seed(mixed)


@dataclass(frozen=True)
class Grid2D:
    """Uniform rectangular grid: node (i, j) sits at origin + (i*hx, j*hy)."""

    nx: int
    ny: int
    hx: float
    hy: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 nodes per direction")
        if not (self.hx > 0 and self.hy > 0):
            raise ValueError("grid spacings must be positive")

    def xs(self) -> np.ndarray:
        return self.origin[0] + self.hx * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.origin[1] + self.hy * np.arange(self.ny)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def index_of(self, x: float, y: float) -> tuple[int, int]:
        """Nearest node; raises if (x, y) is outside the covered rectangle."""
        fi = (x - self.origin[0]) / self.hx
        fj = (y - self.origin[1]) / self.hy
        i, j = round(fi), round(fj)
        if not (-0.5 <= fi <= self.nx - 0.5 and -0.5 <= fj <= self.ny - 0.5):
            raise ValueError(f"point ({x}, {y}) outside grid")
        return min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1)


# ---------------------------------------------------------------------------
# tanh-sinh quadrature
# ---------------------------------------------------------------------------

def _eval_vectorized(f: Callable, xs: np.ndarray) -> np.ndarray:
    """Call f on an array, falling back to a python loop for scalar-only f."""
    try:
        out = np.asarray(f(xs), dtype=float)
        if out.shape != xs.shape:
            raise ValueError
    except Exception:
        out = np.array([float(f(x)) for x in xs], dtype=float)
    return out


def quad_singular(
    integrand: Callable,
    a: float,
    b: float,
    singular_end: str = "none",
    tol: float = 1e-10,
    max_levels: int = 12,
) -> float:
    """Integrate over (a, b) with tanh-sinh (double-exponential) nodes.

    Designed for integrands of the form g(u)/sqrt(lam^2 - f(u)^2) with g
    smooth: integrable endpoint singularities are absorbed by the
    double-exponential weight decay.  Nodes never touch a or b; non-finite
    integrand values (roundoff straying into the singular point) are dropped.

    The result satisfies |error| <= tol * (1 + |value|) at convergence;
    otherwise QuadratureError carries the last estimate and the level count.
    """
    if singular_end not in ("left", "right", "none"):
        raise ValueError(f"singular_end must be left/right/none, got {singular_end!r}")
    if not b > a:
        raise ValueError(f"need a < b, got a={a}, b={b}")

    c = 0.5 * (a + b)
    d = 0.5 * (b - a)
    t_max = 4.5
    half_pi = 0.5 * math.pi

    def level_nodes(h: float, midpoints_only: bool) -> tuple[np.ndarray, np.ndarray]:
        if midpoints_only:
            t = np.arange(h, t_max, 2 * h)
            t = np.concatenate([-t[::-1], t])
        else:
            n = int(math.floor(t_max / h))
            t = h * np.arange(-n, n + 1)
        u = half_pi * np.sinh(t)
        x = c + d * np.tanh(u)
        w = d * half_pi * np.cosh(t) / np.cosh(u) ** 2
        inside = (x > a) & (x < b) & (w > 0)
        return x[inside], w[inside]

    total = 0.0
    prev = math.inf
    h = 1.0
    for level in range(max_levels + 1):
        x, w = level_nodes(h, midpoints_only=(level > 0))
        with np.errstate(all="ignore"):
            vals = _eval_vectorized(integrand, x)
        good = np.isfinite(vals)
        contrib = float(np.dot(w[good], vals[good]))
        # h is already the current spacing; refining halves the old sum and
        # adds the midpoint nodes at the new spacing.
        total = h * contrib if level == 0 else 0.5 * total + h * contrib
        if level >= 2 and abs(total - prev) <= tol * (1.0 + abs(total)):
            return total
        prev = total
        h *= 0.5
    raise QuadratureError("tanh-sinh did not converge", prev, max_levels)


def brent_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-13,
    maxiter: int = 200,
) -> float:
    """Root of f in [lo, hi]; requires a sign change (endpoint zeros allowed)."""
    if not hi > lo:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketError(
            f"no sign change on [{lo!r}, {hi!r}]: f(lo)={flo!r}, f(hi)={fhi!r}"
        )
    return float(
        scipy.optimize.brentq(f, lo, hi, xtol=tol, rtol=8.9e-16, maxiter=maxiter)
    )


def tridiag_ground(
    diag: Sequence[float], offdiag: Sequence[float]
) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a symmetric tridiagonal matrix.

    Eigenvalue by Sturm-sequence bisection, eigenvector by inverse iteration
    (LAPACK stebz/stein); the vector is unit-norm with its largest-magnitude
    component positive.
    """
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise ValueError("diag must be a 1-D array of length >= 2")
    if e.shape != (d.size - 1,):
        raise ValueError("offdiag must have length len(diag) - 1")
    vals, vecs = scipy.linalg.eigh_tridiagonal(
        d, e, select="i", select_range=(0, 0), lapack_driver="stebz"
    )
    v = vecs[:, 0]
    v = v / math.sqrt(float(np.dot(v, v)))
    if v[int(np.argmax(np.abs(v)))] < 0:
        v = -v
    return float(vals[0]), v


# ---------------------------------------------------------------------------
# Anisotropic grid distance
# ---------------------------------------------------------------------------

_NEIGHBOR_SETS = {
    8: [(1, 0), (0, 1), (1, 1), (1, -1)],
    16: [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (2, -1), (1, 2), (1, -2)],
    32: [
        (1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (2, -1), (1, 2), (1, -2),
        (3, 1), (3, -1), (1, 3), (1, -3), (3, 2), (3, -2), (2, 3), (2, -3),
    ],
}


@dataclass(frozen=True)
class DistanceField:
    """Shortest-path distances from a source node over a Grid2D."""

    grid: Grid2D
    values: np.ndarray = field(repr=False)
    source: tuple[int, int]

    def at(self, x, y):
        """Bilinear interpolation of the field at (x, y); vectorized."""
        g = self.grid
        fx = (np.asarray(x, dtype=float) - g.origin[0]) / g.hx
        fy = (np.asarray(y, dtype=float) - g.origin[1]) / g.hy
        i0 = np.clip(np.floor(fx).astype(int), 0, g.nx - 2)
        j0 = np.clip(np.floor(fy).astype(int), 0, g.ny - 2)
        tx = np.clip(fx - i0, 0.0, 1.0)
        ty = np.clip(fy - j0, 0.0, 1.0)
        v = self.values
        return (
            v[i0, j0] * (1 - tx) * (1 - ty)
            + v[i0 + 1, j0] * tx * (1 - ty)
            + v[i0, j0 + 1] * (1 - tx) * ty
            + v[i0 + 1, j0 + 1] * tx * ty
        )


def grid_distance(geom, grid: Grid2D, source: tuple[float, float], neighbors: int = 8) -> DistanceField:
    """Dijkstra distance field for ds^2 = dx^2 + dy^2 / f(x)^2 on a grid.

    Edge weights use the midpoint value of f (even extension across x = 0);
    vertical edges sitting exactly on the degenerate axis get infinite weight
    and are dropped.  The result overestimates the true control distance by
    at most the stencil anisotropy factor (sec(pi/8) for the default
    8-neighbor stencil) plus O(h).
    """
    if neighbors not in _NEIGHBOR_SETS:
        raise ValueError(f"neighbors must be one of {sorted(_NEIGHBOR_SETS)}")
    nx, ny = grid.nx, grid.ny
    ox = grid.origin[0]
    si, sj = grid.index_of(*source)

    rows, cols, weights = [], [], []
    for di, dj in _NEIGHBOR_SETS[neighbors]:
        i = np.arange(0, nx - di)
        j = np.arange(max(0, -dj), ny - max(0, dj))
        if i.size == 0 or j.size == 0:
            continue
        ii, jj = np.meshgrid(i, j, indexing="ij")
        if dj == 0:
            w = np.full(ii.shape, di * grid.hx)
        else:
            xm = ox + (ii + 0.5 * di) * grid.hx
            fm = np.asarray(geom.f(xm), dtype=float)
            with np.errstate(divide="ignore"):
                vertical = np.where(fm > 0, abs(dj) * grid.hy / np.where(fm > 0, fm, 1.0), np.inf)
            w = np.hypot(di * grid.hx, vertical)
        keep = np.isfinite(w)
        rows.append((ii * ny + jj)[keep])
        cols.append(((ii + di) * ny + (jj + dj))[keep])
        weights.append(w[keep])

    n = nx * ny
    graph = scipy.sparse.coo_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    dist = _csgraph_dijkstra(graph, directed=False, indices=si * ny + sj)
    return DistanceField(grid=grid, values=dist.reshape(nx, ny), source=(si, sj))
