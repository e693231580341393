"""Geodesics and ball measures for the plane metric dx^2 + dy^2/f(x)^2.

Geodesics through (x0, 0) conserve lam with dy/ds = f^2/lam and
dx/ds = +-sqrt(1 - f^2/lam^2); they move right, turn where f = lam, and
curl back.  This module computes turning data, polar coordinates and
their Jacobians, the control distance by shooting over lam, the modified
distance dhat, and ball heights/areas/volumes in the regimes where they
admit closed comparisons.

All "approx" claims are comparisons within a multiplicative factor kappa
(default 10); violations raise ComparabilityError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .geometry import Geometry
from .numerics import (
    BracketError,
    Grid2D,
    QuadratureError,
    Seed,
    brent_root,
    grid_distance,
    quad_singular,
)

__all__ = [
    "ComparabilityError",
    "TurningData",
    "PolarPoint",
    "BallShape",
    "DistanceResult",
    "DhatResult",
    "geodesic_y",
    "turning_data",
    "polar_to_cartesian",
    "control_distance",
    "grid_oracle_distance",
    "dhat",
    "ball_shape",
    "ball_area_2d",
    "ball_volume_3d",
    "doubling_increment",
    "jacobian",
    "mk_integral",
]

KAPPA_DEFAULT = 10.0

_TIGHT = 1e-10
_LOOSE = 1e-7


class ComparabilityError(RuntimeError):
    """Two quantities that must agree within a factor kappa failed to."""

    def __init__(self, message: str, value_a: float, value_b: float):
        super().__init__(f"{message}: {value_a!r} vs {value_b!r}")
        self.value_a = value_a
        self.value_b = value_b


@dataclass(frozen=True)
class TurningData:
    """Turning point of the geodesic with conserved parameter lam:
    X = f^{-1}(lam), height Y and arc length Rlen from the origin."""

    lam: float
    X: float
    Y: float
    Rlen: float


@dataclass(frozen=True)
class PolarPoint:
    """Geodesic polar coordinates: arc length r along the curve with
    parameter lam; region 1 before the turning point, region 2 after.
    lam = inf encodes the horizontal geodesic."""

    r: float
    lam: float
    region: int

    def __post_init__(self) -> None:
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise ValueError(f"polar radius must be finite and >= 0, got {self.r!r}")
        if not self.lam > 0 or math.isnan(self.lam):
            raise ValueError(f"lam must be positive (inf allowed), got {self.lam!r}")
        if self.region not in (1, 2):
            raise ValueError(f"region must be 1 or 2, got {self.region!r}")


@dataclass(frozen=True)
class BallShape:
    """Turning description of the ball B((x1,0), r): r_star is the radial
    depth of the turning point, h the height there, area the closed-form
    area estimate."""

    x1: float
    r: float
    r_star: float
    h: float
    area: float


class DistanceResult(NamedTuple):
    """Control distance with the method that produced it ('exact',
    'shooting', or 'oracle') and the geodesic parameter lam of the
    connecting arc (inf for horizontal arcs, nan when unknown)."""

    value: float
    method: str
    lam: float = math.nan


class DhatResult(NamedTuple):
    """Modified distance min{d, 1/|F'(x1+d)|} with the gap d - r_star."""

    value: float
    gap: float
    distance: float
    method: str


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(fn: Callable, a: float, b: float, n: int) -> float:
    if n not in _GL_CACHE:
        from scipy.special import roots_legendre

        _GL_CACHE[n] = roots_legendre(n)
    x, w = _GL_CACHE[n]
    u = a + (b - a) * 0.5 * (x + 1.0)
    vals = np.asarray(fn(u), dtype=float)
    return float((b - a) * 0.5 * np.sum(w * vals))


def _quad(fn: Callable, a: float, b: float, singular: str = "none") -> float:
    """Quadrature over (a, b); inverse-square-root endpoint singularities
    are removed exactly by the substitution u = b - v^2 (resp. a + v^2),
    whose transformed integrand is smooth and is integrated by a
    Gauss-Legendre pair (nodes stay clear of the rounding-noise edge)."""
    if b <= a:
        return 0.0
    if singular == "right":
        w = math.sqrt(b - a)
        g = lambda v, f0=fn, hi=b: 2.0 * v * f0(hi - v * v)
        a, b, fn = 0.0, w, g
    elif singular == "left":
        w = math.sqrt(b - a)
        g = lambda v, f0=fn, lo=a: 2.0 * v * f0(lo + v * v)
        a, b, fn = 0.0, w, g
    if singular != "none":
        coarse = _gauss(fn, a, b, 48)
        fine = _gauss(fn, a, b, 96)
        if math.isfinite(fine) and abs(fine - coarse) <= 1e-9 * (1.0 + abs(fine)):
            return fine
    try:
        return quad_singular(fn, a, b, singular_end="none", tol=_TIGHT)
    except QuadratureError:
        return quad_singular(fn, a, b, singular_end="none", tol=_LOOSE)


def _gap(geom: Geometry, lam: float, u: np.ndarray) -> np.ndarray:
    """sqrt(lam^2 - f(u)^2), clamped at zero."""
    fu = geom.f(u)
    return np.sqrt(np.maximum((lam - fu) * (lam + fu), 0.0))


def _fmax(geom: Geometry) -> float:
    return float(geom.f(geom.R * (1 - 1e-12)))


def _arc_between(geom: Geometry, lam: float, a: float, b: float, singular: str = "none") -> float:
    """Arc length of the lam-geodesic between radial positions a < b."""
    def fn(u):
        with np.errstate(divide="ignore", invalid="ignore"):
            return lam / _gap(geom, lam, u)
    return _quad(fn, a, b, singular)


def _rise_between(geom: Geometry, lam: float, a: float, b: float, singular: str = "none") -> float:
    """Vertical rise of the lam-geodesic between radial positions a < b."""
    def fn(u):
        with np.errstate(divide="ignore", invalid="ignore"):
            return geom.f(u) ** 2 / _gap(geom, lam, u)
    return _quad(fn, a, b, singular)


def _turning_x(geom: Geometry, lam: float) -> float:
    """Solve f(x) = lam for x in (0, R) via the monotone exponent F."""
    target = math.log(1.0 / lam)
    hi = geom.R * (1 - 1e-12)
    if geom.F(hi) >= target:
        raise ValueError(f"lam={lam!r} is at or above the range of f on (0, R)")
    lo = geom.R * 1e-3
    for _ in range(120):
        if geom.F(lo) >= target:
            break
        lo *= 1e-2
    else:
        raise BracketError(f"could not bracket f^(-1)({lam!r})")
    return brent_root(lambda x: geom.F(x) - target, lo, hi, tol=1e-15 * hi)


def geodesic_y(geom: Geometry, lam: float, x: float) -> float:
    """Height y(x; lam) = int_0^x f^2/sqrt(lam^2 - f^2) du of the geodesic
    from the origin, valid up to the turning point."""
    if lam == math.inf:
        return 0.0
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"lam must be positive, got {lam!r}")
    if not 0 < x < geom.R:
        raise ValueError(f"x must lie in (0, R), got {x!r}")
    fx = float(geom.f(x))
    if fx > lam * (1 + 1e-12):
        raise ValueError(
            "x is beyond the turning point; use the region-2 parameterization"
        )
    singular = "right" if fx >= lam * (1 - 1e-9) else "none"
    return _rise_between(geom, lam, 0.0, x, singular)


def turning_data(geom: Geometry, lam: float) -> TurningData:
    """Turning point data (X, Y, Rlen) for the lam-geodesic."""
    if geom.is_flat:
        raise ValueError("flat profile has no turning geodesics")
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    if lam >= _fmax(geom):
        raise ValueError(f"lam={lam!r} is not in the range of f on (0, R)")
    X = _turning_x(geom, lam)
    fX = float(geom.f(X))
    if abs(fX - lam) > 1e-10 * lam:
        raise BracketError(f"turning solve inaccurate: f(X)={fX!r} vs lam={lam!r}")
    # anchor the singular edge to the solved X: f(X) and lam agree to 1e-10,
    # and using f(X) keeps the integrand gap consistent at u -> X
    Y = _rise_between(geom, fX, 0.0, X, "right")
    Rlen = _arc_between(geom, fX, 0.0, X, "right")
    return TurningData(lam=lam, X=X, Y=Y, Rlen=Rlen)


def _solve_forward_arc(geom: Geometry, lam: float, base: float, target: float, xhi: float) -> float:
    """Solve arc(base -> x) = target for x in (base, xhi]; clamps to xhi
    when the target meets the full reachable arc."""
    if target <= 0:
        return base
    def h(x: float) -> float:
        return _arc_between(geom, lam, base, x) - target
    if h(xhi) <= 0:
        return xhi
    return brent_root(h, base * (1 + 1e-15) + 1e-300, xhi, tol=1e-14 * max(xhi, 1e-12))


def _solve_backward_arc(geom: Geometry, lam: float, top: float, target: float, xlo: float) -> float:
    """Solve arc(x -> top) = target for x in [xlo, top); clamps to xlo
    when the target meets the full reachable arc."""
    if target <= 0:
        return top
    def h(x: float) -> float:
        return _arc_between(geom, lam, x, top, "right") - target
    if h(xlo) <= 0:
        return xlo
    return brent_root(h, xlo, top * (1 - 1e-15), tol=1e-14 * max(top, 1e-12))


def _point_at_arc(geom: Geometry, lam: float, s: float) -> tuple[float, float]:
    """Cartesian endpoint of the lam-geodesic from the origin at arc length s."""
    if lam == math.inf:
        return s, 0.0
    hi = geom.R * (1 - 1e-12)
    if lam >= _fmax(geom):
        x = _solve_forward_arc(geom, lam, 0.0, s, hi)
        return x, _rise_between(geom, lam, 0.0, x)
    td = turning_data(geom, lam)
    if s <= td.Rlen:
        x = _solve_forward_arc(geom, lam, 0.0, s, td.X)
        return x, _rise_between(geom, lam, 0.0, x)
    if s > 2 * td.Rlen * (1 + 1e-12):
        raise ValueError(f"arc length {s!r} exceeds the double arc 2*Rlen={2*td.Rlen!r}")
    back = min(s - td.Rlen, td.Rlen)
    x = _solve_backward_arc(geom, lam, td.X, back, 0.0)
    return x, 2 * td.Y - _rise_between(geom, lam, 0.0, x)


def polar_to_cartesian(geom: Geometry, p: PolarPoint) -> tuple[float, float]:
    """Cartesian point of the polar coordinates (r, lam, region)."""
    if p.lam == math.inf:
        if p.region != 1:
            raise ValueError("the horizontal geodesic has no region 2")
        if p.r >= geom.R:
            raise ValueError(f"horizontal reach {p.r!r} leaves the domain")
        return p.r, 0.0
    td = turning_data(geom, p.lam)
    if p.region == 1 and p.r > td.Rlen * (1 + 1e-12):
        raise ValueError(f"r={p.r!r} exceeds Rlen={td.Rlen!r}; the point is in region 2")
    if p.region == 2 and not td.Rlen * (1 - 1e-12) <= p.r <= 2 * td.Rlen * (1 + 1e-12):
        raise ValueError(f"region-2 radius must lie in [Rlen, 2*Rlen], got {p.r!r}")
    return _point_at_arc(geom, p.lam, p.r)


def grid_oracle_distance(
    geom: Geometry,
    P: tuple[float, float],
    Q: tuple[float, float],
    nx: int = 281,
    ny: int = 281,
    neighbors: int = 16,
    pad: float = 0.35,
) -> float:
    """Dijkstra-on-grid upper estimate of the control distance."""
    (xa, ya), (xb, yb) = P, Q
    w = abs(xb - xa)
    h = abs(yb - ya)
    diag = math.hypot(w, h) + 1e-12
    lim = geom.R * (1 - 1e-9)
    xlo = max(min(xa, xb) - pad * diag, -lim)
    xhi = min(max(xa, xb) + 2 * pad * diag, lim)
    ylo = min(ya, yb) - pad * diag
    yhi = max(ya, yb) + pad * diag
    grid = Grid2D(nx, ny, (xhi - xlo) / (nx - 1), (yhi - ylo) / (ny - 1), origin=(xlo, ylo))
    field = grid_distance(geom, grid, source=(xa, ya), neighbors=neighbors)
    return float(field.at(xb, yb))


def _shoot_region1(geom: Geometry, x1: float, x2: float, y: float) -> tuple[float, float] | None:
    """Distance and lam of a monotone region-1 arc from (x1,0) to (x2,y), if one exists."""
    f2 = float(geom.f(x2))
    mu_lo = math.log(f2) + 1e-10
    lam_lo = math.exp(mu_lo)
    y_max = _rise_between(geom, lam_lo, x1, x2, "right")
    if y > y_max:
        return None
    def rise(mu: float) -> float:
        lam = math.exp(mu)
        sing = "right" if mu - math.log(f2) < 1e-6 else "none"
        return _rise_between(geom, lam, x1, x2, sing)
    mu_hi = mu_lo + 0.5
    for _ in range(60):
        if rise(mu_hi) <= y:
            break
        mu_hi += (mu_hi - mu_lo)
    else:
        raise BracketError("region-1 shooting bracket did not close")
    mu = brent_root(lambda m: rise(m) - y, mu_lo, mu_hi, tol=1e-13)
    lam = math.exp(mu)
    sing = "right" if mu - math.log(f2) < 1e-6 else "none"
    return _arc_between(geom, lam, x1, x2, sing), lam


def _shoot_with_turn(geom: Geometry, x1: float, x2: float, y: float) -> tuple[float, float]:
    """Distance and lam of an overshoot-and-turn arc from (x1,0) to (x2,y)."""
    fmax = _fmax(geom)
    f2 = float(geom.f(x2)) if x2 > 0 else 0.0
    mu_lo = math.log(max(f2, float(geom.f(x1)) if x1 > 0 else f2, 1e-300)) + 1e-10
    def rise2(mu: float) -> float:
        lam = math.exp(mu)
        X = _turning_x(geom, lam)
        return (
            _rise_between(geom, lam, x1, X, "right")
            + _rise_between(geom, lam, x2, X, "right")
        )
    mu_cap = math.log(fmax) - 1e-10
    rise_lo = rise2(mu_lo)
    if rise_lo >= y:
        # The turnless limit already overshoots.  Monotone region-1 arcs have
        # been ruled out by the caller, so the target can only sit in the
        # sqrt-width crack between the two branch envelopes at mu_lo; the
        # root collapses onto mu_lo, and anything larger is unreachable.
        if rise_lo - y > 1e-4 * (abs(y) + rise_lo):
            raise BracketError("target height below the turning envelope")
        mu = mu_lo
    else:
        mu_hi = min(mu_lo + 0.5, mu_cap)
        for _ in range(200):
            if rise2(mu_hi) >= y:
                break
            if mu_hi >= mu_cap:
                raise BracketError("target height unreachable by a single-turn arc")
            mu_hi = min(mu_lo + 2 * (mu_hi - mu_lo), mu_cap)
        mu = brent_root(lambda m: rise2(m) - y, mu_lo, mu_hi, tol=1e-13)
    lam = math.exp(mu)
    X = _turning_x(geom, lam)
    return (
        _arc_between(geom, lam, x1, X, "right")
        + _arc_between(geom, lam, x2, X, "right")
    ), lam


def control_distance(
    geom: Geometry,
    P: tuple[float, float],
    Q: tuple[float, float],
    oracle_fallback: bool = True,
) -> DistanceResult:
    """Control distance between P and Q by shooting over the geodesic
    parameter; falls back to the grid oracle (flagged 'oracle') for
    cross-axis pairs or when the shooting bracket fails."""
    (xa, ya), (xb, yb) = (float(P[0]), float(P[1])), (float(Q[0]), float(Q[1]))
    for v in (xa, ya, xb, yb):
        if not math.isfinite(v):
            raise ValueError("points must be finite")
    if max(abs(xa), abs(xb)) >= geom.R:
        raise ValueError("both points must lie in the strip |x| < R")
    if (xa, ya) == (xb, yb):
        return DistanceResult(0.0, "exact", math.inf)
    y = abs(yb - ya)
    if geom.is_flat:
        return DistanceResult(math.hypot(xb - xa, y), "exact")
    if max(xa, xb) <= 0:
        xa, xb = -xa, -xb
    x1, x2 = min(xa, xb), max(xa, xb)
    if y == 0.0 and x1 >= 0:
        return DistanceResult(x2 - x1, "exact", math.inf)
    oracle = lambda: DistanceResult(grid_oracle_distance(geom, (xa, ya), (xb, yb)), "oracle")
    if x1 < 0 or x2 == 0:
        if not oracle_fallback:
            raise BracketError("cross-axis pairs require the grid oracle")
        return oracle()
    try:
        if x2 > x1:
            hit = _shoot_region1(geom, x1, x2, y)
            if hit is not None:
                return DistanceResult(hit[0], "shooting", hit[1])
        d, lam = _shoot_with_turn(geom, x1, x2, y)
        return DistanceResult(d, "shooting", lam)
    except (BracketError, ValueError, QuadratureError):
        if not oracle_fallback:
            raise
        return oracle()


def ball_shape(geom: Geometry, x1: float, r: float, kappa: float = KAPPA_DEFAULT) -> BallShape:
    """Turning description (r_star, h) of B((x1,0), r), with the regime
    checks h ~ r f(x1) (near) and r - r_star ~ 1/|F'(x1+r)| (far)."""
    if not x1 >= 0:
        raise ValueError(f"x1 must be >= 0, got {x1!r}")
    if not 0 < r < geom.R - x1:
        raise ValueError(f"need 0 < r < R - x1, got r={r!r}")
    if geom.is_flat:
        return BallShape(x1=x1, r=r, r_star=0.0, h=r, area=math.pi * r * r)
    def arc_to_turn(rho: float) -> float:
        lam = float(geom.f(x1 + rho))
        return _arc_between(geom, lam, x1, x1 + rho, "right")
    r_star = brent_root(lambda rho: arc_to_turn(rho) - r, r * 1e-12, r * (1 - 1e-15),
                        tol=1e-14 * r)
    lam_star = float(geom.f(x1 + r_star))
    h = _rise_between(geom, lam_star, x1, x1 + r_star, "right")
    area = _area_closed(geom, x1, r, dim=2)
    if not 0 <= r_star < r:
        raise ComparabilityError("r_star escaped [0, r)", r_star, r)
    f1 = float(geom.f(x1)) if x1 > 0 else 0.0
    bound = math.sqrt(max(lam_star * lam_star - f1 * f1, 0.0)) / abs(float(geom.F1(x1 + r_star)))
    if h > bound * (1 + 1e-7):
        raise ComparabilityError("height exceeds its exact bound", h, bound)
    recip1 = 1.0 / abs(float(geom.F1(x1))) if x1 > 0 else 0.0
    if x1 > 0 and r <= recip1:
        ratio = h / (r * f1)
        if not 1.0 / kappa <= ratio <= kappa:
            raise ComparabilityError("near-regime height mismatch", h, r * f1)
    else:
        recip2 = 1.0 / abs(float(geom.F1(x1 + r)))
        ratio = (r - r_star) / recip2
        if not 1.0 / kappa <= ratio <= kappa:
            raise ComparabilityError("far-regime depth mismatch", r - r_star, recip2)
    return BallShape(x1=x1, r=r, r_star=r_star, h=h, area=area)


def _area_closed(geom: Geometry, x1: float, r: float, dim: int) -> float:
    """Regime formula: r^dim f(x1) near, f(x1+r)/|F'(x1+r)|^dim far/origin."""
    if geom.is_flat:
        return math.pi * r * r if dim == 2 else 4.0 / 3.0 * math.pi * r**3
    if x1 > 0:
        recip = 1.0 / abs(float(geom.F1(x1)))
        if r <= recip:
            return r**dim * float(geom.f(x1))
    edge = x1 + r
    return float(geom.f(edge)) / abs(float(geom.F1(edge))) ** dim


def _origin_boundary(geom: Geometry, r: float) -> list[tuple[float, float]]:
    """Upper-right boundary arc of B(0, r), from (r, 0) up to the axis."""
    fmax = _fmax(geom)
    # lam_star: the full double arc exactly closes at arc length r.
    def double_arc(mu: float) -> float:
        return 2.0 * turning_data(geom, math.exp(mu)).Rlen - r
    mu_hi = math.log(fmax) - 1e-10
    mu_lo = mu_hi - 1.0
    for _ in range(200):
        if double_arc(mu_lo) < 0:
            break
        mu_lo -= 2 * (mu_hi - mu_lo)
    else:
        raise BracketError("could not bracket the closing geodesic")
    mu_star = brent_root(double_arc, mu_lo, mu_hi, tol=1e-13)
    td_star = turning_data(geom, math.exp(mu_star))
    fr = float(geom.f(r * (1 - 1e-12)))
    lam_big = max(fmax * 2.0, 1e6 * r * fr * float(geom.F1(r * (1 - 1e-12))) ** 2)
    span = math.log(lam_big) - mu_star
    fracs = np.unique(np.concatenate([
        np.geomspace(1e-7, 1.0, 80),
        1.0 - np.geomspace(1e-4, 0.999, 40),
    ]))
    pts = [(r, 0.0)]
    for frac in fracs[::-1]:
        lam = math.exp(mu_star + span * float(frac))
        pts.append(_point_at_arc(geom, lam, r))
    pts.append((0.0, 2.0 * td_star.Y))
    return pts


def _offaxis_boundary(geom: Geometry, x1: float, r: float) -> list[tuple[float, float]]:
    """Upper boundary arc of B((x1,0), r) for x1 >= r, swept right to left."""
    fmax = _fmax(geom)
    fc = float(geom.f(x1))
    fe = float(geom.f(x1 + r))
    mu0 = math.log(fc)
    h_guess = min(r * fc, fe / abs(float(geom.F1(x1 + r))))
    lam_big = max(2.0 * fe, 1e6 * r * fe * fe / max(h_guess, 1e-300))
    span = math.log(lam_big) - mu0
    offs = np.geomspace(1e-8, span, 64)

    def right_point(lam: float) -> tuple[float, float]:
        hi = geom.R * (1 - 1e-12)
        if lam < fmax:
            X = _turning_x(geom, lam)
            s_turn = _arc_between(geom, lam, x1, X, "right")
            if r > s_turn:
                xe = _solve_backward_arc(geom, lam, X, r - s_turn, max(x1 - r, X * 1e-12))
                return xe, (
                    _rise_between(geom, lam, x1, X, "right")
                    + _rise_between(geom, lam, xe, X, "right")
                )
            hi = X
        xe = _solve_forward_arc(geom, lam, x1, r, hi)
        return xe, _rise_between(geom, lam, x1, xe)

    def left_point(lam: float) -> tuple[float, float]:
        xe = _solve_backward_arc(geom, lam, x1, r, max(x1 - r * (1 + 1e-9), 1e-300))
        return xe, _rise_between(geom, lam, xe, x1)

    pts = [(x1 + r, 0.0)]
    for off in offs[::-1]:
        pts.append(right_point(math.exp(mu0 + float(off))))
    for off in offs:
        pts.append(left_point(math.exp(mu0 + float(off))))
    pts.append((x1 - r, 0.0))
    return pts


def _shoelace(pts: list[tuple[float, float]]) -> float:
    arr = np.asarray(pts, dtype=float)
    x, y = arr[:, 0], arr[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _area_quadrature(geom: Geometry, x1: float, r: float) -> float:
    if geom.is_flat:
        return math.pi * r * r
    if x1 == 0:
        pts = [(0.0, 0.0)] + _origin_boundary(geom, r)
        return 4.0 * _shoelace(pts)
    if x1 < r:
        raise ValueError("boundary quadrature supports x1 = 0 or x1 >= r only")
    return 2.0 * _shoelace(_offaxis_boundary(geom, x1, r))


def _area_montecarlo(geom: Geometry, x1: float, r: float, seed: Seed, n_samples: int) -> float:
    rng = seed.generator()
    if geom.is_flat:
        pts = rng.uniform(size=(n_samples, 2))
        xs = x1 - r + 2 * r * pts[:, 0]
        ys = -r + 2 * r * pts[:, 1]
        frac = float(np.mean((xs - x1) ** 2 + ys**2 <= r * r))
        return frac * 4.0 * r * r
    ymax = r * float(geom.f(x1 + r)) * (1 + 1e-9)
    xlo, xhi = x1 - r, x1 + r
    nx, ny = 481, 321
    grid = Grid2D(nx, ny, (xhi - xlo) / (nx - 1), 2 * ymax / (ny - 1), origin=(xlo, -ymax))
    field = grid_distance(geom, grid, source=(x1, 0.0), neighbors=16)
    pts = rng.uniform(size=(n_samples, 2))
    xs = xlo + (xhi - xlo) * pts[:, 0]
    ys = -ymax + 2 * ymax * pts[:, 1]
    frac = float(np.mean(field.at(xs, ys) <= r))
    return frac * (xhi - xlo) * 2 * ymax


def ball_area_2d(
    geom: Geometry,
    x1: float,
    r: float,
    method: str = "closed",
    seed: Seed | None = None,
    kappa: float = KAPPA_DEFAULT,
    n_samples: int = 10**6,
) -> float:
    """Area of B((x1,0), r) by regime formula, boundary quadrature, or
    Monte Carlo; non-closed methods are checked against the closed value
    within a factor kappa."""
    if not x1 >= 0:
        raise ValueError(f"x1 must be >= 0, got {x1!r}")
    if not 0 < r < geom.R - x1:
        raise ValueError(f"need 0 < r < R - x1, got r={r!r}")
    closed = _area_closed(geom, x1, r, dim=2)
    if method == "closed":
        return closed
    if method == "quadrature":
        value = _area_quadrature(geom, x1, r)
    elif method == "montecarlo":
        if seed is None:
            raise ValueError("montecarlo requires a Seed")
        value = _area_montecarlo(geom, x1, r, seed, n_samples)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not (closed / kappa <= value <= closed * kappa):
        raise ComparabilityError(f"{method} area disagrees with closed", value, closed)
    return value


def ball_volume_3d(
    geom: Geometry,
    x1: float,
    r: float,
    kappa: float = KAPPA_DEFAULT,
    cross_check: bool = True,
) -> float:
    """Volume of the 3D ball around ((x1,0),0) under the product metric,
    cross-checked against slicing int area_2d(sqrt(r^2-t^2)) dt."""
    if not x1 >= 0:
        raise ValueError(f"x1 must be >= 0, got {x1!r}")
    if not 0 < r < geom.R - x1:
        raise ValueError(f"need 0 < r < R - x1, got r={r!r}")
    closed = _area_closed(geom, x1, r, dim=3)
    if cross_check:
        ts = np.linspace(-r * (1 - 1e-9), r * (1 - 1e-9), 81)
        slices = np.array([
            _area_closed(geom, x1, math.sqrt(max(r * r - t * t, 1e-300)), dim=2)
            for t in ts
        ])
        sliced = float(np.trapezoid(slices, ts))
        if not (closed / kappa <= sliced <= closed * kappa):
            raise ComparabilityError("slicing volume disagrees with closed", sliced, closed)
    return closed


def _measure_continuous(geom: Geometry, x1: float, dim: int) -> Callable[[float], float]:
    """Monotone continuous radius->measure map pasting the two regimes."""
    if geom.is_flat:
        return lambda rr: rr**dim
    if x1 <= 0:
        return lambda rr: _area_closed(geom, 0.0, rr, dim)
    f1 = float(geom.f(x1))
    r0 = 1.0 / abs(float(geom.F1(x1)))
    if r0 >= geom.R - x1:
        return lambda rr: rr**dim * f1
    paste = (r0**dim * f1) / _area_closed(geom, x1, r0 * (1 + 1e-15), dim)
    def measure(rr: float) -> float:
        if rr <= r0:
            return rr**dim * f1
        return paste * _area_closed(geom, x1, rr, dim)
    return measure


def doubling_increment(geom: Geometry, x1: float, r: float, dim: int = 2) -> float:
    """The delta with |B(x1, r - delta)| = 1/2 |B(x1, r)| under the closed
    measure (regimes pasted continuously)."""
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim!r}")
    if not 0 < r < geom.R - x1:
        raise ValueError(f"need 0 < r < R - x1, got r={r!r}")
    measure = _measure_continuous(geom, x1, dim)
    half = measure(r) / 2.0
    return brent_root(lambda d: measure(r - d) - half, r * 1e-12, r * (1 - 1e-12),
                      tol=1e-14 * r)


def mk_integral(geom: Geometry, lam: float, x: float, k: int) -> float:
    """m_k(x) = int_0^x f^2/(lam^2 - f^2)^{k/2} du for k in {3, 5}."""
    if k not in (3, 5):
        raise ValueError(f"k must be 3 or 5, got {k!r}")
    if x == 0:
        return 0.0
    if not 0 < x < geom.R:
        raise ValueError(f"x must lie in [0, R), got {x!r}")
    fx = float(geom.f(x))
    if fx >= lam:
        raise ValueError("x must stay strictly before the turning point")
    singular = "right" if fx >= lam * (1 - 1e-9) else "none"
    def fn(u):
        with np.errstate(divide="ignore", invalid="ignore"):
            return geom.f(u) ** 2 / _gap(geom, lam, u) ** k
    return _quad(fn, 0.0, x, singular)


def _dY_dlam(geom: Geometry, lam: float, X: float) -> float:
    """Derivative of the turning height Y(lam), via the regularized integral
    Y'(lam) = int_0^X (F''/F'^2) lam/sqrt(lam^2 - f^2) du."""
    def integrand(u: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (geom.F2(u) / geom.F1(u) ** 2) * lam / _gap(geom, lam, u)
    return _quad(integrand, 0.0, X, "right")


def jacobian(geom: Geometry, p: PolarPoint, kappa: float = KAPPA_DEFAULT) -> float:
    """|det d(x,y)/d(r,lam)| of geodesic polar coordinates at p, with the
    regime checks f^2/(lam^2 |F'|) (region 1) and 1/|F'(X)| (region 2)."""
    if p.lam == math.inf:
        raise ValueError("the horizontal geodesic carries no polar Jacobian")
    td = turning_data(geom, p.lam)
    x, _ = polar_to_cartesian(geom, p)
    if abs(x - td.X) < 1e-8 * td.X:
        raise ValueError("point is within 1e-8 of the turning point; Jacobian is degenerate")
    lam = p.lam
    gap = float(_gap(geom, lam, np.asarray([x]))[0])
    m3 = mk_integral(geom, lam, x, 3)
    if p.region == 1:
        value = gap * m3
        estimate = float(geom.f(x)) ** 2 / (lam**2 * abs(float(geom.F1(x))))
    else:
        value = (gap / lam) * abs(2.0 * _dY_dlam(geom, lam, td.X) + lam * m3)
        estimate = 1.0 / abs(float(geom.F1(td.X)))
    if math.isfinite(estimate) and estimate > 0 and value > 0:
        ratio = value / estimate
        if not 1.0 / kappa <= ratio <= kappa:
            raise ComparabilityError(
                f"region-{p.region} Jacobian escapes its regime estimate", value, estimate
            )
    return value


def dhat(
    geom: Geometry,
    P: tuple[float, float],
    Q: tuple[float, float],
    kappa: float = KAPPA_DEFAULT,
) -> DhatResult:
    """Modified distance dhat = min{d, 1/|F'(x1+d)|} from P, with the gap
    d - r_star and the comparability check dhat ~ gap."""
    dist = control_distance(geom, P, Q)
    d = dist.value
    x1 = abs(float(P[0]))
    if d == 0.0:
        return DhatResult(0.0, 0.0, 0.0, dist.method)
    if x1 + d >= geom.R:
        raise ValueError("x1 + d leaves the domain; dhat undefined")
    if geom.is_flat:
        return DhatResult(d, d, d, dist.method)
    recip = 1.0 / abs(float(geom.F1(x1 + d)))
    value = min(d, recip)
    gap = d - ball_shape(geom, x1, d, kappa=kappa).r_star
    ratio = value / gap
    if not 1.0 / kappa <= ratio <= kappa:
        raise ComparabilityError("dhat is not comparable to d - r_star", value, gap)
    return DhatResult(value, gap, d, dist.method)
