"""Tests for geodesics, control distance, and metric-ball machinery."""

import math

import numpy as np
import pytest

from degenlab.geometry import DegeneracyFamily, Geometry
from degenlab.metric import (
    BallShape,
    ComparabilityError,
    DistanceResult,
    PolarPoint,
    TurningData,
    ball_area_2d,
    ball_shape,
    ball_volume_3d,
    control_distance,
    dhat,
    doubling_increment,
    geodesic_y,
    grid_oracle_distance,
    jacobian,
    mk_integral,
    polar_to_cartesian,
    turning_data,
)
from degenlab.metric import _dY_dlam, _offaxis_boundary, _origin_boundary
from degenlab.numerics import Grid2D, Seed, grid_distance


def _oracle() -> Geometry:
    """f(u) = u: every geodesic quantity has a closed form."""
    return Geometry(DegeneracyFamily.power_type(1.0))


def _fk() -> Geometry:
    return Geometry(DegeneracyFamily.fksigma(1, 1.0))


def _flat() -> Geometry:
    return Geometry(DegeneracyFamily.hn(0))


def _oracle_y(lam: float, x: float) -> float:
    """Closed-form geodesic height for f(u) = u."""
    return 0.5 * lam * lam * math.asin(x / lam) - 0.5 * x * math.sqrt(lam * lam - x * x)


def _oracle_m3(lam: float, x: float) -> float:
    """Closed-form m_3 for f(u) = u."""
    return x / math.sqrt(lam * lam - x * x) - math.asin(x / lam)


def _oracle_m5(lam: float, x: float) -> float:
    """Closed-form m_5 for f(u) = u."""
    return x**3 / (3.0 * lam * lam * (lam * lam - x * x) ** 1.5)


def test_polar_point_validation():
    with pytest.raises(ValueError):
        PolarPoint(-0.1, 1.0, 1)
    with pytest.raises(ValueError):
        PolarPoint(0.1, 0.0, 1)
    with pytest.raises(ValueError):
        PolarPoint(0.1, math.nan, 1)
    with pytest.raises(ValueError):
        PolarPoint(0.1, 1.0, 3)
    p = PolarPoint(0.1, math.inf, 1)
    assert p.lam == math.inf


def test_geodesic_y_closed_form():
    geom = _oracle()
    for lam in (0.2, 0.45, 0.8):
        for frac in (0.1, 0.5, 0.9, 0.999):
            x = frac * lam
            assert geodesic_y(geom, lam, x) == pytest.approx(_oracle_y(lam, x), rel=1e-9)
        # At the turning point the closed form gives pi*lam^2/4.
        assert geodesic_y(geom, lam, lam) == pytest.approx(math.pi * lam * lam / 4, rel=1e-9)


def test_geodesic_y_horizontal_line():
    geom = _fk()
    assert geodesic_y(geom, math.inf, 0.1) == 0.0


def test_geodesic_y_height_bound():
    # y(x) <= f(x)^2 / (lam * |F'(x)|) along every rising arc.
    geom = _fk()
    lam = float(geom.f(0.2))
    X = turning_data(geom, lam).X
    xs = np.geomspace(1e-4, X * (1 - 1e-12), 250)
    for x in xs:
        fx = float(geom.f(x))
        bound = fx * fx / (lam * abs(float(geom.F1(x))))
        assert geodesic_y(geom, lam, float(x)) <= bound * (1 + 1e-9)


def test_geodesic_y_errors():
    geom = _oracle()
    with pytest.raises(ValueError, match="region-2"):
        geodesic_y(geom, 0.3, 0.4)
    with pytest.raises(ValueError):
        geodesic_y(geom, 0.3, -0.1)
    with pytest.raises(ValueError):
        geodesic_y(geom, 0.3, geom.R)


def test_turning_data_closed_forms():
    geom = _oracle()
    for lam in (0.2, 0.35, 0.5):
        td = turning_data(geom, lam)
        assert td.lam == lam
        assert td.X == pytest.approx(lam, rel=1e-12)
        assert td.Y == pytest.approx(math.pi * lam * lam / 4, rel=1e-9)
        assert td.Rlen == pytest.approx(math.pi * lam / 2, rel=1e-9)
    quad = Geometry(DegeneracyFamily.power_type(2.0))
    assert turning_data(quad, 0.25).X == pytest.approx(0.5, rel=1e-12)


def test_turning_data_invariants():
    geom = _fk()
    for x in (0.05, 0.1, 0.2):
        lam = float(geom.f(x))
        td = turning_data(geom, lam)
        assert float(geom.f(td.X)) == pytest.approx(lam, rel=1e-10)
        assert td.X < td.Rlen <= (1 + 1 / geom.eps) * td.X * (1 + 1e-12)


def test_turning_data_errors():
    geom = _oracle()
    with pytest.raises(ValueError):
        turning_data(geom, 2.0)  # above the range of f
    with pytest.raises(ValueError):
        turning_data(geom, 0.0)
    with pytest.raises(ValueError):
        turning_data(_flat(), 0.5)


def test_polar_to_cartesian_special_points():
    geom = _oracle()
    lam = 0.4
    td = turning_data(geom, lam)
    x, y = polar_to_cartesian(geom, PolarPoint(0.25, math.inf, 1))
    assert (x, y) == (0.25, 0.0)
    assert polar_to_cartesian(geom, PolarPoint(0.0, lam, 1)) == (0.0, 0.0)
    x, y = polar_to_cartesian(geom, PolarPoint(td.Rlen, lam, 1))
    assert x == pytest.approx(td.X, rel=1e-9)
    assert y == pytest.approx(td.Y, rel=1e-7)
    x, y = polar_to_cartesian(geom, PolarPoint(2 * td.Rlen, lam, 2))
    assert abs(x) <= 1e-9
    assert y == pytest.approx(2 * td.Y, rel=1e-7)


def test_polar_to_cartesian_region_errors():
    geom = _oracle()
    td = turning_data(geom, 0.4)
    with pytest.raises(ValueError, match="region 2"):
        polar_to_cartesian(geom, PolarPoint(1.5 * td.Rlen, 0.4, 1))
    with pytest.raises(ValueError):
        polar_to_cartesian(geom, PolarPoint(2.5 * td.Rlen, 0.4, 2))
    with pytest.raises(ValueError):
        polar_to_cartesian(geom, PolarPoint(0.5 * td.Rlen, 0.4, 2))
    with pytest.raises(ValueError):
        polar_to_cartesian(geom, PolarPoint(0.25, math.inf, 2))


def test_polar_roundtrip_matches_distance():
    # Map (r, lam) to a point, then the control distance back to the origin is r.
    geom = _oracle()
    lam = 0.3
    td = turning_data(geom, lam)
    for r, region in [
        (0.4 * td.Rlen, 1),
        (0.95 * td.Rlen, 1),
        (1.3 * td.Rlen, 2),
        (1.9 * td.Rlen, 2),
    ]:
        p = polar_to_cartesian(geom, PolarPoint(r, lam, region))
        res = control_distance(geom, (0.0, 0.0), p)
        assert res.method in ("shooting", "oracle")
        if res.method == "shooting":
            assert res.value == pytest.approx(r, rel=1e-8)
            assert res.lam == pytest.approx(lam, rel=1e-6)


def test_control_distance_exact_cases():
    geom = _fk()
    assert control_distance(geom, (0.1, 0.4), (0.1, 0.4)) == (0.0, "exact", math.inf)
    res = control_distance(geom, (0.05, 0.2), (0.22, 0.2))
    assert res == (pytest.approx(0.17, abs=1e-15), "exact", math.inf)
    flat = _flat()
    res = control_distance(flat, (0.3, -0.1), (-0.1, 0.2))
    assert res.value == pytest.approx(math.hypot(0.4, 0.3), rel=1e-15)
    assert res.method == "exact"


def test_control_distance_symmetry_and_invariance():
    geom = _fk()
    p, q = (0.08, 0.0), (0.13, 2e-4)
    a = control_distance(geom, p, q)
    b = control_distance(geom, q, p)
    assert a.method == b.method == "shooting"
    assert a.value == b.value
    # Vertical translation and x-reflection leave the distance unchanged.
    c = control_distance(geom, (0.08, 0.7), (0.13, 0.7 + 2e-4))
    assert c.value == pytest.approx(a.value, rel=1e-12)
    d = control_distance(geom, (-0.08, 0.0), (-0.13, 2e-4))
    assert d.value == pytest.approx(a.value, rel=1e-12)


def test_control_distance_taxicab_bound():
    geom = _fk()
    x1, y = 0.1, 0.02
    res = control_distance(geom, (x1, 0.0), (x1, y))
    assert res.method == "shooting"
    assert 0.0 < res.value <= y / float(geom.f(x1)) * (1 + 1e-9)


def test_control_distance_reaches_turning_arc():
    # The distance from the axis foot to the turning point equals the arc length.
    geom = _fk()
    lam = float(geom.f(0.15))
    td = turning_data(geom, lam)
    res = control_distance(geom, (0.0, 0.0), (td.X, td.Y))
    assert res.method == "shooting"
    assert res.value == pytest.approx(td.Rlen, rel=1e-5)
    assert td.X < res.value <= (1 + 1 / geom.eps) * td.X * (1 + 1e-5)


def test_control_distance_oracle_fallback():
    geom = _fk()
    res = control_distance(geom, (-0.05, 0.0), (0.08, 1e-3))
    assert res.method == "oracle"
    assert res.value >= 0.13 * (1 - 0.05)
    assert math.isnan(res.lam)
    on_axis = control_distance(geom, (0.0, 0.0), (0.0, 1e-3))
    assert on_axis.method == "oracle"
    assert on_axis.value > 0
    with pytest.raises(Exception):
        control_distance(geom, (-0.05, 0.0), (0.08, 1e-3), oracle_fallback=False)


def test_control_distance_validation():
    geom = _fk()
    with pytest.raises(ValueError):
        control_distance(geom, (geom.R, 0.0), (0.1, 0.0))
    with pytest.raises(ValueError):
        control_distance(geom, (0.1, math.nan), (0.1, 0.0))


def _tuned_grid(geom: Geometry, p, q, nx: int = 241, c: float = 0.8):
    """Per-pair grid aligned to the shooting arc's metric slope."""
    d, _, lam = control_distance(geom, p, q)
    xmin = min(p[0], q[0])
    xlo = max(xmin - 0.05 * d, 1e-12)
    xhi = min(xmin + 1.10 * d, geom.R * (1 - 1e-9))
    hx = (xhi - xlo) / (nx - 1)
    ylo = min(p[1], q[1]) - 3e-3 * d * lam
    yhi = max(p[1], q[1]) + 3e-3 * d * lam
    hy = c * lam * hx
    ny = int(np.clip(math.ceil((yhi - ylo) / hy) + 1, 41, 6001))
    grid = Grid2D(nx=nx, ny=ny, hx=hx, hy=(yhi - ylo) / (ny - 1), origin=(xlo, ylo))
    return float(grid_distance(geom, grid, source=p, neighbors=32).at(*q))


def test_control_distance_matches_grid():
    geom = _fk()
    rng = Seed(314).generator()
    R = geom.R
    checked = 0
    while checked < 8:
        x1 = math.exp(rng.uniform(math.log(0.25 * R), math.log(0.7 * R)))
        x2 = float(np.clip(x1 + rng.uniform(-0.25, 0.6) * x1, 0.08 * R, 0.9 * R))
        y = rng.uniform(0.05, 1.5) * x1 * float(geom.f(max(x1, x2)))
        res = control_distance(geom, (x1, 0.0), (x2, y))
        if res.method != "shooting":
            continue
        approx = _tuned_grid(geom, (x1, 0.0), (x2, y))
        assert abs(approx - res.value) <= 0.03 * res.value
        checked += 1


def test_flat_grid_overestimates_by_secant_bound():
    # For f = 1 the 8-neighbour graph overestimates by at most sec(pi/8) + O(h).
    geom = _flat()
    p, q = (0.12, 0.2), (0.55, 0.47)
    exact = math.hypot(q[0] - p[0], q[1] - p[1])
    grid = Grid2D(nx=301, ny=301, hx=0.6 / 300, hy=0.6 / 300, origin=(0.05, 0.1))
    approx = float(grid_distance(geom, grid, source=p, neighbors=8).at(*q))
    ratio = approx / exact
    assert 1 - 1e-3 <= ratio <= 1 / math.cos(math.pi / 8) + 0.01


def test_grid_oracle_distance_flat():
    geom = _flat()
    p, q = (0.1, 0.1), (0.4, 0.3)
    exact = math.hypot(0.3, 0.2)
    approx = grid_oracle_distance(geom, p, q)
    assert approx == pytest.approx(exact, rel=0.05)


def test_dhat_shallow_case_returns_distance():
    geom = Geometry(DegeneracyFamily.power_type(2.0))
    res = dhat(geom, (0.3, 0.0), (0.5, 0.0))
    assert res.distance == pytest.approx(0.2, abs=1e-15)
    # 1/|F'(0.5)| = 0.25 exceeds the distance, so the shallow branch wins.
    assert res.value == res.distance
    assert 0 < res.gap < res.distance


def test_dhat_deep_case_uses_reciprocal_slope():
    geom = _fk()
    res = dhat(geom, (0.05, 0.0), (0.25, 0.0))
    recip = 1 / abs(float(geom.F1(0.25)))
    assert res.distance == pytest.approx(0.2, abs=1e-15)
    assert res.value == pytest.approx(recip, rel=1e-12)
    assert res.value < res.distance
    assert 0 < res.gap < res.distance


def test_dhat_validation():
    geom = _fk()
    with pytest.raises(ValueError):
        dhat(geom, (-0.2, 0.0), (0.2, 0.0))  # x1 + d reaches the boundary
    zero = dhat(geom, (0.1, 0.3), (0.1, 0.3))
    assert zero.value == zero.gap == zero.distance == 0.0


def test_ball_shape_near_regime():
    geom = _fk()
    shape = ball_shape(geom, 0.2, 0.01)
    assert isinstance(shape, BallShape)
    assert 0 <= shape.r_star < 0.01
    # Shallow balls are almost flat: the cap height tracks r * f(x1).
    assert shape.h == pytest.approx(0.01 * float(geom.f(0.2)), rel=0.05)


def test_ball_shape_far_regime():
    geom = _fk()
    shape = ball_shape(geom, 0.05, 0.2)
    slope = abs(float(geom.F1(0.25)))
    assert 0.1 <= (0.2 - shape.r_star) * slope <= 10
    lam = float(geom.f(0.05 + shape.r_star))
    f1 = float(geom.f(0.05))
    bound = math.sqrt(max(lam * lam - f1 * f1, 0.0)) / abs(float(geom.F1(0.05 + shape.r_star)))
    assert shape.h <= bound * (1 + 1e-7)


def test_ball_shape_origin():
    geom = _fk()
    shape = ball_shape(geom, 0.0, 0.05)
    assert shape.r_star == pytest.approx(0.04518, rel=1e-2)
    assert shape.h > 0
    assert shape.area == pytest.approx(8.82e-9, rel=0.02)


def test_ball_shape_rstar_monotone_in_r():
    geom = _fk()
    stars = [ball_shape(geom, 0.1, r).r_star for r in (0.02, 0.05, 0.1, 0.19)]
    assert all(b >= a for a, b in zip(stars, stars[1:]))


def test_ball_shape_flat_and_errors():
    flat = ball_shape(_flat(), 0.2, 0.1)
    assert flat.r_star == 0.0
    assert flat.h == 0.1
    assert flat.area == pytest.approx(math.pi * 0.01, rel=1e-12)
    geom = _fk()
    with pytest.raises(ValueError):
        ball_shape(geom, -0.1, 0.05)
    with pytest.raises(ValueError):
        ball_shape(geom, 0.2, 0.2)


def test_boundary_heights_stay_below_cap():
    geom = _fk()
    for x1, r in [(0.2, 0.05), (0.1, 0.05)]:
        shape = ball_shape(geom, x1, r)
        ymax = max(p[1] for p in _offaxis_boundary(geom, x1, r))
        assert 0.5 * shape.h <= ymax <= shape.h * (1 + 1e-6)
    shape = ball_shape(geom, 0.0, 0.05)
    ymax = max(p[1] for p in _origin_boundary(geom, 0.05))
    assert 0.5 * shape.h <= ymax <= shape.h * (1 + 1e-6)


def test_ball_area_closed_regimes():
    geom = _fk()
    near = ball_area_2d(geom, 0.2, 0.01)
    assert near == pytest.approx(1e-4 * float(geom.f(0.2)), rel=1e-12)
    far = ball_area_2d(geom, 0.05, 0.2)
    assert far == pytest.approx(float(geom.f(0.25)) / float(geom.F1(0.25)) ** 2, rel=1e-12)
    assert ball_area_2d(_flat(), 0.3, 0.1) == pytest.approx(math.pi * 0.01, rel=1e-12)


def test_ball_area_quadrature_comparable_to_closed():
    geom = _fk()
    closed = ball_area_2d(geom, 0.0, 0.05)
    quad = ball_area_2d(geom, 0.0, 0.05, method="quadrature")
    assert 0.1 <= quad / closed <= 10
    off = ball_area_2d(geom, 0.2, 0.05, method="quadrature")
    assert 0.1 <= off / ball_area_2d(geom, 0.2, 0.05) <= 10
    with pytest.raises(ValueError, match="x1 = 0 or x1 >= r"):
        ball_area_2d(geom, 0.01, 0.05, method="quadrature")
    with pytest.raises(ComparabilityError):
        ball_area_2d(geom, 0.0, 0.05, method="quadrature", kappa=1.0001)


def test_ball_area_quadrature_radial_identity():
    # The origin ball area is comparable to int_0^r f/|F'| dr.
    geom = _fk()
    quad = ball_area_2d(geom, 0.0, 0.05, method="quadrature")
    rs = np.geomspace(1e-6, 0.05, 4001)
    radial = float(np.trapezoid(geom.f(rs) / np.abs(geom.F1(rs)), rs))
    assert 0.1 <= quad / radial <= 10


def test_ball_area_montecarlo():
    flat_area = ball_area_2d(_flat(), 0.3, 0.1, method="montecarlo", seed=Seed(5))
    assert flat_area == pytest.approx(math.pi * 0.01, rel=0.02)
    geom = _fk()
    mc = ball_area_2d(geom, 0.0, 0.05, method="montecarlo", seed=Seed(7))
    assert 0.1 <= mc / ball_area_2d(geom, 0.0, 0.05) <= 10
    again = ball_area_2d(geom, 0.0, 0.05, method="montecarlo", seed=Seed(7))
    assert again == mc
    with pytest.raises(ValueError):
        ball_area_2d(geom, 0.0, 0.05, method="montecarlo")


def test_ball_volume_3d():
    geom = _fk()
    near = ball_volume_3d(geom, 0.2, 0.01)
    assert near == pytest.approx(1e-6 * float(geom.f(0.2)), rel=1e-12)
    far = ball_volume_3d(geom, 0.05, 0.2)
    assert far == pytest.approx(float(geom.f(0.25)) / abs(float(geom.F1(0.25))) ** 3, rel=1e-12)
    mild = Geometry(DegeneracyFamily.fksigma(1, 0.5))
    checked = ball_volume_3d(mild, 0.05, 0.1, cross_check=True)
    assert checked > 0
    assert ball_volume_3d(_flat(), 0.1, 0.05) == pytest.approx(4 * math.pi * 0.05**3 / 3, rel=1e-12)


def test_doubling_increment_flat_exact():
    assert doubling_increment(_flat(), 0.2, 0.1) == pytest.approx(0.1 * (1 - 1 / math.sqrt(2)), rel=1e-9)
    assert doubling_increment(_flat(), 0.2, 0.1, dim=3) == pytest.approx(0.1 * (1 - 2 ** (-1 / 3)), rel=1e-9)


def test_doubling_increment_tracks_slope():
    geom = _fk()
    delta = doubling_increment(geom, 0.0, 0.05)
    assert 0 < delta < 0.05
    # Deep balls double within about one reciprocal-slope length.
    assert 0.1 <= delta * abs(float(geom.F1(0.05))) / math.log(2) <= 10
    d3 = doubling_increment(geom, 0.0, 0.05, dim=3)
    assert 0 < d3 < delta  # the 3-d measure grows faster, so it doubles sooner


def test_mk_integral_closed_forms():
    geom = _oracle()
    lam = 0.5
    for x in (0.1, 0.3, 0.45):
        assert mk_integral(geom, lam, x, 3) == pytest.approx(_oracle_m3(lam, x), rel=1e-9)
        assert mk_integral(geom, lam, x, 5) == pytest.approx(_oracle_m5(lam, x), rel=1e-9)
    assert mk_integral(geom, lam, 0.0, 3) == 0.0
    with pytest.raises(ValueError):
        mk_integral(geom, lam, 0.1, 4)
    with pytest.raises(ValueError):
        mk_integral(geom, lam, 0.6, 3)  # past the turning point


def test_jacobian_region1_closed_form():
    geom = _oracle()
    lam = 0.4
    td = turning_data(geom, lam)
    # Halfway out in arc length, region 1.
    p = PolarPoint(0.5 * td.Rlen, lam, 1)
    x, _ = polar_to_cartesian(geom, p)
    expected = math.sqrt(lam * lam - x * x) * _oracle_m3(lam, x)
    assert jacobian(geom, p) == pytest.approx(expected, rel=1e-8)


def test_jacobian_pastes_across_turning():
    geom = _fk()
    lam = float(geom.f(0.15))
    td = turning_data(geom, lam)
    j1 = jacobian(geom, PolarPoint(td.Rlen * 0.999, lam, 1))
    j2 = jacobian(geom, PolarPoint(td.Rlen * 1.001, lam, 2))
    assert 0.8 <= j1 / j2 <= 1.25
    recip = 1 / abs(float(geom.F1(td.X)))
    assert 0.1 <= j1 / recip <= 10
    assert 0.1 <= j2 / recip <= 10


def test_jacobian_errors():
    geom = _fk()
    lam = float(geom.f(0.15))
    td = turning_data(geom, lam)
    with pytest.raises(ValueError, match="degenerate"):
        jacobian(geom, PolarPoint(td.Rlen * (1 - 1e-14), lam, 1))
    with pytest.raises(ValueError):
        jacobian(geom, PolarPoint(0.1, math.inf, 1))


def test_dY_dlam_matches_fd():
    geom = _oracle()
    lam = 0.4
    td = turning_data(geom, lam)
    # For f(u) = u, dY/dlam = pi*lam/2 exactly.
    assert _dY_dlam(geom, lam, td.X) == pytest.approx(math.pi * lam / 2, rel=1e-9)
    fk = _fk()
    lam = float(fk.f(0.15))
    h = 1e-5 * lam
    y_plus = turning_data(fk, lam + h).Y
    y_minus = turning_data(fk, lam - h).Y
    fd = (y_plus - y_minus) / (2 * h)
    X = turning_data(fk, lam).X
    assert _dY_dlam(fk, lam, X) == pytest.approx(fd, rel=1e-4)
