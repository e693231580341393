"""Tests for degeneracy profiles and the structural diagnostics."""

import math

import numpy as np
import pytest
import sympy

from degenlab.geometry import (
    ConditionReport,
    DegeneracyFamily,
    DomainError,
    Geometry,
    check_structure,
    consequences_check,
    eval_F,
    eval_F1,
    eval_F2,
    eval_f,
    kusuoka_limit,
)
from degenlab.numerics import Grid2D, Seed, grid_distance

FAMILIES = [
    DegeneracyFamily.fksigma(1, 0.5),
    DegeneracyFamily.fksigma(1, 2.0),
    DegeneracyFamily.fksigma(2, 1.0),
    DegeneracyFamily.fksigma(2, 5.0),
    DegeneracyFamily.fksigma(3, 1.0),
    DegeneracyFamily.dsigma(0.5),
    DegeneracyFamily.dsigma(2.0),
    DegeneracyFamily.hn(1.0),
    DegeneracyFamily.hn(2.5),
    DegeneracyFamily.power_type(2.0),
    DegeneracyFamily.inverse_x(),
    DegeneracyFamily.exp_decay(1.0),
    DegeneracyFamily.exp_decay(3.0),
]


def _sympy_custom(build):
    """Build a custom family from a sympy expression in x (positive symbol)."""
    x = sympy.Symbol("x", positive=True)
    expr = build(x)
    fns = [sympy.lambdify(x, e, modules="numpy") for e in (expr, sympy.diff(expr, x), sympy.diff(expr, x, 2))]
    return DegeneracyFamily.custom(*fns)


def test_family_validation_rejects_bad_parameters():
    with pytest.raises(ValueError):
        DegeneracyFamily.fksigma(0, 1.0)
    with pytest.raises(ValueError):
        DegeneracyFamily.fksigma(1, -1.0)
    with pytest.raises(ValueError):
        DegeneracyFamily.dsigma(0.0)
    with pytest.raises(ValueError):
        DegeneracyFamily.hn(-0.1)
    with pytest.raises(ValueError):
        DegeneracyFamily.power_type(0.0)
    with pytest.raises(ValueError):
        DegeneracyFamily.exp_decay(0.0)
    with pytest.raises(ValueError):
        DegeneracyFamily(kind="bogus")
    with pytest.raises(ValueError):
        DegeneracyFamily(kind="custom", F=lambda x: x, F1=lambda x: x)


def test_geometry_radius_validation():
    with pytest.raises(ValueError):
        Geometry(DegeneracyFamily.hn(1.0), R=-0.1)
    with pytest.raises(ValueError):
        Geometry(DegeneracyFamily.hn(1.0), R=math.inf)


def test_fksigma_value_at_unit_log_point():
    x = math.exp(-1.0)
    for sigma in (0.5, 1.0, 3.0):
        geom = Geometry(DegeneracyFamily.fksigma(1, sigma), R=0.5)
        assert geom.R >= x
        assert eval_f(geom, x) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_power_type_and_hn_values():
    geom = Geometry(DegeneracyFamily.power_type(2.0))
    assert eval_f(geom, 0.5) == pytest.approx(0.25, rel=1e-14)
    assert eval_f(Geometry(DegeneracyFamily.hn(2.0)), 0.5) == pytest.approx(0.25, rel=1e-14)


def test_exp_decay_value():
    geom = Geometry(DegeneracyFamily.exp_decay(1.0))
    assert eval_f(geom, 0.1) == pytest.approx(math.exp(-10.0), rel=1e-13)
    assert eval_f(geom, 0.1) == pytest.approx(4.5400e-5, rel=1e-4)


def test_even_extension_and_origin():
    geom = Geometry(DegeneracyFamily.fksigma(2, 1.0), R=0.05)
    assert eval_f(geom, -0.01) == eval_f(geom, 0.01)
    assert eval_F1(geom, -0.01) == eval_F1(geom, 0.01)
    assert eval_f(geom, 0.0) == 0.0
    flat = Geometry(DegeneracyFamily.hn(0.0))
    assert eval_f(flat, 0.0) == 1.0
    assert eval_f(flat, 0.3) == 1.0
    with pytest.raises(DomainError):
        eval_F(geom, 0.0)


def test_domain_rejection():
    geom = Geometry(DegeneracyFamily.hn(1.0))
    with pytest.raises(DomainError):
        eval_f(geom, 0.95)
    with pytest.raises(DomainError):
        eval_f(geom, -0.95)
    with pytest.raises(DomainError):
        eval_f(geom, math.nan)
    with pytest.raises(DomainError):
        eval_f(geom, np.array([0.1, 0.95]))


def test_vectorized_shapes():
    geom = Geometry(DegeneracyFamily.dsigma(1.0))
    xs = np.array([[0.01, 0.02], [0.05, -0.05]])
    out = eval_f(geom, xs)
    assert out.shape == xs.shape
    assert out[1, 0] == out[1, 1]
    assert isinstance(eval_f(geom, 0.01), float)
    assert isinstance(eval_F2(geom, 0.01), float)


def test_derivative_consistency_all_families():
    for fam in FAMILIES:
        geom = Geometry(fam)
        xs = np.geomspace(geom.R * 1e-4, geom.R * 0.97, 100)
        h = xs * 3e-6
        fd1 = (geom.F(xs + h) - geom.F(xs - h)) / (2 * h)
        d1 = geom.F1(xs)
        rel1 = np.abs(fd1 - d1) / np.maximum(np.abs(d1), 1e-12)
        assert np.max(rel1) < 1e-5, fam
        fd2 = (geom.F1(xs + h) - geom.F1(xs - h)) / (2 * h)
        d2 = geom.F2(xs)
        rel2 = np.abs(fd2 - d2) / np.maximum(np.abs(d2), 1e-12)
        assert np.max(rel2) < 1e-5, fam


def test_profile_monotone_in_x():
    for fam in FAMILIES:
        geom = Geometry(fam)
        xs = np.geomspace(geom.R * 1e-6, geom.R * (1 - 1e-9), 400)
        fs = geom.f(xs)
        assert np.all(np.diff(fs) >= -1e-15 * fs[:-1]), fam


def test_default_radius_guards():
    assert Geometry(DegeneracyFamily.fksigma(1, 1.0)).R == pytest.approx(0.3)
    g2 = Geometry(DegeneracyFamily.fksigma(2, 1.0))
    assert g2.R == pytest.approx(0.9 * math.exp(-math.e), rel=1e-12)
    g3 = Geometry(DegeneracyFamily.fksigma(3, 1.0))
    assert g3.R < 2.63e-7
    assert math.isfinite(eval_F(g3, g3.R * (1 - 1e-9)))
    shrunk = Geometry(DegeneracyFamily.fksigma(2, 1.0), R=0.5)
    assert shrunk.R <= math.exp(-math.e) * (1 + 1e-12)
    with pytest.raises(DomainError, match="level 4"):
        Geometry(DegeneracyFamily.fksigma(4, 1.0))


def test_structural_constants_reference_values():
    geom = Geometry(DegeneracyFamily.fksigma(1, 1.0))
    assert geom.eps == pytest.approx(2.0 * math.log(1 / 0.3), rel=1e-6)
    assert 2.0 <= geom.C <= 4.0
    lin = Geometry(DegeneracyFamily.hn(1.0))
    assert lin.eps == pytest.approx(1.0, abs=1e-12)
    assert lin.C == pytest.approx(2.0, abs=0.01)
    flat = Geometry(DegeneracyFamily.hn(0.0))
    assert flat.eps == 0.0 and flat.C == 1.0


def test_structure_reference_families_pass():
    cases = [
        Geometry(DegeneracyFamily.fksigma(1, 0.5)),
        Geometry(DegeneracyFamily.fksigma(2, 1.0), R=0.05),
        Geometry(DegeneracyFamily.fksigma(3, 1.0)),
        Geometry(DegeneracyFamily.dsigma(0.5)),
        Geometry(DegeneracyFamily.hn(1.0)),
        Geometry(DegeneracyFamily.exp_decay(1.0)),
        Geometry(DegeneracyFamily.inverse_x()),
    ]
    for geom in cases:
        report = check_structure(geom, 1000)
        assert isinstance(report, ConditionReport)
        assert report.all_pass, (geom.family, report)


def test_structure_flags_nondegenerate_profile():
    const = _sympy_custom(lambda x: sympy.log(2) + 0 * x)
    report = check_structure(Geometry(const, R=0.3), 200)
    assert not report.limit_divergence.passed
    assert report.limit_divergence.witness is not None
    assert not report.all_pass
    flat = check_structure(Geometry(DegeneracyFamily.hn(0.0)), 200)
    assert not flat.limit_divergence.passed


def test_structure_strictness_modes():
    geom = Geometry(DegeneracyFamily.hn(1.0))
    assert check_structure(geom, 500, "nondecreasing").decay_monotonicity.passed
    strict = check_structure(geom, 500, "strict")
    assert not strict.decay_monotonicity.passed
    assert strict.decay_monotonicity.witness is not None


def test_structure_detects_decreasing_decay():
    slow = _sympy_custom(lambda x: sympy.log(sympy.log(1 / x)))
    report = check_structure(Geometry(slow, R=0.3), 500)
    assert report.limit_divergence.passed
    assert report.derivative_signs.passed
    assert not report.decay_monotonicity.passed


def test_structure_detects_curvature_imbalance():
    sharp = _sympy_custom(lambda x: sympy.exp(sympy.log(1 / x) ** 2))
    report = check_structure(Geometry(sharp, R=0.3), 500)
    assert not report.curvature_ratio.passed
    assert not report.all_pass


def test_structure_argument_validation():
    geom = Geometry(DegeneracyFamily.hn(1.0))
    with pytest.raises(ValueError):
        check_structure(geom, 5)
    with pytest.raises(ValueError):
        check_structure(geom, 100, "sometimes")
    with pytest.raises(ValueError):
        check_structure(geom, 100, kappa=0.5)


def test_consequences_reference_families():
    report = consequences_check(Geometry(DegeneracyFamily.fksigma(1, 0.5)), 1000)
    assert report.all_pass
    deep = consequences_check(Geometry(DegeneracyFamily.fksigma(2, 2.0), R=0.01), 1000)
    assert deep.all_pass
    assert deep.curvature_balance.value <= 4.0


def test_consequences_flat_profile_trivial():
    report = consequences_check(Geometry(DegeneracyFamily.hn(0.0)), 100)
    assert report.all_pass
    assert report.power_decay.value == 1.0


def test_consequences_seeded_reproducible():
    geom = Geometry(DegeneracyFamily.dsigma(1.0))
    a = consequences_check(geom, 500, seed=Seed(7))
    b = consequences_check(geom, 500, seed=Seed(7))
    assert a.local_comparability.value == b.local_comparability.value


def test_kusuoka_exp_decay_constant():
    res = kusuoka_limit(Geometry(DegeneracyFamily.exp_decay(1.0)))
    assert res.limit_estimate == pytest.approx(1.0, abs=1e-9)
    assert not res.hypoelliptic
    res_inv = kusuoka_limit(Geometry(DegeneracyFamily.inverse_x()))
    assert res_inv.limit_estimate == pytest.approx(1.0, abs=1e-9)
    assert not res_inv.hypoelliptic


def test_kusuoka_iterated_log_families_hypoelliptic():
    for fam in (
        DegeneracyFamily.fksigma(1, 1.0),
        DegeneracyFamily.fksigma(2, 1.0),
        DegeneracyFamily.fksigma(3, 0.5),
        DegeneracyFamily.hn(2.0),
    ):
        res = kusuoka_limit(Geometry(fam))
        assert res.hypoelliptic, fam
        assert abs(res.limit_estimate) <= 1e-3


def test_kusuoka_dsigma_threshold():
    assert kusuoka_limit(Geometry(DegeneracyFamily.dsigma(0.5))).hypoelliptic
    heavy = kusuoka_limit(Geometry(DegeneracyFamily.dsigma(2.0)))
    assert not heavy.hypoelliptic
    assert heavy.trend_slope > 0


def test_degeneracy_ordering_of_families():
    rs = np.geomspace(1e-4, 0.04, 200)
    finite = Geometry(DegeneracyFamily.hn(1.0), R=0.05)
    iterated = Geometry(DegeneracyFamily.fksigma(2, 1.0), R=0.05)
    strong = Geometry(DegeneracyFamily.dsigma(1.0), R=0.05)
    F_h, F_k, F_d = finite.F(rs), iterated.F(rs), strong.F(rs)
    assert np.all(F_h <= 10.0 * F_k)
    assert np.all(F_k <= 10.0 * F_d)


def test_config_roundtrip():
    fams = [
        DegeneracyFamily.fksigma(2, 1.0),
        DegeneracyFamily.dsigma(2.0),
        DegeneracyFamily.hn(1.5),
        DegeneracyFamily.power_type(2.0),
        DegeneracyFamily.inverse_x(),
        DegeneracyFamily.exp_decay(0.7),
    ]
    for fam in fams:
        geom = Geometry(fam)
        clone = Geometry.from_config(geom.to_config())
        assert clone.family == geom.family
        assert clone.R == geom.R
        x = geom.R * 0.5
        assert eval_f(clone, x) == eval_f(geom, x)
    assert Geometry.from_config({"family": "hn", "N": 1.0}).R == 0.9
    custom = _sympy_custom(lambda x: 1 / x)
    with pytest.raises(ValueError):
        Geometry(custom, R=0.3).to_config()


def test_custom_derivative_mismatch_rejected():
    bad = DegeneracyFamily.custom(
        lambda x: 1.0 / x,
        lambda x: -1.01 / x**2,
        lambda x: 2.0 / x**3,
    )
    with pytest.raises(ValueError, match="F1"):
        Geometry(bad, R=0.3)


def test_geometry_equality_and_hash():
    a = Geometry(DegeneracyFamily.fksigma(1, 1.0))
    b = Geometry(DegeneracyFamily.fksigma(1, 1.0))
    assert a == b
    assert hash(a) == hash(b)
    assert a != Geometry(DegeneracyFamily.fksigma(1, 2.0))


def test_flat_profile_feeds_grid_distance():
    geom = Geometry(DegeneracyFamily.hn(0.0))
    grid = Grid2D(21, 21, 0.01, 0.01, origin=(-0.1, -0.1))
    field = grid_distance(geom, grid, source=(0.0, 0.0))
    assert field.at(0.05, 0.0) == pytest.approx(0.05, abs=1e-12)
    assert field.at(0.03, 0.04) <= 0.05 * (1.0 / math.cos(math.pi / 8) + 1e-9)
