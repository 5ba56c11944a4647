"""Kernel tests: world functions, scalar products, density, triangle axiom,
metric tensor, sigma coordinates, angles."""

import math
from fractions import Fraction

import numpy as np
import pytest

import worldfunc as wf
from worldfunc import Geometry, GeomVector, UnitConstants, DeformationFunction


EUCLID3 = Geometry.euclidean(3)
MINK = Geometry.minkowski()


def random_geometries():
    return [
        Geometry.euclidean(2),
        Geometry.euclidean(3),
        MINK,
        Geometry.discrete(0.01),
        Geometry.grainy(0.01, 0.03),
        Geometry.deformed(DeformationFunction.from_table([[-5, -5.5], [0, 0], [5, 5.5]])),
    ]


# ---------------------------------------------------------------------------
# sigma
# ---------------------------------------------------------------------------

def test_sigma_euclidean():
    assert wf.sigma(EUCLID3, (0, 0, 0), (3, 4, 0)) == 12.5


def test_sigma_minkowski():
    assert wf.sigma(MINK, (0, 0, 0, 0), (1, 0, 0, 0)) == 0.5
    assert wf.sigma(MINK, (0, 0, 0, 0), (0, 1, 0, 0)) == -0.5


def test_sigma_discrete():
    g = Geometry.discrete(0.01)
    assert wf.sigma(g, (0, 0, 0, 0), (1, 0, 0, 0)) == 0.51
    # null separation: sgn(0) = 0, so the deformation vanishes
    assert wf.sigma(g, (0, 0, 0, 0), (1, 1, 0, 0)) == 0.0


def test_sigma_identity_and_symmetry_exact():
    rng = np.random.default_rng(1)
    for g in random_geometries():
        for _ in range(200):
            p = rng.uniform(-5, 5, g.dim)
            q = rng.uniform(-5, 5, g.dim)
            assert wf.sigma(g, p, p) == 0.0
            assert wf.sigma(g, q, q) == 0.0
            assert wf.sigma(g, p, q) == wf.sigma(g, q, p)


def test_sigma_dimension_mismatch():
    with pytest.raises(wf.DimensionMismatchError):
        wf.sigma(EUCLID3, (0, 0), (1, 1))
    with pytest.raises(wf.DimensionMismatchError):
        wf.sigma(MINK, (0, 0, 0), (1, 1, 1))


def test_sigma_broadcasts():
    pts = np.array([[1.0, 0, 0, 0], [0, 1, 0, 0], [2, 0, 0, 0]])
    out = wf.sigma(MINK, np.zeros(4), pts)
    assert np.array_equal(out, [0.5, -0.5, 2.0])


def test_grainy_with_zero_sigma0_equals_discrete():
    gd = Geometry.discrete(0.01)
    gg = Geometry.grainy(0.01, 0.0)
    rng = np.random.default_rng(2)
    p = rng.uniform(-3, 3, (500, 4))
    q = rng.uniform(-3, 3, (500, 4))
    assert np.array_equal(wf.sigma(gd, p, q), wf.sigma(gg, p, q))
    # including exactly-null pairs
    assert wf.sigma(gg, (0, 0, 0, 0), (1, 1, 0, 0)) == wf.sigma(gd, (0, 0, 0, 0), (1, 1, 0, 0)) == 0.0


def test_deformed_identity_is_minkowski():
    g = Geometry.deformed(DeformationFunction.identity())
    rng = np.random.default_rng(3)
    p = rng.uniform(-3, 3, (500, 4))
    q = rng.uniform(-3, 3, (500, 4))
    assert np.array_equal(wf.sigma(g, p, q), wf.sigma(MINK, p, q))


# ---------------------------------------------------------------------------
# scalar product and lengths
# ---------------------------------------------------------------------------

def test_scalar_product_orthogonal_unit_vectors():
    a = GeomVector((0, 0, 0), (1, 0, 0))
    b = GeomVector((0, 0, 0), (0, 1, 0))
    assert wf.scalar_product(EUCLID3, a, b) == 0.0


def test_scalar_product_self_is_squared_length_exact():
    rng = np.random.default_rng(4)
    for g in random_geometries():
        for _ in range(100):
            a = GeomVector(rng.uniform(-2, 2, g.dim), rng.uniform(-2, 2, g.dim))
            assert wf.scalar_product(g, a, a) == wf.squared_length(g, a)


def test_scalar_product_minkowski_example():
    a = GeomVector((0, 0, 0, 0), (1, 0, 0, 0))
    b = GeomVector((0, 0, 0, 0), (1, 1, 0, 0))
    # coordinate oracle: x0*y0 - x.y
    assert wf.scalar_product(MINK, a, b) == pytest.approx(1.0, abs=1e-15)


def test_scalar_product_euclidean_matches_dot_product():
    rng = np.random.default_rng(5)
    for _ in range(10000):
        o1, e1, o2, e2 = rng.uniform(-2, 2, (4, 3))
        got = wf.scalar_product(EUCLID3, GeomVector(o1, e1), GeomVector(o2, e2))
        want = float((e1 - o1) @ (e2 - o2))
        scale = max(1.0, abs(want))
        assert abs(got - want) <= 1e-12 * scale


def test_scalar_product_minkowski_matches_coordinates():
    rng = np.random.default_rng(6)
    for _ in range(10000):
        o1, e1, o2, e2 = rng.uniform(-2, 2, (4, 4))
        got = wf.scalar_product(MINK, GeomVector(o1, e1), GeomVector(o2, e2))
        x, y = e1 - o1, e2 - o2
        want = x[0] * y[0] - float(x[1:] @ y[1:])
        scale = max(1.0, abs(want))
        assert abs(got - want) <= 1e-12 * scale


def test_squared_length_examples():
    assert wf.squared_length(Geometry.euclidean(2), GeomVector((0, 0), (1, 0))) == 1.0
    assert wf.squared_length(MINK, GeomVector((0, 0, 0, 0), (0, 1, 0, 0))) == -1.0
    # discrete: 2 (sigma_M + lambda0_sq) = 2 (2 + 0.02)
    g = Geometry.discrete(0.02)
    want = 2.0 * (2.0 + 0.02)
    assert wf.squared_length(g, GeomVector((0, 0, 0, 0), (2, 0, 0, 0))) == want == 4.04


# ---------------------------------------------------------------------------
# relative density
# ---------------------------------------------------------------------------

def test_relative_density_branches():
    assert wf.relative_density(0.01, 0.03, 1.0) == 1.0
    assert wf.relative_density(0.01, 0.03, 0.02) == 0.03 / 0.04 == pytest.approx(0.75)
    assert wf.relative_density(0.01, 0.03, -1.0) == 1.0
    assert wf.relative_density(0.01, 0.03, 0.04) == 0.03 / 0.04  # boundary: |sigma_g| = edge


def test_relative_density_discrete_limit():
    assert wf.relative_density(0.01, 0.0, 0.005) == 0.0


def test_relative_density_undeformed():
    assert wf.relative_density(0.0, 0.0, 0.5) == 1.0


def test_relative_density_grid():
    rho = wf.relative_density(0.01, 0.03, np.array([-1.0, 0.0, 0.02, 1.0]))
    assert np.array_equal(rho, [1.0, 0.75, 0.75, 1.0])


def test_relative_density_rejects_negative():
    with pytest.raises(wf.InvalidInputError):
        wf.relative_density(-0.01, 0.03, 1.0)


# ---------------------------------------------------------------------------
# triangle axiom
# ---------------------------------------------------------------------------

def test_triangle_axiom_euclidean_random():
    rng = np.random.default_rng(7)
    triples = rng.uniform(-5, 5, (10000, 3, 3))
    reports = wf.check_triangle_axiom(EUCLID3, triples)
    assert all(r.holds and not r.skipped for r in reports)
    assert min(r.slack for r in reports) >= -1e-12


def test_triangle_axiom_minkowski_collinear():
    reports = wf.check_triangle_axiom(MINK, [((0, 0, 0, 0), (2, 0, 0, 0), (1, 0, 0, 0))])
    assert reports[0].holds and reports[0].slack == 0.0


def test_triangle_axiom_discrete_violation():
    g = Geometry.discrete(0.02)
    triple = ((0, 0, 0, 0), (2, 0, 0, 0), (1, 0.999, 0, 0))
    (report,) = wf.check_triangle_axiom(g, [triple])
    assert not report.skipped
    assert report.slack < 0 and not report.holds

    # exact-arithmetic oracle: legs 2 sigma_d = 1999/10^6 + 2/50 each,
    # base 2 sigma_d = 101/25; violated iff 4 * leg < base
    leg = Fraction(1999, 10**6) + Fraction(2, 50)
    base = Fraction(101, 25)
    assert 4 * leg < base


def test_triangle_axiom_skips_spacelike():
    (report,) = wf.check_triangle_axiom(MINK, [((0, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0))])
    assert report.skipped and report.holds and math.isnan(report.slack)


# ---------------------------------------------------------------------------
# metric tensor and sigma coordinates
# ---------------------------------------------------------------------------

STD4 = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]


def test_metric_tensor_minkowski_signature():
    gkl, ginv = wf.metric_tensor(MINK, (0, 0, 0, 0), STD4)
    assert np.array_equal(gkl, np.diag([1.0, -1.0, -1.0, -1.0]))
    assert np.abs(ginv @ gkl - np.eye(4)).max() < 1e-10


def test_metric_tensor_euclidean_identity():
    g2 = Geometry.euclidean(2)
    gkl, ginv = wf.metric_tensor(g2, (0, 0), [(1, 0), (0, 1)])
    assert np.array_equal(gkl, np.eye(2))
    assert np.array_equal(ginv, np.eye(2))


def test_metric_tensor_degenerate_basis():
    with pytest.raises(wf.DegenerateBasisError):
        wf.metric_tensor(Geometry.euclidean(2), (0, 0), [(1, 0), (1, 0)])


def test_sigma_coordinates_minkowski():
    v = GeomVector((0, 0, 0, 0), (1, 2, 0, 0))
    coords = wf.sigma_coordinates(MINK, v, (0, 0, 0, 0), STD4)
    # oracle: chart coordinate differences
    assert np.abs(coords - np.array([1.0, 2.0, 0.0, 0.0])).max() < 1e-12


def test_sigma_coordinates_zero_vector():
    v = GeomVector((1, 1, 0, 0), (1, 1, 0, 0))
    coords = wf.sigma_coordinates(MINK, v, (0, 0, 0, 0), STD4)
    assert np.array_equal(coords, np.zeros(4))


def test_sigma_coordinates_translation_invariant():
    v = GeomVector((1, 1, 1), (2, 1, 1))
    coords = wf.sigma_coordinates(EUCLID3, v, (0, 0, 0), [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    assert np.abs(coords - np.array([1.0, 0.0, 0.0])).max() < 1e-12


# ---------------------------------------------------------------------------
# angles
# ---------------------------------------------------------------------------

def test_euclidean_angle_right():
    g2 = Geometry.euclidean(2)
    a = GeomVector((0, 0), (1, 0))
    b = GeomVector((0, 0), (0, 1))
    assert wf.euclidean_angle(g2, a, b) == pytest.approx(math.pi / 2, abs=1e-15)


def test_euclidean_angle_self_zero():
    a = GeomVector((0.3, -0.2), (1.1, 0.7))
    assert wf.euclidean_angle(Geometry.euclidean(2), a, a) == 0.0


def test_euclidean_angle_45():
    g2 = Geometry.euclidean(2)
    a = GeomVector((0, 0), (1, 0))
    b = GeomVector((0, 0), (1, 1))
    got = wf.euclidean_angle(g2, a, b)
    # coordinate oracle
    want = math.acos((np.array([1, 0]) @ np.array([1, 1])) / math.sqrt(2.0))
    assert got == pytest.approx(want, abs=1e-15)
    assert got == pytest.approx(math.pi / 4, abs=1e-15)


def test_euclidean_angle_rejects_nonpositive_length():
    with pytest.raises(wf.UndefinedAngleError):
        wf.euclidean_angle(MINK, GeomVector((0, 0, 0, 0), (0, 1, 0, 0)),
                           GeomVector((0, 0, 0, 0), (1, 0, 0, 0)))


def test_euclidean_angle_rejects_non_euclidean_ratio():
    # timelike pair with (a.b) > |a||b| (reverse Cauchy-Schwarz)
    a = GeomVector((0, 0, 0, 0), (1, 0, 0, 0))
    b = GeomVector((0, 0, 0, 0), (2, 1, 0, 0))
    with pytest.raises(wf.UndefinedAngleError):
        wf.euclidean_angle(MINK, a, b)


# ---------------------------------------------------------------------------
# discrete distance gap
# ---------------------------------------------------------------------------

def test_discrete_distance_gap():
    g = Geometry.discrete(0.01)
    rng = np.random.default_rng(8)
    collected = 0
    min_dist = np.inf
    while collected < 100000:
        p = rng.uniform(-2, 2, (50000, 4))
        q = rng.uniform(-2, 2, (50000, 4))
        sm = wf.sigma(MINK, p, q)
        keep = sm > 0
        sd = wf.sigma(g, p[keep], q[keep])
        if sd.size:
            min_dist = min(min_dist, float(np.sqrt(2.0 * sd).min()))
        collected += int(keep.sum())
    assert min_dist >= math.sqrt(2) * 0.1


# ---------------------------------------------------------------------------
# deformation functions, units, serialization
# ---------------------------------------------------------------------------

def test_deformation_table_requires_zero_at_zero():
    with pytest.raises(wf.InvalidInputError):
        DeformationFunction.from_table([[-1, -0.9], [1, 1.2]])  # F(0) = 0.15 != 0


def test_deformation_table_requires_increasing_breakpoints():
    with pytest.raises(wf.InvalidInputError):
        DeformationFunction.from_table([[1, 1], [0, 0], [2, 2]])


def test_deformation_table_interpolates_and_extrapolates():
    F = DeformationFunction.from_table([[0, 0], [1, 2], [2, 3]])
    assert F(0.5) == 1.0
    assert F(1.5) == 2.5
    assert F(3.0) == 4.0   # linear extrapolation of the last segment
    assert F(-1.0) == -2.0  # linear extrapolation of the first segment


def test_deformation_builtins_match_geometries():
    x = np.linspace(-2, 2, 101)
    F = DeformationFunction.discrete_shift(0.01)
    assert np.array_equal(F(x), x + 0.01 * np.sign(x))
    G = DeformationFunction.grainy_ramp(0.01, 0.03)
    gg = Geometry.grainy(0.01, 0.03)
    mink = Geometry.minkowski()
    p = np.zeros(4)
    for sm in (-1.0, -0.02, 0.0, 0.02, 1.0):
        q = np.array([math.sqrt(2 * sm), 0, 0, 0]) if sm >= 0 else np.array([0, math.sqrt(-2 * sm), 0, 0])
        assert G(wf.sigma(mink, p, q)) == wf.sigma(gg, p, q)


def test_unit_constants():
    u = UnitConstants(hbar=0.02, c=1.0, b=1.0)
    assert u.elementary_area == 0.01
    with pytest.raises(wf.InvalidInputError):
        UnitConstants(hbar=-1.0)
    g = Geometry.discrete_from_units(u)
    assert g.lambda0_sq == 0.01


def test_geometry_constructor_validation():
    with pytest.raises(wf.InvalidInputError):
        Geometry.discrete(0.0)
    with pytest.raises(wf.InvalidInputError):
        Geometry.grainy(-0.1, 0.0)
    with pytest.raises(wf.InvalidInputError):
        Geometry.euclidean(0)


def test_geometry_serialization_roundtrip():
    geoms = random_geometries() + [Geometry.deformed(DeformationFunction.identity())]
    rng = np.random.default_rng(9)
    for g in geoms:
        g2 = Geometry.from_dict(g.to_dict())
        assert g2.kind == g.kind and g2.dim == g.dim
        p = rng.uniform(-2, 2, (100, g.dim))
        q = rng.uniform(-2, 2, (100, g.dim))
        assert np.array_equal(wf.sigma(g, p, q), wf.sigma(g2, p, q))


def test_builtin_deformation_serialization_roundtrip():
    for F in (DeformationFunction.discrete_shift(0.01),
              DeformationFunction.grainy_ramp(0.01, 0.03),
              DeformationFunction.identity()):
        g = Geometry.deformed(F)
        g2 = Geometry.from_dict(g.to_dict())
        x = np.linspace(-2, 2, 41)
        p = np.zeros((41, 4))
        q = np.stack([np.where(x >= 0, np.sqrt(2 * np.abs(x)), 0.0),
                      np.where(x < 0, np.sqrt(2 * np.abs(x)), 0.0),
                      np.zeros(41), np.zeros(41)], axis=1)
        assert np.array_equal(wf.sigma(g, p, q), wf.sigma(g2, p, q))


def test_deformation_value():
    assert wf.deformation_value(Geometry.discrete(0.01), 0.5) == 0.01
    assert wf.deformation_value(Geometry.discrete(0.01), -0.5) == -0.01
    assert wf.deformation_value(Geometry.discrete(0.01), 0.0) == 0.0
    assert wf.deformation_value(MINK, 1.23) == 0.0
    with pytest.raises(wf.WorldFunctionError):
        wf.deformation_value(EUCLID3, 1.0)
