import cmath
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from thermocert import (JuliaSpace, JuliaSystem, RationalMap, distance_to_julia,
                        expansion_constants, geometric_potential, hausdorff_dimension, julia_net,
                        mobius_normalize, spherical_derivative)
from thermocert.rational import (Mobius, NonHyperbolicError, check_hyperbolic, conjugate,
                                 pressure_curve, repelling_periodic_point, spherical_distance)

coord = st.floats(-20, 20, allow_nan=False)
cplx = st.builds(complex, coord, coord)
Z2 = RationalMap.quadratic(0)
C05 = RationalMap.quadratic(-0.05)


def sphere(z):
    """Unit-sphere point of z under inverse stereographic projection (oracle)."""
    if z == np.inf:
        return np.array([0.0, 0.0, 1.0])
    x, y, r2 = z.real, z.imag, abs(z) ** 2
    return np.array([2 * x, 2 * y, r2 - 1]) / (r2 + 1)


def angle(z, w):
    a, b = sphere(z), sphere(w)
    return math.atan2(np.linalg.norm(np.cross(a, b)), float(a @ b))


@given(cplx, cplx)
def test_spherical_distance_is_great_circle_angle(z, w):
    assert spherical_distance(z, w) == pytest.approx(angle(z, w), abs=1e-9)


@given(cplx, cplx, cplx)
def test_spherical_triangle(z, w, v):
    assert spherical_distance(z, v) <= spherical_distance(z, w) + spherical_distance(w, v) + 1e-12


def test_spherical_distance_at_infinity():
    assert spherical_distance(0, np.inf) == pytest.approx(math.pi)
    assert spherical_distance(1, np.inf) == pytest.approx(math.pi / 2)


@given(st.builds(complex, st.floats(-3, 3), st.floats(-3, 3)), st.floats(0, 2 * math.pi))
@settings(max_examples=60)
def test_spherical_derivative_is_local_stretch(z, phi):
    # away from the critical point the difference quotient is first-order accurate
    assume(abs(z) > 1e-2)
    h = 1e-7 * cmath.exp(1j * phi)
    f = C05
    ratio = spherical_distance(f(z), f(z + h)) / spherical_distance(z, z + h)
    sharp = float(spherical_derivative(f, z).mid)
    assert ratio == pytest.approx(sharp, rel=1e-4)


@given(st.builds(complex, st.floats(-3, 3), st.floats(-3, 3)))
@settings(max_examples=40)
def test_rotation_conjugacy_preserves_sharp(z):
    U = Mobius(2.0)
    g = conjugate(Z2, U)
    # U is a rotation of the sphere
    w = z + 0.3
    assert spherical_distance(U(z), U(w)) == pytest.approx(spherical_distance(z, w), abs=1e-9)
    assert float(spherical_derivative(g, U(z)).mid) == pytest.approx(
        float(spherical_derivative(Z2, z).mid), rel=1e-8)
    assert U.inverse(U(z)) == pytest.approx(z, abs=1e-9)


@given(cplx)
def test_preimages_map_back(w):
    pre = C05.preimages(np.array([w]))[0]
    assert len(pre) == 2
    for y in pre:
        assert C05(y) == pytest.approx(w, abs=1e-7 * (1 + abs(w)))


def test_iterate_and_compose():
    f3 = C05.iterate(3)
    assert f3.degree == 8
    for z in (0.3 + 0.1j, -1.2j, 2.0):
        assert f3(z) == pytest.approx(C05(C05(C05(z))), rel=1e-12)


def test_critical_points_of_quadratic():
    finite, at_inf = C05.critical_points()
    assert finite == [0] and at_inf == 1
    assert C05.critical_values(1)[0] == pytest.approx(-0.05)


def test_repelling_point_is_certified():
    for f in (Z2, C05, RationalMap.quadratic(-1)):
        p = repelling_periodic_point(f)
        z = p.z
        for _ in range(p.period):
            z = f(z)
        assert abs(z - p.z) <= p.radius + 1e-12
        assert abs(p.multiplier) > 1
    assert repelling_periodic_point(Z2).z == pytest.approx(1)


def test_hyperbolicity_check():
    check_hyperbolic(Z2)
    check_hyperbolic(C05)
    check_hyperbolic(RationalMap.quadratic(-1))  # superattracting 2-cycle
    with pytest.raises(NonHyperbolicError):
        check_hyperbolic(RationalMap.quadratic(-0.75))  # parabolic
    with pytest.raises(NonHyperbolicError):
        check_hyperbolic(RationalMap.quadratic(0.25))


def test_distance_to_unit_circle():
    assert distance_to_julia(Z2, 0).contains(math.pi / 2) or \
        abs(float(distance_to_julia(Z2, 0).mid) - math.pi / 2) <= float(distance_to_julia(Z2, 0).rad)
    d = distance_to_julia(Z2, 2.0)
    exact = angle(2.0, 1.0)
    assert float(d.lower()) <= exact <= float(d.upper())


def test_julia_net_is_invariant_and_on_circle():
    net = julia_net(Z2, 0.05)
    pts = np.array(net.points)
    assert np.max(np.abs(np.abs(pts) - 1)) < 1e-9
    space = JuliaSpace(C05)
    net = julia_net(C05, 0.05, space)
    pts = np.array(net.points)
    img = C05.iterate_points(pts, 1)
    # f(J) = J, so images stay within the covering radius of the net
    D = space.cross_dist(list(img), list(pts))
    assert D.min(axis=1).max() <= net.radius


def test_expansion_constants():
    space = JuliaSpace(C05)
    c = expansion_constants(C05, space)
    c.check()
    assert c.lam > 1 and 0 < c.eta < c.xi
    g = C05.iterate(c.nExp)
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = space.sample(rng)
        y = x + c.eta * 0.5 * cmath.exp(2j * math.pi * rng.uniform())
        d = spherical_distance(x, y)
        if 0 < d <= 2 * c.eta:
            assert spherical_distance(g(x), g(y)) >= c.lam * d * (1 - 1e-9)


JS = JuliaSystem(C05)
POT = geometric_potential(C05, -1, power=JS.power, space=JS.space)


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10 ** 6))
def test_geometric_potential_lipschitz(seed):
    js, pot = JS, POT
    rng = np.random.default_rng(seed)
    x, y = js.space.sample(rng), js.space.sample(rng)
    d = spherical_distance(x, y)
    if d > 0:
        assert abs(pot.value(x) - pot.value(y)) <= float(pot.a0) * d


def test_pressure_curve_of_z2_is_linear():
    # on the unit circle f^# = 2 everywhere, so P(-t log f^#) = (1 - t) log 2
    for t, p in pressure_curve(Z2, [0, 0.5, 1, 1.5, 2]):
        assert p == pytest.approx((1 - t) * math.log(2), abs=1e-9)


def test_dimension_of_z2_and_perturbation():
    d = hausdorff_dimension(Z2, tol=1e-4)
    assert d.value.contains(1) or abs(float(d.value.mid) - 1) <= float(d.value.rad)
    assert float(d.value.rad) < 1e-3
    e = hausdorff_dimension(C05, tol=1e-4)
    # small perturbations of z^2 have dimension 1 + |c|^2/(4 log 2) + O(|c|^3)
    assert float(e.value.mid) > 1
    assert float(e.value.mid) == pytest.approx(1 + 0.0025 / (4 * math.log(2)), abs=5e-4)


def test_mobius_normalize_moves_infinity_off_julia():
    f, U = mobius_normalize(Z2)
    assert f is Z2  # polynomials already keep infinity in the Fatou set
    g, U = mobius_normalize(Z2, u=2.0)
    assert not g.is_polynomial
    z = cmath.exp(0.7j)
    assert abs(g(U(z)) - U(Z2(z))) < 1e-9
