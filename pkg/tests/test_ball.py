from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from thermocert.ball import (BallComplex, BallReal, DomainError, PrecisionCapExceeded, ball_pi,
                             exp_bounds, log_bounds, pi_bounds, refine, round_dyadic)

mpmath.mp.prec = 400

fracs = st.fractions(min_value=-50, max_value=50, max_denominator=10 ** 6)
small = st.fractions(min_value=-8, max_value=8, max_denominator=10 ** 4)
pos = st.fractions(min_value=Fraction(1, 1000), max_value=1000, max_denominator=10 ** 6)
radii = st.fractions(min_value=0, max_value=Fraction(1, 100), max_denominator=10 ** 6)


def to_frac(value):
    v = mpmath.mpf(value)
    man, exp = v.man_exp  # man_exp drops the sign
    out = Fraction(int(man)) * Fraction(2) ** int(exp)
    return -out if v < 0 else out


def mp_in(b, value):
    """Is the 400-bit mpmath value inside the ball?  Compared exactly as a Fraction."""
    return b.lower() <= to_frac(value) <= b.upper()


def test_pi_enclosure():
    lo, hi = pi_bounds(200)
    assert lo < to_frac(mpmath.pi) < hi
    assert hi - lo < Fraction(1, 2 ** 190)
    assert ball_pi().contains(to_frac(mpmath.pi))


@given(small)
def test_exp_bounds(q):
    lo, hi = exp_bounds(q)
    assert lo <= to_frac(mpmath.exp(mpmath.mpf(q.numerator) / q.denominator)) <= hi


@given(pos)
def test_log_bounds(q):
    lo, hi = log_bounds(q)
    assert lo <= to_frac(mpmath.log(mpmath.mpf(q.numerator) / q.denominator)) <= hi


@given(fracs, radii, fracs, radii)
def test_arithmetic_encloses_every_pair(a, ra, b, rb):
    x, y = BallReal(a, ra), BallReal(b, rb)
    for da in (-ra, 0, ra):
        for db in (-rb, 0, rb):
            p, q = a + da, b + db
            assert (x + y).contains(p + q)
            assert (x - y).contains(p - q)
            assert (x * y).contains(p * q)
            if not (y.lower() <= 0 <= y.upper()):
                assert (x / y).contains(p / q)


@given(small, radii)
def test_exp_ball(a, r):
    b = BallReal(a, r).exp()
    for t in (a - r, a, a + r):
        assert mp_in(b, mpmath.exp(mpmath.mpf(t.numerator) / t.denominator))


@given(pos, radii)
def test_log_sqrt_ball(a, r):
    x = BallReal(a, min(r, a / 2))
    assert mp_in(x.log(), mpmath.log(mpmath.mpf(a.numerator) / a.denominator))
    assert mp_in(x.sqrt(), mpmath.sqrt(mpmath.mpf(a.numerator) / a.denominator))


@given(small, radii)
@settings(max_examples=40, deadline=None)
def test_trig_ball(a, r):
    x = BallReal(a, r)
    v = mpmath.mpf(a.numerator) / a.denominator
    assert mp_in(x.sin(), mpmath.sin(v))
    assert mp_in(x.cos(), mpmath.cos(v))
    assert mp_in(x.atan(), mpmath.atan(v))


@given(pos, st.fractions(min_value=0, max_value=1, max_denominator=50).filter(lambda v: v > 0))
@settings(max_examples=60)
def test_pow_frac(a, v):
    b = BallReal(a).pow_frac(v)
    assert mp_in(b, mpmath.power(mpmath.mpf(a.numerator) / a.denominator,
                                 mpmath.mpf(v.numerator) / v.denominator))


@given(fracs, st.integers(min_value=8, max_value=200))
def test_round_dyadic_directions(q, prec):
    assert round_dyadic(q, prec, "d") <= q <= round_dyadic(q, prec, "u")


@given(fracs, radii, fracs, radii)
def test_union_and_containment(a, ra, b, rb):
    x, y = BallReal(a, ra), BallReal(b, rb)
    u = x.union(y)
    assert u.contains_ball(x) and u.contains_ball(y)


def test_domain_errors():
    for v in (Fraction(0), Fraction(3, 2), Fraction(-1, 2)):
        with pytest.raises(DomainError):
            BallReal(Fraction(2)).pow_frac(v)
    with pytest.raises(DomainError):
        BallReal(Fraction(-1)).log()
    with pytest.raises(DomainError):
        BallReal(Fraction(-1)).sqrt()
    with pytest.raises(DomainError):
        BallReal(Fraction(0), Fraction(1)).reciprocal()


def test_precision_cap(monkeypatch):
    monkeypatch.setenv("THERMOCERT_MAX_PREC", "64")
    with pytest.raises(PrecisionCapExceeded):
        refine(lambda p: BallReal(Fraction(1), Fraction(1, 2 ** 10)), lambda b: b.rad < Fraction(1, 2 ** 200))


def test_refine_stops_when_tight():
    got = refine(lambda p: BallReal(Fraction(1), Fraction(1, 2 ** p)), lambda b: b.rad < Fraction(1, 2 ** 300))
    assert got.rad < Fraction(1, 2 ** 300)


@given(fracs, fracs, fracs, fracs)
def test_complex_product_and_modulus(a, b, c, d):
    z, w = BallComplex(a, b), BallComplex(c, d)
    p = z * w
    assert p.re.contains(a * c - b * d) and p.im.contains(a * d + b * c)
    assert mp_in(abs(z), mpmath.hypot(mpmath.mpf(a.numerator) / a.denominator,
                                      mpmath.mpf(b.numerator) / b.denominator))
