"""Dyadic ball arithmetic.

A ball is a dyadic centre plus a nonnegative dyadic radius.  Every
operation returns a ball that encloses the exact result for all inputs
taken from the argument balls.  Centres are kept to ``prec`` significant
bits (rounded to nearest, with the rounding error folded into the
radius); radii are kept to 30 bits, rounded up.

Transcendental kernels work in fixed point on Python integers with an
explicit error count, so the enclosure argument stays local to each
function.
"""

import math
import os
from fractions import Fraction

DEFAULT_PREC = 128
PREC_ENV = "THERMOCERT_MAX_PREC"
_RAD_BITS = 30


class DomainError(ValueError):
    pass


class PrecisionCapExceeded(ArithmeticError):
    pass


def precision_cap():
    return int(os.environ.get(PREC_ENV, "4096"))


def _ilog2(a, d):
    # e with 2**(e-1) <= a/d < 2**(e+1), a, d > 0
    return a.bit_length() - d.bit_length()


def round_dyadic(q, prec, mode="n"):
    """Round rational q to a dyadic with prec significant bits.

    mode: 'n' nearest, 'd' toward -inf, 'u' toward +inf.
    """
    q = Fraction(q)
    if q == 0:
        return q
    n, d = q.numerator, q.denominator
    neg = n < 0
    a = -n if neg else n
    s = prec - _ilog2(a, d)
    if s >= 0:
        num, den = a << s, d
    else:
        num, den = a, d << (-s)
    m, r = divmod(num, den)
    if r:
        if mode == "n":
            m += 2 * r >= den
        elif (mode == "u") != neg:
            m += 1
    if neg:
        m = -m
    return Fraction(m, 1 << s) if s >= 0 else Fraction(m << (-s))


def _fp_lower(q, w):
    return (q.numerator << w) // q.denominator


# ---------------------------------------------------------------- kernels

def _exp_taylor_fp(r, w, upper):
    # e**(r/2**w) for 0 <= r <= 2**(w-9); floor terms for lower, ceil for upper
    one = 1 << w
    total = term = one
    k = 1
    while True:
        num = term * r
        den = k << w
        term = -((-num) // den) if upper else num // den
        if term == 0:
            break
        total += term
        if upper and term <= 1:
            total += 2
            break
        k += 1
    return total


def _exp_nonneg(q, w):
    """(lo, hi) with lo <= exp(q) <= hi for rational q >= 0."""
    if q == 0:
        return Fraction(1), Fraction(1)
    s = max(0, _ilog2(q.numerator, q.denominator) + 10)
    wg = w + s + 16
    r_lo = _fp_lower(q, wg - s)
    exact = (r_lo << s) * q.denominator == q.numerator << wg
    r_hi = r_lo if exact else r_lo + 1
    lo = _exp_taylor_fp(r_lo, wg, False)
    hi = _exp_taylor_fp(r_hi, wg, True)
    for _ in range(s):
        lo = (lo * lo) >> wg
        hi = -((-(hi * hi)) >> wg)
    return Fraction(lo, 1 << wg), Fraction(hi, 1 << wg)


def exp_bounds(q, w=DEFAULT_PREC):
    """Rational bounds lo <= exp(q) <= hi, relative width about 2**-w."""
    q = Fraction(q)
    if q >= 0:
        lo, hi = _exp_nonneg(q, w)
    else:
        lo0, hi0 = _exp_nonneg(-q, w)
        lo, hi = 1 / hi0, 1 / lo0
    return round_dyadic(lo, w + 8, "d"), round_dyadic(hi, w + 8, "u")


def _atanh_fp(t, w):
    # sum t^(2k+1)/(2k+1) at scale 2**w for |t| <= 2**w/3; returns (value, err)
    t2 = (t * t) >> w
    p = t
    total = t
    k = 0
    while True:
        k += 1
        p = (p * t2) >> w
        term = p // (2 * k + 1) if p >= 0 else -((-p) // (2 * k + 1))
        if term == 0:
            break
        total += term
    err = (k + 2) * (k + 2) + 2 * abs(p) + 2
    return total, err


_LN2 = {}


def _ln2_fp(w):
    if w not in _LN2:
        z = (1 << w) // 3
        lo, e1 = _atanh_fp(z, w)
        hi, e2 = _atanh_fp(z + 1, w)
        _LN2[w] = (2 * (lo - e1), 2 * (hi + e2))
    return _LN2[w]


def log_bounds(q, w=DEFAULT_PREC):
    """Rational bounds for log(q), q > 0."""
    q = Fraction(q)
    if q <= 0:
        raise DomainError("log of nonpositive number")
    if q == 1:
        return Fraction(0), Fraction(0)
    e = _ilog2(q.numerator, q.denominator)
    f = q / (Fraction(2) ** e)
    while f > Fraction(4, 3):
        f /= 2
        e += 1
    while f < Fraction(2, 3):
        f *= 2
        e -= 1
    wg = w + 24 + max(0, abs(e).bit_length())
    z = (f - 1) / (f + 1)
    z_lo = (z.numerator << wg) // z.denominator
    z_hi = z_lo if Fraction(z_lo, 1 << wg) == z else z_lo + 1
    s_lo, e_lo = _atanh_fp(z_lo, wg)
    s_hi, e_hi = _atanh_fp(z_hi, wg)
    lf_lo, lf_hi = 2 * (s_lo - e_lo), 2 * (s_hi + e_hi)
    l2_lo, l2_hi = _ln2_fp(wg)
    if e >= 0:
        lo, hi = e * l2_lo + lf_lo, e * l2_hi + lf_hi
    else:
        lo, hi = e * l2_hi + lf_lo, e * l2_lo + lf_hi
    scale = 1 << wg
    return (round_dyadic(Fraction(lo, scale), w + 8, "d"),
            round_dyadic(Fraction(hi, scale), w + 8, "u"))


def _atan_inv_fp(n, w):
    # atan(1/n) at scale 2**w, n >= 2
    p = (1 << w) // n
    n2 = n * n
    total = p
    k = 0
    sign = 1
    while p:
        k += 1
        p //= n2
        sign = -sign
        total += sign * (p // (2 * k + 1))
    return total, k + 2


_PI = {}


def pi_bounds(w=DEFAULT_PREC):
    if w not in _PI:
        wg = w + 16
        a, ea = _atan_inv_fp(5, wg)
        b, eb = _atan_inv_fp(239, wg)
        mid = 16 * a - 4 * b
        err = 16 * ea + 4 * eb
        _PI[w] = (Fraction(mid - err, 1 << wg), Fraction(mid + err, 1 << wg))
    return _PI[w]


def _sincos_small(r, w):
    # sin and cos of rational |r| <= 1 as (value, err) Fractions
    wg = w + 16
    t = (r.numerator << wg) // r.denominator
    one = 1 << wg
    t2 = (t * t) >> wg
    s = p = t
    c = q = one
    k = 1
    while p or q:
        q = -((q * t2) >> wg) // ((2 * k - 1) * (2 * k))
        p = -((p * t2) >> wg) // ((2 * k) * (2 * k + 1))
        s += p
        c += q
        k += 1
    err = Fraction(4 * (k + 2), one) + Fraction(1, one)
    return Fraction(s, one), Fraction(c, one), err


# ---------------------------------------------------------------- balls

class BallReal:
    """Dyadic centre ``mid`` with radius ``rad`` (both Fractions)."""

    __slots__ = ("mid", "rad", "prec")

    def __init__(self, mid, rad=0, prec=DEFAULT_PREC):
        mid = Fraction(mid)
        rad = Fraction(rad)
        if rad < 0:
            raise DomainError("negative radius")
        m = round_dyadic(mid, prec, "n")
        rad = rad + abs(mid - m)
        self.mid = m
        self.rad = round_dyadic(rad, _RAD_BITS, "u") if rad else Fraction(0)
        self.prec = prec

    # construction
    @classmethod
    def exact(cls, value, prec=DEFAULT_PREC):
        return cls(coerce_fraction(value), 0, prec)

    @classmethod
    def from_interval(cls, lo, hi, prec=DEFAULT_PREC):
        lo, hi = Fraction(lo), Fraction(hi)
        if hi < lo:
            raise DomainError("empty interval")
        return cls((lo + hi) / 2, (hi - lo) / 2, prec)

    def lower(self):
        return self.mid - self.rad

    def upper(self):
        return self.mid + self.rad

    def contains(self, q):
        return abs(Fraction(q) - self.mid) <= self.rad

    def contains_ball(self, other):
        return abs(other.mid - self.mid) + other.rad <= self.rad

    def overlaps(self, other):
        other = _ball(other, self.prec)
        return abs(other.mid - self.mid) <= self.rad + other.rad

    def is_exact(self):
        return self.rad == 0

    def positive(self):
        return self.lower() > 0

    def __float__(self):
        return float(self.mid)

    def __repr__(self):
        return "BallReal(%.17g +/- %.3g)" % (float(self.mid), float(self.rad))

    def with_prec(self, prec):
        return BallReal(self.mid, self.rad, prec)

    # arithmetic
    def _p(self, other):
        return max(self.prec, other.prec)

    def __neg__(self):
        return BallReal(-self.mid, self.rad, self.prec)

    def __add__(self, other):
        other = _ball(other, self.prec)
        return BallReal(self.mid + other.mid, self.rad + other.rad, self._p(other))

    __radd__ = __add__

    def __sub__(self, other):
        other = _ball(other, self.prec)
        return BallReal(self.mid - other.mid, self.rad + other.rad, self._p(other))

    def __rsub__(self, other):
        return _ball(other, self.prec) - self

    def __mul__(self, other):
        other = _ball(other, self.prec)
        rad = abs(self.mid) * other.rad + abs(other.mid) * self.rad + self.rad * other.rad
        return BallReal(self.mid * other.mid, rad, self._p(other))

    __rmul__ = __mul__

    def reciprocal(self):
        m = abs(self.mid)
        if m <= self.rad:
            raise DomainError("division by a ball containing 0")
        return BallReal(1 / self.mid, self.rad / (m * (m - self.rad)), self.prec)

    def __truediv__(self, other):
        other = _ball(other, self.prec)
        if other.rad == 0:
            if other.mid == 0:
                raise DomainError("division by zero")
            return BallReal(self.mid / other.mid, self.rad / abs(other.mid), self._p(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return _ball(other, self.prec) / self

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise DomainError("only nonnegative integer powers; use pow_frac")
        if k == 0:
            return BallReal(1, 0, self.prec)
        if k % 2 == 0:
            lo, hi = self.lower(), self.upper()
            if lo <= 0 <= hi:
                top = max(-lo, hi) ** k
                return BallReal.from_interval(0, top, self.prec)
            a, b = sorted((abs(lo), abs(hi)))
            return BallReal.from_interval(a ** k, b ** k, self.prec)
        return BallReal.from_interval(self.lower() ** k, self.upper() ** k, self.prec)

    def __abs__(self):
        lo, hi = self.lower(), self.upper()
        if lo >= 0:
            return self
        if hi <= 0:
            return -self
        return BallReal.from_interval(0, max(-lo, hi), self.prec)

    def max(self, other):
        other = _ball(other, self.prec)
        return BallReal.from_interval(max(self.lower(), other.lower()),
                                      max(self.upper(), other.upper()), self._p(other))

    def min(self, other):
        other = _ball(other, self.prec)
        return BallReal.from_interval(min(self.lower(), other.lower()),
                                      min(self.upper(), other.upper()), self._p(other))

    def pos_part(self):
        return self.max(0)

    def union(self, other):
        other = _ball(other, self.prec)
        return BallReal.from_interval(min(self.lower(), other.lower()),
                                      max(self.upper(), other.upper()), self._p(other))

    # elementary functions
    def exp(self):
        if self.rad == 0 and self.mid == 0:
            return BallReal(1, 0, self.prec)
        lo, _ = exp_bounds(self.lower(), self.prec)
        _, hi = exp_bounds(self.upper(), self.prec)
        return BallReal.from_interval(lo, hi, self.prec)

    def log(self):
        if self.lower() <= 0:
            raise DomainError("log of a ball touching 0")
        lo, _ = log_bounds(self.lower(), self.prec)
        _, hi = log_bounds(self.upper(), self.prec)
        return BallReal.from_interval(lo, hi, self.prec)

    def sqrt(self):
        lo, hi = self.lower(), self.upper()
        if lo < 0:
            if hi < 0:
                raise DomainError("sqrt of a negative ball")
            lo = Fraction(0)
        w = self.prec + 8
        a = _fp_lower(lo, 2 * w)
        b = -((-hi.numerator << (2 * w)) // hi.denominator)
        s_lo = math.isqrt(a)
        s_hi = math.isqrt(b)
        if s_hi * s_hi < b:
            s_hi += 1
        return BallReal.from_interval(Fraction(s_lo, 1 << w), Fraction(s_hi, 1 << w), self.prec)

    def pow_frac(self, v):
        """x**v for rational v in (0, 1]; endpoints are monotone in x."""
        v = coerce_fraction(v)
        if not 0 < v <= 1:
            raise DomainError("exponent must lie in (0, 1]")
        lo, hi = self.lower(), self.upper()
        if lo < 0:
            raise DomainError("fractional power of a negative ball")
        if v == 1:
            return self
        if hi == 0:
            return BallReal(0, 0, self.prec)
        w = self.prec
        top = exp_bounds(log_bounds(hi, w)[1] * v, w)[1]
        if lo == 0:
            bot = Fraction(0)
        else:
            bot = exp_bounds(log_bounds(lo, w)[0] * v, w)[0]
        return BallReal.from_interval(bot, top, self.prec)

    def _trig(self, want_sin):
        w = self.prec + 8
        p_lo, p_hi = pi_bounds(w + 32)
        half = (p_lo + p_hi) / 4
        k = math.floor(float(self.mid / half) + 0.5)
        # r = mid - k*pi/2, enclosed
        r_lo = self.mid - k * (p_hi if k >= 0 else p_lo) / 2
        r_hi = self.mid - k * (p_lo if k >= 0 else p_hi) / 2
        r = round_dyadic((r_lo + r_hi) / 2, w + 16, "n")
        slack = abs(r_hi - r_lo) / 2 + abs(r - (r_lo + r_hi) / 2)
        s, c, err = _sincos_small(r, w)
        quad = k % 4
        if want_sin:
            val = (s, c, -s, -c)[quad]
        else:
            val = (c, -s, -c, s)[quad]
        return BallReal(val, err + slack + self.rad, self.prec)

    def sin(self):
        return self._trig(True)

    def cos(self):
        return self._trig(False)

    def atan(self):
        # Lipschitz-1 evaluation at the centre
        q = self.mid
        w = self.prec + 8
        if abs(q) > 1:
            p_lo, p_hi = pi_bounds(w)
            inner = BallReal(1 / q, 0, w)._atan_core()
            half_pi = BallReal.from_interval(p_lo / 2, p_hi / 2, w)
            val = half_pi - inner if q > 0 else -half_pi - inner
        else:
            val = BallReal(q, 0, w)._atan_core()
        return BallReal(val.mid, val.rad + self.rad, self.prec)

    def _atan_core(self):
        # |x| <= 1, exact ball; two halvings then Taylor
        t = self
        for _ in range(2):
            t = t / (1 + (1 + t * t).sqrt())
        m = t.mid
        total = Fraction(0)
        p = m
        m2 = m * m
        k = 0
        w = self.prec + 8
        bound = Fraction(1, 1 << (w + 4))
        while True:
            term = p / (2 * k + 1)
            total += term if k % 2 == 0 else -term
            p *= m2
            k += 1
            total = round_dyadic(total, w + 16, "n")
            p = round_dyadic(p, w + 16, "n")
            if abs(p) < bound:
                break
        err = abs(p) + Fraction(4 * (k + 1), 1 << (w + 12)) + t.rad
        return BallReal(4 * total, 4 * err, self.prec)


def coerce_fraction(value):
    """Exact rational from int, Fraction, decimal string or float."""
    if isinstance(value, BallReal):
        if value.rad:
            raise DomainError("inexact ball where an exact rational is needed")
        return value.mid
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def _ball(x, prec):
    if isinstance(x, BallReal):
        return x
    return BallReal(coerce_fraction(x), 0, prec)


def ball(x, prec=DEFAULT_PREC):
    return _ball(x, prec)


def ball_add(x, y):
    return _ball(x, DEFAULT_PREC) + y


def ball_mul(x, y):
    return _ball(x, DEFAULT_PREC) * y


def ball_div(x, y):
    return _ball(x, DEFAULT_PREC) / y


def ball_exp(x):
    return _ball(x, DEFAULT_PREC).exp()


def ball_log(x):
    return _ball(x, DEFAULT_PREC).log()


def ball_pow_frac(x, v):
    return _ball(x, DEFAULT_PREC).pow_frac(v)


def ball_pi(prec=DEFAULT_PREC):
    lo, hi = pi_bounds(prec + 8)
    return BallReal.from_interval(lo, hi, prec)


def refine(fn, ok, prec=DEFAULT_PREC, cap=None):
    """Evaluate fn(prec), doubling prec until ok(result) holds."""
    cap = precision_cap() if cap is None else cap
    while True:
        res = fn(prec)
        if ok(res):
            return res
        if prec * 2 > cap:
            raise PrecisionCapExceeded("precision cap %d reached" % cap)
        prec *= 2


class BallComplex:
    """Pair of real balls; the enclosed set is the product rectangle."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0, prec=DEFAULT_PREC):
        self.re = _ball(re, prec)
        self.im = _ball(im, prec)

    @classmethod
    def from_complex(cls, z, rad=0, prec=DEFAULT_PREC):
        z = complex(z)
        return cls(BallReal(Fraction(z.real), rad, prec), BallReal(Fraction(z.imag), rad, prec))

    @property
    def prec(self):
        return max(self.re.prec, self.im.prec)

    def __complex__(self):
        return complex(float(self.re.mid), float(self.im.mid))

    def __repr__(self):
        return "BallComplex(%r, %r)" % (self.re, self.im)

    def radius(self):
        # enclosing disk radius
        return BallReal(self.re.rad * self.re.rad + self.im.rad * self.im.rad).sqrt().upper()

    def _c(self, other):
        if isinstance(other, BallComplex):
            return other
        if isinstance(other, complex):
            return BallComplex.from_complex(other, 0, self.prec)
        return BallComplex(other, 0, self.prec)

    def __add__(self, other):
        other = self._c(other)
        return BallComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._c(other)
        return BallComplex(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return self._c(other) - self

    def __neg__(self):
        return BallComplex(-self.re, -self.im)

    def __mul__(self, other):
        other = self._c(other)
        return BallComplex(self.re * other.re - self.im * other.im,
                           self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def conj(self):
        return BallComplex(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __abs__(self):
        return self.abs2().sqrt()

    def __truediv__(self, other):
        other = self._c(other)
        d = other.abs2()
        n = self * other.conj()
        return BallComplex(n.re / d, n.im / d)

    def __rtruediv__(self, other):
        return self._c(other) / self
