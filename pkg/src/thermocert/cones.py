"""Cones C(a, b) of positive functions and their projective metrics.

All suprema and infima are taken over the net a GridFunction lives on.
Cone membership is checked with a relative tolerance ``rtol`` so that
functions sitting exactly on the boundary (equality in the Hölder ratio
bound) are accepted despite float rounding.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ball import BallReal, DomainError, ball


class _Infinity:
    """Tagged +infinity for the projective metric."""

    def __repr__(self):
        return "THETA_INF"

    def __float__(self):
        return float("inf")


THETA_INF = _Infinity()


class GridFunction:
    """Values on a finite list of points, with optional regularity data.

    ``cert`` is a Hölder certificate (a, v0) meaning
    f(x) <= exp(a rho(x,y)**v0) f(y) for rho(x,y) < xi; ``depth`` marks
    a function that is constant on cylinders of that depth.
    """

    def __init__(self, points, values, space=None, radius=None, cert=None, depth=None, rad=None,
                 net=None):
        self.points = list(points)
        self.net = net
        if len(values) and isinstance(values[0], BallReal):
            self.balls = list(values)
            self.mid = np.array([float(b.mid) for b in values])
            self.rad = np.array([float(b.rad) for b in values])
        else:
            self.balls = None
            self.mid = np.asarray(values, dtype=float)
            self.rad = np.zeros(len(self.mid)) if rad is None else np.asarray(rad, dtype=float)
        self.space = space
        self.radius = radius
        self.cert = cert
        self.depth = depth
        self._dist = None

    def __len__(self):
        return len(self.points)

    def ball(self, i):
        if self.balls is not None:
            return self.balls[i]
        return BallReal(Fraction(float(self.mid[i])), Fraction(float(self.rad[i])))

    def distances(self):
        if self._dist is None:
            self._dist = self.space.dist_matrix(self.points)
        return self._dist

    def share_distances(self, other):
        other._dist = self.distances()
        return other

    def scaled(self, c):
        g = GridFunction(self.points, self.mid * c, self.space, self.radius, self.cert, self.depth,
                         rad=self.rad * abs(c), net=self.net)
        g._dist = self._dist
        return g

    def with_values(self, values):
        g = GridFunction(self.points, values, self.space, self.radius, None, None, net=self.net)
        g._dist = self._dist
        return g


@dataclass(frozen=True)
class ConeParams:
    a: float
    b: float
    xi: float
    v0: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("cone aperture a must be positive")
        if not self.b > 1:
            raise DomainError("cone ratio b must exceed 1")


def _local_factor(D, params):
    near = (D > 0) & (D < params.xi)
    return near, np.exp(params.a * np.where(near, D, 0.0) ** params.v0)


def cone_contains(f, params, rtol=1e-12):
    """Check conditions (i)-(iii) on the net; returns (ok, witness).

    The witness is None, ('positivity', i), ('local', i, j) or
    ('global', i, j).
    """
    v = f.mid
    lo = v - f.rad
    hi = v + f.rad
    bad = np.nonzero(lo <= 0)[0]
    if len(bad):
        return False, ("positivity", int(bad[0]))
    D = f.distances()
    near, fac = _local_factor(D, params)
    viol = near & (hi[:, None] > fac * lo[None, :] * (1 + rtol))
    if viol.any():
        i, j = np.argwhere(viol)[0]
        return False, ("local", int(i), int(j))
    i, j = int(np.argmax(hi)), int(np.argmin(lo))
    if hi[i] > params.b * lo[j] * (1 + rtol):
        return False, ("global", i, j)
    return True, None


def _alpha(f1, f2, D, params):
    v1, v2 = f1, f2
    terms = [np.min(v2 / v1)]
    near, fac = _local_factor(D, params)
    num = fac * v2[:, None] - v2[None, :]
    den = fac * v1[:, None] - v1[None, :]
    ok = near & (den > 0)
    if ok.any():
        terms.append(np.min(num[ok] / den[ok]))
    b = params.b
    num = b * v2[:, None] - v2[None, :]
    den = b * v1[:, None] - v1[None, :]
    ok = den > 0
    if ok.any():
        terms.append(np.min(num[ok] / den[ok]))
    return min(terms)


def theta_distance(f, g, params, check=True):
    """Projective distance theta_{a,b}(f, g) on the net.

    Returns a BallReal, or THETA_INF when alpha = 0 or beta = +inf.
    """
    if check:
        for h in (f, g):
            ok, w = cone_contains(h, params)
            if not ok:
                raise DomainError("function not in cone: %r" % (w,))
    D = f.distances()
    a = _alpha(f.mid, g.mid, D, params)
    ainv = _alpha(g.mid, f.mid, D, params)
    if a <= 0 or ainv <= 0:
        return THETA_INF
    val = -np.log(a) - np.log(ainv)
    val = max(val, 0.0)
    return BallReal(Fraction(val), Fraction(1e-12 * (1 + val)))


def theta_plus(f, g):
    """log sup(g/f) - log inf(g/f) over the net."""
    if np.any(f.mid - f.rad <= 0) or np.any(g.mid - g.rad <= 0):
        raise DomainError("theta_plus needs strictly positive functions")
    r = g.mid / f.mid
    val = float(np.log(r.max()) - np.log(r.min()))
    return BallReal(Fraction(val), Fraction(1e-12 * (1 + val)))


def khat(lam, b, bprime, prec=128):
    """2 log((1+lam)/(1-lam) * b^2/(b - b'))."""
    lam = ball(lam, prec)
    b = ball(b, prec)
    bprime = ball(bprime, prec)
    if not (lam.lower() > 0 and lam.upper() < 1):
        raise DomainError("lam must lie in (0, 1)")
    if not (bprime.lower() >= 1 and (b - bprime).lower() > 0):
        raise DomainError("need 1 <= b' < b")
    return 2 * (((1 + lam) / (1 - lam)) * (b * b) / (b - bprime)).log()
