"""Hyperbolic rational maps on the Riemann sphere.

Spherical geometry, Julia-set nets grown from the backward orbit of a
repelling periodic point, expansion constants for an iterate, the
geometric potential t log f^# and the Bowen-formula dimension.

Julia points are complex floats.  Nets, covering radii and the distance
estimator are therefore float computations with explicit slack; they are
not exact in the sense of the circle and shift spaces.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .ball import BallComplex, BallReal, DomainError, ball, pi_bounds
from .systems import ExpandingSystem, HolderPotential, Net

__all__ = [
    "RationalMap", "Mobius", "NonHyperbolicError", "JuliaSpace", "JuliaSystem",
    "RationalMapConstants", "spherical_distance", "chordal_distance", "spherical_derivative",
    "spherical_distance_ball", "mobius_normalize", "distance_to_julia", "julia_net",
    "repelling_periodic_point", "check_hyperbolic", "expansion_constants",
    "geometric_potential", "GeometricPotential", "hausdorff_dimension", "pressure_curve",
    "DimensionResult",
]

PI_HI = pi_bounds(64)[1]
_TRIM = 1e-13


class NonHyperbolicError(DomainError):
    """A critical orbit failed to settle on an attracting cycle."""


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=complex)).copy()
    scale = np.max(np.abs(c)) if len(c) else 0.0
    if scale == 0:
        return np.zeros(1, dtype=complex)
    c[np.abs(c) < _TRIM * scale] = 0
    k = len(c)
    while k > 1 and c[k - 1] == 0:
        k -= 1
    return c[:k]


def _pad(c, n):
    out = np.zeros(n, dtype=complex)
    out[:len(c)] = c
    return out


def _homog_compose(p, q, d, G, H):
    """Numerator and denominator of (p/q)(G/H) with p, q read as degree-d forms."""
    p = _pad(p, d + 1)
    q = _pad(q, d + 1)
    Gp = [np.ones(1, dtype=complex)]
    Hp = [np.ones(1, dtype=complex)]
    for _ in range(d):
        Gp.append(npoly.polymul(Gp[-1], G))
        Hp.append(npoly.polymul(Hp[-1], H))
    num = np.zeros(1, dtype=complex)
    den = np.zeros(1, dtype=complex)
    for k in range(d + 1):
        term = npoly.polymul(Gp[k], Hp[d - k])
        if p[k]:
            num = npoly.polyadd(num, p[k] * term)
        if q[k]:
            den = npoly.polyadd(den, q[k] * term)
    return num, den


# ------------------------------------------------------------------ maps

class RationalMap:
    """f = P/Q with complex coefficient lists in ascending order."""

    def __init__(self, num, den=(1,)):
        num = _trim(num)
        den = _trim(den)
        if not np.any(den):
            raise DomainError("denominator is identically zero")
        if len(den) == 1:
            num = num / den[0]
            den = np.ones(1, dtype=complex)
        self.num = num
        self.den = den
        self.degree = max(len(num), len(den)) - 1
        if self.degree < 2:
            raise DomainError("degree must be at least 2")
        self.is_polynomial = len(den) == 1
        self._dnum = npoly.polyder(num) if len(num) > 1 else np.zeros(1, dtype=complex)
        self._dden = npoly.polyder(den) if len(den) > 1 else np.zeros(1, dtype=complex)
        self._wronskian = _trim(npoly.polysub(npoly.polymul(self._dnum, den),
                                              npoly.polymul(num, self._dden)))

    @classmethod
    def quadratic(cls, c):
        return cls([complex(c), 0, 1])

    def __repr__(self):
        if self.is_polynomial and self.degree == 2 and self.num[1] == 0 and self.num[2] == 1:
            return "quadratic(c=%r)" % complex(self.num[0])
        return "RationalMap(%s, %s)" % (list(self.num), list(self.den))

    # -- evaluation
    def value_at_infinity(self):
        dp, dq = len(self.num) - 1, len(self.den) - 1
        if dp > dq:
            return complex("inf")
        if dp < dq:
            return 0j
        return complex(self.num[-1] / self.den[-1])

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        out = np.empty(z.shape, dtype=complex)
        inf = ~np.isfinite(z)
        zf = np.where(inf, 0, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            P = npoly.polyval(zf, self.num)
            Q = npoly.polyval(zf, self.den)
            out[:] = P / Q
        out[(Q == 0) & ~inf] = complex("inf")
        out[inf] = self.value_at_infinity()
        return complex(out[0]) if scalar else out

    def iterate_points(self, z, n):
        for _ in range(n):
            z = self(z)
        return z

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        Q = npoly.polyval(z, self.den)
        return npoly.polyval(z, self._wronskian) / (Q * Q)

    def second_deriv(self, z):
        if not self.is_polynomial:
            raise DomainError("second derivative is implemented for polynomials")
        return npoly.polyval(np.asarray(z, dtype=complex), npoly.polyder(self.num, 2))

    def sharp(self, z):
        """Spherical derivative |P'Q - PQ'|(1+|z|^2)/(|P|^2+|Q|^2), finite z."""
        z = np.asarray(z, dtype=complex)
        P = npoly.polyval(z, self.num)
        Q = npoly.polyval(z, self.den)
        W = npoly.polyval(z, self._wronskian)
        return np.abs(W) * (1 + np.abs(z) ** 2) / (np.abs(P) ** 2 + np.abs(Q) ** 2)

    def log_sharp(self, z):
        return np.log(self.sharp(z))

    def chart_at_infinity(self):
        """h(w) = f(1/w); h^#(0) = f^#(infinity)."""
        d = self.degree
        p = _pad(self.num, d + 1)[::-1]
        q = _pad(self.den, d + 1)[::-1]
        return RationalMap(p, q)

    # -- structure
    def compose(self, g):
        """self o g as a rational map."""
        num, den = _homog_compose(self.num, self.den, self.degree, g.num, g.den)
        return RationalMap(num, den)

    def iterate(self, n):
        g = self
        for _ in range(n - 1):
            g = self.compose(g)
        return g

    def critical_points(self):
        """Finite critical points and the multiplicity of infinity."""
        W = self._wronskian
        finite = np.roots(W[::-1]) if len(W) > 1 else np.zeros(0, dtype=complex)
        at_inf = (2 * self.degree - 2) - (len(W) - 1)
        return list(np.asarray(finite, dtype=complex)), at_inf

    def critical_values(self, n=1):
        """f^j(c) for 1 <= j <= n over critical points c of f."""
        finite, at_inf = self.critical_points()
        pts = list(finite) + ([complex("inf")] * (1 if at_inf else 0))
        out = []
        z = np.array(pts, dtype=complex)
        for _ in range(n):
            z = self(z)
            out.extend(complex(v) for v in z)
        return out

    def preimages(self, w):
        """All d preimages of each w; shape (len(w), d), deterministic order."""
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        d = self.degree
        p = _pad(self.num, d + 1)
        q = _pad(self.den, d + 1)
        if d == 2:
            a = p[2] - w * q[2]
            b = p[1] - w * q[1]
            c = p[0] - w * q[0]
            s = np.sqrt(b * b - 4 * a * c)
            s = np.where((np.conj(b) * s).real >= 0, s, -s)
            qq = -(b + s) / 2
            with np.errstate(divide="ignore", invalid="ignore"):
                r1 = qq / a
                r2 = c / qq
            r2 = np.where(qq == 0, r1, r2)
            return np.stack([r1, r2], axis=1)
        out = np.empty((len(w), d), dtype=complex)
        for i, wi in enumerate(w):
            coeffs = (p - wi * q)[::-1]
            r = np.roots(coeffs)
            if len(r) < d:
                r = np.concatenate([r, [complex("inf")] * (d - len(r))])
            out[i] = r
        return out

    # -- ball evaluation
    def _horner_ball(self, coeffs, z):
        acc = BallComplex.from_complex(complex(coeffs[-1]), 0, z.prec)
        for c in coeffs[-2::-1]:
            acc = acc * z + BallComplex.from_complex(complex(c), 0, z.prec)
        return acc

    def coefficient_bounds(self, R):
        """Upper bounds of |f|, |f'|, |f''| on the closed disk |z| <= R (polynomials)."""
        if not self.is_polynomial:
            raise DomainError("coefficient bounds need a polynomial")
        R = float(R)
        a = np.abs(self.num)
        k = np.arange(len(a))
        D2 = float(np.sum(a * R ** k))
        C1 = float(np.sum(k[1:] * a[1:] * R ** (k[1:] - 1)))
        C2 = float(np.sum(k[2:] * (k[2:] - 1) * a[2:] * R ** (k[2:] - 2)))
        pad = 1 + 1e-12
        return D2 * pad, C1 * pad, C2 * pad


# ------------------------------------------------------------------ geometry

def chordal_distance(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    zi = ~np.isfinite(z)
    wi = ~np.isfinite(w)
    zf = np.where(zi, 0, z)
    wf = np.where(wi, 0, w)
    out = 2 * np.abs(zf - wf) / np.sqrt((1 + np.abs(zf) ** 2) * (1 + np.abs(wf) ** 2))
    out = np.where(zi & ~wi, 2 / np.sqrt(1 + np.abs(wf) ** 2), out)
    out = np.where(wi & ~zi, 2 / np.sqrt(1 + np.abs(zf) ** 2), out)
    out = np.where(zi & wi, 0.0, out)
    return out


def spherical_distance(z, w):
    """Geodesic distance for ds = 2|dz|/(1+|z|^2); equals 2 asin(sigma/2)."""
    s = np.clip(chordal_distance(z, w) / 2, 0.0, 1.0)
    return 2 * np.arcsin(s)


def _to_xyz(z):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    n2 = np.abs(z) ** 2
    out = np.empty((len(z), 3))
    out[:, 0] = 2 * z.real / (1 + n2)
    out[:, 1] = 2 * z.imag / (1 + n2)
    out[:, 2] = (n2 - 1) / (1 + n2)
    inf = ~np.isfinite(z)
    out[inf] = (0.0, 0.0, 1.0)
    return out


def _chord_to_sph(c):
    return 2 * np.arcsin(np.clip(np.asarray(c) / 2, 0.0, 1.0))


def _sph_to_chord(d):
    return 2 * math.sin(min(float(d), math.pi) / 2)


def _as_ball_complex(z, prec=128):
    if isinstance(z, BallComplex):
        return z
    return BallComplex.from_complex(complex(z), 0, prec)


def spherical_distance_ball(z, w, prec=128):
    """Ball enclosure of the spherical distance between two finite points."""
    z = _as_ball_complex(z, prec)
    w = _as_ball_complex(w, prec)
    num = abs(z - w)
    den = abs(1 + z.conj() * w)
    if den.lower() > 0 and (num / den).upper() <= 1:
        return 2 * (num / den).atan()
    if num.lower() > 0:
        lo, hi = pi_bounds(prec)
        return BallReal.from_interval(lo, hi, prec) - 2 * (den / num).atan()
    raise DomainError("spherical distance: enclosure too wide")


def spherical_derivative(f, z, prec=128):
    """Ball enclosure of f^#(z); z = 'inf' or complex('inf') uses the reciprocal chart."""
    if not isinstance(z, BallComplex) and not np.isfinite(complex(z)):
        return spherical_derivative(f.chart_at_infinity(), 0j, prec)
    zb = _as_ball_complex(z, prec)
    P = f._horner_ball(f.num, zb)
    Q = f._horner_ball(f.den, zb)
    W = f._horner_ball(f._wronskian, zb)
    den = P.abs2() + Q.abs2()
    if not den.lower() > 0:
        raise DomainError("spherical derivative: chart failure near a common zero")
    return abs(W) * (1 + zb.abs2()) / den


# ------------------------------------------------------------------ Möbius

class Mobius:
    """U(z) = (conj(u) z + 1)/(u - z): a spherical isometry sending u to infinity."""

    def __init__(self, u):
        self.u = complex(u)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        u = self.u
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (np.conj(u) * z + 1) / (u - z)
        out = np.where(z == u, complex("inf"), out)
        out = np.where(~np.isfinite(z), -np.conj(u), out)
        return out if out.ndim else complex(out)

    def inverse(self, w):
        w = np.asarray(w, dtype=complex)
        u = self.u
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (u * w - 1) / (w + np.conj(u))
        out = np.where(w == -np.conj(u), complex("inf"), out)
        out = np.where(~np.isfinite(w), u, out)
        return out if out.ndim else complex(out)

    def inverse_coeffs(self):
        u = self.u
        return np.array([-1, u], dtype=complex), np.array([np.conj(u), 1], dtype=complex)


class _Identity:
    u = None

    def __call__(self, z):
        return z

    inverse = __call__


def conjugate(f, U):
    """U o f o U^-1 for a Mobius U."""
    A, B = U.inverse_coeffs()
    Pt, Qt = _homog_compose(f.num, f.den, f.degree, A, B)
    u = U.u
    num = npoly.polyadd(np.conj(u) * Pt, Qt)
    den = npoly.polysub(u * Qt, Pt)
    return RationalMap(num, den)


def mobius_normalize(f, u=None, candidates=None):
    """Return (g, U) with g = U f U^-1 and infinity off J_g.

    With u=None a polynomial is returned unchanged (infinity is already
    in its basin); otherwise a grid of Gaussian rationals is scanned for
    a point certified off J_f.
    """
    if u is None:
        if f.is_polynomial:
            return f, _Identity()
        space = JuliaSpace(f)
        for cand in candidates or _candidate_points():
            if distance_to_julia(f, cand, space=space).lower() > 0:
                u = cand
                break
        else:
            raise DomainError("no point off the Julia set found on the search grid")
    U = Mobius(u)
    return conjugate(f, U), U


def _candidate_points():
    pts = []
    for r in range(0, 5):
        for a in range(-r, r + 1):
            for b in range(-r, r + 1):
                if max(abs(a), abs(b)) == r:
                    pts.append(complex(a, b) / 2)
    return pts


# ------------------------------------------------------------------ periodic points

def _krawczyk(h, z0, r, prec=128):
    """Certify a unique zero of h in the disk-bounding square B(z0, r).

    ``h`` is a RationalMap-like pair (num, den) via f.compose; here h is
    given as polynomial coefficients ascending.  Returns True on success.
    """
    dh = npoly.polyder(h)
    zc = BallComplex.from_complex(z0, 0, prec)
    Z = BallComplex.from_complex(z0, Fraction(r), prec)

    def horner(c, z):
        acc = BallComplex.from_complex(complex(c[-1]), 0, prec)
        for a in c[-2::-1]:
            acc = acc * z + BallComplex.from_complex(complex(a), 0, prec)
        return acc

    hc = horner(h, zc)
    dhc = complex(horner(dh, zc))
    if dhc == 0:
        return False
    Y = BallComplex.from_complex(1 / dhc, 0, prec)
    K = zc - Y * hc + (1 - Y * horner(dh, Z)) * (Z - zc)
    R = Fraction(r)
    ok_re = (K.re - Fraction(z0.real)).upper() < R and (K.re - Fraction(z0.real)).lower() > -R
    ok_im = (K.im - Fraction(z0.imag)).upper() < R and (K.im - Fraction(z0.imag)).lower() > -R
    return ok_re and ok_im


@dataclass
class PeriodicPoint:
    z: complex
    period: int
    multiplier: float
    radius: float


def repelling_periodic_point(f, max_period=3):
    """A repelling periodic point, certified by a Krawczyk test on f^m(z) - z."""
    for m in range(1, max_period + 1):
        g = f if m == 1 else f.iterate(m)
        h = _trim(npoly.polysub(g.num, npoly.polymul([0, 1], g.den)))
        roots = np.roots(h[::-1]) if len(h) > 1 else []
        cands = []
        for z in roots:
            z = complex(z)
            for _ in range(4):
                dz = npoly.polyval(z, h) / npoly.polyval(z, npoly.polyder(h))
                if not np.isfinite(dz):
                    break
                z -= dz
            mult = abs(complex(g.deriv(z)))
            if mult > 1 + 1e-9 and np.isfinite(z):
                cands.append((-mult, abs(z), z.real, z.imag, z, mult))
        cands.sort(key=lambda t: t[:4])
        for *_, z, mult in cands:
            r = 1e-10 * max(1.0, abs(z))
            if _krawczyk(h, z, r):
                return PeriodicPoint(z, m, mult, r)
    raise DomainError("no certified repelling periodic point up to period %d" % max_period)


def check_hyperbolic(f, budget=2000, max_period=24):
    """Runtime diagnostic: every critical orbit must settle on an attracting cycle."""
    finite, at_inf = f.critical_points()
    starts = list(finite) + ([complex("inf")] * (1 if at_inf else 0))
    report = []
    for c in starts:
        z = np.array([c], dtype=complex)
        for _ in range(budget):
            z = f(z)
        z0 = complex(z[0])
        found = None
        w = z0
        mult = 1.0
        for p in range(1, max_period + 1):
            mult *= _sharp_sphere(f, w)
            w = complex(f(np.array([w]))[0])
            if spherical_distance(w, z0) < 1e-9:
                found = (p, mult)
                break
        if found is None or found[1] >= 1:
            raise NonHyperbolicError("critical orbit of %r does not settle on an attracting cycle" % (c,))
        report.append({"critical": c, "period": found[0], "multiplier": found[1]})
    return report


def _sharp_sphere(f, z):
    if not np.isfinite(z):
        return float(f.chart_at_infinity().sharp(0j))
    return float(f.sharp(z))


# ------------------------------------------------------------------ Julia space

class JuliaSpace:
    """The Julia set with the spherical metric, sampled by a backward orbit tree."""

    symbolic = False
    exact = False
    diameter = PI_HI

    def __init__(self, f, seed=None, max_points=1 << 17, check=True):
        self.f = f
        if check:
            self.diagnostics = check_hyperbolic(f)
        self.seed = seed or repelling_periodic_point(f)
        self.max_points = max_points
        w = np.array([self.seed.z], dtype=complex)
        self._levels = [w]
        self._logsharp = [np.zeros(1)]
        self._cover = {}
        self._nets = {}

    # -- backward tree
    def level(self, n):
        while len(self._levels) <= n:
            prev = self._levels[-1]
            if len(prev) * self.f.degree > self.max_points:
                raise DomainError("Julia tree level %d exceeds %d points" % (n, self.max_points))
            pre = self.f.preimages(prev)
            pts = pre.reshape(-1)
            ls = self.f.log_sharp(pts) + np.repeat(self._logsharp[-1], self.f.degree)
            self._levels.append(pts)
            self._logsharp.append(ls)
        return self._levels[n]

    def log_sharp_level(self, n):
        self.level(n)
        return self._logsharp[n]

    def max_depth(self):
        n = 0
        total = 1
        while total * self.f.degree <= self.max_points:
            total *= self.f.degree
            n += 1
        return n

    def covering(self, n):
        """Estimated covering radius of level n (heuristic, with slack).

        The gap to level n+k is measured directly and the remaining
        refinement is bounded by a geometric tail in the observed
        contraction mu^-k.
        """
        if n in self._cover:
            return self._cover[n]
        k = min(3, self.max_depth() - n)
        if k < 1:
            raise DomainError("no deeper level to estimate the covering radius of level %d" % n)
        base = self.level(n)
        fine = self.level(n + k)
        tree = cKDTree(_to_xyz(base))
        c, _ = tree.query(_to_xyz(fine))
        gap = float(_chord_to_sph(c.max()))
        mu = float(np.min(self.f.sharp(fine)))
        tail = 1.0 / (1.0 - mu ** (-k)) if mu > 1.05 else 4.0
        rho = gap * tail * (1 + 1e-9) + 1e-12
        self._cover[n] = rho
        return rho

    def depth_for(self, eps):
        for n in range(self.max_depth()):
            if self.covering(n) <= eps:
                return n
        raise DomainError("Julia net at eps=%g needs more than %d points" % (eps, self.max_points))

    def net(self, eps):
        eps_f = float(eps)
        if eps_f <= 0:
            raise ValueError("eps must be positive")
        if eps_f in self._nets:
            return self._nets[eps_f]
        n = self.depth_for(eps_f / 2)
        pts = self.level(n)
        X = _to_xyz(pts)
        tree = cKDTree(X)
        sep = _sph_to_chord(eps_f / 2)
        alive = np.ones(len(pts), dtype=bool)
        keep = []
        for i in range(len(pts)):
            if not alive[i]:
                continue
            keep.append(i)
            for j in tree.query_ball_point(X[i], sep * (1 - 1e-12)):
                alive[j] = False
        chosen = pts[keep]
        radius = self.covering(n) + eps_f / 2
        net = Net(self, [complex(z) for z in chosen], Fraction(eps_f), float(radius),
                  index=cKDTree(_to_xyz(chosen)))
        net.depth = n
        self._nets[eps_f] = net
        return net

    def default_net(self):
        return self.net(1 / 256)

    def fine_level(self, target=2e-4):
        n = 0
        while n + 1 < self.max_depth() - 1 and self.covering(n) > target:
            n += 1
        return n

    # -- metric interface
    def normalize(self, x):
        return complex(x)

    def dist(self, x, y):
        return float(spherical_distance(x, y))

    def nearest_index(self, net, y):
        _, j = net._index.query(_to_xyz([y])[0])
        return int(j)

    def interp_weights(self, net, y):
        return [(self.nearest_index(net, y), 1.0)]

    def sample(self, rng, depth=40):
        z = np.array([self.seed.z], dtype=complex)
        for _ in range(depth):
            z = self.f.preimages(z)[:, int(rng.integers(0, self.f.degree))]
        return complex(z[0])

    def dist_matrix(self, pts):
        X = _to_xyz(np.array(pts, dtype=complex))
        return self.cross_dist(pts, pts) if len(X) else np.zeros((0, 0))

    def cross_dist(self, X, Y):
        A = _to_xyz(np.array(list(X), dtype=complex))
        B = _to_xyz(np.array(list(Y), dtype=complex))
        return _chord_to_sph(cdist(A, B))

    def encode(self, x):
        x = complex(x)
        return "%r,%r" % (x.real, x.imag)

    def to_float(self, x):
        return complex(x)


def julia_net(f, eps, space=None):
    """An eps-net of J_f made of iterated preimages of a repelling periodic point."""
    space = space or JuliaSpace(f)
    return space.net(eps)


def distance_to_julia(f, z, space=None, level=None):
    """Two-sided enclosure of d(z, J_f) from a fine backward-orbit level.

    Upper: distance to the nearest tree point (tree points lie on J_f up
    to float error).  Lower: that minus the covering radius of the level.
    """
    space = space or JuliaSpace(f)
    n = space.fine_level() if level is None else level
    pts = space.level(n)
    rho = space.covering(n)
    if isinstance(z, BallComplex):
        zr = z.radius()
        z = complex(z)
    else:
        zr = 0
    d = float(np.min(spherical_distance(z, pts)))
    slack = 1e-12 + 2 * float(zr)
    lo = max(0.0, d - rho - slack)
    hi = min(float(PI_HI), d + slack)
    return BallReal.from_interval(Fraction(lo), Fraction(hi))


# ------------------------------------------------------------------ constants

@dataclass
class RationalMapConstants:
    nExp: int
    r0: float
    V1: float
    V2: float
    V3: float
    V4: float
    l: float
    eta: float
    lam: float
    xi: float
    rho: float
    critical_values: list = field(default_factory=list)

    def check(self):
        vals = (self.V1, self.V2, self.V3, self.V4, self.l, self.eta, self.xi)
        if not all(v > 0 for v in vals):
            raise DomainError("expansion constants must be positive")
        if not self.V2 > 8 / self.V4:
            raise DomainError("V2 <= 8/V4")
        if not self.lam > 1:
            raise DomainError("lambda <= 1")
        return self

    def ledger(self):
        rows = [("nExp", self.nExp, "least n with inf |(f^n)'| > 4(1+r0)^2"),
                ("r0", self.r0, "max |z| on J plus slack"),
                ("V1", self.V1, "half the spherical distance from critical values of f^n to J"),
                ("V2", self.V2, "inf |(f^n)'| on J minus slack"),
                ("V3", self.V3, "sup |(f^n)'| on J plus slack"),
                ("V4", self.V4, "2/(1+r0^2)"),
                ("l", self.l, "V1/(4 V3)"),
                ("eta", self.eta, "V4 l/2"),
                ("lam", self.lam, "V2 V4/8"),
                ("xi", self.xi, "V2 l/16")]
        return [{"name": a, "value": "%.17g" % b, "formula": c} for a, b, c in rows]


def _euclid_slack(rho, r):
    # spherical rho around |z| <= r is at most this far in |.|
    return rho * (1 + (r + 1) ** 2) / 2


def expansion_constants(f, space=None, cap=12):
    """Constants of the distance-expanding iterate f^nExp on J_f (infinity off J_f)."""
    space = space or JuliaSpace(f)
    n = space.fine_level()
    pts = space.level(n)
    rho = space.covering(n)
    rmax = float(np.max(np.abs(pts)))
    r0 = rmax + _euclid_slack(rho, rmax)
    V4 = 2 / (1 + r0 * r0)
    target = 4 * (1 + r0) ** 2
    es = _euclid_slack(rho, r0)
    for m in range(1, cap + 1):
        g = f.iterate(m)
        dg = np.abs(g.deriv(pts))
        lip = _deriv_lipschitz(g, pts, r0)
        V2 = float(dg.min()) - lip * es
        V3 = float(dg.max()) + lip * es
        if V2 > target:
            break
    else:
        raise DomainError("no expanding iterate up to n = %d" % cap)
    dists = []
    for c in f.critical_values(m):
        if np.isfinite(c):
            dists.append(distance_to_julia(f, c, space=space, level=n).lower())
    V1 = float(min(dists)) / 2 if dists else 1.0
    if V1 <= 0:
        raise NonHyperbolicError("a critical value of f^%d is not separated from J" % m)
    l = V1 / (4 * V3)
    c = RationalMapConstants(nExp=m, r0=r0, V1=V1, V2=V2, V3=V3, V4=V4, l=l, eta=V4 * l / 2,
                             lam=V2 * V4 / 8, xi=V2 * l / 16, rho=rho,
                             critical_values=[complex(v) for v in f.critical_values(m)])
    return c.check()


def _deriv_lipschitz(g, pts, r):
    if g.is_polynomial:
        return g.coefficient_bounds(r)[2]
    # numerical second derivative on the sample, doubled
    h = 1e-6
    d2 = np.abs(g.deriv(pts + h) - g.deriv(pts - h)) / (2 * h)
    return 2 * float(d2.max())


# ------------------------------------------------------------------ potential

class GeometricPotential(HolderPotential):
    """t log (f^p)^# on J_f with a Lipschitz certificate.

    B and C are the pole-free-disk constants for f itself, so t log f^#
    is |t| B/C-Lipschitz.  For p > 1 the Birkhoff sum adds the spherical
    Lipschitz constants of f^j, bounded by sup|(f^j)'| (1+D1^2) pi.
    """

    def __init__(self, f, t, power=1, space=None):
        self.f = f
        self.t = float(t)
        self.power = int(power)
        self.space = space or JuliaSpace(f)
        n = self.space.max_depth() - 1
        pts = self.space.level(n)
        rho = self.space.covering(n)
        if self.t == 0:
            self.B = 0.0
            self.C = float(np.min(f.sharp(pts)))
            self.lip_factors = [1.0] * self.power
            super().__init__(0, 1)
        else:
            if not f.is_polynomial:
                raise DomainError("Lipschitz certificate is implemented for polynomial maps")
            rmax = float(np.max(np.abs(pts)))
            D1 = rmax + _euclid_slack(rho, rmax)
            D2, C1, C2 = f.coefficient_bounds(D1)
            self.D1, self.D2, self.C1, self.C2 = D1, D2, C1, C2
            self.B = (1 + D1 ** 2) * (C2 * (1 + D1 ** 2) + D2 * C1 ** 2 * (1 + D1 ** 2) + C1 * D1) * float(PI_HI)
            self.C = float(np.min(f.sharp(pts))) - self.B * rho
            if self.C <= 0:
                raise DomainError("net too coarse for a positive lower bound of the spherical derivative")
            facs = [1.0]
            for j in range(1, self.power):
                C1j = f.iterate(j).coefficient_bounds(D1)[1] if j > 1 else C1
                facs.append(C1j * (1 + D1 ** 2) * float(PI_HI))
            self.lip_factors = facs
            a0 = abs(self.t) * self.B / self.C * sum(facs)
            super().__init__(Fraction(math.ceil(a0 * (1 << 30)), 1 << 30), 1)
        vals = self.values(pts)
        slack = float(self.a0) * rho + 1e-12
        self.sup_abs = Fraction(float(np.max(np.abs(vals))) + slack)
        self.inf_lower = Fraction(float(np.min(vals)) - slack)
        self.sup_upper = Fraction(float(np.max(vals)) + slack)

    def log_sharp(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros(z.shape)
        for _ in range(self.power):
            acc = acc + self.f.log_sharp(z)
            z = self.f(z)
        return acc

    def values(self, xs):
        return self.t * self.log_sharp(np.array(list(xs), dtype=complex))

    def value(self, x):
        return float(self.values([x])[0])

    def intervals(self, xs):
        v = self.values(xs)
        pad = 1e-13 * (1 + np.abs(v)) * self.power
        return v - pad, v + pad

    def ball(self, x, prec=128):
        z = BallComplex.from_complex(complex(x), 0, prec)
        acc = BallReal(0, 0, prec)
        for _ in range(self.power):
            acc = acc + spherical_derivative(self.f, z, prec).log()
            z = _eval_ball(self.f, z)
        return ball(Fraction(self.t), prec) * acc

    def __repr__(self):
        return "geometric(t=%r)" % self.t


def _eval_ball(f, z):
    return f._horner_ball(f.num, z) / f._horner_ball(f.den, z)


def geometric_potential(f, t, power=1, space=None):
    return GeometricPotential(f, t, power, space)


# ------------------------------------------------------------------ system

class JuliaSystem(ExpandingSystem):
    """f^p restricted to J_f, with (eta, lam, xi) from the expansion constants."""

    pullback = 0

    def __init__(self, f, constants=None, space=None):
        space = space or JuliaSpace(f)
        c = constants or expansion_constants(f, space)
        self.f = f
        self.constants = c
        self.power = c.nExp
        super().__init__(space, Fraction(c.eta), Fraction(c.lam), Fraction(c.xi), f.degree ** c.nExp)
        self.name = "julia(%r, n=%d)" % (f, c.nExp)

    def forward(self, x):
        return complex(self.f.iterate_points(np.array([x], dtype=complex), self.power)[0])

    def preimages(self, x):
        z = np.array([x], dtype=complex)
        for _ in range(self.power):
            z = self.f.preimages(z).reshape(-1)
        return [complex(v) for v in z]


# ------------------------------------------------------------------ dimension

@dataclass
class DimensionResult:
    value: BallReal
    lo: float
    hi: float
    depth: int
    curve: list
    heuristic: bool = True


def _tree_pressure(space, t, depth):
    """log Z_{n+1}(t) - log Z_n(t), Z_n = sum over level n of (f^n)^#(y)^-t; with the previous
    difference as an error indicator."""
    vals = []
    for n in (depth - 2, depth - 1, depth):
        ls = space.log_sharp_level(n)
        x = -t * ls
        m = x.max()
        vals.append(m + math.log(np.exp(x - m).sum()))
    p1 = vals[1] - vals[0]
    p2 = vals[2] - vals[1]
    return p2, abs(p2 - p1) + 1e-13 * (1 + abs(p2))


def pressure_curve(f, ts, depth=None, space=None):
    """Rows (t, P(t)) for t -> P(f|J, -t log f^#)."""
    space = space or JuliaSpace(f)
    depth = depth or space.max_depth()
    return [(float(t), _tree_pressure(space, float(t), depth)[0]) for t in ts]


def hausdorff_dimension(f, tol=1e-3, depth=None, space=None, t_max=2.0):
    """Bowen's formula by bisection on t -> P(-t log f^#) with tree partition sums."""
    space = space or JuliaSpace(f)
    depth = depth or space.max_depth()
    lo, hi = 0.0, t_max
    p_lo, e_lo = _tree_pressure(space, lo, depth)
    p_hi, e_hi = _tree_pressure(space, hi, depth)
    if not (p_lo > e_lo and p_hi < -e_hi):
        raise DomainError("pressure signs at the bracket ends are not certified")
    slope = (p_lo - p_hi) / (hi - lo)
    err = max(e_lo, e_hi)
    curve = [(lo, p_lo), (hi, p_hi)]
    while hi - lo > 2 * tol:
        mid = (lo + hi) / 2
        p, e = _tree_pressure(space, mid, depth)
        curve.append((mid, p))
        err = max(err, e)
        if abs(p) <= e:
            lo = hi = mid
            break
        if p > 0:
            lo = mid
        else:
            hi = mid
    centre = (lo + hi) / 2
    rad = (hi - lo) / 2 + err / slope
    curve.sort()
    return DimensionResult(BallReal(Fraction(centre), Fraction(rad)), lo, hi, depth, curve)
