"""Invariant suites shared by the ``verify`` command and the tests.

Each suite returns a plain dict so that reports serialise the same way
whatever the thread count.
"""

import math
from fractions import Fraction

import numpy as np

from .ball import BallReal
from .cones import ConeParams, GridFunction, THETA_INF, cone_contains, theta_distance
from .parallel import pmap
from .transfer import compute_constants, inverse_jacobian_sum


# ------------------------------------------------------------------ stopping rule

_BITS = 512


def _up(q):
    q = Fraction(q)
    return Fraction(-((-q.numerator << _BITS) // q.denominator), 1 << _BITS)


def _down(q):
    q = Fraction(q)
    return Fraction((q.numerator << _BITS) // q.denominator, 1 << _BITS)


def _exp_upper(q, terms=40):
    """Upper bound of e^q for rational q >= 0: halve, Taylor with tail, square up."""
    q = _up(q)
    s = 0
    while q > Fraction(1, 2):
        q /= 2
        s += 1
    term = Fraction(1)
    total = Fraction(1)
    for j in range(1, terms):
        term = _up(term * q / j)
        total += term
    total += term * q / terms * 2
    total = _up(total)
    for _ in range(s):
        total = _up(total * total)
    return total


def _exp_neg_lower(q, terms=40):
    """Lower bound of e^-q for q >= 0."""
    return _down(1 / _exp_upper(q, terms))


def _partial_exp(x, terms):
    # every term rounded down, so the sum is a lower bound of e^x
    total = Fraction(1)
    term = Fraction(1)
    for j in range(1, terms):
        term = _down(term * x / j)
        total += term
    return total


def stopping_rule_holds(k, Zbar, Cbar, n):
    """0 < Z (1-e^-Z)^(k-1) <= 1 and Cbar e Z (1-e^-Z)^(k-1) < 2^(-n-1), exactly.

    (1 - e^-Z)^(k-1) <= exp(-(k-1) e^-Z) <= 1/S where S is a partial
    sum of the exponential series at (k-1) times a lower bound of e^-Z.
    """
    Z = Fraction(Zbar)
    Cbar = Fraction(Cbar)
    if Z <= 0 or k < 1:
        return False
    x = _down(_exp_neg_lower(Z) * (k - 1))
    S = _partial_exp(x, 3 * int(math.ceil(float(x))) + 240)
    e_hi = _exp_upper(1)
    ok1 = Z / S <= 1
    ok2 = Cbar * e_hi * Z / S < Fraction(1, 2 ** (n + 1))
    return bool(ok1 and ok2)


# ------------------------------------------------------------------ cone suite

def _suite_net(system, size=64):
    space = system.space
    if space.symbolic:
        L = max(1, int(round(math.log(size) / math.log(max(system.k, 2)))))
        return space.net(Fraction(1, 1 << (L - 1)))
    return space.net(Fraction(1, size))


def _preimage_table(system, potential, net, m):
    rows, ys, sums = [], [], []
    for i, x in enumerate(net.points):
        stack = [(x, 0.0, 0)]
        while stack:
            z, s, d = stack.pop()
            if d == m:
                rows.append(i)
                ys.append(z)
                sums.append(s)
                continue
            for y in reversed(system.preimages(z)):
                stack.append((y, s + potential.value(y), d + 1))
    return np.array(rows), ys, np.array(sums)


def _cross(space, X, Y):
    from .measure import _cross_dist
    return _cross_dist(space, X, Y)


def random_cone_member(space, rng, aprime, centres=3):
    """log f = alpha a' sum w_i rho(., p_i): Lipschitz a' with range <= a' diam."""
    ps = [space.sample(rng) for _ in range(centres)]
    w = rng.dirichlet(np.ones(centres))
    alpha = rng.uniform(0, 1)
    shift = rng.uniform(-1, 1)

    def logf(D):
        return shift + alpha * aprime * (D @ w)
    return ps, logf


def cone_suite(system, potential, n=10, samples=200, seed=0, threads=1, constants=None):
    """Random members of C(a', C') pushed through L^m.

    Reports how many images land in C(lam1 a', b'), the largest measured
    theta contraction against 1 - e^-Zbar and the largest image diameter
    against Khat = Zbar.
    """
    c = constants or compute_constants(system, potential, n)
    space = system.space
    aprime = float(c.aprime.upper())
    if aprime <= 0:
        aprime = 1e-3
    big = ConeParams(aprime, float(c.Cprime), float(system.xi), float(potential.v0))
    small = ConeParams(float(c.lam1.upper()) * aprime, float(c.bprime), float(system.xi),
                       float(potential.v0))
    net = _suite_net(system)
    rows, ys, sums = _preimage_table(system, potential, net, c.m)
    weights = np.exp(sums - sums.max())
    rng = np.random.default_rng(seed)
    specs = [random_cone_member(space, rng, aprime) for _ in range(samples)]
    proto = GridFunction(net.points, np.ones(len(net)), space, net.radius, net=net)
    proto.distances()

    def one(spec):
        ps, logf = spec
        fy = np.exp(logf(_cross(space, ys, ps)))
        img = np.bincount(rows, weights=weights * fy, minlength=len(net))
        fx = np.exp(logf(_cross(space, net.points, ps)))
        return fx, img / img.max()

    pairs = pmap(one, specs, threads)
    inside = 0
    members = 0
    witness = None
    for fx, img in pairs:
        ok, _ = cone_contains(proto.with_values(list(fx)), big)
        members += ok
        ok2, w = cone_contains(proto.with_values(list(img)), small)
        inside += ok2
        if not ok2 and witness is None:
            witness = w
    tau = 1 - math.exp(-float(c.Zbar.upper()))
    khat = float(c.Zbar.upper())
    worst, diam = 0.0, 0.0
    for (f1, i1), (f2, i2) in zip(pairs[0::2], pairs[1::2]):
        F1, F2 = proto.with_values(list(f1)), proto.with_values(list(f2))
        G1, G2 = proto.with_values(list(i1)), proto.with_values(list(i2))
        before = theta_distance(F1, F2, big)
        after = theta_distance(G1, G2, big)
        if after is THETA_INF:
            diam = float("inf")
            continue
        diam = max(diam, float(after.upper()))
        if before is not THETA_INF and float(before.mid) > 1e-9:
            worst = max(worst, float(after.upper()) / float(before.mid))
    return {"samples": samples, "members": members, "images_in_cone": inside, "witness": witness,
            "max_contraction": worst, "tau": tau, "max_diameter": diam, "khat": khat, "m": c.m}


# ------------------------------------------------------------------ Jacobian

def jacobian_suite(ed, samples=100, seed=0, threads=1):
    rng = np.random.default_rng(seed)
    pts = [ed.system.sample(rng) for _ in range(samples)]
    vals = pmap(lambda x: float(inverse_jacobian_sum(x, ed).mid), pts, threads)
    dev = max(abs(v - 1) for v in vals)
    return {"samples": samples, "max_deviation": dev}


def ball_suite(count=200, seed=0):
    """Enclosure spot checks of composite ball expressions against exact rationals."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(count):
        p = [Fraction(int(rng.integers(-1000, 1000)), int(rng.integers(1, 1000))) for _ in range(3)]
        x, y, z = (BallReal(v) for v in p)
        exact = (p[0] + p[1]) * p[2] - p[0] * p[1]
        if not ((x + y) * z - x * y).contains(exact):
            bad += 1
        if p[1] != 0 and not (x / y).contains(p[0] / p[1]):
            bad += 1
    return {"checks": 2 * count, "failures": bad}
