"""Metric spaces with nets, expanding maps with inverse branches, potentials.

Two exact spaces are provided: the circle R/Z with rational points, and
one-sided subshifts of finite type whose points are eventually periodic
words.  Distances on both are exact Fractions.  The Julia-set system
lives in :mod:`thermocert.rational` and follows the same interface.
"""

import math
from fractions import Fraction
from functools import reduce

import numpy as np

from .ball import BallReal, DEFAULT_PREC, ball, pi_bounds

__all__ = [
    "CircleSpace", "SymbolicSpace", "Word", "Net",
    "ExpandingSystem", "DoublingMap", "SubshiftOfFiniteType", "full_shift",
    "HolderPotential", "ConstantPotential", "FirstSymbolPotential", "CosinePotential",
    "build_net", "covering_time", "exact_covering_time", "hat_eval", "hat_value",
    "NotExactError",
]


class NotExactError(RuntimeError):
    """Covering time exceeded its cap: not topologically exact at this scale."""


def _pow2_at_least(q):
    # smallest j >= 0 with 2**j >= q
    q = Fraction(q)
    j = 0
    while Fraction(1 << j) < q:
        j += 1
    return j


class Net:
    """A finite eps-net with a locator for nearest points.

    ``radius`` is the actual covering radius: every point of the space
    lies within distance <= radius of some net point.
    """

    def __init__(self, space, points, eps, radius, index=None):
        self.space = space
        self.points = list(points)
        self.eps = Fraction(eps)
        self.radius = Fraction(radius) if not isinstance(radius, float) else radius
        self._index = index

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def nearest(self, y):
        return self.space.nearest_index(self, y)

    def interp(self, y):
        """Interpolation weights [(index, weight)] used by empirical mode."""
        return self.space.interp_weights(self, y)


# ------------------------------------------------------------------ circle

class CircleSpace:
    """R/Z with the arc distance; points are Fractions in [0, 1)."""

    diameter = Fraction(1, 2)
    symbolic = False
    exact = True

    def normalize(self, x):
        return Fraction(x) % 1

    def dist(self, x, y):
        d = (Fraction(x) - Fraction(y)) % 1
        return min(d, 1 - d)

    def net(self, eps):
        eps = Fraction(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        M = 1 << _pow2_at_least(1 / eps)
        pts = [Fraction(k, M) for k in range(M)]
        return Net(self, pts, eps, Fraction(1, 2 * M), index=M)

    def nearest_index(self, net, y):
        M = net._index
        k = math.floor(Fraction(y) * M + Fraction(1, 2)) % M
        return k

    def interp_weights(self, net, y):
        M = net._index
        t = (Fraction(y) % 1) * M
        k = math.floor(t)
        w = float(t - k)
        return [(k % M, 1.0 - w), ((k + 1) % M, w)]

    def sample(self, rng):
        return Fraction(int(rng.integers(0, 1 << 40)), 1 << 40)

    def dist_matrix(self, pts):
        x = np.array([float(p) for p in pts])
        d = np.abs(x[:, None] - x[None, :]) % 1.0
        return np.minimum(d, 1.0 - d)

    def encode(self, x):
        return repr(float(x))

    def to_float(self, x):
        return float(x)


# ------------------------------------------------------------------ words

class Word:
    """Eventually periodic sequence prefix + cycle^infinity (canonical form)."""

    __slots__ = ("prefix", "cycle", "_h")

    def __init__(self, prefix, cycle):
        prefix = tuple(prefix)
        cycle = tuple(cycle)
        if not cycle:
            raise ValueError("empty cycle")
        # primitive period
        n = len(cycle)
        for p in range(1, n + 1):
            if n % p == 0 and cycle == cycle[:p] * (n // p):
                cycle = cycle[:p]
                break
        while prefix and prefix[-1] == cycle[-1]:
            prefix = prefix[:-1]
            cycle = (cycle[-1],) + cycle[:-1]
        self.prefix = prefix
        self.cycle = cycle
        self._h = hash((prefix, cycle))

    def __getitem__(self, i):
        lp = len(self.prefix)
        if i < lp:
            return self.prefix[i]
        return self.cycle[(i - lp) % len(self.cycle)]

    def head(self, n):
        return tuple(self[i] for i in range(n))

    def shift(self):
        if self.prefix:
            return Word(self.prefix[1:], self.cycle)
        return Word((), self.cycle[1:] + self.cycle[:1])

    def prepend(self, s):
        return Word((s,) + self.prefix, self.cycle)

    def __eq__(self, other):
        return isinstance(other, Word) and self.prefix == other.prefix and self.cycle == other.cycle

    def __hash__(self):
        return self._h

    def __repr__(self):
        return "Word(%s|%s)" % ("".join(map(str, self.prefix)), "".join(map(str, self.cycle)))

    def encode(self):
        return "".join(map(str, self.prefix)) + "(" + "".join(map(str, self.cycle)) + ")"


def _lcm(a, b):
    return a * b // math.gcd(a, b)


class SymbolicSpace:
    """Admissible sequences of an SFT with rho = 2**-(first disagreement)."""

    diameter = Fraction(1)
    symbolic = True
    exact = True

    def __init__(self, adjacency):
        A = tuple(tuple(int(v) for v in row) for row in adjacency)
        k = len(A)
        if k < 1 or any(len(r) != k for r in A):
            raise ValueError("adjacency must be square")
        if any(sum(r) == 0 for r in A) or any(sum(A[s][t] for s in range(k)) == 0 for t in range(k)):
            raise ValueError("every symbol needs a successor and a predecessor")
        self.A = A
        self.k = k
        self._tails = {}

    def tail_after(self, s):
        """Canonical admissible continuation after symbol s: greedy smallest successor walk."""
        if s not in self._tails:
            seq = []
            seen = {}
            t = min(j for j in range(self.k) if self.A[s][j])
            while t not in seen:
                seen[t] = len(seq)
                seq.append(t)
                t = min(j for j in range(self.k) if self.A[t][j])
            i = seen[t]
            self._tails[s] = (tuple(seq[:i]), tuple(seq[i:]))
        return self._tails[s]

    def admissible(self, w):
        return all(self.A[w[i]][w[i + 1]] for i in range(len(w) - 1))

    def words(self, n):
        out = [(s,) for s in range(self.k)]
        for _ in range(n - 1):
            out = [w + (t,) for w in out for t in range(self.k) if self.A[w[-1]][t]]
        return out

    def point(self, w):
        path, cyc = self.tail_after(w[-1])
        return Word(tuple(w) + path, cyc)

    def normalize(self, x):
        return x

    def dist(self, x, y):
        if x == y:
            return Fraction(0)
        n = max(len(x.prefix), len(y.prefix)) + _lcm(len(x.cycle), len(y.cycle))
        for i in range(n):
            if x[i] != y[i]:
                return Fraction(1, 1 << i)
        return Fraction(0)

    def depth_for(self, eps):
        return _pow2_at_least(1 / Fraction(eps)) + 1

    def net(self, eps):
        eps = Fraction(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        L = self.depth_for(eps)
        ws = self.words(L)
        pts = [self.point(w) for w in ws]
        index = {w: i for i, w in enumerate(ws)}
        net = Net(self, pts, eps, Fraction(1, 1 << L), index=index)
        net.depth = L
        return net

    def nearest_index(self, net, y):
        return net._index[y.head(net.depth)]

    def interp_weights(self, net, y):
        return [(self.nearest_index(net, y), 1.0)]

    def sample(self, rng, length=40):
        s = int(rng.integers(0, self.k))
        w = [s]
        for _ in range(length - 1):
            succ = [t for t in range(self.k) if self.A[w[-1]][t]]
            w.append(succ[int(rng.integers(0, len(succ)))])
        return self.point(tuple(w))

    def dist_matrix(self, pts, depth=64):
        S = np.array([p.head(depth) for p in pts])
        n = len(pts)
        out = np.zeros((n, n))
        undecided = np.ones((n, n), dtype=bool)
        np.fill_diagonal(undecided, False)
        for i in range(depth):
            diff = (S[:, i][:, None] != S[:, i][None, :]) & undecided
            out[diff] = 2.0 ** -i
            undecided &= ~diff
        for i, j in zip(*np.nonzero(undecided)):
            out[i, j] = float(self.dist(pts[i], pts[j]))
        return out

    def encode(self, x):
        return x.encode()


# ------------------------------------------------------------------ systems

class ExpandingSystem:
    """Distance-expanding map with constants (eta, lam, xi) and branch bound D."""

    name = "system"

    def __init__(self, space, eta, lam, xi, D):
        self.space = space
        self.eta = Fraction(eta)
        self.lam = Fraction(lam)
        self.xi = Fraction(xi)
        self.D = int(D)

    def forward(self, x):
        raise NotImplementedError

    def preimages(self, x):
        raise NotImplementedError

    def preimages_k(self, x, k):
        level = [x]
        for _ in range(k):
            level = [y for z in level for y in self.preimages(z)]
        return level

    def local_inverse(self, x, near, r):
        """The preimage of x within distance < r of ``near`` (or None)."""
        best = None
        for y in self.preimages(x):
            d = self.space.dist(y, near)
            if d < r and (best is None or d < best[0]):
                best = (d, y)
        return None if best is None else best[1]

    def sample(self, rng):
        return self.space.sample(rng)

    def structural_constant(self, potential):
        """If L_phi maps constants to a known constant c, return the ball c."""
        return None

    def describe(self):
        return self.name


class DoublingMap(ExpandingSystem):
    """x -> d x mod 1 on the circle."""

    def __init__(self, d=2):
        d = int(d)
        if d < 2:
            raise ValueError("degree must be >= 2")
        super().__init__(CircleSpace(), Fraction(1, 4 * d), d, Fraction(1, 4), d)
        self.d = d
        self.name = "circle(d=%d)" % d

    def forward(self, x):
        return (self.d * Fraction(x)) % 1

    def preimages(self, x):
        x = Fraction(x)
        return [(x + j) / self.d for j in range(self.d)]

    def structural_constant(self, potential):
        if potential.is_constant:
            return self.d * potential.ball(Fraction(0)).exp()
        return None


class SubshiftOfFiniteType(ExpandingSystem):
    """Left shift on admissible one-sided sequences."""

    def __init__(self, adjacency):
        space = SymbolicSpace(adjacency)
        D = max(sum(space.A[s][t] for s in range(space.k)) for t in range(space.k))
        super().__init__(space, Fraction(1, 8), 2, Fraction(1, 4), D)
        self.A = space.A
        self.k = space.k
        full = all(all(r) for r in self.A)
        self.name = ("shift(%d)" % self.k) if full else "sft(%s)" % ";".join("".join(map(str, r)) for r in self.A)

    def forward(self, x):
        return x.shift()

    def preimages(self, x):
        x0 = x[0]
        return [x.prepend(s) for s in range(self.k) if self.A[s][x0]]

    def structural_constant(self, potential):
        depth = potential.depth
        if potential.is_constant:
            depth = 1
        if depth is None or depth > 1:
            return None
        sums = []
        for t in range(self.k):
            acc = BallReal(0)
            for s in range(self.k):
                if self.A[s][t]:
                    acc = acc + potential.ball(self.space.point((s, t))).exp()
            sums.append(acc)
        first = sums[0]
        if all(s.mid == first.mid and s.rad == first.rad for s in sums):
            return first
        return None


def full_shift(k=2):
    return SubshiftOfFiniteType([[1] * k for _ in range(k)])


# ------------------------------------------------------------------ potentials

class HolderPotential:
    """phi with |phi(x) - phi(y)| <= a0 rho(x,y)**v0.

    ``sup_abs``, ``inf_lower`` and ``sup_upper`` are rational bounds of
    the sup norm, the infimum and the supremum.  ``depth`` is set when
    phi is locally constant on cylinders of that depth.
    """

    is_constant = False
    depth = None

    def __init__(self, a0, v0=1):
        self.a0 = Fraction(a0)
        self.v0 = Fraction(v0)
        if not 0 < self.v0 <= 1:
            raise ValueError("v0 must lie in (0, 1]")

    def ball(self, x, prec=DEFAULT_PREC):
        raise NotImplementedError

    def value(self, x):
        return float(self.ball(x, 64).mid)

    def interval(self, x):
        b = self.ball(x, 64)
        return float(b.lower()), float(b.upper())

    def intervals(self, xs):
        """Float enclosures (lo, hi) for many points."""
        lo = np.empty(len(xs))
        hi = np.empty(len(xs))
        for i, x in enumerate(xs):
            lo[i], hi[i] = self.interval(x)
        return np.nextafter(lo, -np.inf), np.nextafter(hi, np.inf)

    def values(self, xs):
        return np.array([self.value(x) for x in xs])


class ConstantPotential(HolderPotential):
    is_constant = True
    depth = 0

    def __init__(self, c=0):
        super().__init__(0, 1)
        self.c = Fraction(c)
        self.sup_abs = abs(self.c)
        self.inf_lower = self.c
        self.sup_upper = self.c

    def ball(self, x, prec=DEFAULT_PREC):
        return BallReal(self.c, 0, prec)

    def value(self, x):
        return float(self.c)

    def values(self, xs):
        return np.full(len(xs), float(self.c))

    def __repr__(self):
        return "constant(%s)" % self.c


class FirstSymbolPotential(HolderPotential):
    """beta * [x_0 = symbol] on a symbolic space."""

    depth = 1

    def __init__(self, beta, symbol=1):
        beta = Fraction(beta)
        super().__init__(abs(beta), 1)
        self.beta = beta
        self.symbol = symbol
        self.sup_abs = abs(beta)
        self.inf_lower = min(beta, Fraction(0))
        self.sup_upper = max(beta, Fraction(0))

    def ball(self, x, prec=DEFAULT_PREC):
        return BallReal(self.beta if x[0] == self.symbol else 0, 0, prec)

    def value(self, x):
        return float(self.beta) if x[0] == self.symbol else 0.0

    def __repr__(self):
        return "first-symbol(%s)" % self.beta


class CosinePotential(HolderPotential):
    """amp * cos(2 pi x) on the circle; Lipschitz with constant 2 pi |amp|."""

    def __init__(self, amp):
        amp = Fraction(amp)
        pi_hi = pi_bounds(64)[1]
        super().__init__(2 * pi_hi * abs(amp), 1)
        self.amp = amp
        self.sup_abs = abs(amp)
        self.inf_lower = -abs(amp)
        self.sup_upper = abs(amp)

    def ball(self, x, prec=DEFAULT_PREC):
        lo, hi = pi_bounds(prec + 8)
        two_pi_x = BallReal.from_interval(2 * lo, 2 * hi, prec) * Fraction(x)
        return two_pi_x.cos() * self.amp

    def value(self, x):
        return float(self.amp) * math.cos(2 * math.pi * float(x))

    def values(self, xs):
        return float(self.amp) * np.cos(2 * np.pi * np.array([float(x) for x in xs]))

    def intervals(self, xs):
        v = self.values(xs)
        # libm cos plus argument rounding: absolute error well below 1e-14
        pad = 1e-14 * abs(float(self.amp)) + 4 * np.spacing(np.abs(v) + 1e-300)
        return v - pad, v + pad

    def __repr__(self):
        return "cosine(%s)" % self.amp


# ------------------------------------------------------------------ nets, hats

def build_net(space, eps):
    """Deterministic eps-net of ``space`` as a list of points."""
    return list(space.net(eps).points)


def hat_value(d, r, eps):
    """|1 - |d - r|^+ / eps|^+ for a distance d (exact when inputs are rational)."""
    t = d - r
    if t <= 0:
        return type(t)(1) if not isinstance(t, float) else 1.0
    v = 1 - t / eps
    return v if v > 0 else v * 0


def hat_eval(space, u, r, eps, x, prec=DEFAULT_PREC):
    r = Fraction(r)
    eps = Fraction(eps)
    d = space.dist(x, u)
    if isinstance(d, BallReal):
        lo = hat_value(d.upper(), r, eps)
        hi = hat_value(d.lower(), r, eps)
        return BallReal.from_interval(lo, hi, prec)
    if isinstance(d, float):
        return BallReal(Fraction(hat_value(d, float(r), float(eps))), 0, prec)
    return BallReal(hat_value(d, r, eps), 0, prec)


# ------------------------------------------------------------------ covering

def _check_net(system, radius):
    delta = min(Fraction(radius) / 4, system.xi / 2)
    return system.space.net(delta)


def _covers(system, centers, radius, check, times):
    """Every point near a check point is in T^k(B(p, radius)) for some k in times."""
    h = check.radius
    lam = system.lam
    dist = system.space.dist
    for q in check:
        levels = {}
        level = [q]
        for k in range(max(times) + 1):
            if k in times:
                levels[k] = level
            if k < max(times):
                level = [y for z in level for y in system.preimages(z)]
        for p in centers:
            ok = False
            for k in times:
                slack = h / (lam ** k)
                for y in levels[k]:
                    if dist(y, p) + slack < radius:
                        ok = True
                        break
                if ok:
                    break
            if not ok:
                return False
    return True


def _cylinder_length(radius):
    # rho(x, p) < radius  iff  x agrees with p on indices 0..L-1
    L = 0
    while Fraction(1, 1 << L) >= radius:
        L += 1
    return L


def _symbolic_images(system, centers, radius, cap):
    """Per centre, the set of symbols t with [t] inside T^k(ball) for k = 0..cap.

    For k < L the image of the cylinder [w_0..w_{L-1}] is [w_k..w_{L-1}], a
    whole 1-cylinder only when k = L-1; for k >= L it is the union of [t]
    over t reachable from w_{L-1} in k-L+1 steps.
    """
    A = np.array(system.space.A, dtype=np.int64)
    k = len(A)
    L = _cylinder_length(Fraction(radius))
    heads = {p.head(L) for p in centers}
    out = []
    for w in sorted(heads):
        rows = []
        reach = np.zeros(k, dtype=bool)
        reach[w[-1]] = True
        for step in range(cap + 1):
            if step < L - 1:
                rows.append(None)
            elif step == L - 1:
                rows.append({w[-1]} if L > 0 else set(range(k)))
            else:
                reach = (A[reach].sum(axis=0) > 0)
                rows.append(set(np.nonzero(reach)[0].tolist()))
        out.append(rows)
    return out, k


def _symbolic_covering(system, centers, radius, cap, exact):
    images, k = _symbolic_images(system, centers, radius, cap)
    full = set(range(k))
    for t in range(cap + 1):
        ok = True
        for rows in images:
            if exact:
                got = rows[t] or set()
            else:
                got = set().union(*(r for r in rows[:t + 1] if r))
            if got != full:
                ok = False
                break
        if ok:
            return t
    kind = "exact covering time" if exact else "covering time"
    raise NotExactError("%s exceeds %d at radius %s" % (kind, cap, radius))


def covering_time(system, centers, radius, cap=24):
    """Smallest N with union_{k<=N} T^k(B(p, radius)) = X for every centre p.

    Coverage is verified on a finer check net; the slack lam**-k * h
    accounts for points between check points, so N is never
    underestimated.
    """
    radius = Fraction(radius)
    if system.space.symbolic:
        return _symbolic_covering(system, centers, radius, cap, False)
    check = _check_net(system, radius)
    for N in range(cap + 1):
        if _covers(system, centers, radius, check, range(N + 1)):
            return N
    raise NotExactError("covering time exceeds %d at radius %s" % (cap, radius))


def exact_covering_time(system, centers, radius, cap=24):
    """Smallest m with T^m(B(p, radius)) = X for every centre p."""
    radius = Fraction(radius)
    if system.space.symbolic:
        return _symbolic_covering(system, centers, radius, cap, True)
    check = _check_net(system, radius)
    for m in range(cap + 1):
        if _covers(system, centers, radius, check, (m,)):
            return m
    raise NotExactError("exact covering time exceeds %d at radius %s" % (cap, radius))
