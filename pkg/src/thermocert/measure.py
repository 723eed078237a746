"""Equilibrium states as weighted atoms, W1 transport and diagnostics.

Atoms sit on an eps/2-net (eps = 2^-n-1) with weights w_i = int h_i dmu,
where h_i are the normalized hats hat(s_i, eps/2, eps/2).  Moving the
mass h_i dmu to s_i costs less than eps, and weight errors cost at most
diam * sum |r_i|, which gives the certified radius.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .ball import BallReal, ball
from .parallel import pmap
from .systems import CircleSpace, hat_value
from .transfer import (CERTIFIED, EMPIRICAL, CertificationInfeasible, eigendata, jacobian_at,
                       default_net, _U)


@dataclass
class AtomicMeasure:
    points: list
    weights: list
    radius: BallReal
    mode: str
    space: object
    heuristic: bool = False

    def __len__(self):
        return len(self.points)

    def w(self):
        return np.array([float(b.mid) for b in self.weights])

    def total(self):
        return sum(self.weights, BallReal(0))

    def mass(self, pred):
        return sum((w for p, w in zip(self.points, self.weights) if pred(p)), BallReal(0))

    def records(self):
        head = {"mode": self.mode, "radius": "%.6e" % float(self.radius.upper()),
                "heuristic": self.heuristic, "atoms": len(self.points)}
        out = [head]
        for p, w in zip(self.points, self.weights):
            out.append({"x": self.space.encode(p), "w": "%.17g" % float(w.mid)})
        return out


# ------------------------------------------------------------------ hats

def hat_matrix(space, atoms, pts, r, width):
    """Normalized hat partition: H[p, i] = h_i(pts[p])."""
    A = list(atoms)
    D = _cross_dist(space, list(pts), A)
    g = np.clip(1.0 - np.maximum(D - float(r), 0.0) / float(width), 0.0, None)
    s = g.sum(axis=1, keepdims=True)
    return g / s


def _cross_dist(space, X, Y):
    if isinstance(space, CircleSpace):
        x = np.array([float(p) for p in X])
        y = np.array([float(p) for p in Y])
        d = np.abs(x[:, None] - y[None, :]) % 1.0
        return np.minimum(d, 1.0 - d)
    if getattr(space, "symbolic", False):
        return _word_cross_dist(space, X, Y)
    if hasattr(space, "cross_dist"):
        return space.cross_dist(X, Y)
    D = space.dist_matrix(list(X) + list(Y))
    return D[:len(X), len(X):]


def _word_cross_dist(space, X, Y, depth=48):
    SX = np.array([p.head(depth) for p in X])
    SY = np.array([p.head(depth) for p in Y])
    out = np.zeros((len(X), len(Y)))
    undecided = np.ones_like(out, dtype=bool)
    for i in range(depth):
        diff = (SX[:, i][:, None] != SY[:, i][None, :]) & undecided
        out[diff] = 2.0 ** -i
        undecided &= ~diff
    for i, j in zip(*np.nonzero(undecided)):
        out[i, j] = float(space.dist(X[i], Y[j]))
    return out


# ------------------------------------------------------------------ integration

def _symbolic_bracket(ed, F, net, steps):
    """Enclose int f dmu for the columns of F (values on a cylinder net).

    L-hat maps depth-L functions to depth-L functions, so iterating on the
    net is exact; inf/sup over the net then bracket the integral.
    """
    system, pot = ed.system, ed.potential
    rows, cols, ys = [], [], []
    for i, x in enumerate(net.points):
        for y in system.preimages(x):
            rows.append(i)
            cols.append(net.nearest(y))
            ys.append(y)
    lo, hi = pot.intervals(ys)
    P_up = np.nextafter(float(ed.P.upper()), np.inf)
    plo = np.exp(lo - P_up) * (1 - 8 * _U)
    n = len(net)
    Wlo = sp.csr_matrix((plo, (rows, cols)), shape=(n, n))
    gamma = 2 * (system.D + 2) * _U
    Flo = F.astype(float).copy()
    Fhi = Flo.copy()
    for _ in range(steps):
        # the true weights sum to 1, so f = c + sum p (f - c) with nonnegative terms
        c = Flo.min(axis=0)
        C = Fhi.max(axis=0)
        S = (Wlo @ np.nextafter(Flo - c, 0)) * (1 - gamma)
        S2 = (Wlo @ np.nextafter(C - Fhi, 0)) * (1 - gamma)
        Flo = np.nextafter(c + S, -np.inf)
        Fhi = np.nextafter(C - S2, np.inf)
        if np.all(Fhi.max(axis=0) - Flo.min(axis=0) < 1e-15):
            break
    return Flo.min(axis=0), Fhi.max(axis=0)


def _circle_bracket(ed, fvec, lip, steps):
    """int f dmu in L-hat^j f(0) +- lip d^-j diam for constant potentials."""
    d = ed.system.d
    K = d ** steps
    total = absum = 0.0
    # blocks keep the sample-by-function matrix small
    block = 1 << 15
    for start in range(0, K, block):
        x = np.arange(start, min(K, start + block), dtype=float) / K
        vals = fvec(x)
        total = total + vals.sum(axis=0)
        absum = absum + np.abs(vals).sum(axis=0)
    s = total / K
    err = (K + 4) * _U * absum / K + lip * float(CircleSpace.diameter) / K
    return s - err, s + err


def integrate_against(f, ed, n=10, depth=None, lip=None, steps=None):
    """Ball enclosure of int f dmu for the equilibrium state of ``ed``.

    ``f`` is a callable on points.  CERTIFIED mode needs either ``depth``
    (symbolic cylinder function) or ``lip`` (Lipschitz constant on the
    circle with a constant potential).
    """
    if ed.mode == EMPIRICAL:
        mu = ed.m * ed.u
        mu = mu / mu.sum()
        vals = np.array([float(f(p)) for p in ed.net.points])
        v = float(mu @ vals)
        return BallReal(Fraction(v), Fraction(ed.radius or 0) * (1 + abs(v)) + Fraction(1e-12))
    space = ed.system.space
    if space.symbolic and depth is not None:
        net = space.net(Fraction(1, 1 << max(depth - 1, 0)))
        F = np.array([[float(f(p))] for p in net.points])
        lo, hi = _symbolic_bracket(ed, F, net, steps or (depth + 60))
        return BallReal.from_interval(Fraction(float(lo[0])), Fraction(float(hi[0])))
    if isinstance(space, CircleSpace) and lip is not None:
        target = Fraction(1, 1 << (n + 2))
        j = steps or 1
        while Fraction(lip) * Fraction(1, ed.system.d ** j) > target and j < 22:
            j += 1
        lo, hi = _circle_bracket(ed, lambda x: np.array([[f(Fraction(t)) for t in x]]).T, lip, j)
        return BallReal.from_interval(Fraction(float(lo[0])), Fraction(float(hi[0])))
    raise CertificationInfeasible("certified integration needs a cylinder depth or a Lipschitz bound")


# ------------------------------------------------------------------ atoms

def _atom_net(space, n):
    eps = Fraction(1, 1 << (n + 1))
    return eps, space.net(eps / 2)


def measure_atoms(system, potential, n=6, mode=CERTIFIED, allow_fallback=False, ed=None, threads=1):
    """Equilibrium state as weighted atoms with a W1 radius (<= 2^-n when certified)."""
    space = system.space
    eps, atoms = _atom_net(space, n)
    r = width = eps / 2
    diam = space.diameter
    if mode == CERTIFIED:
        try:
            ed = ed if (ed is not None and ed.mode == CERTIFIED) else eigendata(system, potential, n, CERTIFIED)
            return _certified_atoms(ed, atoms, eps, r, width, diam, n)
        except CertificationInfeasible:
            if not allow_fallback:
                raise
    if ed is None or ed.mode != EMPIRICAL:
        size = max(4096, 4 * len(atoms))
        ed = eigendata(system, potential, n, EMPIRICAL, net=_fine_net(system, potential, size))
    mu = ed.m * ed.u
    mu = mu / mu.sum()
    H = hat_matrix(space, atoms.points, ed.net.points, r, width)
    w = mu @ H
    w = w / w.sum()
    err = Fraction(float(ed.radius or 0)) * len(atoms)
    rad = eps + diam * err
    weights = [BallReal(Fraction(float(x)), Fraction(float(ed.radius or 0))) for x in w]
    return AtomicMeasure(atoms.points, weights, BallReal(0, rad), EMPIRICAL, space, True)


def _fine_net(system, potential, size):
    space = system.space
    if space.symbolic:
        k = max(system.k, 2)
        L = max(potential.depth or 1, int(round(math.log(size) / math.log(k))))
        return space.net(Fraction(1, 1 << (L - 1)))
    if isinstance(space, CircleSpace):
        return space.net(Fraction(1, size))
    return default_net(system, potential)


def _certified_atoms(ed, atoms, eps, r, width, diam, n):
    space = ed.system.space
    budget = Fraction(1, 1 << (n + 1))
    if space.symbolic:
        H = hat_matrix(space, atoms.points, atoms.points, r, width)
        lo, hi = _symbolic_bracket(ed, H, atoms, atoms.depth + 60)
    elif isinstance(space, CircleSpace) and ed.potential.is_constant:
        M = len(atoms)
        K = 3
        lip = Fraction(1 + 2 * K + 1) / width
        target = budget / (M * diam * 4)
        j = 1
        while lip * Fraction(1, ed.system.d ** j) * diam > target:
            j += 1
        if ed.system.d ** j > 1 << 24:
            raise CertificationInfeasible("hat integration needs %d^%d samples" % (ed.system.d, j))
        pts = atoms.points

        def fvec(x):
            return hat_matrix(space, pts, x, r, width)

        lo, hi = _circle_bracket(ed, fvec, lip, j)
    else:
        raise CertificationInfeasible("certified atoms need a symbolic space or a constant potential")
    raw = [BallReal.from_interval(Fraction(float(a)), Fraction(float(b))) for a, b in zip(lo, hi)]
    werr = sum((w.rad for w in raw), Fraction(0))
    total = sum((w.mid for w in raw), Fraction(0))
    # renormalized centres; each moves by at most |total - 1| + rad
    weights = [BallReal(w.mid / total, w.rad + w.mid * abs(1 - 1 / total)) for w in raw]
    radius = eps + diam * 2 * (werr + abs(total - 1))
    if radius > Fraction(1, 1 << n):
        raise CertificationInfeasible("measure radius exceeds 2^-%d" % n)
    return AtomicMeasure(atoms.points, weights, BallReal(0, radius), CERTIFIED, space, False)


# ------------------------------------------------------------------ transport

@dataclass
class W1Result:
    upper: float
    lower: float
    plan: np.ndarray


def _merge(points, weights):
    idx = {}
    P, W = [], []
    for p, w in zip(points, weights):
        if p in idx:
            W[idx[p]] += w
        else:
            idx[p] = len(P)
            P.append(p)
            W.append(w)
    return P, np.array(W, dtype=float)


def wasserstein(space, X, a, Y, b, diam=None):
    """W1 between sum a_i delta_{X_i} and sum b_j delta_{Y_j} by linear programming.

    The LP plan is repaired into a sound upper bound; the lower bound is
    the best of a family of 1-Lipschitz dual test functions.
    """
    X, a = _merge(X, a)
    Y, b = _merge(Y, b)
    diam = float(space.diameter if diam is None else diam)
    a = a / a.sum()
    b = b / b.sum()
    C = _cross_dist(space, X, Y)
    n, m = C.shape
    rows = np.concatenate([np.repeat(np.arange(n), m), n + np.tile(np.arange(m), n)])
    cols = np.concatenate([np.arange(n * m), np.arange(n * m)])
    A_eq = sp.csr_matrix((np.ones(2 * n * m), (rows, cols)), shape=(n + m, n * m))
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    pi = np.clip(res.x.reshape(n, m), 0, None) if res.x is not None else np.outer(a, b)
    s = pi.sum()
    ra = pi.sum(axis=1) / s
    rb = pi.sum(axis=0) / s
    tv = 0.5 * (np.abs(ra - a).sum() + np.abs(rb - b).sum())
    upper = float((pi * C).sum() / s) + diam * tv
    upper = upper * (1 + 1e-12) + 1e-15
    lower = dual_lower_bound(space, X, a, Y, b, C)
    return W1Result(upper, lower, pi / s)


def dual_lower_bound(space, X, a, Y, b, C=None):
    """max over f(x) = rho(x, z), z an atom, of |int f da - int f db|."""
    if C is None:
        C = _cross_dist(space, X, Y)
    CX = _cross_dist(space, X, X)
    best = 0.0
    for j in range(C.shape[1]):
        f_X, f_Y = C[:, j], _cross_dist(space, Y, [Y[j]])[:, 0]
        best = max(best, abs(a @ f_X - b @ f_Y))
    for i in range(CX.shape[0]):
        f_X, f_Y = CX[:, i], C[i, :]
        best = max(best, abs(a @ f_X - b @ f_Y))
    return best


def pushforward(mu, system):
    return [system.forward(p) for p in mu.points]


def invariance_defect(mu, system):
    """Upper bound for W1(mu, T_* mu)."""
    w = mu.w()
    res = wasserstein(mu.space, mu.points, w, pushforward(mu, system), w)
    rad = 2 * float(mu.space.diameter) * sum(float(x.rad) for x in mu.weights)
    return BallReal.from_interval(Fraction(res.lower), Fraction(res.upper + rad))


# ------------------------------------------------------------------ Jacobian functionals

def _unpair(z):
    w = (math.isqrt(8 * z + 1) - 1) // 2
    t = w * (w + 1) // 2
    y = z - t
    return w - y, y


def test_function(space, j):
    """The j-th function of a fixed enumeration of hats and their max/min/mean."""
    kind = j % 4
    idx = j // 4

    def base(i):
        level, q = i % 6 + 1, i // 6
        net = space.net(Fraction(1, 1 << level))
        u = net[q % len(net)]
        rr = Fraction(1, 1 << level)
        return lambda x: float(hat_value(space.dist(x, u), rr, rr))

    if kind == 0:
        return base(idx)
    i1, i2 = _unpair(idx)
    f1, f2 = base(i1), base(i2)
    if kind == 1:
        return lambda x: max(f1(x), f2(x))
    if kind == 2:
        return lambda x: min(f1(x), f2(x))
    return lambda x: 0.5 * (f1(x) + f2(x))


def jacobian_defect(mu, ed, j, k, nn):
    """int (phi_j g_k)∘T_B^-1 dmu - int phi_j g_k J dmu with g_k = hat(x_k, eta - 1/nn, 1/nn)."""
    system = ed.system
    space = system.space
    eta = system.eta
    net = space.net(eta)
    xk = net[k % len(net)]
    nn = max(int(nn), int(2 / eta) + 1)
    r, wd = eta - Fraction(1, nn), Fraction(1, nn)
    phi = test_function(space, j)

    def psi(x):
        return phi(x) * float(hat_value(space.dist(x, xk), r, wd))

    w = mu.w()
    left = 0.0
    right = 0.0
    for p, wi in zip(mu.points, w):
        y = system.local_inverse(p, xk, eta)
        if y is not None:
            left += wi * psi(y)
        v = psi(p)
        if v:
            right += wi * v * float(jacobian_at(p, ed).mid)
    val = left - right
    rad = sum(float(x.rad) for x in mu.weights) * (1 + float(system.D) * 4)
    return BallReal(Fraction(val), Fraction(rad) + Fraction(abs(val)) * Fraction(1, 10 ** 12))


# ------------------------------------------------------------------ Gibbs

@dataclass
class GibbsReport:
    ratios: list
    low: float
    high: float
    Cbar: float
    within: bool


def gibbs_ratio_check(mu, ed, depth, Cbar=None, samples=None, threads=1):
    """mu(Bowen ball)/exp(S_n phi - nP) over words/points of the given depth."""
    system, pot = ed.system, ed.potential
    space = system.space
    P = float(ed.P.mid)
    if space.symbolic:
        words = space.words(depth)
        if samples is not None:
            words = words[:samples]
        heads = [p.head(depth) for p in mu.points]
        w = mu.w()

        def one(word):
            x = space.point(word)
            s = 0.0
            z = x
            for _ in range(depth):
                s += pot.value(z)
                z = system.forward(z)
            mass = sum(wi for h, wi in zip(heads, w) if h == word)
            return mass / math.exp(s - depth * P)

        ratios = pmap(one, words, threads)
    else:
        rng = np.random.default_rng(depth)
        pts = [system.sample(rng) for _ in range(samples or 64)]
        xs = np.array([float(p) for p in mu.points])
        w = mu.w()
        rr = float(system.xi) / system.lam ** depth

        def one(x):
            s = 0.0
            z = x
            for _ in range(depth):
                s += pot.value(z)
                z = system.forward(z)
            d = np.abs(xs - float(x)) % 1.0
            d = np.minimum(d, 1 - d)
            mass = w[d < float(rr)].sum()
            return mass / math.exp(s - depth * P)

        ratios = pmap(one, pts, threads)
    lo, hi = min(ratios), max(ratios)
    cb = float(Cbar) if Cbar is not None else float("inf")
    return GibbsReport(list(ratios), lo, hi, cb, (lo >= 1 / cb) and (hi <= cb))
