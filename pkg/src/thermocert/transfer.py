"""Ruelle operator iteration, the constant ledger, pressure, u_phi and J_phi.

Two modes are supported.  CERTIFIED follows the constructive proofs:
pressure from N1 steps of the operator with every rounding and
interpolation error carried along, and u_phi only in the cases where the
operator maps constants to constants (then every iterate is exactly 1 and
the rate bound is emitted alongside).  EMPIRICAL runs power iteration on
a net discretisation and stops on a Cauchy difference; its radii are
heuristic.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .ball import BallReal, DEFAULT_PREC, ball, exp_bounds, log_bounds, round_dyadic
from .cones import GridFunction, khat
from .systems import covering_time, exact_covering_time

CERTIFIED = "certified"
EMPIRICAL = "empirical"

_U = 2.0 ** -53


class CertificationInfeasible(RuntimeError):
    """The certified algorithm cannot finish within the configured caps."""


# ------------------------------------------------------------------ constants

@dataclass
class RigorConstants:
    a: BallReal
    aprime: BallReal
    lam1: BallReal
    Cbar: BallReal
    Cprime: Fraction
    Q: BallReal
    eps: Fraction
    m: int
    N: int
    N1: int
    Zbar: BallReal
    k: int
    n: int
    card_G: int
    D: int
    P_upper: Fraction
    bprime: Fraction = None
    formulas: dict = field(default_factory=dict)

    def stopping_pair(self):
        return {"k": str(self.k), "Zbar": str(self.Zbar.upper()), "Cbar": str(self.Cbar.upper()),
                "n": self.n}

    def ledger(self):
        rows = []
        for name in ("a", "aprime", "lam1", "Cbar", "Cprime", "Q", "eps", "m", "N", "N1", "Zbar", "k"):
            v = getattr(self, name)
            if isinstance(v, BallReal):
                txt = "%.17g +/- %.3g" % (float(v.mid), float(v.rad))
            elif name == "k":
                txt = "%d (%d digits)" % (v, len(str(v)))
            else:
                txt = str(v) if not isinstance(v, Fraction) else "%s (%.6g)" % (v, float(v))
            rows.append({"name": name, "value": txt, "formula": self.formulas.get(name, "")})
        return rows


_FORMULAS = {
    "a": "a0/(lam^v0 - 1)",
    "aprime": "(6 a0 lam^v0 - 2 a0)/(lam^v0 - 1)^2",
    "lam1": "(1 + lam^-v0)/2",
    "Cbar": "min(D, card G)^N exp(4 a0 xi^v0/(lam^v0 - 1) + 2 N |phi|_inf)",
    "Cprime": "2 max(Cbar^2, 2 exp(a'))",
    "Q": "exp(inf phi - P_upper)",
    "eps": "largest 2^-j < xi with 2 exp(a' eps^v0) <= C'",
    "m": "least m with T^m(B(x', eps/2)) = X for every x' in an eps/2-net",
    "N": "least N with union_{k<=N} T^k(B(x, xi)) = X for x in a min(eta, xi)-net",
    "N1": "floor(2^(n+1) log Cbar) + 1",
    "Zbar": "Khat(lam1, C', (Cbar^-2 Q^m + 2) C'/(2 Cbar^-2 Q^m + 2))",
    "k": "k - 1 = ceil(log(Cbar e Zbar 2^(n+1)) / exp(-Zbar)) + 1",
}


def _lam_v(system, potential):
    lam = ball(system.lam)
    return lam if potential.v0 == 1 else lam.pow_frac(potential.v0)


def holder_a(system, potential):
    """a = a0/(lam^v0 - 1) as a ball."""
    lv = _lam_v(system, potential)
    return ball(potential.a0) / (lv - 1)


def compute_constants(system, potential, n, P_upper=None, cap=24):
    """Fill the constant ledger for precision 2^-n."""
    a0 = ball(potential.a0)
    v0 = potential.v0
    lv = _lam_v(system, potential)
    a = a0 / (lv - 1)
    aprime = (6 * a0 * lv - 2 * a0) / ((lv - 1) * (lv - 1))
    lam1 = (1 + lv.reciprocal()) / 2
    xi = system.xi
    G = system.space.net(min(system.eta, xi))
    N = covering_time(system, G.points, xi, cap=cap)
    base = min(system.D, len(G))
    xi_v = ball(xi) if v0 == 1 else ball(xi).pow_frac(v0)
    Cbar = ball(base) ** N * (4 * a0 * xi_v / (lv - 1) + 2 * N * ball(potential.sup_abs)).exp()
    two_exp_ap = 2 * aprime.exp()
    Cprime = round_dyadic(2 * max((Cbar * Cbar).upper(), two_exp_ap.upper()), 40, "u")
    j = 1
    while True:
        e = Fraction(1, 1 << j)
        if e < xi:
            ev = ball(e) if v0 == 1 else ball(e).pow_frac(v0)
            if (2 * (aprime * ev).exp()).upper() <= Cprime:
                break
        j += 1
    eps = e
    G2 = system.space.net(eps / 2)
    m = exact_covering_time(system, G2.points, eps / 2, cap=cap)
    if P_upper is None:
        P_upper = log_bounds(system.D)[1] + potential.sup_upper
    P_upper = Fraction(P_upper)
    Q = ball(potential.inf_lower - P_upper).exp()
    t = Q.lower() ** m / Cbar.upper() ** 2
    t = round_dyadic(t, 64, "d")
    bprime = (t + 2) * Cprime / (2 * t + 2)
    Zbar = khat(lam1, Cprime, bprime)
    Z_hi = Zbar.upper()
    x_lo = exp_bounds(-Z_hi)[0]
    e_hi = exp_bounds(1)[1]
    L_hi = log_bounds(Cbar.upper() * e_hi * Z_hi * 2 ** (n + 1))[1]
    k = -((-L_hi) // x_lo) + 2
    N1 = int(math.floor(2 ** (n + 1) * log_bounds(Cbar.upper())[1])) + 1
    return RigorConstants(a=a, aprime=aprime, lam1=lam1, Cbar=Cbar, Cprime=Cprime, Q=Q, eps=eps,
                          m=m, N=N, N1=N1, Zbar=Zbar, k=int(k), n=n, card_G=len(G), D=system.D,
                          P_upper=P_upper, bprime=bprime, formulas=dict(_FORMULAS))


# ------------------------------------------------------------------ apply_L

def _f_at(f, y, space):
    """Ball value of f at y from the nearest net point with a Hölder correction."""
    net = f.net
    j = net.nearest(y)
    val = f.ball(j)
    d = space.dist(y, net[j])
    if d == 0 or (f.depth is not None and getattr(net, "depth", -1) >= f.depth):
        return val
    if f.cert is None:
        if np.all(f.mid == f.mid[0]) and np.all(f.rad == 0):
            return val
        raise ValueError("function needs a Hölder certificate for off-net values")
    a, v0 = f.cert
    dv = ball(d) if v0 == 1 else ball(d).pow_frac(v0)
    c = (ball(a) * dv).upper()
    lo, hi = exp_bounds(-c)[0], exp_bounds(c)[1]
    return BallReal.from_interval(val.lower() * lo, val.upper() * hi)


def apply_L(f, potential, system, n=1, prec=DEFAULT_PREC):
    """L_phi^n f on the net of f by depth-n inverse-branch enumeration."""
    if n < 1:
        raise ValueError("n must be >= 1")
    space = system.space
    if system.D ** n > 10 ** 7:
        raise RuntimeError("branch enumeration exceeds cap")
    out = []
    for x in f.points:
        acc = BallReal(0, 0, prec)
        stack = [(x, BallReal(0, 0, prec), 0)]
        while stack:
            z, s, depth = stack.pop()
            if depth == n:
                acc = acc + _f_at(f, z, space) * s.exp()
                continue
            for y in reversed(system.preimages(z)):
                stack.append((y, s + potential.ball(y, prec), depth + 1))
        out.append(acc)
    return GridFunction(f.points, out, space, f.radius, net=f.net)


def constant_function(net, c=1):
    return GridFunction(net.points, [BallReal(c)] * len(net), net.space, net.radius,
                        cert=(0, 1), depth=0, net=net)


# ------------------------------------------------------------------ net matrices

def _branches(system, net):
    rows, ys = [], []
    for i, x in enumerate(net.points):
        for y in system.preimages(x):
            rows.append(i)
            ys.append(y)
    return np.array(rows, dtype=np.int64), ys


def empirical_matrix(system, potential, net):
    """Sparse M with (M f)(x_i) ~ sum_y e^phi(y) f(y), f interpolated from the net."""
    rows, ys = _branches(system, net)
    phi = potential.values(ys)
    r, c, v = [], [], []
    for i, y, p in zip(rows, ys, np.exp(phi)):
        for j, w in net.interp(y):
            if w:
                r.append(i)
                c.append(j)
                v.append(p * w)
    n = len(net)
    return sp.csr_matrix((np.array(v), (np.array(r), np.array(c))), shape=(n, n))


def _interval_matrices(system, potential, net, corr):
    rows, ys = _branches(system, net)
    cols = np.array([net.nearest(y) for y in ys], dtype=np.int64)
    lo, hi = potential.intervals(ys)
    elo = np.exp(lo) * (1 - 4 * _U)
    ehi = np.exp(hi) * (1 + 4 * _U)
    if corr:
        elo = elo * math.exp(-corr) * (1 - 4 * _U)
        ehi = ehi * math.exp(corr) * (1 + 4 * _U)
    n = len(net)
    Mlo = sp.csr_matrix((elo, (rows, cols)), shape=(n, n))
    Mhi = sp.csr_matrix((ehi, (rows, cols)), shape=(n, n))
    return Mlo, Mhi


def interval_power(Mlo, Mhi, steps, start=0):
    """Enclose (M^steps 1)(x_start) as exact rationals (lo, hi).

    Float matvecs with nonnegative entries are padded by the classical
    summation bound; vectors are rescaled by exact powers of two.
    """
    if Mlo.shape[0] <= _DENSE_MAX:
        return _interval_power_dense(Mlo, Mhi, steps, start)
    nnz = max(int(np.diff(Mhi.indptr).max()), 1)
    gamma = 2 * (nnz + 2) * _U
    down, up = 1 - gamma, 1 + gamma
    vlo = np.ones(Mlo.shape[0])
    vhi = vlo.copy()
    E = 0
    for _ in range(steps):
        vlo = (Mlo @ vlo) * down
        vhi = (Mhi @ vhi) * up
        e = math.frexp(vhi.max())[1]
        if e:
            vlo = np.ldexp(vlo, -e)
            vhi = np.ldexp(vhi, -e)
            E += e
        vlo = np.nextafter(vlo, 0)
    scale = Fraction(2) ** E
    return Fraction(float(vlo[start])) * scale, Fraction(float(vhi[start])) * scale


_DENSE_MAX = 1024
_TINY = 5e-324


def _padded_product(A, B, lower):
    """Enclosing float product of nonnegative matrices, then rescaled by a power of two."""
    n = A.shape[1]
    gamma = 2 * (n + 2) * _U
    C = A @ B
    if lower:
        C = np.maximum(np.nextafter(C * (1 - gamma), 0) - (n + 2) * _TINY, 0)
    else:
        C = np.nextafter(C * (1 + gamma), np.inf) + (n + 2) * _TINY
    return C


def _scaled(C, ref):
    e = math.frexp(ref.max())[1]
    return np.ldexp(C, -e), e


def _interval_power_dense(Mlo, Mhi, steps, start):
    # square-and-multiply on both bounds; monotone because every entry is >= 0
    lo_b, hi_b = Mlo.toarray(), Mhi.toarray()
    lo_r = hi_r = None
    Eb, Er = 0, 0
    k = steps
    while k:
        if k & 1:
            if hi_r is None:
                lo_r, hi_r, Er = lo_b.copy(), hi_b.copy(), Eb
            else:
                lo_r = _padded_product(lo_r, lo_b, True)
                hi_r = _padded_product(hi_r, hi_b, False)
                hi_r, e = _scaled(hi_r, hi_r)
                lo_r = np.ldexp(lo_r, -e)
                Er += Eb + e
        k >>= 1
        if k:
            lo_b = _padded_product(lo_b, lo_b, True)
            hi_b = _padded_product(hi_b, hi_b, False)
            hi_b, e = _scaled(hi_b, hi_b)
            lo_b = np.ldexp(lo_b, -e)
            Eb = 2 * Eb + e
    if hi_r is None:
        return Fraction(1), Fraction(1)
    n = lo_r.shape[1]
    gamma = 2 * (n + 2) * _U
    lo = max(float(np.nextafter(lo_r[start].sum() * (1 - gamma), 0)) - (n + 2) * _TINY, 0.0)
    hi = float(np.nextafter(hi_r[start].sum() * (1 + gamma), np.inf)) + (n + 2) * _TINY
    scale = Fraction(2) ** Er
    return Fraction(lo) * scale, Fraction(hi) * scale


def power_iteration(M, tol=1e-13, max_iter=5000, left=False):
    """Leading eigenpair of a nonnegative sparse matrix; returns (lam, vec, iters, converged)."""
    A = M.T.tocsr() if left else M
    v = np.ones(A.shape[0])
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = A @ v
        lam = w.max()
        w = w / lam
        if np.max(np.abs(w - v)) < tol:
            return lam, w, it, True
        v = w
    return lam, v, max_iter, False


# ------------------------------------------------------------------ results

@dataclass
class PressureEstimate:
    value: BallReal
    N1: int
    base_point: object
    mode: str = CERTIFIED
    heuristic: bool = False
    iterations: int = 0

    @property
    def radius(self):
        return self.value.rad


def _cert_net(system, potential, n, a, max_net):
    """Net for the certified iteration and the interpolation correction exponent."""
    space = system.space
    if space.symbolic and potential.depth is not None:
        L = max(potential.depth, 1)
        net = space.net(Fraction(1, 1 << max(L - 1, 0)))
        return net, 0.0
    if a.upper() == 0:
        return space.net(min(system.xi / 2, system.eta)), 0.0
    target = Fraction(1, 1 << (n + 3))
    eps = system.xi / 2
    while True:
        if 1 / eps > max_net:
            raise CertificationInfeasible("net for certified pressure exceeds %d points" % max_net)
        net = space.net(eps)
        hv = ball(net.radius) if potential.v0 == 1 else ball(net.radius).pow_frac(potential.v0)
        c = (a * hv).upper()
        if c <= target:
            break
        eps /= 2
    return net, float(round_dyadic(c, 50, "u"))


def certified_pressure(system, potential, n, constants=None, max_iter=5_000_000, max_net=1 << 17):
    if not system.space.exact:
        raise CertificationInfeasible("certified pressure needs exact net points")
    c = constants or compute_constants(system, potential, n)
    N1 = c.N1
    if N1 > max_iter:
        raise CertificationInfeasible("N1 = %d exceeds the iteration cap %d" % (N1, max_iter))
    net, corr = _cert_net(system, potential, n, c.a, max_net)
    Mlo, Mhi = _interval_matrices(system, potential, net, corr)
    lo, hi = interval_power(Mlo, Mhi, N1)
    logC = log_bounds(c.Cbar.upper())[1]
    P_lo = (log_bounds(lo)[0] - logC) / N1
    P_hi = (log_bounds(hi)[1] + logC) / N1
    val = BallReal.from_interval(P_lo, P_hi)
    if val.rad > Fraction(1, 1 << n):
        raise CertificationInfeasible("pressure radius %.3g exceeds 2^-%d" % (float(val.rad), n))
    return PressureEstimate(val, N1, net[0], CERTIFIED, False, N1)


def default_net(system, potential, size=4096):
    space = system.space
    if space.symbolic:
        k = max(system.k, 2)
        L = max(potential.depth or 1, int(math.log(size) / math.log(k)))
        return space.net(Fraction(1, 1 << (L - 1)))
    if hasattr(space, "default_net"):
        return space.default_net()
    return space.net(Fraction(1, size))


class EigenData:
    """u_phi, the pressure and the discrete eigenmeasure on a net."""

    def __init__(self, system, potential, net, u, P, mode, heuristic, m=None, constants=None,
                 radius=None, structural=False, iterations=0, pullback=0):
        self.system = system
        self.potential = potential
        self.net = net
        self.u = u
        self.P = P
        self.mode = mode
        self.heuristic = heuristic
        self.m = m
        self.constants = constants
        self.radius = radius
        self.structural = structural
        self.iterations = iterations
        self.pullback = pullback

    def grid(self):
        if self.structural:
            return constant_function(self.net, 1)
        return GridFunction(self.net.points, self.u, self.net.space, self.net.radius, net=self.net)

    def _u_interp(self, y):
        return sum(w * self.u[j] for j, w in self.net.interp(y))

    def u_at(self, x):
        """u(x) as a float; pullback through r inverse steps then interpolation."""
        if self.structural:
            return 1.0
        r = self.pullback
        if r == 0:
            return self._u_interp(x)
        P = float(self.P.mid)
        pot = self.potential
        total = 0.0
        stack = [(x, 0.0, 0)]
        while stack:
            z, s, d = stack.pop()
            if d == r:
                total += math.exp(s - r * P) * self._u_interp(z)
                continue
            for y in self.system.preimages(z):
                stack.append((y, s + pot.value(y), d + 1))
        return total

    def u_ball(self, x):
        if self.structural:
            return BallReal(1)
        v = self.u_at(x)
        return BallReal(Fraction(v), Fraction(self.radius if self.radius is not None else 0.0))


def eigendata(system, potential, n=10, mode=EMPIRICAL, allow_fallback=False, tol=1e-13,
              max_iter=5000, net=None, constants=None):
    """Compute u_phi and P; raises CertificationInfeasible in certified mode when
    no exact route applies (unless allow_fallback)."""
    if mode == CERTIFIED:
        c_struct = system.structural_constant(potential)
        if c_struct is not None:
            c = constants or compute_constants(system, potential, n, P_upper=c_struct.log().upper())
            net = net or system.space.net(min(system.eta, system.xi))
            P = c_struct.log()
            rate = rate_bound(c)
            return EigenData(system, potential, net, np.ones(len(net)), P, CERTIFIED, False,
                             constants=c, radius=rate, structural=True)
        if not allow_fallback:
            raise CertificationInfeasible(
                "certified eigenfunction needs an operator that preserves constants; "
                "the cone-rate iteration length mk is astronomically large here")
    net = net or default_net(system, potential)
    M = empirical_matrix(system, potential, net)
    lam, v, it, conv = power_iteration(M, tol, max_iter)
    _, mvec, it2, conv2 = power_iteration(M, tol, max_iter, left=True)
    mvec = mvec / mvec.sum()
    u = v / float(mvec @ v)
    P = BallReal(Fraction(math.log(lam)), Fraction(tol) * 10)
    pull = 0 if system.space.symbolic else getattr(system, "pullback", 3)
    return EigenData(system, potential, net, u, P, EMPIRICAL, True, m=mvec, constants=constants,
                     radius=float(tol) * 10 * max(1.0, float(u.max())), iterations=max(it, it2),
                     pullback=pull)


def rate_bound(c):
    """Cbar e Zbar (1 - e^-Zbar)^(k-1) as an upper bound (a rational)."""
    Z = c.Zbar.upper()
    x = exp_bounds(-Z)[0]
    y = (c.k - 1) * x
    return c.Cbar.upper() * exp_bounds(1)[1] * Z * exp_bounds(-y)[1]


def pressure(system, potential, n=10, mode=CERTIFIED, allow_fallback=False, tol=1e-13,
             max_iter=5_000_000, constants=None):
    if mode == CERTIFIED:
        try:
            return certified_pressure(system, potential, n, constants, max_iter=max_iter)
        except CertificationInfeasible:
            if not allow_fallback:
                raise
    ed = eigendata(system, potential, n, EMPIRICAL, tol=tol)
    return PressureEstimate(ed.P, 0, ed.net[0], EMPIRICAL, True, ed.iterations)


def eigenfunction(system, potential, n=10, mode=CERTIFIED, allow_fallback=False, **kw):
    ed = eigendata(system, potential, n, mode, allow_fallback, **kw)
    return ed.grid()


def jacobian_at(x, ed):
    """J(x) = u(Tx)/u(x) exp(P - phi(x)) as a ball."""
    system, pot = ed.system, ed.potential
    Tx = system.forward(x)
    if ed.structural:
        return (ed.P - pot.ball(x)).exp()
    val = ed.u_at(Tx) / ed.u_at(x) * math.exp(float(ed.P.mid) - pot.value(x))
    return BallReal(Fraction(val), Fraction(abs(val) * 1e-10))


def inverse_jacobian_sum(x, ed):
    """sum over y in T^-1 x of 1/J(y); equals 1 for the true Jacobian."""
    return sum((1 / jacobian_at(y, ed) for y in ed.system.preimages(x)), BallReal(0))


def normalized_weights(ed, x, depth=1):
    """Preimages y of x at the given depth with weights of L-hat^depth."""
    P = ed.P
    pot = ed.potential
    system = ed.system
    out = []
    stack = [(x, BallReal(0), 0)]
    while stack:
        z, s, d = stack.pop()
        if d == depth:
            out.append((z, s))
            continue
        for y in reversed(system.preimages(z)):
            stack.append((y, s + pot.ball(y, 64) - P, d + 1))
    if ed.structural:
        return [(y, s.exp()) for y, s in out]
    ux = ed.u_at(x)
    return [(y, BallReal(Fraction(math.exp(float(s.mid)) * ed.u_at(y) / ux))) for y, s in out]


def normalized_apply(f, ed, depth=1):
    """L-hat^depth f on the net of f, where L-hat g = L_phibar(g u)/u.

    ``f`` may be a GridFunction (values off the net by nearest lookup with
    its certificate) or a callable on points.
    """
    space = ed.system.space
    pts = f.points if isinstance(f, GridFunction) else ed.net.points
    out = []
    for x in pts:
        acc = BallReal(0)
        for y, w in normalized_weights(ed, x, depth):
            fy = _f_at(f, y, space) if isinstance(f, GridFunction) else ball(f(y))
            acc = acc + w * fy
        out.append(acc)
    net = f.net if isinstance(f, GridFunction) else ed.net
    return GridFunction(pts, out, space, net.radius, net=net)
