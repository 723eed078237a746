"""Command-line front door.

    thermocert COMMAND [--config PATH] [--n BITS] [--mode certified|empirical]
                       [--allow-fallback] [--threads K] [--out PATH] [key=value ...]

Configs are flat ``key = value`` files; trailing ``key=value`` arguments
override them.  Every command writes newline-delimited JSON records to
``--out`` (or stdout).  Exit status: 0 ok, 1 verify found a violation,
2 bad config, 3 certification infeasible.
"""

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from fractions import Fraction

import numpy as np

from . import parallel
from .ball import DomainError
from .invariants import ball_suite, cone_suite, jacobian_suite, stopping_rule_holds
from .measure import measure_atoms
from .rational import (JuliaSystem, RationalMap, distance_to_julia, geometric_potential,
                       hausdorff_dimension, spherical_distance)
from .systems import (ConstantPotential, CosinePotential, DoublingMap, FirstSymbolPotential,
                      SubshiftOfFiniteType, full_shift)
from .transfer import (CERTIFIED, EMPIRICAL, CertificationInfeasible, compute_constants,
                       eigendata, inverse_jacobian_sum, jacobian_at, pressure)

COMMANDS = ("pressure", "eigenfunction", "jacobian", "measure", "dimension", "julia-net",
            "constants", "verify")
SYSTEMS = ("circle", "shift", "sft", "quadratic")
POTENTIALS = ("constant", "first-symbol", "cosine", "geometric")


class ConfigError(ValueError):
    pass


def _fmt(x):
    return "%.17g" % float(x)


@dataclass
class RunConfig:
    system: str = "circle"
    d: int = 2
    k: int = 2
    adjacency: str = "11;10"
    c: str = "0,0"
    potential: str = "constant"
    value: str = "0"
    beta: str = "1"
    symbol: int = 1
    amplitude: str = "0.1"
    t: str = "-1"
    n: int = 10
    mode: str = CERTIFIED
    allow_fallback: bool = False
    threads: int = 1
    max_iter: int = 5_000_000
    max_prec: int = 0
    tol: str = "0.001"
    eps: str = "0.05"
    samples: int = 16
    seed: int = 0
    extras: dict = field(default_factory=dict)

    def validate(self):
        if self.system not in SYSTEMS:
            raise ConfigError("unknown system kind %r" % self.system)
        if self.potential not in POTENTIALS:
            raise ConfigError("unknown potential kind %r" % self.potential)
        if self.mode not in (CERTIFIED, EMPIRICAL):
            raise ConfigError("mode must be certified or empirical")
        if self.n < 1 or self.n > 60:
            raise ConfigError("n must lie in 1..60")
        if self.system == "circle" and self.d < 2:
            raise ConfigError("circle degree d must be >= 2")
        if self.system == "shift" and self.k < 2:
            raise ConfigError("shift needs k >= 2 symbols")
        ok = {"circle": ("constant", "cosine"), "shift": ("constant", "first-symbol"),
              "sft": ("constant", "first-symbol"), "quadratic": ("geometric",)}
        if self.potential not in ok[self.system]:
            raise ConfigError("potential %r is not available on %r" % (self.potential, self.system))
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _set(cfg, key, raw):
    key = key.strip().replace("-", "_")
    raw = raw.strip()
    if key not in _TYPES or key == "extras":
        raise ConfigError("unknown config key %r" % key)
    typ = _TYPES[key]
    try:
        if typ in (int, "int"):
            val = int(raw)
        elif typ in (bool, "bool"):
            if raw.lower() not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(raw)
            val = raw.lower() in ("1", "true", "yes")
        else:
            val = raw
    except ValueError:
        raise ConfigError("bad value for %s: %r" % (key, raw)) from None
    setattr(cfg, key, val)


def parse_config_text(text, cfg=None):
    cfg = cfg or RunConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected key = value" % lineno)
        k, v = line.split("=", 1)
        _set(cfg, k, v)
    return cfg


def _frac(s, name):
    try:
        return Fraction(str(s).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError("bad rational for %s: %r" % (name, s)) from None


def _complex(s):
    parts = str(s).replace(" ", ",").split(",")
    parts = [p for p in parts if p]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError("c must be two decimals 're,im', got %r" % s)


def _adjacency(s):
    rows = [r.strip() for r in str(s).split(";") if r.strip()]
    if not rows or any(len(r) != len(rows) for r in rows) or any(ch not in "01" for r in rows for ch in r):
        raise ConfigError("adjacency must be square rows of 0/1 separated by ';'")
    return [[int(ch) for ch in r] for r in rows]


def build(cfg):
    """System and potential from a validated config."""
    if cfg.system == "circle":
        system = DoublingMap(cfg.d)
    elif cfg.system == "shift":
        system = full_shift(cfg.k)
    elif cfg.system == "sft":
        try:
            system = SubshiftOfFiniteType(_adjacency(cfg.adjacency))
        except ValueError as e:
            raise ConfigError("adjacency rejected: %s" % e) from None
    else:
        f = RationalMap.quadratic(_complex(cfg.c))
        try:
            system = JuliaSystem(f)
        except DomainError as e:
            raise ConfigError("quadratic map rejected: %s" % e) from None
    if cfg.potential == "constant":
        pot = ConstantPotential(_frac(cfg.value, "value"))
    elif cfg.potential == "first-symbol":
        sym = cfg.symbol
        if not 0 <= sym < system.k:
            raise ConfigError("symbol out of range")
        pot = FirstSymbolPotential(_frac(cfg.beta, "beta"), sym)
    elif cfg.potential == "cosine":
        pot = CosinePotential(_frac(cfg.amplitude, "amplitude"))
    else:
        pot = geometric_potential(system.f, float(_frac(cfg.t, "t")), power=system.power,
                                  space=system.space)
    return system, pot


# ------------------------------------------------------------------ commands

def _header(cmd, cfg, system, pot):
    return {"command": cmd, "system": system.describe(), "potential": repr(pot), "n": cfg.n}


def cmd_pressure(cfg, system, pot):
    est = pressure(system, pot, cfg.n, cfg.mode, cfg.allow_fallback, max_iter=cfg.max_iter)
    rec = _header("pressure", cfg, system, pot)
    rec.update({"mode": est.mode, "heuristic": est.heuristic, "value": _fmt(est.value.mid),
                "radius": _fmt(est.value.rad), "lower": _fmt(est.value.lower()),
                "upper": _fmt(est.value.upper()), "iterations": est.iterations})
    if isinstance(system, JuliaSystem):
        rec["iterate"] = system.power
        rec["value_per_step"] = _fmt(est.value.mid / system.power)
    return [rec]


def _eigendata(cfg, system, pot):
    return eigendata(system, pot, cfg.n, cfg.mode, cfg.allow_fallback)


def cmd_eigenfunction(cfg, system, pot):
    ed = _eigendata(cfg, system, pot)
    rec = _header("eigenfunction", cfg, system, pot)
    rec.update({"mode": ed.mode, "heuristic": ed.heuristic, "P": _fmt(ed.P.mid),
                "radius": _fmt(ed.radius or 0), "points": len(ed.net)})
    out = [rec]
    u = ed.grid()
    for p, v in zip(ed.net.points, u.mid):
        out.append({"x": system.space.encode(p), "u": _fmt(v)})
    return out


def _samples(cfg, system):
    rng = np.random.default_rng(cfg.seed)
    return [system.sample(rng) for _ in range(cfg.samples)]


def cmd_jacobian(cfg, system, pot):
    ed = _eigendata(cfg, system, pot)
    pts = _samples(cfg, system)

    def one(x):
        return (float(jacobian_at(x, ed).mid), float(inverse_jacobian_sum(x, ed).mid))

    vals = parallel.pmap(one, pts)
    rec = _header("jacobian", cfg, system, pot)
    rec.update({"mode": ed.mode, "heuristic": ed.heuristic,
                "max_deviation": _fmt(max(abs(s - 1) for _, s in vals))})
    out = [rec]
    for x, (J, s) in zip(pts, vals):
        out.append({"x": system.space.encode(x), "J": _fmt(J), "inverse_sum": _fmt(s)})
    return out


def cmd_measure(cfg, system, pot):
    ed = _eigendata(cfg, system, pot)
    mu = measure_atoms(system, pot, cfg.n, ed.mode, cfg.allow_fallback, ed=ed,
                       threads=parallel._threads)
    recs = mu.records()
    integral = float(np.dot(mu.w(), pot.values(mu.points)))
    recs.insert(1, {"derived": "entropy", "value": _fmt(float(ed.P.mid) - integral),
                    "note": "P - int phi dmu over the atoms"})
    return recs


def _need_julia(cfg, system):
    if not isinstance(system, JuliaSystem):
        raise ConfigError("this command needs system = quadratic")


def cmd_dimension(cfg, system, pot, out=None):
    _need_julia(cfg, system)
    res = hausdorff_dimension(system.f, float(_frac(cfg.tol, "tol")), space=system.space)
    rec = {"command": "dimension", "system": system.describe(), "value": _fmt(res.value.mid),
           "radius": _fmt(res.value.rad), "lo": _fmt(res.lo), "hi": _fmt(res.hi),
           "depth": res.depth, "heuristic": res.heuristic}
    if out:
        path = os.path.splitext(out)[0] + ".csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "pressure"])
            for t, p in res.curve:
                w.writerow([_fmt(t), _fmt(p)])
        rec["curve"] = os.path.basename(path)
    return [rec]


def cmd_julia_net(cfg, system, pot):
    _need_julia(cfg, system)
    eps = float(_frac(cfg.eps, "eps"))
    net = system.space.net(eps)
    out = [{"command": "julia-net", "system": system.describe(), "eps": _fmt(eps),
            "points": len(net), "radius": _fmt(net.radius)}]
    dists = parallel.pmap(lambda p: float(distance_to_julia(system.f, p, space=system.space).upper()),
                          net.points)
    for p, d in zip(net.points, dists):
        out.append({"re": _fmt(p.real), "im": _fmt(p.imag), "dist": _fmt(d)})
    return out


def cmd_constants(cfg, system, pot):
    if isinstance(system, JuliaSystem):
        out = [{"command": "constants", "system": system.describe()}]
        out.extend(system.constants.ledger())
        for name in ("B", "C", "a0"):
            out.append({"name": name, "value": _fmt(getattr(pot, name)),
                        "formula": {"B": "(1+D1^2)(C2(1+D1^2)+D2 C1^2(1+D1^2)+C1 D1) pi",
                                    "C": "inf f^# on J minus B times covering radius",
                                    "a0": "|t| B/C summed over iterates"}[name]})
        return out
    c = compute_constants(system, pot, cfg.n)
    out = [_header("constants", cfg, system, pot)]
    out.extend(c.ledger())
    pair = c.stopping_pair()
    pair["holds"] = stopping_rule_holds(c.k, c.Zbar.upper(), c.Cbar.upper(), cfg.n)
    out.append({"stopping": pair})
    return out


def _check(name, ok, **detail):
    return {"check": name, "ok": bool(ok), "detail": {k: (_fmt(v) if isinstance(v, float) else v)
                                                      for k, v in detail.items()}}


def cmd_verify(cfg, system, pot):
    out = []
    b = ball_suite(100, cfg.seed)
    out.append(_check("ball-enclosure", b["failures"] == 0, **b))
    if isinstance(system, JuliaSystem):
        c = system.constants
        out.append(_check("expansion-constants", c.lam > 1 and c.V2 > 8 / c.V4,
                          lam=c.lam, V2=c.V2, V4=c.V4))
        out.append(_verify_expansion(system))
        out.append(_verify_lipschitz(system, pot))
    else:
        c = compute_constants(system, pot, cfg.n)
        out.append(_check("stopping-rule", stopping_rule_holds(c.k, c.Zbar.upper(), c.Cbar.upper(), cfg.n),
                          k=str(c.k), n=cfg.n))
        if c.aprime.upper() > 0:
            r = cone_suite(system, pot, cfg.n, samples=max(cfg.samples, 2), seed=cfg.seed,
                           threads=parallel._threads, constants=c)
            ok = (r["images_in_cone"] == r["samples"] and r["max_contraction"] <= r["tau"] + 1e-9
                  and r["max_diameter"] <= r["khat"])
            r["witness"] = repr(r["witness"])
            out.append(_check("cone-contraction", ok, **r))
    mode = cfg.mode if system.structural_constant(pot) is not None else EMPIRICAL
    ed = eigendata(system, pot, cfg.n, mode, True)
    j = jacobian_suite(ed, cfg.samples, cfg.seed, parallel._threads)
    # float Julia nets interpolate u by nearest point; their error floor is coarser
    j["tol"] = 1e-6 if system.space.exact else 1e-4
    out.append(_check("jacobian-identity", j["max_deviation"] <= j["tol"], **j))
    failed = sum(1 for r in out if not r["ok"])
    out.append({"summary": {"checks": len(out), "failed": failed}})
    return out


def _verify_expansion(system):
    c = system.constants
    f = system.f
    net = system.space.net(min(2 * c.eta, 0.05))
    pts = np.array(net.points)
    D = system.space.dist_matrix(net.points)
    i, j = np.nonzero((D > 0) & (D <= 2 * c.eta))
    worst = math.inf
    if len(i):
        fx = f.iterate_points(pts, system.power)
        ratio = spherical_distance(fx[i], fx[j]) / D[i, j]
        worst = float(ratio.min())
    return _check("expansion", worst >= c.lam * (1 - 1e-9), pairs=int(len(i)), min_ratio=worst,
                  lam=c.lam)


def _verify_lipschitz(system, pot):
    net = system.space.net(0.05)
    pts = np.array(net.points)
    D = system.space.dist_matrix(net.points)
    v = pot.values(pts)
    i, j = np.nonzero(D > 0)
    worst = float(np.max(np.abs(v[i] - v[j]) / D[i, j])) if len(i) else 0.0
    return _check("lipschitz-certificate", worst <= float(pot.a0), max_ratio=worst, a0=float(pot.a0))


HANDLERS = {
    "pressure": cmd_pressure,
    "eigenfunction": cmd_eigenfunction,
    "jacobian": cmd_jacobian,
    "measure": cmd_measure,
    "julia-net": cmd_julia_net,
    "constants": cmd_constants,
    "verify": cmd_verify,
}


# ------------------------------------------------------------------ main

def make_parser():
    p = argparse.ArgumentParser(prog="thermocert", description="Certified thermodynamic formalism.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--n", type=int, metavar="BITS")
    p.add_argument("--mode", choices=(CERTIFIED, EMPIRICAL))
    p.add_argument("--allow-fallback", action="store_true")
    p.add_argument("--threads", type=int, metavar="K")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("overrides", nargs="*", metavar="key=value")
    return p


def load_config(args):
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError("cannot read config: %s" % e) from None
        parse_config_text(text, cfg)
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError("override %r is not key=value" % item)
        k, v = item.split("=", 1)
        _set(cfg, k, v)
    if args.n is not None:
        cfg.n = args.n
    if args.mode is not None:
        cfg.mode = args.mode
    if args.allow_fallback:
        cfg.allow_fallback = True
    if args.threads is not None:
        cfg.threads = args.threads
    return cfg.validate()


def _emit(records, out):
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None):
    """Parse, run and return the exit status."""
    try:
        args = make_parser().parse_intermixed_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        cfg = load_config(args)
        if cfg.max_prec:
            os.environ["THERMOCERT_MAX_PREC"] = str(cfg.max_prec)
        parallel.set_threads(cfg.threads)
        system, pot = build(cfg)
        if args.command == "dimension":
            records = cmd_dimension(cfg, system, pot, args.out)
        else:
            records = HANDLERS[args.command](cfg, system, pot)
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2
    except CertificationInfeasible as e:
        print("certification infeasible: %s" % e, file=sys.stderr)
        return 3
    finally:
        parallel.set_threads(1)
    _emit(records, args.out)
    if args.command == "verify":
        return 1 if records[-1]["summary"]["failed"] else 0
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
