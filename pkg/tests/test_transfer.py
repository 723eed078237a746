import math
import os
import sys
from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from thermocert import (CERTIFIED, EMPIRICAL, CertificationInfeasible, ConstantPotential,
                        CosinePotential, DoublingMap, FirstSymbolPotential, SubshiftOfFiniteType,
                        compute_constants, eigendata, full_shift, pressure)
from thermocert.invariants import jacobian_suite, stopping_rule_holds
from thermocert.transfer import interval_power, inverse_jacobian_sum, normalized_weights

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from oracles import independent_stopping_rule, power_iteration_log_radius  # noqa: E402

slow = settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
betas = st.fractions(min_value=-2, max_value=2, max_denominator=8)


@given(betas)
@slow
def test_bernoulli_empirical_closed_form(beta):
    est = pressure(full_shift(2), FirstSymbolPotential(beta), mode=EMPIRICAL)
    assert float(est.value.mid) == pytest.approx(math.log1p(math.exp(float(beta))), abs=1e-10)


@given(betas, st.integers(2, 4))
@slow
def test_bernoulli_certified_encloses(beta, k):
    exact = math.log(k - 1 + math.exp(float(beta)))
    est = pressure(full_shift(k), FirstSymbolPotential(beta), n=8, mode=CERTIFIED)
    assert est.value.lower() <= Fraction(exact) <= est.value.upper()
    assert est.radius <= Fraction(1, 2 ** 8)


@pytest.mark.parametrize("d", [2, 3, 5])
@pytest.mark.parametrize("c", [Fraction(0), Fraction(-1, 3), Fraction(2)])
def test_circle_constant_potential(d, c):
    est = pressure(DoublingMap(d), ConstantPotential(c), n=10, mode=CERTIFIED)
    exact = math.log(d) + float(c)
    assert est.value.lower() <= Fraction(exact) <= est.value.upper()
    assert est.radius <= Fraction(1, 2 ** 10)


def primitive(A):
    A = np.array(A)
    k = len(A)
    return np.all(np.linalg.matrix_power(A, k * k) > 0)


matrices = st.integers(2, 3).flatmap(
    lambda k: st.lists(st.lists(st.integers(0, 1), min_size=k, max_size=k), min_size=k, max_size=k))


@given(matrices)
@slow
def test_sft_entropy_against_power_iteration(A):
    assume(primitive(A))
    oracle = power_iteration_log_radius(A)
    est = pressure(SubshiftOfFiniteType(A), ConstantPotential(0), mode=EMPIRICAL)
    assert float(est.value.mid) == pytest.approx(oracle, abs=1e-9)
    cert = pressure(SubshiftOfFiniteType(A), ConstantPotential(0), n=8, mode=CERTIFIED)
    assert cert.value.lower() <= Fraction(oracle) <= cert.value.upper()


@given(st.integers(1, 6).flatmap(lambda n: st.lists(st.lists(st.integers(0, 3), min_size=n, max_size=n),
                                                    min_size=n, max_size=n)),
       st.integers(1, 300))
@settings(max_examples=60, deadline=None)
def test_interval_power_encloses_integer_powers(A, steps):
    A = np.array(A, dtype=np.int64)
    assume(np.all(A.sum(axis=1) > 0))
    M = sp.csr_matrix(A.astype(float))
    lo, hi = interval_power(M, M, steps)
    v = [1] * len(A)
    rows = [[int(x) for x in r] for r in A]
    for _ in range(steps):
        v = [sum(r[j] * v[j] for j in range(len(v))) for r in rows]
    assert lo <= v[0] <= hi
    assert hi - lo <= Fraction(v[0]) * Fraction(1, 10 ** 8)


@given(st.integers(1, 6))
def test_sparse_and_dense_power_agree(seed):
    import thermocert.transfer as T
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.1, 2.0, (20, 20)) * (rng.uniform(size=(20, 20)) < 0.3)
    A[np.arange(20), rng.integers(0, 20, 20)] += 0.5
    M = sp.csr_matrix(A)
    dense = interval_power(M, M, 57)
    old, T._DENSE_MAX = T._DENSE_MAX, 0
    try:
        sparse = interval_power(M, M, 57)
    finally:
        T._DENSE_MAX = old
    assert max(dense[0], sparse[0]) <= min(dense[1], sparse[1])


SYSTEMS = [
    (DoublingMap(2), ConstantPotential(0)),
    (DoublingMap(3), CosinePotential(Fraction(1, 5))),
    (full_shift(2), FirstSymbolPotential(Fraction(1))),
    (full_shift(3), FirstSymbolPotential(Fraction(-1, 2))),
    (SubshiftOfFiniteType([[1, 1], [1, 0]]), ConstantPotential(0)),
    (SubshiftOfFiniteType([[1, 1], [1, 0]]), FirstSymbolPotential(Fraction(1, 2))),
]


@pytest.mark.parametrize("system,pot", SYSTEMS)
@pytest.mark.parametrize("n", [4, 10, 16])
def test_stopping_rule_matches_independent_checker(system, pot, n):
    c = compute_constants(system, pot, n)
    Z, C = c.Zbar.upper(), c.Cbar.upper()
    assert stopping_rule_holds(c.k, Z, C, n)
    assert independent_stopping_rule(c.k, Z, C, n)
    # far too few steps: both reject
    assert not stopping_rule_holds(c.k // 1000 + 2, Z, C, n)
    assert not independent_stopping_rule(c.k // 1000 + 2, Z, C, n)


@pytest.mark.parametrize("system,pot", SYSTEMS)
def test_constants_are_consistent(system, pot):
    c = compute_constants(system, pot, 10)
    assert c.Cbar.lower() >= 1
    assert 0 < c.lam1.lower() and c.lam1.upper() < 1
    assert c.Zbar.lower() > 0
    # N1 = floor(2^(n+1) log Cbar) + 1, up to the rounding of the log bound
    t = 2 ** 11 * math.log(float(c.Cbar.upper()))
    assert t < c.N1 <= t + 1 + 1e-9
    records = c.ledger()
    assert {r["name"] for r in records} >= {"Cbar", "Zbar", "k", "N1", "m", "N"}
    assert all("formula" in r for r in records)


@pytest.mark.parametrize("system,pot", SYSTEMS)
def test_jacobian_identity(system, pot):
    ed = eigendata(system, pot, 10, EMPIRICAL)
    assert jacobian_suite(ed, samples=30, seed=1)["max_deviation"] <= 1e-6


@pytest.mark.parametrize("system,pot", SYSTEMS)
def test_normalized_operator_fixes_constants(system, pot):
    ed = eigendata(system, pot, 10, EMPIRICAL)
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = system.sample(rng)
        total = sum(float(w.mid) for _, w in normalized_weights(ed, x, depth=2))
        assert total == pytest.approx(1, abs=1e-6)


def test_eigendata_shapes():
    ed = eigendata(DoublingMap(2), CosinePotential(Fraction(1, 10)), 10, EMPIRICAL)
    assert np.all(ed.u > 0)
    assert ed.m.sum() == pytest.approx(1)
    assert float(ed.m @ ed.u) == pytest.approx(1)
    assert ed.heuristic


def test_certified_eigenfunction_needs_structure():
    S, p = DoublingMap(2), CosinePotential(Fraction(1, 10))
    with pytest.raises(CertificationInfeasible):
        eigendata(S, p, 10, CERTIFIED)
    ed = eigendata(S, p, 10, CERTIFIED, allow_fallback=True)
    assert ed.mode == EMPIRICAL and ed.heuristic
    ed = eigendata(full_shift(2), FirstSymbolPotential(1), 10, CERTIFIED)
    assert ed.mode == CERTIFIED and ed.structural and not ed.heuristic
    x = full_shift(2).sample(np.random.default_rng(0))
    assert inverse_jacobian_sum(x, ed).contains(1)


def test_iteration_cap_is_infeasible():
    with pytest.raises(CertificationInfeasible):
        pressure(DoublingMap(2), CosinePotential(Fraction(1, 10)), n=10, mode=CERTIFIED, max_iter=100)
