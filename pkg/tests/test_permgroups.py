from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.combinatorics import Permutation, PermutationGroup

from slice_moduli import permgroups as pg


def _sympy_group(gens):
    return PermutationGroup([Permutation(list(map(int, g))) for g in gens])


perms = st.integers(4, 9).flatmap(
    lambda n: st.lists(st.permutations(list(range(n))), min_size=1, max_size=3))


@settings(max_examples=60, deadline=None)
@given(perms)
def test_schreier_sims_agrees_with_sympy(gens):
    gens = [np.array(g) for g in gens]
    n = len(gens[0])
    G = _sympy_group(gens)
    chain = pg.schreier_sims(gens, n)
    assert chain.order() == G.order()
    assert pg.is_transitive(gens, n) == G.is_transitive()
    assert len(pg.orbits(gens, n)) == len(G.orbits())
    if G.is_transitive():
        assert pg.is_two_transitive(gens, n) == (G.transitivity_degree >= 2)


@settings(max_examples=40, deadline=None)
@given(perms, st.integers(0, 2 ** 31))
def test_membership(gens, seed):
    gens = [np.array(g) for g in gens]
    n = len(gens[0])
    G = _sympy_group(gens)
    chain = pg.schreier_sims(gens, n)
    x = np.random.default_rng(seed).permutation(n)
    assert chain.contains(x) == G.contains(Permutation(list(map(int, x))))
    w = pg.mul(gens[0], pg.inverse(gens[-1]))
    assert chain.contains(w)


def test_random_schreier_sims_lower_bound():
    rng = np.random.default_rng(0)
    n = 30
    gens = [np.roll(np.arange(n), 1), np.array([1, 0] + list(range(2, n)))]
    chain = pg.random_schreier_sims(gens, n, rng, target=math.factorial(n))
    assert chain.order() == math.factorial(n)
    # alternating-type subgroup never reaches n!
    cyc3 = np.array([1, 2, 0] + list(range(3, n)))
    odd = np.roll(np.arange(n - 1), 1).tolist() + [n - 1]  # (n-1)-cycle, n-1 odd -> even perm
    chain = pg.random_schreier_sims([np.array(odd), cyc3], n, rng, target=math.factorial(n))
    assert chain.order() <= math.factorial(n) // 2


def test_mul_convention_and_cycles():
    p = np.array([1, 2, 0, 3])
    q = np.array([0, 1, 3, 2])
    r = pg.mul(p, q)
    for i in range(4):
        assert r[i] == q[p[i]]
    assert pg.cycle_notation(p) == "(1 2 3)"
    assert sorted(pg.cycle_type(r)) == [4]
    assert pg.order_of(r) == 4
    assert pg.is_identity(pg.power(r, 4))
    assert pg.is_identity(pg.mul(r, pg.inverse(r)))


def test_transposition_from():
    p = np.array([1, 0, 3, 4, 2])  # (0 1)(2 3 4)
    t = pg.transposition_from(p)
    assert t is not None and pg.cycle_type(t).count(2) == 1
    assert sorted(np.flatnonzero(t != np.arange(5))) == [0, 1]
    assert pg.transposition_from(np.array([1, 0, 3, 2])) is None
    assert pg.transposition_from(np.array([1, 2, 3, 0])) is None


def test_analyse_certifies_symmetric_group():
    rng = np.random.default_rng(1)
    n = 24
    gens = [np.roll(np.arange(n), 1), np.array([1, 0] + list(range(2, n)))]
    s = pg.analyse(gens, n, rng)
    assert s.transitive and s.two_transitive and s.has_transposition
    assert s.is_full_symmetric and s.order == math.factorial(n)
    s = pg.analyse([np.roll(np.arange(n), 1)], n, rng)
    assert s.transitive and not s.two_transitive and not s.is_full_symmetric
    assert s.order == n
    s = pg.analyse([], 5, rng)
    assert s.order == 1 and not s.transitive
