from __future__ import annotations

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from slice_moduli.forms import INF, chordal
from slice_moduli.moduli import (
    PointConfig, UnstableConfiguration, canonical_fingerprint, j_invariant, jset, random_pgl2, same_moduli,
)


def _random_config(rng, n, mults=None):
    pts = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PointConfig.from_points(list(pts), mults)


def test_j_invariant_matches_sympy_cross_ratio():
    a, b, c, d = [sp.Rational(1), sp.Rational(3, 2) + sp.I, sp.Rational(-2), sp.Rational(1, 3) * sp.I]
    lam = sp.simplify((a - c) * (b - d) / ((a - d) * (b - c)))
    j_exact = complex(sp.N(256 * (lam ** 2 - lam + 1) ** 3 / (lam ** 2 * (lam - 1) ** 2), 30))
    cfg = PointConfig.from_points([complex(x) for x in (a, b, c, d)])
    (j_num,) = jset(cfg)
    assert abs(j_num - j_exact) < 1e-9 * abs(j_exact)


def test_harmonic_quadruple():
    cfg = PointConfig.from_points([0, 1, INF, -1])
    (j,) = jset(cfg)
    assert abs(j - 1728) < 1e-9
    assert abs(j_invariant(-1) - 1728) < 1e-12


def test_lambda_and_inverse_lambda_agree():
    lam = 0.3 + 0.7j
    a = PointConfig.from_points([0, 1, INF, lam])
    b = PointConfig.from_points([0, 1, INF, 1 / lam])
    assert canonical_fingerprint(a).matches(canonical_fingerprint(b))
    assert same_moduli(a, b)


def test_distinct_moduli_are_separated():
    a = PointConfig.from_points([0, 1, INF, 2])
    b = PointConfig.from_points([0, 1, INF, 3])
    assert not same_moduli(a, b)
    assert not canonical_fingerprint(a).matches(canonical_fingerprint(b))


def test_too_few_points():
    with pytest.raises(UnstableConfiguration):
        canonical_fingerprint(PointConfig.from_points([0, 1], [3, 2]))


def test_multiplicities_are_part_of_the_moduli():
    a = PointConfig.from_points([0, 1, INF, 2], [2, 1, 1, 1])
    # double transpositions of four points are Moebius maps, so moving the
    # double point to any other support point keeps the moduli
    b = PointConfig.from_points([0, 1, INF, 2], [1, 2, 1, 1])
    assert same_moduli(a, b)
    assert canonical_fingerprint(a).matches(canonical_fingerprint(b))
    c = PointConfig.from_points([0, 1, INF, 2], [2, 2, 1, 1])
    assert not same_moduli(a, c)
    assert not canonical_fingerprint(a).matches(canonical_fingerprint(c))
    assert not same_moduli(a, a.reduced())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(4, 7))
def test_fingerprint_invariant_under_pgl2_and_relabelling(seed, n):
    rng = np.random.default_rng(seed)
    mults = list(rng.integers(1, 3, size=n))
    a = _random_config(rng, n, mults)
    g = random_pgl2(rng)
    b = a.transform(g).permuted(list(rng.permutation(n)))
    fa, fb = canonical_fingerprint(a), canonical_fingerprint(b)
    assert fa.matches(fb, tol=1e-6)
    ok, w = same_moduli(a, b, tol=1e-6, witness=True)
    assert ok
    moved = a.transform(w)
    for p, m in moved.points:
        assert any(chordal(p, q) < 1e-6 and m == mq for q, mq in b.points)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_generic_configurations_differ(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_config(rng, 5), _random_config(rng, 5)
    assert not same_moduli(a, b)
    assert not canonical_fingerprint(a).matches(canonical_fingerprint(b))


def test_hash_is_stable_under_transform():
    rng = np.random.default_rng(9)
    a = _random_config(rng, 6)
    fa = canonical_fingerprint(a, tol=1e-6)
    fb = canonical_fingerprint(a.transform(random_pgl2(rng)), tol=1e-6)
    # hashes agree unless a coordinate straddles a quantisation boundary
    assert fa.matches(fb)
    assert len(fa.hexhash()) == 16
    assert fa.to_json()["hash"] == fa.hexhash()
