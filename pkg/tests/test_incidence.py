from __future__ import annotations

import warnings

import numpy as np
import pytest

from slice_moduli import incidence as inc
from slice_moduli.forms import HypersurfaceSpec, LineParam, MalformedInput, restrict_to_line
from slice_moduli.moduli import same_moduli


def test_classical_counts():
    assert [inc.flex_count(d) for d in (3, 4, 5, 6)] == [9, 24, 45, 72]
    assert [inc.bitangent_count(d) for d in (4, 5, 6)] == [28, 120, 324]


def test_cubic_has_nine_flexes():
    X = HypersurfaceSpec.random(2, 3, np.random.default_rng(0))
    en = inc.flex_lines(X)
    assert en.complete and len(en) == 9
    assert all(r.mult == (3,) for r in en)


def test_quartic_flexes(quartic):
    en = inc.flex_lines(quartic)
    assert en.complete and len(en) == 24
    for r in en:
        f = restrict_to_line(quartic, r.line)
        assert r.mult == (3, 1)
        assert r.residual < 1e-8
        assert not f.in_x


def test_quartic_bitangents(quartic):
    en = inc.bitangent_lines(quartic)
    assert en.complete and len(en) == 28
    keys = {r.line.key() for r in en}
    assert len(keys) == 28


def test_fermat_quintic_flexes_have_full_contact():
    # every inflection of the Fermat quintic is a 5-fold contact point, each of weight 3
    en = inc.flex_lines(HypersurfaceSpec.fermat(5))
    assert en.complete and en.found == 45
    assert len(en) == 15
    assert {r.mult for r in en} == {(5,)}


def test_flex_type_lines_filters():
    en = inc.flex_type_lines(HypersurfaceSpec.fermat(5), a=5)
    assert len(en) == 15
    with pytest.raises(MalformedInput):
        inc.flex_type_lines(HypersurfaceSpec.fermat(5), a=2)


def test_degree_formula_on_synthetic_counts():
    counts = {(3, 1, 1): 45, (2, 2, 1): 120}
    assert inc.degree_formula(counts, 5) == 420
    assert inc.degree_formula({(3, 1, 1): 1}, 5) == 4
    assert inc.degree_formula({(2, 2, 1): 1}, 5) == 2
    assert inc.degree_formula({(4, 2, 1): 3, (3, 3, 1): 1, (5, 1, 1): 2}, 7) == 2 * 4 + 4 * 2


def test_census_requires_quintic(quartic):
    with pytest.raises(MalformedInput):
        inc.census(quartic)
    cen = inc.TriIncidentCensus(5, {(3, 1, 1): 44, (2, 2, 1): 120}, {}, False, ["short"])
    with pytest.raises(inc.IncompleteCensus):
        inc.degree_mu1(cen)


def test_same_line_collides_with_itself():
    X = HypersurfaceSpec.random(2, 6, np.random.default_rng(7))
    rng = np.random.default_rng(2)
    ln = LineParam.random(2, rng)
    other = LineParam(np.array([[1, 0.3], [0.2j, 1]]) @ ln.basis)
    rep = inc.injectivity_sample(X, pairs=[(ln, other), (ln, LineParam.random(2, rng))])
    assert len(rep.collisions) == 1 and rep.collisions[0].index == 0
    with pytest.raises(MalformedInput):
        inc.injectivity_sample(HypersurfaceSpec.fermat(5), trials=1)


def test_fermat_sextic_swap_collides():
    X = HypersurfaceSpec.fermat(6)
    ln = LineParam.random(2, np.random.default_rng(5))
    swapped = LineParam(ln.basis[:, [1, 0, 2]])
    rep = inc.injectivity_sample(X, pairs=[(ln, swapped)])
    assert len(rep.collisions) == 1


def test_fermat_witness():
    w = inc.fermat_collision_witness(5, seed=3)
    assert w.line_a.distance(w.line_b) > 1e-6
    assert w.fingerprint_a.matches(w.fingerprint_b)
    X = HypersurfaceSpec.fermat(5)
    assert same_moduli(inc.slice_config(X, w.line_a), inc.slice_config(X, w.line_b))
    assert w.to_json()["fingerprints_equal"]
    with pytest.raises(MalformedInput):
        inc.fermat_collision_witness(5, automorphism=2 * np.eye(3))


def test_singular_or_wrong_input():
    with pytest.raises(MalformedInput):
        inc.flex_lines(HypersurfaceSpec.random(3, 3, np.random.default_rng(0)))
    with pytest.raises(MalformedInput):
        inc.bitangent_lines(HypersurfaceSpec.random(2, 3, np.random.default_rng(0)))
    with pytest.raises(MalformedInput):
        inc.type_lines(HypersurfaceSpec.random(2, 5, np.random.default_rng(0)), (2, 1, 1, 1))
