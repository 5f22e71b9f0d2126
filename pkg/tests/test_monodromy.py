from __future__ import annotations

import itertools

import numpy as np
import pytest

from slice_moduli import permgroups as pg
from slice_moduli.forms import HypersurfaceSpec, MalformedInput
from slice_moduli.monodromy import Fiber, LoopSpec, monodromy_group, track_loop


@pytest.fixture(scope="module")
def loops(quartic):
    rng = np.random.default_rng(21)
    return [LoopSpec.triangle(quartic, rng) for _ in range(5)]


@pytest.fixture(scope="module")
def perms(quartic_flex_fiber, loops):
    return [track_loop(quartic_flex_fiber, lp) for lp in loops]


def test_fiber(quartic_flex_fiber):
    assert quartic_flex_fiber.n == 24
    assert quartic_flex_fiber.mult == (3, 1)


def test_constant_loop_is_identity(quartic, quartic_flex_fiber):
    p = quartic.coefficient_vector()
    assert pg.is_identity(track_loop(quartic_flex_fiber, LoopSpec(quartic, [p, p])))


def test_out_and_back_is_identity(quartic, quartic_flex_fiber):
    rng = np.random.default_rng(3)
    p = quartic.coefficient_vector()
    q = p + 0.8 * np.linalg.norm(p) * rng.standard_normal(p.shape) / np.sqrt(p.size)
    assert pg.is_identity(track_loop(quartic_flex_fiber, LoopSpec(quartic, [p, q, p])))


def test_reversal_gives_inverse(quartic_flex_fiber, loops, perms):
    for lp, g in list(zip(loops, perms))[:3]:
        back = track_loop(quartic_flex_fiber, lp.reversed())
        assert pg.is_identity(pg.mul(g, back))


def test_concatenation_gives_composition(quartic_flex_fiber, loops, perms):
    pairs = list(itertools.permutations(range(5), 2))[:10]
    assert len(pairs) == 10
    for i, j in pairs:
        got = track_loop(quartic_flex_fiber, loops[i].then(loops[j]))
        assert np.array_equal(got, pg.mul(perms[i], perms[j]))


def test_random_loops_act_nontrivially(perms):
    assert any(not pg.is_identity(g) for g in perms)


def test_zero_budget_gives_trivial_group(quartic, quartic_flex_fiber):
    rep = monodromy_group(quartic, (3, 1), budget=0, fiber=quartic_flex_fiber)
    assert rep.loops_attempted == 0
    assert not rep.transitive and not rep.is_full_symmetric
    assert rep.to_json()["group_order"] == "1"


def test_loop_validation(quartic):
    p = quartic.coefficient_vector()
    with pytest.raises(MalformedInput):
        LoopSpec(quartic, [p])
    with pytest.raises(MalformedInput):
        LoopSpec(quartic, [p, 2 * p])
    with pytest.raises(MalformedInput):
        Fiber(quartic, [])
