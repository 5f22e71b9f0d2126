from __future__ import annotations

import numpy as np
import pytest

from slice_moduli.forms import HypersurfaceSpec, LineParam, MalformedInput, multiplicity_vector
from slice_moduli import tracking as trk


def _crand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_bdivmod_matches_polydiv():
    rng = np.random.default_rng(0)
    for n, k in [(6, 2), (5, 3), (4, 4), (7, 1)]:
        p = _crand(rng, 3, n + 1)
        D = np.concatenate([_crand(rng, 3, k), np.ones((3, 1))], axis=1)
        quo, rem = trk.bdivmod(p, D)
        for b in range(3):
            q_ref, r_ref = np.polydiv(p[b, ::-1], D[b, ::-1])
            r_ref = np.concatenate([np.zeros(k - len(r_ref)), r_ref])
            assert np.allclose(quo[b, ::-1], q_ref)
            assert np.allclose(rem[b, ::-1], r_ref)
        assert np.allclose(trk.bconv(quo, D)[..., : rem.shape[-1]] + rem, p[..., : rem.shape[-1]])


def test_bconv_is_polymul():
    rng = np.random.default_rng(1)
    a, b = _crand(rng, 2, 3), _crand(rng, 2, 4)
    out = trk.bconv(a, b)
    for i in range(2):
        assert np.allclose(out[i, ::-1], np.polymul(a[i, ::-1], b[i, ::-1]))


@pytest.mark.parametrize("d,mult", [(4, (3, 1)), (4, (2, 2)), (5, (3, 1, 1)), (5, (2, 2, 1))])
def test_seed_solution_is_a_line_of_the_type(d, mult):
    rng = np.random.default_rng(2)
    system = trk.LineTypeSystem(d, mult)
    assert system.square
    p, y, ch = trk.seed_solution(system, rng)
    assert trk.relative_residual(system, y, p, ch)[0] < 1e-10
    assert multiplicity_vector(system.divisor(y, p, ch)) == mult


def test_jacobian_matches_finite_difference():
    rng = np.random.default_rng(3)
    system = trk.LineTypeSystem(5, (2, 2, 1))
    p, y, ch = trk.seed_solution(system, rng)
    y = y + 0.05 * _crand(rng, *y.shape)
    J = system.jacobian(y, p, ch)[0]
    h = 1e-6
    for _ in range(3):
        v = _crand(rng, y.shape[1])
        fd = (system.residual(y + h * v, p, ch) - system.residual(y - h * v, p, ch))[0] / (2 * h)
        assert np.allclose(J @ v, fd, rtol=1e-5, atol=1e-7)


def test_dparam_matches_finite_difference():
    rng = np.random.default_rng(4)
    system = trk.LineTypeSystem(4, (3, 1))
    p, y, ch = trk.seed_solution(system, rng)
    dp = _crand(rng, p.size)
    h = 1e-6
    fd = (system.residual(y, p + h * dp, ch) - system.residual(y, p - h * dp, ch)) / (2 * h)
    assert np.allclose(system.dparam(y, dp, ch), fd, rtol=1e-5, atol=1e-8)


def test_segment_there_and_back():
    rng = np.random.default_rng(5)
    system = trk.LineTypeSystem(4, (3, 1))
    p, y, ch = trk.seed_solution(system, rng)
    q = p + trk.random_direction(p, rng, 0.5)
    y1, c1 = trk.track_segment(system, y, ch, p, q)
    assert trk.relative_residual(system, y1, q, c1)[0] < 1e-10
    y2, c2 = trk.track_polygon(system, y1, c1, [q, p])
    a, b = system.lines(y, ch)[0], system.lines(y2, c2)[0]
    assert a.distance(b) < 1e-8


def test_constant_segment_is_identity():
    rng = np.random.default_rng(6)
    system = trk.LineTypeSystem(4, (2, 2))
    p, y, ch = trk.seed_solution(system, rng)
    y1, c1 = trk.track_segment(system, y, ch, p, p)
    assert system.lines(y, ch)[0].distance(system.lines(y1, c1)[0]) < 1e-10


def test_overdetermined_type_is_refused():
    system = trk.LineTypeSystem(4, (2, 1, 1))
    assert not system.square
    p = np.ones(len(system.basis), dtype=complex)
    with pytest.raises(MalformedInput):
        trk.track_segment(system, np.zeros((1, system.n)), None, p, p)
    with pytest.raises(MalformedInput):
        trk.LineTypeSystem(4, (1, 1, 1, 1))
    with pytest.raises(MalformedInput):
        trk.LineTypeSystem(4, (3, 2))


def test_encode_roundtrip():
    rng = np.random.default_rng(7)
    system = trk.LineTypeSystem(4, (3, 1))
    p, y, ch = trk.seed_solution(system, rng)
    X = HypersurfaceSpec(2, 4, dict(zip(system.basis, p)))
    line = system.lines(y, ch)[0]
    y2, c2 = system.encode(line, X, tol=1e-6)
    y2, res = trk.newton(system, y2, p, c2)
    assert res[0] < 1e-10
    assert system.lines(y2, c2)[0].distance(line) < 1e-8


def test_match_lines():
    rng = np.random.default_rng(8)
    lines = [LineParam.random(2, rng) for _ in range(6)]
    perm = [3, 0, 5, 1, 4, 2]
    moved = [LineParam(_crand(rng, 2, 2) @ lines[j].basis) for j in perm]
    assert trk.match_lines(lines, moved) == perm
    with pytest.raises(trk.TrackingFailure):
        trk.match_lines(lines, [lines[0]] * 6)
    with pytest.raises(trk.TrackingFailure) as err:
        trk.match_lines(lines, moved[:5] + [LineParam.random(2, rng)])
    assert err.value.indices == [5]
