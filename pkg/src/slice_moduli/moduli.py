"""Canonical invariants of unordered points on P^1 modulo PGL2.

The canonical fingerprint normalises every ordered triple of support points
to (0, 1, inf), reads off the remaining points, and keeps the
lexicographically smallest outcome.  Because every triple is tried, two
configurations share a fingerprint exactly when some Moebius map carries one
onto the other (up to the quantisation tolerance).
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass

import numpy as np

from .forms import DEFAULT_TOL, INF, RootDivisor, chordal, from_homogeneous, homogeneous


class UnstableConfiguration(ValueError):
    """Fewer than three distinct support points: no PGL2 normal form."""


@dataclass(frozen=True)
class PointConfig:
    """Points of P^1 (complex numbers or INF) with multiplicities."""

    points: tuple  # ((point, multiplicity), ...)

    def __post_init__(self):
        if any(int(m) < 1 for _, m in self.points):
            raise ValueError("multiplicities must be positive")

    @classmethod
    def from_points(cls, pts, mults=None) -> "PointConfig":
        mults = [1] * len(pts) if mults is None else list(mults)
        return cls(tuple((p if p is INF else complex(p), int(m)) for p, m in zip(pts, mults)))

    @classmethod
    def from_divisor(cls, rd: RootDivisor) -> "PointConfig":
        return cls(tuple(rd.points))

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.points)

    @property
    def support(self) -> list:
        return [p for p, _ in self.points]

    @property
    def mults(self) -> list[int]:
        return [m for _, m in self.points]

    def reduced(self) -> "PointConfig":
        """Set-theoretic configuration (all multiplicities 1)."""
        return PointConfig(tuple((p, 1) for p, _ in self.points))

    def homogeneous(self) -> np.ndarray:
        return np.array([homogeneous(p) for p in self.support])

    def transform(self, g: np.ndarray) -> "PointConfig":
        """Image under the Moebius map with matrix g acting on (s, t)."""
        H = self.homogeneous() @ np.asarray(g, dtype=complex).T
        return PointConfig(tuple((from_homogeneous(v), m) for v, m in zip(H, self.mults)))

    def permuted(self, perm) -> "PointConfig":
        return PointConfig(tuple(self.points[i] for i in perm))


def _checked(c: PointConfig) -> None:
    k = len(c.points)
    if k < 3:
        raise UnstableConfiguration(f"{k} distinct support points; need at least 3")


def _triple_matrix(Hp, Hq, Hr) -> np.ndarray:
    """Matrix of the Moebius map sending p, q, r to 0, 1, inf."""
    br = lambda a, b: a[0] * b[1] - a[1] * b[0]
    qr, qp = br(Hq, Hr), br(Hq, Hp)
    # x -> [x,p][q,r] / ([x,r][q,p])
    return np.array([[qr * Hp[1], -qr * Hp[0]], [qp * Hr[1], -qp * Hr[0]]])


def _all_triple_images(H: np.ndarray):
    """For each ordered triple (i, j, k): affine images of all points, shape (T, n)."""
    n = H.shape[0]
    triples = np.array(list(itertools.permutations(range(n), 3)), dtype=int)
    p, q, r = (H[triples[:, i]] for i in range(3))
    br = lambda a, b: a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    qr, qp = br(q, r), br(q, p)
    num = br(H[None, :, :], p[:, None, :]) * qr[:, None]
    den = br(H[None, :, :], r[:, None, :]) * qp[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = num / den
    return triples, vals


@dataclass(frozen=True)
class ModuliFingerprint:
    """Canonical PGL2 x S_d invariant of a PointConfig.

    ``canonical`` lists (value, multiplicity) of the points left after the
    minimising triple is sent to (0, 1, inf); ``triple_mults`` records the
    multiplicities carried by that triple.  ``jset`` is the sorted multiset
    of j-invariants of 4-subsets of the support.
    """

    triple_mults: tuple[int, int, int]
    canonical: tuple  # ((complex, int), ...)
    jset: tuple  # (complex, ...)
    tol: float

    def matches(self, other: "ModuliFingerprint", tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        if self.triple_mults != other.triple_mults or len(self.canonical) != len(other.canonical):
            return False
        for (a, ma), (b, mb) in zip(self.canonical, other.canonical):
            if ma != mb or abs(a - b) > tol * max(1.0, abs(a)):
                return False
        return True

    def quantized(self) -> list:
        q = lambda z: (int(np.round(z.real / self.tol)), int(np.round(z.imag / self.tol)))
        return [list(self.triple_mults)] + [[*q(v), m] for v, m in self.canonical]

    def hexhash(self) -> str:
        """Stable short hash of the quantised canonical list."""
        return hashlib.sha256(repr(self.quantized()).encode()).hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "triple_mults": list(self.triple_mults),
            "canonical": [[v.real, v.imag, m] for v, m in self.canonical],
            "jset": [[j.real, j.imag] for j in self.jset],
            "hash": self.hexhash(),
        }


def j_invariant(lam: complex) -> complex:
    """256 (l^2 - l + 1)^3 / (l^2 (l - 1)^2)."""
    return 256 * (lam * lam - lam + 1) ** 3 / (lam * lam * (lam - 1) ** 2)


def jset(c: PointConfig, tol: float = DEFAULT_TOL) -> tuple:
    H = c.homogeneous()
    out = []
    for quad in itertools.combinations(range(len(H)), 4):
        M = _triple_matrix(*H[list(quad[:3])])
        lam = from_homogeneous(M @ H[quad[3]])
        out.append(j_invariant(lam))
    return tuple(sorted(out, key=lambda z: _rel_key(z, tol)))


def _rel_key(z: complex, tol: float) -> tuple:
    # relative quantisation: j-values range over many orders of magnitude
    s = max(1.0, abs(z))
    return (int(np.round(z.real / (tol * s))), int(np.round(z.imag / (tol * s))))


def canonical_fingerprint(c: PointConfig, tol: float = DEFAULT_TOL) -> ModuliFingerprint:
    _checked(c)
    H = c.homogeneous()
    mults = np.array(c.mults)
    triples, vals = _all_triple_images(H)
    best = None
    for t, row in zip(triples, vals):
        rest = [i for i in range(len(H)) if i not in t]
        entries = sorted(
            ((int(np.round(row[i].real / tol)), int(np.round(row[i].imag / tol)), int(mults[i]), row[i])
             for i in rest),
            key=lambda e: e[:3],
        )
        key = (tuple(int(m) for m in mults[t]), tuple(e[:3] for e in entries))
        if best is None or key < best[0]:
            best = (key, entries)
    (tm, _), entries = best
    return ModuliFingerprint(tm, tuple((complex(e[3]), e[2]) for e in entries), jset(c, tol), tol)


def _match_multisets(a: PointConfig, b: PointConfig, tol: float) -> bool:
    """Greedy matching of supports with equal multiplicities, chordal distance < tol."""
    used = [False] * len(b.points)
    for p, m in a.points:
        hit = None
        for j, (q, mq) in enumerate(b.points):
            if not used[j] and mq == m and chordal(p, q) < tol:
                hit = j
                break
        if hit is None:
            return False
        used[hit] = True
    return True


def same_moduli(a: PointConfig, b: PointConfig, tol: float = DEFAULT_TOL, witness: bool = False):
    """Exact orbit test: is there g in PGL2 with g.a = b (multiplicities transported)?

    With ``witness=True`` returns (bool, g) where g is a 2x2 matrix or None.
    """
    _checked(a)
    _checked(b)
    result = (False, None)
    if len(a.points) == len(b.points) and sorted(a.mults) == sorted(b.mults):
        Ha, Hb = a.homogeneous(), b.homogeneous()
        Ma = _triple_matrix(Ha[0], Ha[1], Ha[2])
        ma = a.mults[:3]
        for t in itertools.permutations(range(len(Hb)), 3):
            if [b.mults[i] for i in t] != ma:
                continue
            Mb = _triple_matrix(*Hb[list(t)])
            g = np.linalg.solve(Mb, Ma)
            g = g / np.sqrt(np.linalg.det(g))
            if _match_multisets(a.transform(g), b, tol):
                result = (True, g)
                break
    return result if witness else result[0]


def random_pgl2(rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    return g / np.sqrt(np.linalg.det(g))
