"""Permutation groups: Schreier-Sims, orbits, transitivity, transposition witnesses.

Permutations are integer numpy arrays ``p`` acting by ``i -> p[i]``; the
product ``mul(p, q)`` applies p first, then q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def identity(n: int) -> np.ndarray:
    return np.arange(n)


def mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """p then q."""
    return q[p]


def inverse(p: np.ndarray) -> np.ndarray:
    inv = np.empty_like(p)
    inv[p] = np.arange(len(p))
    return inv


def is_identity(p: np.ndarray) -> bool:
    return bool(np.all(p == np.arange(len(p))))


def power(p: np.ndarray, k: int) -> np.ndarray:
    out = identity(len(p))
    base = p.copy()
    while k:
        if k & 1:
            out = mul(out, base)
        base = mul(base, base)
        k >>= 1
    return out


def cycles(p: np.ndarray) -> list[list[int]]:
    seen = np.zeros(len(p), dtype=bool)
    out = []
    for i in range(len(p)):
        if seen[i]:
            continue
        c = [i]
        seen[i] = True
        j = int(p[i])
        while j != i:
            c.append(j)
            seen[j] = True
            j = int(p[j])
        out.append(c)
    return out


def cycle_type(p: np.ndarray) -> list[int]:
    return sorted((len(c) for c in cycles(p)), reverse=True)


def cycle_notation(p: np.ndarray, one_based: bool = True) -> str:
    off = 1 if one_based else 0
    cs = [c for c in cycles(p) if len(c) > 1]
    if not cs:
        return "()"
    return "".join("(" + " ".join(str(i + off) for i in c) + ")" for c in cs)


def order_of(p: np.ndarray) -> int:
    return math.lcm(*[len(c) for c in cycles(p)]) if len(p) else 1


def orbits(gens: list[np.ndarray], n: int) -> list[list[int]]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for g in gens:
        for i in range(n):
            a, b = find(i), find(int(g[i]))
            if a != b:
                parent[a] = b
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def is_transitive(gens: list[np.ndarray], n: int) -> bool:
    return n <= 1 or len(orbits(gens, n)) == 1


def is_two_transitive(gens: list[np.ndarray], n: int) -> bool:
    """Orbit of the ordered pair (0, 1) on ordered pairs is everything."""
    if n < 2:
        return False
    if n == 2:
        return is_transitive(gens, n)
    seen = np.zeros((n, n), dtype=bool)
    seen[0, 1] = True
    frontier = np.array([[0, 1]])
    while frontier.size:
        nxt = []
        for g in gens:
            img = g[frontier]
            new = img[~seen[img[:, 0], img[:, 1]]]
            if new.size:
                new = np.unique(new, axis=0)
                seen[new[:, 0], new[:, 1]] = True
                nxt.append(new)
        frontier = np.concatenate(nxt) if nxt else np.zeros((0, 2), dtype=int)
    return int(seen.sum()) == n * (n - 1)


def transposition_from(p: np.ndarray) -> np.ndarray | None:
    """A power of p that is a transposition, if one exists.

    p^k is a transposition iff p has exactly one 2-cycle, all other cycle
    lengths are odd, and k is the lcm of those odd lengths.
    """
    ct = [len(c) for c in cycles(p)]
    if ct.count(2) != 1 or any(l % 2 == 0 for l in ct if l != 2):
        return None
    k = math.lcm(*[l for l in ct if l != 2]) if len(ct) > 1 else 1
    return power(p, k)


# ---------------------------------------------------------------------------
# Schreier-Sims


@dataclass
class _Level:
    point: int
    gens: list = field(default_factory=list)
    # transversal: image point -> coset representative u with u[point] = image
    reps: dict = field(default_factory=dict)


class StabChain:
    """Base and strong generating set, built incrementally by sifting."""

    def __init__(self, n: int):
        self.n = n
        self.levels: list[_Level] = []

    def _orbit(self, lvl: _Level) -> None:
        lvl.reps = {lvl.point: identity(self.n)}
        frontier = [lvl.point]
        while frontier:
            nxt = []
            for b in frontier:
                u = lvl.reps[b]
                for g in lvl.gens:
                    c = int(g[b])
                    if c not in lvl.reps:
                        lvl.reps[c] = mul(u, g)
                        nxt.append(c)
            frontier = nxt

    def sift(self, g: np.ndarray) -> tuple[np.ndarray, int]:
        """Residue of g and the level where sifting stopped (len(levels) if all passed)."""
        for i, lvl in enumerate(self.levels):
            b = int(g[lvl.point])
            u = lvl.reps.get(b)
            if u is None:
                return g, i
            g = mul(g, inverse(u))
        return g, len(self.levels)

    def _moved_point(self, g: np.ndarray) -> int:
        return int(np.flatnonzero(g != np.arange(self.n))[0])

    def add(self, g: np.ndarray) -> bool:
        """Sift g; if it is not in the group, extend the chain. Returns True if it grew."""
        h, lvl = self.sift(g)
        if lvl == len(self.levels) and is_identity(h):
            return False
        if lvl == len(self.levels):
            self.levels.append(_Level(self._moved_point(h)))
        for j in range(lvl + 1):
            self.levels[j].gens.append(h)
        for j in range(lvl + 1):
            self._orbit(self.levels[j])
        return True

    def order(self) -> int:
        return math.prod(len(l.reps) for l in self.levels)

    def base(self) -> list[int]:
        return [l.point for l in self.levels]

    def contains(self, g: np.ndarray) -> bool:
        h, lvl = self.sift(g)
        return lvl == len(self.levels) and is_identity(h)


def schreier_sims(gens: list[np.ndarray], n: int) -> StabChain:
    """Deterministic Schreier-Sims: every Schreier generator sifts to the identity."""
    chain = StabChain(n)
    for g in gens:
        if not is_identity(g):
            chain.add(np.asarray(g))
    changed = True
    while changed:
        changed = False
        for i in range(len(chain.levels) - 1, -1, -1):
            lvl = chain.levels[i]
            for b, u in list(lvl.reps.items()):
                for s in list(lvl.gens):
                    ub = lvl.reps[int(s[b])]
                    schreier = mul(mul(u, s), inverse(ub))
                    if is_identity(schreier):
                        continue
                    h, stop = chain.sift(schreier)
                    if stop < len(chain.levels) or not is_identity(h):
                        chain.add(schreier)
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
    return chain


def random_schreier_sims(gens: list[np.ndarray], n: int, rng: np.random.Generator,
                         patience: int = 40, target: int | None = None) -> StabChain:
    """Random Schreier-Sims by product replacement.

    The product of basic orbit lengths is always a lower bound for the group
    order, so reaching ``target`` (e.g. n!) proves equality.  Otherwise stop
    after ``patience`` consecutive random elements sift through.
    """
    chain = StabChain(n)
    gens = [np.asarray(g) for g in gens if not is_identity(np.asarray(g))]
    if not gens:
        return chain
    for g in gens:
        chain.add(g)
    pool = [g.copy() for g in gens]
    while len(pool) < 10:
        pool.append(pool[len(pool) % len(gens)].copy())
    acc = identity(n)
    for _ in range(50):
        i, j = rng.choice(len(pool), 2, replace=False)
        pool[i] = mul(pool[i], pool[j])
        acc = mul(acc, pool[i])
    quiet = 0
    while quiet < patience:
        if target is not None and chain.order() == target:
            break
        i, j = rng.choice(len(pool), 2, replace=False)
        pool[i] = mul(pool[i], pool[j]) if rng.random() < 0.5 else mul(pool[j], pool[i])
        acc = mul(acc, pool[i])
        if chain.add(acc):
            quiet = 0
        else:
            quiet += 1
    return chain


@dataclass
class GroupSummary:
    n: int
    transitive: bool
    two_transitive: bool
    has_transposition: bool
    transposition_witness: list | None
    order: int | None
    order_is_exact: bool
    is_full_symmetric: bool
    certificate: str

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "transitive": self.transitive,
            "two_transitive": self.two_transitive,
            "has_transposition": self.has_transposition,
            "transposition_witness": self.transposition_witness,
            "group_order": str(self.order) if self.order is not None else None,
            "order_is_exact": self.order_is_exact,
            "is_full_symmetric": self.is_full_symmetric,
            "certificate": self.certificate,
        }


def find_transposition(gens: list[np.ndarray], rng: np.random.Generator, tries: int = 200):
    """Search generators and short random words for an element with a transposition power."""
    gens = [np.asarray(g) for g in gens if not is_identity(np.asarray(g))]
    if not gens:
        return None
    for g in gens:
        t = transposition_from(g)
        if t is not None:
            return t
    for _ in range(tries):
        w = identity(len(gens[0]))
        for _ in range(int(rng.integers(2, 5))):
            g = gens[int(rng.integers(len(gens)))]
            w = mul(w, g if rng.random() < 0.5 else inverse(g))
        t = transposition_from(w)
        if t is not None:
            return t
    return None


def analyse(gens: list[np.ndarray], n: int, rng: np.random.Generator,
            exact_below: int = 12, transposition: np.ndarray | None = None) -> GroupSummary:
    """Flags and, where possible, a proof that the group is S_n.

    ``transposition`` is a known element of the group (e.g. found for a subset of gens).
    """
    gens = [np.asarray(g) for g in gens]
    trans = is_transitive(gens, n) if gens else n <= 1
    two = is_two_transitive(gens, n) if gens and trans else False
    t = transposition if transposition is not None else (find_transposition(gens, rng) if gens else None)
    full = math.factorial(n)
    if not gens:
        return GroupSummary(n, n <= 1, False, False, None, 1, True, n <= 1, "trivial group")
    if n <= exact_below:
        chain = schreier_sims(gens, n)
        order, exact = chain.order(), True
    else:
        chain = random_schreier_sims(gens, n, rng, target=full)
        order = chain.order()
        exact = order == full
    cert = []
    if order == full:
        cert.append("Schreier-Sims lower bound reaches n!")
    if two and t is not None:
        cert.append("2-transitive (hence primitive) with a transposition: Jordan")
    return GroupSummary(n, trans, two, t is not None,
                        [int(i) for i in np.flatnonzero(t != np.arange(n))] if t is not None else None,
                        order, exact, bool(cert), "; ".join(cert) if cert else "not certified")
