"""Stable reduction of degenerating point configurations on P^1, and tree counts."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .forms import MalformedInput

LADDER = tuple(10.0 ** (-e) for e in np.arange(2.0, 6.01, 0.5))
FIT_RESIDUAL = 0.05
MAX_DENOMINATOR = 12


class ValuationAmbiguity(ArithmeticError):
    def __init__(self, message: str, residuals: dict):
        super().__init__(message)
        self.residuals = residuals


# -- families ----------------------------------------------------------------

def _series(terms) -> tuple:
    out: dict = {}
    for e, c in terms:
        e = Fraction(e)
        out[e] = out.get(e, 0) + complex(c)
    return tuple(sorted((e, c) for e, c in out.items() if c != 0))


@dataclass
class RootFamily:
    """d branches r_i(t): exact truncated series, or samples on a ladder of t values."""

    series: list | None = None  # per branch: ((Fraction exponent, complex coeff), ...)
    ladder: tuple | None = None
    samples: np.ndarray | None = None  # shape (len(ladder), d)

    def __post_init__(self):
        if (self.series is None) == (self.samples is None):
            raise MalformedInput("give exactly one of series or samples")
        if self.series is not None:
            self.series = [_series(b) for b in self.series]
        else:
            self.samples = np.asarray(self.samples, dtype=complex)
            self.ladder = tuple(float(t) for t in (self.ladder or LADDER))
            if self.samples.ndim != 2 or self.samples.shape[0] != len(self.ladder):
                raise MalformedInput("samples must have one row per ladder value")

    @property
    def d(self) -> int:
        return len(self.series) if self.series is not None else self.samples.shape[1]

    @property
    def exact(self) -> bool:
        return self.series is not None

    def sampled(self, ladder=LADDER) -> "RootFamily":
        """The numeric-path version of an exact family."""
        if not self.exact:
            return self
        t = np.asarray(ladder, dtype=float)
        cols = [sum(c * t ** float(e) for e, c in b) + 0 * t for b in self.series]
        return RootFamily(samples=np.stack(cols, axis=1), ladder=tuple(ladder))

    def to_json(self) -> dict:
        if self.exact:
            return {"series": [[[str(e), c.real, c.imag] for e, c in b] for b in self.series]}
        return {"ladder": list(self.ladder),
                "samples": [[[z.real, z.imag] for z in row] for row in self.samples]}

    @classmethod
    def from_json(cls, obj: dict) -> "RootFamily":
        try:
            if "series" in obj:
                return cls(series=[[(Fraction(e), complex(re, im)) for e, re, im in b] for b in obj["series"]])
            return cls(samples=[[complex(re, im) for re, im in row] for row in obj["samples"]],
                       ladder=obj.get("ladder"))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad family JSON: {exc}") from exc


def dandelion_family(d: int, k: int, constants=None) -> RootFamily:
    """(z - t)(z - t^2)...(z - t^(d-k))(z + t + ... + t^(d-k)) and k - 1 constant roots."""
    if k < 3 or d - k < 2 or (d - k) % 2:
        raise MalformedInput(f"need k >= 3 and d - k = 2r - 2 >= 2, got d={d}, k={k}")
    m = d - k
    branches = [[(j, 1)] for j in range(1, m + 1)]
    branches.append([(j, -1) for j in range(1, m + 1)])
    consts = list(constants) if constants is not None else list(range(1, k))
    if len(consts) != k - 1:
        raise MalformedInput("need k - 1 constants")
    branches += [[(0, c)] for c in consts]
    return RootFamily(series=branches)


# -- valuations --------------------------------------------------------------

def _series_valuation(a: tuple, b: tuple, rel: float = 1e-12) -> Fraction | None:
    diff: dict = {}
    for e, c in a:
        diff[e] = diff.get(e, 0) + c
    for e, c in b:
        diff[e] = diff.get(e, 0) - c
    scale = max([abs(c) for _, c in a + b] + [1.0])
    live = [e for e, c in diff.items() if abs(c) > rel * scale]
    return min(live) if live else None


def _fit_valuation(t: np.ndarray, delta: np.ndarray) -> tuple[Fraction, float]:
    x, y = np.log(t), np.log(np.abs(delta))
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, icpt] - y) ** 2)))
    v = Fraction(float(slope)).limit_denominator(MAX_DENOMINATOR)
    return v, max(resid, abs(float(slope) - float(v)))


def valuation_matrix(fam: RootFamily) -> list[list]:
    """v(r_i - r_j) for i != j (None on the diagonal)."""
    d = fam.d
    V = [[None] * d for _ in range(d)]
    bad = {}
    for i, j in itertools.combinations(range(d), 2):
        if fam.exact:
            v = _series_valuation(fam.series[i], fam.series[j])
            if v is None:
                raise MalformedInput(f"branches {i + 1} and {j + 1} coincide")
        else:
            delta = fam.samples[:, i] - fam.samples[:, j]
            if np.any(delta == 0):
                raise MalformedInput(f"branches {i + 1} and {j + 1} coincide at a sample")
            v, res = _fit_valuation(np.asarray(fam.ladder), delta)
            if res > FIT_RESIDUAL:
                bad[(i + 1, j + 1)] = res
        V[i][j] = V[j][i] = v
    if bad:
        raise ValuationAmbiguity(f"valuation fit residual above {FIT_RESIDUAL} for {len(bad)} pairs", bad)
    for i, j, k in itertools.permutations(range(d), 3):
        if V[i][k] < min(V[i][j], V[j][k]):
            raise ValuationAmbiguity("valuations violate the ultrametric inequality",
                                     {(i + 1, j + 1, k + 1): float(V[i][k])})
    return V


# -- trees -------------------------------------------------------------------

@dataclass
class Vertex:
    marks: tuple  # 1-based labels
    parent: int | None
    jump: Fraction | None  # scale jump on the edge to the parent
    scale: Fraction


@dataclass
class DualTree:
    d: int
    vertices: list
    root: int = 0
    notes: list = field(default_factory=list)

    def children(self, i: int) -> list[int]:
        return [j for j, v in enumerate(self.vertices) if v.parent == i]

    def neighbours(self, i: int) -> list[int]:
        out = self.children(i)
        if self.vertices[i].parent is not None:
            out.append(self.vertices[i].parent)
        return out

    def special(self, i: int) -> int:
        return len(self.vertices[i].marks) + len(self.neighbours(i))

    def is_stable(self) -> bool:
        return all(self.special(i) >= 3 for i in range(len(self.vertices)))

    def labels_partition(self) -> bool:
        labels = sorted(m for v in self.vertices for m in v.marks)
        return labels == list(range(1, self.d + 1))

    def root_support(self) -> int:
        """Distinct limit points on the root fiber: marks plus attached tails."""
        return len(self.vertices[self.root].marks) + len(self.children(self.root))

    def path_marks(self) -> list[int] | None:
        """Mark counts along the tree if it is a chain, else None."""
        n = len(self.vertices)
        if n == 1:
            return [len(self.vertices[0].marks)]
        deg = [len(self.neighbours(i)) for i in range(n)]
        if max(deg) > 2 or deg.count(1) != 2:
            return None
        cur = deg.index(1)
        prev, out = None, []
        while cur is not None:
            out.append(len(self.vertices[cur].marks))
            nxt = [j for j in self.neighbours(cur) if j != prev]
            prev, cur = cur, (nxt[0] if nxt else None)
        return out

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "root": self.root,
            "vertices": [{"marks": list(v.marks), "parent": v.parent, "scale": str(v.scale),
                          "jump": None if v.jump is None else str(v.jump)} for v in self.vertices],
            "mark_counts": [len(v.marks) for v in self.vertices],
            "stable": self.is_stable(),
            "notes": self.notes,
        }

    def to_dot(self) -> str:
        lines = ["graph dual {"]
        for i, v in enumerate(self.vertices):
            shape = "doublecircle" if i == self.root else "circle"
            lab = ",".join(str(m) for m in v.marks)
            lines.append(f'  v{i} [shape={shape}, label="{len(v.marks)}", xlabel="{{{lab}}}"];')
        for i, v in enumerate(self.vertices):
            if v.parent is not None:
                lines.append(f'  v{v.parent} -- v{i} [label="{v.jump}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _build(V: list[list], members: list[int], scale: Fraction, parent, jump, out: list) -> None:
    idx = len(out)
    out.append(Vertex((), parent, jump, scale))
    classes: list[list[int]] = []
    for i in members:
        for cl in classes:
            if V[i][cl[0]] > scale:
                cl.append(i)
                break
        else:
            classes.append([i])
    marks = []
    for cl in classes:
        if len(cl) == 1:
            marks.append(cl[0] + 1)
        else:
            s = min(V[a][b] for a, b in itertools.combinations(cl, 2))
            _build(V, cl, s, idx, s - scale, out)
    out[idx].marks = tuple(sorted(marks))


def _contract(T: DualTree) -> None:
    """Remove vertices with at most two special points (only the root can be one)."""
    while len(T.vertices) > 1 and T.special(T.root) <= 2:
        r = T.vertices[T.root]
        kids = T.children(T.root)
        if len(kids) == 1:
            c = kids[0]
            T.vertices[c].marks = tuple(sorted(T.vertices[c].marks + r.marks))
            T.vertices[c].parent, T.vertices[c].jump = None, None
            new_root = c
        else:  # two tails, no marks: join them
            a, b = kids
            T.vertices[b].parent = a
            T.vertices[b].jump = T.vertices[a].jump + T.vertices[b].jump
            T.vertices[a].parent, T.vertices[a].jump = None, None
            new_root = a
        T.notes.append("root fiber had fewer than 3 special points; contracted")
        old = T.root
        keep = [i for i in range(len(T.vertices)) if i != old]
        remap = {o: n for n, o in enumerate(keep)}
        verts = []
        for o in keep:
            v = T.vertices[o]
            verts.append(Vertex(v.marks, None if v.parent is None else remap[v.parent], v.jump, v.scale))
        T.vertices, T.root = verts, remap[new_root]


def stable_limit(fam: RootFamily) -> DualTree:
    """Dual tree of the stable limit at t = 0, rooted at the original fiber."""
    if fam.d < 3:
        raise MalformedInput("need at least 3 branches")
    V = valuation_matrix(fam)
    out: list[Vertex] = []
    _build(V, list(range(fam.d)), Fraction(0), None, None, out)
    T = DualTree(fam.d, out)
    _contract(T)
    return T


# -- classification ----------------------------------------------------------

@dataclass
class TreeClass:
    label: str  # "k-dandelion", "straight-tree" or "other"
    dandelion: bool
    straight: bool
    path_marks: list | None

    def to_json(self) -> dict:
        return {"label": self.label, "dandelion": self.dandelion, "straight_tree": self.straight,
                "path_marks": self.path_marks}


def dandelion_marks(d: int, k: int) -> list[int]:
    return [k - 1] + [1] * (d - k - 1) + [2]


def straight_marks(d: int) -> list[int]:
    return [2] + [1] * (d - 4) + [2]


def classify_tree(T: DualTree, k: int | None = None) -> TreeClass:
    """Match against the chain templates.  For d = 5, k = 3 both coincide; k decides the label."""
    pm = T.path_marks()
    dand = False
    if k is not None and pm is not None and T.d - k >= 1:
        want = dandelion_marks(T.d, k)
        dand = pm == want or pm[::-1] == want
    straight = pm is not None and T.d >= 4 and pm == straight_marks(T.d)
    label = f"{k}-dandelion" if dand else ("straight-tree" if straight else "other")
    return TreeClass(label, dand, straight, pm)


def chain_tree(marks_per_vertex: list[list[int]]) -> DualTree:
    """A chain with the given labels on each vertex, rooted at the first."""
    d = sum(len(m) for m in marks_per_vertex)
    verts = [Vertex(tuple(m), None if i == 0 else i - 1, None if i == 0 else Fraction(1), Fraction(i))
             for i, m in enumerate(marks_per_vertex)]
    return DualTree(d, verts)


# -- counting ----------------------------------------------------------------

def count_straight_trees(d: int) -> int:
    if d < 4:
        raise MalformedInput("straight trees need d >= 4")
    return math.factorial(d) // 8


def preimage_count(mult) -> int:
    mult = [int(m) for m in mult]
    if not mult or min(mult) < 1:
        raise MalformedInput("multiplicities must be positive")
    return math.factorial(sum(mult)) // math.prod(math.factorial(m) for m in mult)


def straight_trees_over_line(a: int, b: int, d: int) -> int:
    if a < 1 or b < 1 or a + b != d - 1:
        raise MalformedInput(f"need a, b >= 1 with a + b = d - 1, got {a}, {b}, {d}")
    if min(a, b) == 1:
        return math.factorial(d - 2) // 2
    return math.factorial(a) * math.factorial(b) // 4


# -- brute-force oracles -----------------------------------------------------

def brute_straight_trees(d: int) -> int:
    """Labelings of the (2, 1, ..., 1, 2) chain modulo end swaps and the flip."""
    seen = set()
    for p in itertools.permutations(range(1, d + 1)):
        seq = (frozenset(p[:2]),) + tuple(frozenset([x]) for x in p[2:-2]) + (frozenset(p[-2:]),)
        seen.add(min(seq, seq[::-1], key=lambda s: [sorted(x) for x in s]))
    return len(seen)


def brute_preimage_count(mult) -> tuple[int, int]:
    """(orbit size, |S_d| / |stabiliser|) of a labelled point of type ``mult``."""
    mult = [int(m) for m in mult]
    d = sum(mult)
    cuts = np.cumsum([0] + mult)

    def label(p):
        return tuple(frozenset(p[cuts[i]:cuts[i + 1]]) for i in range(len(mult)))

    base = label(tuple(range(d)))
    orbit, stab = set(), 0
    for p in itertools.permutations(range(d)):
        lab = label(p)
        orbit.add(lab)
        stab += lab == base
    return len(orbit), math.factorial(d) // stab


def phylogenetic_trees(labels: list) -> list[dict]:
    """All stable trees with leaves ``labels`` (|labels| >= 3) as adjacency dicts.

    Leaves are the labels; internal nodes are ints.  Inserting each new leaf
    onto a node or onto the middle of an edge generates every tree once.
    """
    labels = list(labels)
    start = {0: set(labels[:3])}
    for x in labels[:3]:
        start[x] = {0}
    trees = [start]
    for x in labels[3:]:
        nxt = []
        for T in trees:
            internal = [v for v in T if isinstance(v, int)]
            for v in internal:
                U = {u: set(n) for u, n in T.items()}
                U[v].add(x)
                U[x] = {v}
                nxt.append(U)
            new = max(internal) + 1
            for u, nb in T.items():
                for w in nb:
                    if repr(u) < repr(w):
                        U = {a: set(n) for a, n in T.items()}
                        U[u].discard(w)
                        U[w].discard(u)
                        U[new] = {u, w, x}
                        U[u].add(new)
                        U[w].add(new)
                        U[x] = {new}
                        nxt.append(U)
        trees = nxt
    return trees


def _components(T: dict) -> tuple[dict, dict]:
    comps = {v: [] for v in T if isinstance(v, int)}
    for v in comps:
        comps[v] = sorted((x for x in T[v] if not isinstance(x, int)), key=repr)
    return comps, {v: [w for w in T[v] if isinstance(w, int)] for v in comps}


def brute_straight_over_line(a: int, b: int) -> int:
    """Attach every stable tail at the a-fold and b-fold points and count straight trees."""
    d = a + b + 1

    def tails(labels, anchor):
        if len(labels) == 1:
            return [None]
        return phylogenetic_trees(labels + [anchor])

    A = [f"a{i}" for i in range(a)]
    B = [f"b{i}" for i in range(b)]
    count = 0
    for ta in tails(A, "*p"):
        for tb in tails(B, "*q"):
            root_marks = ["c"] + (A if ta is None else []) + (B if tb is None else [])
            verts = [root_marks]
            edges = []
            for t, anchor in ((ta, "*p"), (tb, "*q")):
                if t is None:
                    continue
                comps, adj = _components(t)
                ids = {v: len(verts) + i for i, v in enumerate(comps)}
                for v, ms in comps.items():
                    verts.append([m for m in ms if m != anchor])
                for v, ws in adj.items():
                    for w in ws:
                        if ids[v] < ids[w]:
                            edges.append((ids[v], ids[w]))
                glued = next(iter(t[anchor]))
                edges.append((0, ids[glued]))
            deg = [0] * len(verts)
            for u, w in edges:
                deg[u] += 1
                deg[w] += 1
            # chain check and mark pattern
            if len(verts) > 1 and (max(deg) > 2 or deg.count(1) != 2):
                continue
            order = [deg.index(1)] if len(verts) > 1 else [0]
            while len(order) < len(verts):
                cur = order[-1]
                for u, w in edges:
                    nxt = w if u == cur else (u if w == cur else None)
                    if nxt is not None and nxt not in order:
                        order.append(nxt)
                        break
            if [len(verts[i]) for i in order] == straight_marks(d):
                count += 1
    return count
