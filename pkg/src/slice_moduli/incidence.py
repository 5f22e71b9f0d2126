"""Special lines of plane curves: flexes, bitangents, tri-incident census.

Flex lines come from the points of F = Hess F = 0 (bivariate resultant plus
back-substitution and Newton).  Bitangents and every other (d-2)-incident type
are found by monodromy solving with ``tracking.LineTypeSystem``.
"""

from __future__ import annotations

import itertools
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tracking as trk
from .forms import (
    DEFAULT_TOL,
    HypersurfaceSpec,
    LineParam,
    MalformedInput,
    RootDivisor,
    UnstableClustering,
    hessian_curve,
    multiplicity_vector,
    restrict_to_line,
    roots_with_multiplicity,
)
from .moduli import (
    ModuliFingerprint,
    PointConfig,
    canonical_fingerprint,
    same_moduli,
)

CERT_RESIDUAL = 1e-10


class UncertifiedSolution(ArithmeticError):
    """A candidate line failed its residual or multiplicity re-check."""


class IncompleteEnumeration(UserWarning):
    def __init__(self, message: str, deficit: int):
        super().__init__(message)
        self.deficit = deficit


class IncompleteCensus(ValueError):
    """degree_mu1 refuses to evaluate on an incomplete census."""


def flex_count(d: int) -> int:
    return 3 * d * (d - 2)


def bitangent_count(d: int) -> int:
    return d * (d - 2) * (d * d - 9) // 2


@dataclass
class IncidentLineRecord:
    line: LineParam
    divisor: RootDivisor
    mult: tuple[int, ...]
    residual: float

    def to_json(self) -> dict:
        return {
            "line": self.line.to_json(),
            "plucker": [[z.real, z.imag] for z in self.line.plucker()],
            "divisor": self.divisor.to_json(),
            "mult": list(self.mult),
            "residual": self.residual,
        }


@dataclass
class LineEnumeration:
    """Certified records plus the completeness bookkeeping of one enumeration."""

    records: list[IncidentLineRecord]
    expected: int
    found: int  # weighted count compared against ``expected``
    complete: bool
    method: str
    stats: dict = field(default_factory=dict)

    @property
    def deficit(self) -> int:
        return self.expected - self.found

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "count": len(self.records),
            "expected": self.expected,
            "weighted_found": self.found,
            "complete": self.complete,
            "stats": self.stats,
            "records": [r.to_json() for r in self.records],
        }


def _require_plane(X: HypersurfaceSpec) -> None:
    if X.r != 2:
        raise MalformedInput(f"plane curves only (r = 2), got r = {X.r}")


def _sort_records(recs: list[IncidentLineRecord], tol: float) -> list[IncidentLineRecord]:
    # deterministic order by quantised Plücker key
    return sorted(recs, key=lambda r: r.line.key(max(tol, 1e-8)))


def _dedup(recs: list[IncidentLineRecord], tol: float) -> list[IncidentLineRecord]:
    out: list[IncidentLineRecord] = []
    for r in recs:
        if all(r.line.distance(o.line) >= tol for o in out):
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# Hessian points by resultant


def _bivariate(X: HypersurfaceSpec) -> np.ndarray:
    """C[i, j] = coefficient of x^i y^j in the chart z = 1."""
    C = np.zeros((X.d + 1, X.d + 1), dtype=complex)
    for e, c in X.coeffs.items():
        C[e[0], e[1]] += c
    return C


def _in_y(C: np.ndarray, x: complex) -> np.ndarray:
    """Ascending y-coefficients of the chart polynomial at fixed x."""
    return np.array([np.polyval(C[::-1, j], x) for j in range(C.shape[1])])


def hessian_points(X: HypersurfaceSpec, rng: np.random.Generator, newton_iters: int = 60) -> list:
    """Points of F = Hess F = 0, one per resultant root (repeated at hyperflexes).

    A random unitary change of coordinates puts the curve in general position;
    Res_y(F, H)(x) is sampled on the unit circle through the product formula
    and interpolated by FFT.
    """
    _require_plane(X)
    d = X.d
    U, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    G = X.transform(U)
    H = hessian_curve(G)
    CG, CH = _bivariate(G), _bivariate(H)
    e = H.d
    deg = d * e
    N = 1 << int(np.ceil(np.log2(deg + 2)))
    xs = np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.empty(N, dtype=complex)
    for k, x in enumerate(xs):
        fy = _in_y(CG, x)
        hy = _in_y(CH, x)[: e + 1]
        vals[k] = fy[-1] ** e * np.prod(np.polyval(hy[::-1], np.roots(fy[::-1])))
    coef = (np.fft.fft(vals) / N)[: deg + 1]  # ascending in x
    pts = []
    for x in np.roots(coef[::-1]):
        ry = np.roots(_in_y(CG, x)[::-1])
        y = ry[int(np.argmin([abs(H(np.array([x, yy, 1]))) for yy in ry]))]
        v = np.array([x, y, 1.0 + 0j])
        for _ in range(newton_iters):
            gG, gH = G.gradient(v), H.gradient(v)
            J = np.array([gG[:2], gH[:2]])
            r = np.array([G(v), H(v)])
            try:
                dv = np.linalg.solve(J, r)
            except np.linalg.LinAlgError:
                break
            v[:2] -= dv
            if np.linalg.norm(dv) < 1e-15 * np.linalg.norm(v):
                break
        w = U @ v
        pts.append(w / np.linalg.norm(w))
    return pts


def _check_smooth_at(X: HypersurfaceSpec, pts: list) -> None:
    for p in pts:
        g = np.linalg.norm(X.gradient(p))
        if g < 1e-6 * X.norm():
            raise MalformedInput(f"curve appears singular near {np.round(p, 6)} (|grad F| = {g:.2e})")


def _cluster_points(pts: list, tol: float = 1e-5) -> list[tuple[np.ndarray, int]]:
    out: list[list] = []
    for p in pts:
        for c in out:
            if np.sqrt(max(0.0, 1 - abs(np.vdot(c[0], p)) ** 2)) < tol:
                c[1] += 1
                break
        else:
            out.append([p, 1])
    return [(c[0], c[1]) for c in out]


# ---------------------------------------------------------------------------
# certification


def _loose_divisor(X: HypersurfaceSpec, line: LineParam) -> tuple[RootDivisor, float]:
    f = restrict_to_line(X, line)
    last = None
    for tol in (1e-8, 1e-7, 1e-6, 1e-5, 1e-4):
        try:
            return roots_with_multiplicity(f, tol), tol
        except UnstableClustering as ex:
            last = ex
    raise UncertifiedSolution(f"could not cluster the slice of a candidate line: {last}")


def refine_line(X: HypersurfaceSpec, line: LineParam, mult: tuple[int, ...],
                divisor: RootDivisor | None = None, iters: int = 10) -> tuple[LineParam, float]:
    """(Gauss-)Newton on the line-type system; returns (line, relative residual)."""
    system = trk.LineTypeSystem(X.d, mult)
    y, ch = system.encode(line, X, tol=1e-3, divisor=divisor)
    p = X.coefficient_vector(system.basis)
    y, res = trk.newton(system, y, p, ch, iters=iters)
    return system.line(y, ch), float(res[0])


def certify(X: HypersurfaceSpec, line: LineParam, tol: float, mult: tuple[int, ...] | None = None,
            refine: bool = True) -> IncidentLineRecord:
    """Refine ``line`` and re-check its divisor at ``tol``."""
    div0, _ = _loose_divisor(X, line)
    if mult is None:
        mult = multiplicity_vector(div0)
    elif multiplicity_vector(div0) != tuple(mult):
        raise UncertifiedSolution(f"claimed type {tuple(mult)}, slice looks like {multiplicity_vector(div0)}")
    residual = float("nan")
    if refine and max(mult) > 1:
        line, residual = refine_line(X, line, mult, div0)
    try:
        div = roots_with_multiplicity(restrict_to_line(X, line), tol)
    except UnstableClustering as ex:
        raise UncertifiedSolution(f"divisor unstable at tol={tol}: {ex.stats}") from ex
    got = multiplicity_vector(div)
    if got != tuple(mult):
        raise UncertifiedSolution(f"claimed type {tuple(mult)}, recomputed {got}")
    if not residual < CERT_RESIDUAL:
        raise UncertifiedSolution(f"residual {residual:.2e} above {CERT_RESIDUAL:.0e}")
    return IncidentLineRecord(line, div, got, residual)


# ---------------------------------------------------------------------------
# flexes


def flex_lines(X: HypersurfaceSpec, tol: float = DEFAULT_TOL, seed: int = 0) -> LineEnumeration:
    """All tangent lines at inflection points, every contact order included.

    Completeness: sum over flex points of (contact order - 2) equals 3d(d-2).
    """
    _require_plane(X)
    if X.d < 3:
        raise MalformedInput("flexes need d >= 3")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    raw = hessian_points(X, rng)
    _check_smooth_at(X, raw)
    clusters = _cluster_points(raw)
    recs = []
    for p, _ in clusters:
        w = X.gradient(p)
        recs.append(certify(X, LineParam.from_dual(w), tol))
    recs = _sort_records(_dedup(recs, tol), tol)
    weight = sum(m - 2 for r in recs for m in r.mult if m >= 3)
    expected = flex_count(X.d)
    en = LineEnumeration(recs, expected, weight, weight == expected, "resultant",
                         {"resultant_roots": len(raw), "points": len(clusters),
                          "seconds": round(time.perf_counter() - t0, 3)})
    if not en.complete:
        # cross-check route: monodromy on the square (3,1,...,1) system
        if X.d >= 3 and weight < expected:
            _complete_flexes(X, en, tol, rng)
        if not en.complete:
            warnings.warn(IncompleteEnumeration(
                f"flex weight {en.found} of {expected}", en.deficit))
    return en


def _complete_flexes(X: HypersurfaceSpec, en: LineEnumeration, tol: float, rng) -> None:
    mult = (3,) + (1,) * (X.d - 3)
    generic = [r for r in en.records if r.mult == mult]
    if not generic:
        return
    system = trk.LineTypeSystem(X.d, mult)
    p = X.coefficient_vector(system.basis)
    ys, cs = zip(*(system.encode(r.line, X) for r in generic))
    start = (np.stack(ys), trk.Charts.concat(list(cs)))
    n_generic = len(generic) + en.deficit
    Y, C, info = trk.monodromy_solve(system, p, rng, expected=n_generic, start=start)
    recs = list(en.records)
    for ln in system.lines(Y, C):
        try:
            recs.append(certify(X, ln, tol, mult))
        except UncertifiedSolution:
            continue
    en.records = _sort_records(_dedup(recs, tol), tol)
    en.found = sum(m - 2 for r in en.records for m in r.mult if m >= 3)
    en.complete = en.found == en.expected
    en.method = "resultant+monodromy"
    en.stats["monodromy_loops"] = info.loops


def flex_type_lines(X: HypersurfaceSpec, a: int = 3, tol: float = DEFAULT_TOL,
                    seed: int = 0) -> LineEnumeration:
    """Lines of type (a, 1, ..., 1): contact order exactly a at one point, transverse elsewhere."""
    _require_plane(X)
    if not 3 <= a <= X.d:
        raise MalformedInput(f"contact order must satisfy 3 <= a <= d, got a={a}, d={X.d}")
    full = flex_lines(X, tol, seed)
    want = (a,) + (1,) * (X.d - a)
    recs = [r for r in full.records if r.mult == want]
    out = LineEnumeration(recs, full.expected, full.found, full.complete, full.method, dict(full.stats))
    out.stats["all_types"] = _type_counts(full.records)
    return out


def _type_counts(recs) -> dict:
    counts: dict[str, int] = {}
    for r in recs:
        key = ",".join(map(str, r.mult))
        counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items()))


# ---------------------------------------------------------------------------
# (d-2)-incident types by monodromy


def expected_count(d: int, mult: tuple[int, ...]) -> int | None:
    mult = tuple(sorted(mult, reverse=True))
    if mult == (3,) + (1,) * (d - 3):
        return flex_count(d)
    if d >= 4 and mult == (2, 2) + (1,) * (d - 4):
        return bitangent_count(d)
    return None


def type_lines(X: HypersurfaceSpec, mult: tuple[int, ...], tol: float = DEFAULT_TOL, seed: int = 0,
               max_loops: int = 80, radius: float = 1.0) -> LineEnumeration:
    """All lines of a (d-2)-incident type by monodromy solving, certified at ``tol``."""
    _require_plane(X)
    mult = tuple(sorted(mult, reverse=True))
    system = trk.LineTypeSystem(X.d, mult)
    if not system.square:
        raise MalformedInput(f"type {mult} is not (d-2)-incident")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    p = X.coefficient_vector(system.basis)
    expected = expected_count(X.d, mult)
    Y, C, info = trk.monodromy_solve(system, p, rng, expected=expected, max_loops=max_loops,
                                     radius=radius)
    recs = []
    rejected = 0
    for ln in system.lines(Y, C):
        try:
            recs.append(certify(X, ln, tol, mult))
        except UncertifiedSolution:
            rejected += 1
    recs = _sort_records(_dedup(recs, tol), tol)
    exp = expected if expected is not None else len(recs)
    en = LineEnumeration(recs, exp, len(recs), len(recs) == exp and (info.closed or expected is None),
                         "monodromy",
                         {"loops": info.loops, "failed_paths": info.failed_paths,
                          "closed": info.closed, "rejected": rejected,
                          "seconds": round(time.perf_counter() - t0, 3)})
    if not en.complete:
        warnings.warn(IncompleteEnumeration(f"{len(recs)} of {exp} lines of type {mult}", en.deficit))
    return en


def bitangent_lines(X: HypersurfaceSpec, tol: float = DEFAULT_TOL, seed: int = 0,
                    max_loops: int = 80) -> LineEnumeration:
    """Lines of type (2, 2, 1, ..., 1)."""
    _require_plane(X)
    if X.d < 4:
        raise MalformedInput(f"bitangents need d >= 4, got d = {X.d}")
    return type_lines(X, (2, 2) + (1,) * (X.d - 4), tol, seed, max_loops)


# ---------------------------------------------------------------------------
# census and the degree formula


@dataclass
class TriIncidentCensus:
    d: int
    counts: dict  # {(a, b, c): n}
    records: dict  # {(a, b, c): [IncidentLineRecord]}
    complete: bool
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "counts": {",".join(map(str, k)): v for k, v in sorted(self.counts.items())},
            "complete": self.complete,
            "notes": self.notes,
            "records": {",".join(map(str, k)): [r.to_json() for r in v]
                        for k, v in sorted(self.records.items())},
        }


def tri_types(d: int) -> list[tuple[int, int, int]]:
    return sorted({tuple(sorted(t, reverse=True)) for t in itertools.product(range(1, d), repeat=3)
                   if sum(t) == d}, reverse=True)


def census(X: HypersurfaceSpec, tol: float = DEFAULT_TOL, seed: int = 0) -> TriIncidentCensus:
    """Tri-incident census of a plane quintic (the only degree where it is finite)."""
    _require_plane(X)
    if X.d != 5:
        raise MalformedInput("tri-incident lines form a finite set only for plane quintics (d = 5)")
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IncompleteEnumeration)
        flexes = flex_lines(X, tol, seed)
        bit = bitangent_lines(X, tol, seed)
    notes += [str(w.message) for w in caught]
    counts = {t: 0 for t in tri_types(5)}
    records: dict = {t: [] for t in counts}
    by_type: dict = {}
    for r in list(flexes) + list(bit):
        by_type.setdefault(r.mult, []).append(r)
    for t, recs in by_type.items():
        recs = _sort_records(_dedup(recs, tol), tol)
        records[t] = recs
        counts[t] = len(recs)
        if len(t) != 3:
            notes.append(f"{len(recs)} non-tri-incident special lines of type {t}")
    return TriIncidentCensus(5, counts, records, flexes.complete and bit.complete, notes)


def degree_formula(counts: dict, d: int) -> int:
    """2 * sum_{a >= b > 1} n_{a,b,1} + 4 * n_{d-2,1,1}."""
    total = 0
    for (a, b, c), n in counts.items():
        a, b, c = sorted((a, b, c), reverse=True)
        if c == 1 and b > 1 and a + b + 1 == d:
            total += 2 * n
    total += 4 * counts.get((d - 2, 1, 1), 0)
    return total


def degree_mu1(cen: TriIncidentCensus, d: int = 5) -> int:
    if d != 5 or cen.d != 5:
        raise MalformedInput("the degree formula is implemented for plane quintics (d = 5)")
    if not cen.complete:
        raise IncompleteCensus("census is incomplete; refusing to evaluate the degree formula: "
                               + "; ".join(cen.notes))
    return degree_formula(cen.counts, d)


# ---------------------------------------------------------------------------
# moduli of slices


def slice_config(X: HypersurfaceSpec, line: LineParam, tol: float = DEFAULT_TOL) -> PointConfig:
    # moduli do not depend on the basis; a unitary one keeps the clustering well conditioned
    return PointConfig.from_divisor(roots_with_multiplicity(restrict_to_line(X, line.orthonormal()), tol))


def slice_fingerprint(X: HypersurfaceSpec, line: LineParam, tol: float = DEFAULT_TOL) -> ModuliFingerprint:
    return canonical_fingerprint(slice_config(X, line, tol), tol)


@dataclass
class Collision:
    index: int
    line_a: LineParam
    line_b: LineParam
    witness: np.ndarray

    def to_json(self) -> dict:
        return {"pair": self.index, "a": self.line_a.to_json(), "b": self.line_b.to_json(),
                "witness": [[[z.real, z.imag] for z in row] for row in self.witness]}


@dataclass
class InjectivityReport:
    d: int
    trials: int
    collisions: list
    jset_prefilter_hits: int
    seconds: float

    def to_json(self) -> dict:
        return {"d": self.d, "trials": self.trials, "collisions": [c.to_json() for c in self.collisions],
                "n_collisions": len(self.collisions), "jset_prefilter_hits": self.jset_prefilter_hits,
                "seconds": self.seconds}


def _jsets_close(a: ModuliFingerprint, b: ModuliFingerprint, tol: float) -> bool:
    if len(a.jset) != len(b.jset):
        return False
    return all(abs(x - y) <= 1e3 * tol * max(1.0, abs(x)) for x, y in zip(a.jset, b.jset))


def injectivity_sample(X: HypersurfaceSpec, trials: int = 1000, seed: int = 0,
                       tol: float = DEFAULT_TOL, pairs: list | None = None) -> InjectivityReport:
    """Random line pairs; any pair with equal slice moduli is reported with its witness."""
    _require_plane(X)
    if X.d < 6:
        raise MalformedInput("injectivity sampling is meaningful for d >= 6")
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    if pairs is None:
        pairs = [(LineParam.random(2, rng), LineParam.random(2, rng)) for _ in range(trials)]
    collisions = []
    hits = 0
    for i, (la, lb) in enumerate(pairs):
        ca, cb = slice_config(X, la, tol), slice_config(X, lb, tol)
        fa, fb = canonical_fingerprint(ca, tol), canonical_fingerprint(cb, tol)
        if not _jsets_close(fa, fb, tol):
            continue
        hits += 1
        ok, g = same_moduli(ca, cb, tol=1e3 * tol, witness=True)
        if ok:
            collisions.append(Collision(i, la, lb, g))
    return InjectivityReport(X.d, len(pairs), collisions, hits, round(time.perf_counter() - t0, 3))


@dataclass
class FermatWitness:
    d: int
    line_a: LineParam
    line_b: LineParam
    automorphism: np.ndarray
    fingerprint_a: ModuliFingerprint
    fingerprint_b: ModuliFingerprint
    witness: np.ndarray
    draws: int

    def to_json(self) -> dict:
        cm = lambda M: [[[z.real, z.imag] for z in row] for row in M]
        return {"d": self.d, "a": self.line_a.to_json(), "b": self.line_b.to_json(),
                "line_distance": self.line_a.distance(self.line_b),
                "automorphism": cm(self.automorphism),
                "fingerprint": self.fingerprint_a.to_json(),
                "fingerprints_equal": self.fingerprint_a.matches(self.fingerprint_b),
                "witness": cm(self.witness), "draws": self.draws}


def fermat_automorphism(d: int, perm, exps) -> np.ndarray:
    """x_i -> zeta^{exps[i]} x_{perm[i]} with zeta = exp(2 pi i / d)."""
    zeta = np.exp(2j * np.pi / d)
    A = np.zeros((3, 3), dtype=complex)
    for i in range(3):
        A[i, perm[i]] = zeta ** exps[i]
    return A


def _is_scalar(A: np.ndarray) -> bool:
    return np.allclose(A, A[0, 0] * np.eye(A.shape[0]))


def fermat_collision_witness(d: int = 5, seed: int = 0, tol: float = DEFAULT_TOL,
                             automorphism: np.ndarray | None = None) -> FermatWitness:
    """Two distinct lines with projectively equivalent slices of the Fermat curve."""
    if d < 3:
        raise MalformedInput("Fermat witness needs d >= 3")
    if automorphism is not None and _is_scalar(np.asarray(automorphism)):
        raise MalformedInput("identity automorphism cannot witness non-injectivity")
    X = HypersurfaceSpec.fermat(d)
    rng = np.random.default_rng(seed)
    for draw in range(1, 101):
        A = automorphism
        if A is None:
            perm = rng.permutation(3)
            A = fermat_automorphism(d, perm, rng.integers(0, d, size=3))
            if _is_scalar(A):
                continue
        la = LineParam.random(2, rng)
        # image line, re-parametrised so the two binary forms really differ
        mix = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        lb = LineParam(mix @ (la.basis @ np.asarray(A).T))
        if la.distance(lb) < 1e-6:
            continue
        ca, cb = slice_config(X, la, tol), slice_config(X, lb, tol)
        ok, g = same_moduli(ca, cb, tol=1e3 * tol, witness=True)
        if not ok:
            continue
        return FermatWitness(d, la, lb, np.asarray(A), canonical_fingerprint(ca, tol),
                             canonical_fingerprint(cb, tol), g, draw)
    raise UncertifiedSolution("no witness after 100 draws")
