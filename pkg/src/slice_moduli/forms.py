"""Homogeneous forms, lines, restriction to lines and binary-form roots.

Forms are stored densely as ``{exponent tuple: complex}`` dictionaries.  The
degrees handled here are small (d <= ~12), so plain dictionaries are fast
enough and keep the arithmetic transparent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-8


class MalformedInput(ValueError):
    """Input object violates its structural invariants."""


class UnstableClustering(ArithmeticError):
    """Root clusters cannot be separated at the requested tolerance.

    ``stats`` holds the backward-error statistics of the offending merge.
    """

    def __init__(self, message: str, stats: dict):
        super().__init__(message)
        self.stats = stats


class _Infinity:
    """The point [1:0] of P^1.  A singleton; never a large float."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(p) -> bool:
    return p is INF


def homogeneous(p) -> np.ndarray:
    """Unit-norm homogeneous coordinates (s, t) of a point of P^1 (z = s/t)."""
    if p is INF:
        return np.array([1.0 + 0j, 0.0 + 0j])
    v = np.array([complex(p), 1.0 + 0j])
    return v / np.linalg.norm(v)


def from_homogeneous(v: Sequence[complex], tol: float = 0.0):
    s, t = complex(v[0]), complex(v[1])
    if abs(t) <= tol * max(abs(s), 1e-300) or t == 0:
        return INF
    return s / t


def chordal(p, q) -> float:
    """Chordal distance on P^1 (bounded by 1, handles INF)."""
    a, b = homogeneous(p), homogeneous(q)
    return float(abs(a[0] * b[1] - a[1] * b[0]))


# ---------------------------------------------------------------------------
# Sparse polynomial arithmetic on exponent dictionaries


def monomials(nvars: int, d: int) -> list[tuple[int, ...]]:
    """Exponent vectors of degree d in graded-lexicographic (descending) order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(nvars), d):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return sorted(set(out), reverse=True)


def poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return out


def poly_add(a: dict, b: dict, scale: complex = 1.0) -> dict:
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + scale * c
    return out


def poly_diff(a: dict, var: int) -> dict:
    out: dict = {}
    for e, c in a.items():
        if e[var] == 0:
            continue
        ne = list(e)
        ne[var] -= 1
        out[tuple(ne)] = out.get(tuple(ne), 0) + c * e[var]
    return out


def poly_pow(a: dict, n: int, nvars: int) -> dict:
    out = {tuple([0] * nvars): 1.0 + 0j}
    for _ in range(n):
        out = poly_mul(out, a)
    return out


def linear_substitute(coeffs: dict, matrix: np.ndarray) -> dict:
    """Return G(y) = F(M y) where ``matrix`` has shape (n_old, n_new)."""
    m = np.asarray(matrix, dtype=complex)
    n_old, n_new = m.shape
    rows = []
    for i in range(n_old):
        rows.append({tuple(int(j == k) for k in range(n_new)): m[i, j]
                     for j in range(n_new) if m[i, j] != 0})
    powers: dict = {}
    out: dict = {}
    for e, c in coeffs.items():
        term = {tuple([0] * n_new): complex(c)}
        for i, ei in enumerate(e):
            if ei == 0:
                continue
            key = (i, ei)
            if key not in powers:
                powers[key] = poly_pow(rows[i], ei, n_new)
            term = poly_mul(term, powers[key])
        out = poly_add(out, term)
    return out


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True, eq=False)
class HypersurfaceSpec:
    """A degree-d form in r+1 variables; the hypersurface X in P^r."""

    r: int
    d: int
    coeffs: dict = field(repr=False)

    def __post_init__(self):
        if self.r < 1 or self.d < 0:
            raise MalformedInput(f"need r >= 1 and d >= 0, got r={self.r}, d={self.d}")
        clean = {}
        for e, c in self.coeffs.items():
            e = tuple(int(x) for x in e)
            if len(e) != self.r + 1 or sum(e) != self.d or min(e) < 0:
                raise MalformedInput(f"bad exponent {e} for r={self.r}, d={self.d}")
            if c != 0:
                clean[e] = clean.get(e, 0) + complex(c)
        if not any(abs(c) > 0 for c in clean.values()):
            raise MalformedInput("the zero form does not define a hypersurface")
        object.__setattr__(self, "coeffs", clean)

    @property
    def nvars(self) -> int:
        return self.r + 1

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        keys = sorted(self.coeffs, reverse=True)
        exps = np.array(keys, dtype=int).reshape(len(keys), self.nvars)
        vals = np.array([self.coeffs[k] for k in keys], dtype=complex)
        return exps, vals

    def coefficient_vector(self, basis: Sequence[tuple[int, ...]] | None = None) -> np.ndarray:
        basis = basis if basis is not None else monomials(self.nvars, self.d)
        return np.array([self.coeffs.get(e, 0) for e in basis], dtype=complex)

    @classmethod
    def from_vector(cls, r: int, d: int, vec: Sequence[complex]) -> "HypersurfaceSpec":
        basis = monomials(r + 1, d)
        return cls(r, d, {e: c for e, c in zip(basis, vec)})

    @classmethod
    def random(cls, r: int, d: int, rng: np.random.Generator) -> "HypersurfaceSpec":
        basis = monomials(r + 1, d)
        vec = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        return cls(r, d, {e: c for e, c in zip(basis, vec)})

    @classmethod
    def fermat(cls, d: int, r: int = 2) -> "HypersurfaceSpec":
        coeffs = {}
        for i in range(r + 1):
            e = [0] * (r + 1)
            e[i] = d
            coeffs[tuple(e)] = 1.0
        return cls(r, d, coeffs)

    def __call__(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=complex)
        exps, vals = self._arrays
        mons = np.prod(x[..., None, :] ** exps, axis=-1)
        return mons @ vals

    def gradient(self, points) -> np.ndarray:
        """Gradient at ``points`` of shape (..., r+1)."""
        x = np.asarray(points, dtype=complex)
        exps, vals = self._arrays
        out = []
        for i in range(self.nvars):
            e = exps.copy()
            c = vals * e[:, i]
            e[:, i] = np.maximum(e[:, i] - 1, 0)
            out.append(np.prod(x[..., None, :] ** e, axis=-1) @ c)
        return np.stack(out, axis=-1)

    def transform(self, matrix: np.ndarray) -> "HypersurfaceSpec":
        """The form F(M x); its zero set is M^{-1} X."""
        return HypersurfaceSpec(self.r, self.d, linear_substitute(self.coeffs, matrix))

    def norm(self) -> float:
        return float(np.linalg.norm(list(self.coeffs.values())))

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "d": self.d,
            "terms": [{"exp": list(e), "re": c.real, "im": c.imag}
                      for e, c in sorted(self.coeffs.items(), reverse=True)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HypersurfaceSpec":
        try:
            r, d = int(obj["r"]), int(obj["d"])
            coeffs = {}
            for term in obj["terms"]:
                e = tuple(int(x) for x in term["exp"])
                coeffs[e] = coeffs.get(e, 0) + complex(float(term.get("re", 0.0)),
                                                      float(term.get("im", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad hypersurface JSON: {exc}") from exc
        return cls(r, d, coeffs)


@dataclass(frozen=True, eq=False)
class LineParam:
    """A line in P^r spanned by the two rows of ``basis``; param [s:t]."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=complex)
        if b.ndim != 2 or b.shape[0] != 2 or b.shape[1] < 2:
            raise MalformedInput(f"line basis must be 2 x (r+1), got shape {b.shape}")
        sv = np.linalg.svd(b, compute_uv=False)
        if sv[1] <= 1e-12 * max(sv[0], 1e-300):
            raise MalformedInput("line basis is rank deficient")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def r(self) -> int:
        return self.basis.shape[1] - 1

    def point(self, s: complex, t: complex) -> np.ndarray:
        return s * self.basis[0] + t * self.basis[1]

    def plucker(self) -> np.ndarray:
        """2x2 minors, unit norm, first significant entry real-positive."""
        b = self.basis
        minors = np.array([b[0, i] * b[1, j] - b[0, j] * b[1, i]
                           for i, j in itertools.combinations(range(b.shape[1]), 2)])
        minors = minors / np.linalg.norm(minors)
        big = np.flatnonzero(np.abs(minors) > 1e-3)[0]
        return minors * (abs(minors[big]) / minors[big])

    def distance(self, other: "LineParam") -> float:
        """Phase-free distance between normalized Plücker vectors (0 iff same line)."""
        p, q = self.plucker(), other.plucker()
        # sine of the Hermitian angle, computed without cancellation
        return float(np.linalg.norm(p - np.vdot(q, p) * q))

    def same_line(self, other: "LineParam", tol: float = 1e-8) -> bool:
        return self.distance(other) < tol

    def key(self, tol: float = 1e-8) -> tuple:
        p = self.plucker()
        q = np.round(np.concatenate([p.real, p.imag]) / tol).astype(np.int64)
        return tuple(int(v) for v in q)

    def dual(self) -> np.ndarray:
        """For r = 2: the coefficient vector w of the equation w . x = 0."""
        if self.r != 2:
            raise MalformedInput("dual coordinates only defined for plane lines")
        w = np.cross(self.basis[0], self.basis[1])
        return w / np.linalg.norm(w)

    @classmethod
    def from_dual(cls, w: Sequence[complex]) -> "LineParam":
        w = np.asarray(w, dtype=complex)
        # null space of the 1 x 3 matrix w (conjugated for the complex kernel)
        _, _, vh = np.linalg.svd(w[None, :])
        return cls(vh[1:].conj())

    @classmethod
    def random(cls, r: int, rng: np.random.Generator) -> "LineParam":
        return cls(rng.standard_normal((2, r + 1)) + 1j * rng.standard_normal((2, r + 1)))

    def orthonormal(self) -> "LineParam":
        """Same line with a unitary basis, so the slice coordinate is Fubini-Study faithful."""
        q, _ = np.linalg.qr(self.basis.T)
        return LineParam(q.T)

    def to_json(self) -> dict:
        return {"basis": [[[v.real, v.imag] for v in row] for row in self.basis]}

    @classmethod
    def from_json(cls, obj: dict) -> "LineParam":
        try:
            rows = [[complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in row]
                    for row in obj["basis"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad line JSON: {exc}") from exc
        return cls(np.array(rows, dtype=complex))


@dataclass(frozen=True, eq=False)
class BinaryForm:
    """sum_i coeffs[i] s^i t^(d-i).  ``in_x`` flags the zero form of a contained line."""

    coeffs: np.ndarray
    in_x: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size < 1:
            raise MalformedInput("binary form needs at least one coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def d(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def __call__(self, s, t=1.0):
        s = np.asarray(s, dtype=complex)
        t = np.asarray(t, dtype=complex)
        out = np.zeros(np.broadcast(s, t).shape, dtype=complex)
        for i, c in enumerate(self.coeffs):
            out = out + c * s ** i * t ** (self.d - i)
        return out

    def affine(self) -> np.ndarray:
        """Coefficients of p(z) = f(z, 1), highest degree first (numpy order)."""
        return self.coeffs[::-1].copy()

    @classmethod
    def from_roots(cls, points: Iterable[tuple[object, int]], scale: complex = 1.0) -> "BinaryForm":
        poly = np.array([scale], dtype=complex)  # s-ascending
        for p, m in points:
            # INF is the zero of t; a finite p is the zero of s - p t
            factor = np.array([1.0, 0.0], dtype=complex) if p is INF else \
                np.array([-complex(p), 1.0], dtype=complex)
            for _ in range(int(m)):
                poly = np.convolve(poly, factor)
        return cls(poly)


def restrict_to_line(X: HypersurfaceSpec, line: LineParam, tol: float = 0.0) -> BinaryForm:
    """Compose F with [s:t] -> s*b0 + t*b1; coefficients of s^i t^(d-i)."""
    if line.r != X.r:
        raise MalformedInput(f"line lives in P^{line.r}, hypersurface in P^{X.r}")
    b0, b1 = line.basis
    d = X.d
    out = np.zeros(d + 1, dtype=complex)
    # each linear factor x_i = b0_i s + b1_i t, stored s-ascending as [b1_i, b0_i]
    lin_pows: dict = {}
    for e, c in X.coeffs.items():
        term = np.array([c], dtype=complex)
        for i, ei in enumerate(e):
            if ei == 0:
                continue
            if (i, ei) not in lin_pows:
                p = np.array([1.0 + 0j])
                for _ in range(ei):
                    p = np.convolve(p, np.array([b1[i], b0[i]]))
                lin_pows[(i, ei)] = p
            term = np.convolve(term, lin_pows[(i, ei)])
        out += term
    scale = X.norm() * max(np.linalg.norm(b0), np.linalg.norm(b1)) ** d
    contained = bool(np.max(np.abs(out)) <= max(tol, 1e-13) * scale)
    if contained:
        out = np.zeros(d + 1, dtype=complex)
    return BinaryForm(out, in_x=contained)


# ---------------------------------------------------------------------------
# Roots with multiplicity


@dataclass(frozen=True)
class RootDivisor:
    """sum m_i p_i on P^1; points are complex numbers or INF."""

    points: tuple

    def __post_init__(self):
        pts = tuple((p if p is INF else complex(p), int(m)) for p, m in self.points)
        if any(m < 1 for _, m in pts):
            raise MalformedInput("multiplicities must be positive")
        object.__setattr__(self, "points", pts)

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.points)

    @property
    def support(self) -> list:
        return [p for p, _ in self.points]

    def expanded(self) -> list:
        return [p for p, m in self.points for _ in range(m)]

    def to_json(self) -> list:
        return [{"point": "inf" if p is INF else [p.real, p.imag], "mult": m}
                for p, m in self.points]


def multiplicity_vector(rd: RootDivisor) -> tuple[int, ...]:
    """Non-increasing tuple of multiplicities."""
    return tuple(sorted((m for _, m in rd.points), reverse=True))


def _deflation_residual(coeffs_s_asc: np.ndarray, c: complex, m: int) -> float:
    """Relative remainder of dividing f by (s - c t)^m, in the better chart."""
    f = coeffs_s_asc / np.linalg.norm(coeffs_s_asc)
    if abs(c) <= 1.0:
        p = f[::-1]  # z = s/t, highest first
        root = c
    else:
        p = f.copy()  # w = t/s, highest first
        root = 1.0 / c
    divisor = np.poly([root] * m)
    _, rem = np.polydiv(p, divisor)
    return float(np.linalg.norm(rem))


def _refine_cluster(p_desc: np.ndarray, c: complex, m: int, iters: int = 3) -> complex:
    """Newton on the (m-1)-th derivative, where an m-fold root is simple."""
    q = np.polyder(p_desc, m - 1) if m > 1 else p_desc
    dq = np.polyder(q)
    best, best_val = c, abs(np.polyval(q, c))
    z = c
    for _ in range(iters):
        den = np.polyval(dq, z)
        if den == 0:
            break
        z = z - np.polyval(q, z) / den
        val = abs(np.polyval(q, z))
        if val < best_val:
            best, best_val = z, val
    return best


def roots_with_multiplicity(f: BinaryForm, tol: float = DEFAULT_TOL) -> RootDivisor:
    """Roots of f on P^1 grouped into clusters.

    A group of raw roots is accepted as one m-fold root when f lies within
    relative coefficient distance ``tol`` of a form with that m-fold root (the
    cluster "diameter" is measured by that backward error).  The coarsest such
    grouping is returned; if the next merge would cost less than ``10*tol`` the
    grouping is ambiguous and UnstableClustering is raised.
    """
    c = np.asarray(f.coeffs, dtype=complex)
    if f.in_x or not np.any(c):
        raise MalformedInput("cannot take roots of the zero form")
    d = c.size - 1
    scale = np.linalg.norm(c)
    n_inf = 0
    while n_inf < d and abs(c[d - n_inf]) <= tol * scale:
        n_inf += 1
    finite = c[: d - n_inf + 1]
    raw = list(np.roots(finite[::-1])) if finite.size > 1 else []
    points: list = []
    if raw:
        clusters = _cluster(c, finite, raw, tol)
        points.extend(clusters)
    if n_inf:
        points.append((INF, n_inf))
    points.sort(key=lambda pm: (pm[0] is INF, 0 if pm[0] is INF else pm[0].real,
                                0 if pm[0] is INF else pm[0].imag))
    return RootDivisor(tuple(points))


def _cluster(full: np.ndarray, finite: np.ndarray, raw: list, tol: float) -> list:
    n = len(raw)
    pts = np.array(raw, dtype=complex)
    desc = finite[::-1]
    # single-linkage merge order in the chordal metric
    dist = np.array([[chordal(a, b) for b in pts] for a in pts])
    groups = [[i] for i in range(n)]
    history = [[list(g) for g in groups]]
    while len(groups) > 1:
        best = None
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                dd = dist[np.ix_(groups[a], groups[b])].min()
                if best is None or dd < best[0]:
                    best = (dd, a, b)
        _, a, b = best
        groups[a] = groups[a] + groups[b]
        del groups[b]
        history.append([list(g) for g in groups])

    def cost(partition):
        worst, centers = 0.0, []
        for g in partition:
            m = len(g)
            centre = complex(pts[g].mean())
            if m > 1:
                centre = _refine_cluster(desc, centre, m)
                worst = max(worst, _deflation_residual(full, centre, m))
            centers.append((centre, m))
        return worst, centers

    chosen = None
    for level, part in enumerate(history):
        worst, centers = cost(part)
        if worst < tol:
            chosen = (level, centers)
        else:
            break
    if chosen is None:
        worst, _ = cost(history[0])
        raise UnstableClustering("no admissible clustering", {"worst": worst, "tol": tol})
    level, centers = chosen
    if level + 1 < len(history):
        nxt, _ = cost(history[level + 1])
        if nxt <= 10 * tol:
            raise UnstableClustering(
                f"next merge costs {nxt:.3g}, inside the ambiguity band [{tol:g}, {10 * tol:g}]",
                {"next_merge_cost": nxt, "tol": tol, "clusters": len(centers)})
    return centers


# ---------------------------------------------------------------------------
# Plane-curve Hessian


def hessian_curve(X: HypersurfaceSpec) -> HypersurfaceSpec:
    """det of the 3x3 matrix of second partials (degree 3(d-2))."""
    if X.r != 2:
        raise MalformedInput("the Hessian curve is only defined here for r = 2")
    second = [[poly_diff(poly_diff(X.coeffs, i), j) for j in range(3)] for i in range(3)]
    det: dict = {}
    for perm in itertools.permutations(range(3)):
        sign = _perm_sign(perm)
        term = {(0, 0, 0): float(sign)}
        for i, j in enumerate(perm):
            term = poly_mul(term, second[i][j])
        det = poly_add(det, term)
    deg = 3 * (X.d - 2)
    det = {e: c for e, c in det.items() if abs(c) > 0}
    if not det:
        raise MalformedInput("Hessian vanishes identically")
    return HypersurfaceSpec(2, deg, det)


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign
