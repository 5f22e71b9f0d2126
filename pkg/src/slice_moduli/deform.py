"""Versal unfoldings of z^n, multiplication-then-restriction maps, first-order families.

Polynomials in one variable are ascending coefficient lists unless a docstring
says otherwise.  Taylor bases of k[z]/(z - a)^m are (1, (z-a), ..., (z-a)^(m-1)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .forms import BinaryForm, HypersurfaceSpec, LineParam, MalformedInput, restrict_to_line

RANK_TOL = 1e-9


# -- exact-friendly polynomial helpers ---------------------------------------

def _mul(a: list, b: list) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _pow_linear(alpha, m: int) -> list:
    """(z - alpha)^m, ascending."""
    out = [1]
    for _ in range(m):
        out = _mul(out, [-alpha, 1])
    return out


def taylor_shift(asc: list, alpha) -> list:
    """Coefficients of p(z + alpha): the Taylor coefficients of p at alpha."""
    c = list(asc)
    n = len(c)
    for k in range(n - 1):
        for j in range(n - 2, k - 1, -1):
            c[j] += alpha * c[j + 1]
    return c


def _exact(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return x


# -- W_n ---------------------------------------------------------------------

@dataclass(frozen=True)
class UnfoldingPoint:
    """z^n + a[0] z^(n-2) + a[1] z^(n-3) + ... + a[n-2]."""

    n: int
    a: tuple

    def __post_init__(self):
        if self.n < 2:
            raise MalformedInput("W_n needs n >= 2")
        if len(self.a) != self.n - 1:
            raise MalformedInput(f"W_{self.n} point needs {self.n - 1} coefficients, got {len(self.a)}")

    def descending(self) -> list:
        return [1, 0, *self.a]

    def to_json(self) -> dict:
        enc = lambda x: str(x) if isinstance(x, Fraction) else (
            [x.real, x.imag] if isinstance(x, complex) else x)
        return {"n": self.n, "a": [enc(x) for x in self.a]}


def complete_power(f) -> tuple[UnfoldingPoint, object]:
    """Normalise a monic polynomial (descending coefficients) by z -> z + shift.

    shift = -(coefficient of z^(n-1)) / n, so the result has no z^(n-1) term.
    Integer and Fraction input stays exact.
    """
    desc = [_exact(x) for x in f]
    while len(desc) > 1 and desc[0] == 0:
        desc.pop(0)
    n = len(desc) - 1
    if n < 2:
        raise MalformedInput("complete_power needs degree >= 2")
    if desc[0] != 1:
        raise MalformedInput("polynomial must be monic")
    shift = -desc[1] / n
    if shift == 0:
        shift = 0 * shift
    g = taylor_shift(desc[::-1], shift)[::-1]
    g[1] = 0 * g[1]  # exact zero, also kills float round-off
    return UnfoldingPoint(n, tuple(g[2:])), shift


# -- V_{r-1} and rho ---------------------------------------------------------

def _validate(parts, anchors) -> int:
    parts = [int(n) for n in parts]
    if len(parts) != len(anchors):
        raise MalformedInput("need one anchor per part")
    if not parts or min(parts) < 1:
        raise MalformedInput("parts must be positive integers")
    for i in range(len(anchors)):
        for j in range(i):
            if anchors[i] == anchors[j]:
                raise MalformedInput(f"repeated anchor {anchors[i]}")
    excess = sum(n - 1 for n in parts)
    if excess % 2 or excess == 0:
        raise MalformedInput(f"sum of (n_i - 1) = {excess} must be positive and even")
    return excess // 2 + 1


@dataclass
class SubspaceV:
    basis: list  # ascending coefficient lists, degree <= d - 1
    anchors: tuple
    parts: tuple
    labels: list = field(default_factory=list)

    @property
    def d(self) -> int:
        return sum(self.parts)

    @property
    def r(self) -> int:
        return sum(n - 1 for n in self.parts) // 2 + 1

    def descending(self) -> list:
        """Basis polynomials highest degree first, trimmed."""
        out = []
        for b in self.basis:
            b = list(b)
            while len(b) > 1 and b[-1] == 0:
                b.pop()
            out.append(b[::-1])
        return out


def build_V(parts, anchors, d: int | None = None) -> SubspaceV:
    """The explicit subspace: A_i for odd parts, B_{i,j} for even parts paired in input order."""
    anchors = tuple(_exact(a) for a in anchors)
    r = _validate(parts, anchors)
    parts = tuple(int(n) for n in parts)
    if d is not None and d != sum(parts):
        raise MalformedInput(f"parts sum to {sum(parts)}, not d = {d}")
    k = len(parts)

    def rest(skip):
        out = [1]
        for j in range(k):
            if j not in skip:
                out = _mul(out, _pow_linear(anchors[j], parts[j] - 1))
        return out

    basis, labels = [], []
    for i in range(k):
        if parts[i] % 2:
            p = rest({i})
            for e in range(0, parts[i] - 2, 2):
                basis.append(_mul(p, _pow_linear(anchors[i], e)))
                labels.append(f"A{i + 1}:p{i + 1}(z-a{i + 1})^{e}")
    evens = [i for i in range(k) if parts[i] % 2 == 0]
    for i, j in zip(evens[::2], evens[1::2]):
        common = rest({i, j})
        q1 = _mul(_pow_linear(anchors[j], parts[j] - 2), common)
        q2 = _mul(_pow_linear(anchors[i], parts[i] - 2), common)
        for e in range(0, parts[i] - 1, 2):
            basis.append(_mul(q1, _pow_linear(anchors[i], e)))
            labels.append(f"B{i + 1},{j + 1}:q{i + 1}(z-a{i + 1})^{e}")
        # the top q1 term equals q2 (z - a_j)^(n_j - 2); continue downward from there
        for e in range(parts[j] - 4, -1, -2):
            basis.append(_mul(q2, _pow_linear(anchors[j], e)))
            labels.append(f"B{i + 1},{j + 1}:q{j + 1}(z-a{j + 1})^{e}")
    if len(basis) != r - 1:
        raise MalformedInput(f"construction produced {len(basis)} polynomials, expected {r - 1}")
    return SubspaceV(basis, anchors, parts, labels)


def spread_anchors(k: int, rng: np.random.Generator, jitter: float = 0.5) -> list:
    """k random anchors on the unit circle, one per arc of angle 2 pi / k.

    The Taylor-basis matrices lose conditioning like a power of the smallest
    anchor gap, so unrestricted i.i.d. anchors occasionally sit next to the
    collision locus.  Stratifying keeps draws random but away from it.
    """
    u = (rng.permutation(k) + jitter * rng.random(k) + rng.random()) / k
    return [complex(z) for z in np.exp(2j * np.pi * u)]


def random_V(parts, anchors, rng: np.random.Generator) -> SubspaceV:
    """A random (r-1)-dimensional subspace of P_{d-1}."""
    r = _validate(parts, anchors)
    d = sum(int(n) for n in parts)
    basis = [list(rng.standard_normal(d) + 1j * rng.standard_normal(d)) for _ in range(r - 1)]
    return SubspaceV(basis, tuple(anchors), tuple(int(n) for n in parts), ["random"] * (r - 1))


def _restriction_matrix(V: SubspaceV, orders: list[int]) -> np.ndarray:
    """Columns z*v, v for each basis v; rows Taylor coefficients 0..orders[i]-1 at each anchor."""
    cols = []
    for v in V.basis:
        for mult in ([0, 1], [1]):
            poly = _mul(list(v), mult)
            col = []
            for a, m in zip(V.anchors, orders):
                t = taylor_shift(poly, a) + [0] * m
                col.extend(t[:m])
            cols.append(col)
    return np.array([[complex(x) for x in c] for c in cols], dtype=complex).T


@dataclass
class RhoReport:
    matrix: np.ndarray
    singular_values: np.ndarray
    ratio: float
    tol: float

    @property
    def square(self) -> bool:
        return self.matrix.shape[0] == self.matrix.shape[1]

    @property
    def is_mini_versal(self) -> bool:
        return self.square and self.ratio > self.tol

    def to_json(self) -> dict:
        return {
            "shape": list(self.matrix.shape),
            "matrix": _cjson(self.matrix),
            "singular_values": [float(s) for s in self.singular_values],
            "sigma_ratio": self.ratio,
            "is_mini_versal": self.is_mini_versal,
        }


def _cjson(M: np.ndarray):
    if np.all(np.abs(M.imag) == 0):
        return [[float(x) for x in row] for row in M.real]
    return [[[float(x.real), float(x.imag)] for x in row] for row in M]


def _sv_ratio(M: np.ndarray) -> tuple[np.ndarray, float]:
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return sv, 0.0
    return sv, float(sv[-1] / sv[0]) if min(M.shape) == M.shape[1] else 0.0


def rho_matrix(V: SubspaceV, tol: float = RANK_TOL) -> RhoReport:
    """Matrix of P_1 (x) V -> sum_i k[z]/(z - a_i)^(n_i - 1)."""
    M = _restriction_matrix(V, [n - 1 for n in V.parts])
    sv, ratio = _sv_ratio(M)
    return RhoReport(M, sv, ratio, tol)


@dataclass
class TransversalityReport:
    matrix: np.ndarray
    w: np.ndarray
    singular_values: np.ndarray
    injective_ratio: float
    w_residual: float  # distance from w to the image, relative to |w|
    tol: float

    @property
    def injective(self) -> bool:
        return self.injective_ratio > self.tol

    @property
    def w_not_in_image(self) -> bool:
        return self.w_residual > self.tol

    @property
    def holds(self) -> bool:
        return self.injective and self.w_not_in_image

    def to_json(self) -> dict:
        return {
            "shape": list(self.matrix.shape),
            "matrix": _cjson(self.matrix),
            "singular_values": [float(s) for s in self.singular_values],
            "injective_sigma_ratio": self.injective_ratio,
            "w_residual": self.w_residual,
            "injective": self.injective,
            "w_not_in_image": self.w_not_in_image,
        }


def check_transversality(parts, anchors, V: SubspaceV | None = None, tol: float = RANK_TOL) -> TransversalityReport:
    """rho' into k[z]/(z-a_1)^(n_1) + sum_{i>=2} k[z]/(z-a_i)^(n_i-1), and w = ((z-a_1)^(n_1-1), 0, ...)."""
    V = V if V is not None else build_V(parts, anchors)
    orders = [V.parts[0]] + [n - 1 for n in V.parts[1:]]
    M = _restriction_matrix(V, orders)
    w = np.zeros(M.shape[0], dtype=complex)
    w[orders[0] - 1] = 1.0
    sv, ratio = _sv_ratio(M)
    x, *_ = np.linalg.lstsq(M, w, rcond=None)
    res = float(np.linalg.norm(M @ x - w))
    return TransversalityReport(M, w, sv, ratio, res, tol)


# -- first-order families ----------------------------------------------------

@dataclass
class FirstOrderFamily:
    p: BinaryForm  # X restricted to the line
    eps: BinaryForm  # the epsilon-part, same degree
    g: list  # BinaryForm of degree d-1, one per normal direction
    frame: np.ndarray  # columns: normal directions, then the two line vectors

    def at(self, h: complex) -> np.ndarray:
        return self.p.coeffs + h * self.eps.coeffs


def normal_frame(line: LineParam) -> np.ndarray:
    """Invertible M = [N | b0 | b1] with N an orthonormal basis of the complement."""
    B = line.basis.T
    _, _, vh = np.linalg.svd(B.conj().T)
    N = vh[2:].conj().T
    return np.concatenate([N, B], axis=1)


def first_order_family(X: HypersurfaceSpec, line: LineParam, c) -> FirstOrderFamily:
    """X|_l + eps * sum_j (c[0, j] z + c[1, j]) g_j in the frame of ``normal_frame``.

    ``c`` has shape (2, r-1): row 0 multiplies z (= s), row 1 the constant (= t).
    """
    c = np.asarray(c, dtype=complex).reshape(2, X.r - 1)
    p = restrict_to_line(X, line)
    if p.in_x:
        raise MalformedInput("line is contained in the hypersurface")
    d = X.d
    M = normal_frame(line)
    N = M[:, : X.r - 1]
    b0, b1 = line.basis
    if d == 0:
        zero = BinaryForm(np.zeros(1))
        return FirstOrderFamily(p, zero, [], M)
    # g_j(z, 1) sampled at d roots of unity, interpolated
    s = np.exp(2j * np.pi * np.arange(d) / d)
    grads = X.gradient(s[:, None] * b0 + b1)  # (d, r+1)
    vals = grads @ N  # (d, r-1)
    gcoef = np.fft.fft(vals, axis=0) / d  # ascending in z
    eps = np.zeros(d + 1, dtype=complex)
    for j in range(X.r - 1):
        eps[1:] += c[0, j] * gcoef[:, j]
        eps[:-1] += c[1, j] * gcoef[:, j]
    return FirstOrderFamily(p, BinaryForm(eps), [BinaryForm(gcoef[:, j]) for j in range(X.r - 1)], M)


def finite_difference_slice(X: HypersurfaceSpec, line: LineParam, c, h: float) -> np.ndarray:
    """(f_h - f_0) / h where f_h restricts X to the line moved by h in direction c."""
    c = np.asarray(c, dtype=complex).reshape(2, X.r - 1)
    N = normal_frame(line)[:, : X.r - 1]
    b0, b1 = line.basis
    moved = LineParam(np.array([b0 + h * N @ c[0], b1 + h * N @ c[1]]))
    return (restrict_to_line(X, moved).coeffs - restrict_to_line(X, line).coeffs) / h


# -- the Z curve -------------------------------------------------------------

def z_curve_coefficients(m1: int, m2: int) -> list[int]:
    """c_1..c_n of (z - m2 t)^m1 (z + m1 t)^m2 = z^n + sum_j c_j t^j z^(n-j)."""
    if m1 < 1 or m2 < 1:
        raise MalformedInput("m1, m2 must be positive")
    asc = _mul(_pow_linear(m2, m1), _pow_linear(-m1, m2))
    desc = asc[::-1]
    return desc[1:]


def z_curve(m1: int, m2: int, t=1) -> UnfoldingPoint:
    c = z_curve_coefficients(m1, m2)
    if c[0] != 0:
        raise ArithmeticError("z^(n-1) coefficient does not vanish")
    if m1 != m2 and any(x == 0 for x in c[1:]):
        raise ArithmeticError(f"vanishing coefficient on Z_{m1},{m2}: {c}")
    t = _exact(t)
    return UnfoldingPoint(m1 + m2, tuple(cj * t ** (j + 2) for j, cj in enumerate(c[1:])))


@dataclass
class IntersectionReport:
    length: int | None  # None when the hyperplane contains the curve
    series: list  # (power of t, coefficient) along the curve
    precondition_ok: bool  # the a_2 coefficient is nonzero
    curve_nondegenerate: bool  # m1 != m2

    def to_json(self) -> dict:
        return {"length": self.length, "series": [[j, str(v)] for j, v in self.series],
                "precondition_ok": self.precondition_ok,
                "curve_nondegenerate": self.curve_nondegenerate}


def z_curve_intersection_length(m1: int, m2: int, hyperplane) -> IntersectionReport:
    """Order at t = 0 of the linear form (weights on a_2, ..., a_n) along the Z curve."""
    c = z_curve_coefficients(m1, m2)[1:]
    lam = [Fraction(str(x)) if isinstance(x, float) else x for x in hyperplane]
    if len(lam) != len(c):
        raise MalformedInput(f"hyperplane needs {len(c)} weights (a_2..a_{m1 + m2}), got {len(lam)}")
    series = [(j + 2, lj * cj) for j, (lj, cj) in enumerate(zip(lam, c)) if lj * cj != 0]
    length = series[0][0] if series else None
    return IntersectionReport(length, series, lam[0] != 0, m1 != m2)
