"""Batched predictor-corrector continuation for (d-2)-incident lines of plane curves.

Every path is tracked in parameter space: the coefficient vector of F moves
along straight segments while Newton corrections keep the line on the
incidence variety.  See ``LineTypeSystem`` for the unknowns.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .forms import (
    INF,
    HypersurfaceSpec,
    LineParam,
    MalformedInput,
    RootDivisor,
    monomials,
    multiplicity_vector,
    restrict_to_line,
    roots_with_multiplicity,
)


class TrackingFailure(RuntimeError):
    """Raised when paths cannot be followed or endpoints cannot be matched."""

    def __init__(self, message: str, indices=()):
        super().__init__(message)
        self.indices = list(indices)


def _cross_matrix(e: np.ndarray) -> np.ndarray:
    # cross(w, e) = -[e]_x w
    return -np.array([[0, -e[2], e[1]], [e[2], 0, -e[0]], [-e[1], e[0], 0]], dtype=complex)


def bconv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched product of ascending coefficient arrays (B, na) x (B, nb)."""
    na, nb = a.shape[-1], b.shape[-1]
    out = np.zeros(a.shape[:-1] + (na + nb - 1,), dtype=complex)
    for i in range(na):
        out[..., i:i + nb] += a[..., i:i + 1] * b
    return out


def bdivmod(p: np.ndarray, D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched division by monic ``D`` (ascending coefficients, D[..., -1] == 1)."""
    delta = D.shape[-1] - 1
    cur = np.array(p, dtype=complex)
    n = cur.shape[-1] - 1
    if n < delta:
        pad = np.zeros(cur.shape[:-1] + (delta - n - 1,), dtype=complex)
        return np.zeros(cur.shape[:-1] + (1,), dtype=complex), np.concatenate([cur, pad], axis=-1)
    quo = np.zeros(cur.shape[:-1] + (n - delta + 1,), dtype=complex)
    for i in range(n, delta - 1, -1):
        c = cur[..., i].copy()
        quo[..., i - delta] = c
        cur[..., i - delta:i + 1] -= c[..., None] * D
    return quo, cur[..., :delta]


@dataclass
class _Group:
    mult: int
    count: int
    offset: int


@dataclass
class Charts:
    """Per-path affine charts: patch vector h and the maps w -> P(w), Q(w)."""

    h: np.ndarray  # (B, 3)
    Ma: np.ndarray  # (B, 3, 3)
    Mb: np.ndarray  # (B, 3, 3)

    def __getitem__(self, idx) -> "Charts":
        return Charts(self.h[idx], self.Ma[idx], self.Mb[idx])

    def __setitem__(self, idx, other: "Charts") -> None:
        self.h[idx] = other.h
        self.Ma[idx] = other.Ma
        self.Mb[idx] = other.Mb

    def __len__(self) -> int:
        return self.h.shape[0]

    def copy(self) -> "Charts":
        return Charts(self.h.copy(), self.Ma.copy(), self.Mb.copy())

    @staticmethod
    def concat(parts: list["Charts"]) -> "Charts":
        return Charts(*(np.concatenate([getattr(c, f) for c in parts]) for f in ("h", "Ma", "Mb")))


def _adapted_chart(w: np.ndarray, contacts: list[np.ndarray]) -> tuple:
    """Chart with |w| = 1 whose origin z = 0 is the mean direction of the contact points.

    With the contacts clustered around z = 0 and the point at infinity opposite
    them, the monic factor coefficients stay bounded.
    """
    w = w / np.linalg.norm(w)
    basis = LineParam.from_dual(w).basis  # orthonormal rows
    c = np.array([basis.conj() @ x for x in contacts])
    c = c / np.linalg.norm(c, axis=1, keepdims=True)
    _, vecs = np.linalg.eigh(c.T @ c.conj())
    Q0 = vecs[:, 1] @ basis
    P0 = vecs[:, 0] @ basis
    # w x e = P with e = (P x conj w) / |w|^2 for P on the line
    Ma = _cross_matrix(np.cross(P0, w.conj()))
    Mb = _cross_matrix(np.cross(Q0, w.conj()))
    return w.conj(), Ma, Mb


class LineTypeSystem:
    """Square system whose zeros are the lines of one multiplicity vector on degree-d plane curves.

    Unknowns: ``w`` (dual vector of the line, patched by ``h . w = 1``) and,
    for every multiplicity m >= 2 occurring c_m times, a monic polynomial Q_m
    of degree c_m in the line coordinate z.  Equations: the remainder of
    p(z) = F(z P(w) + Q(w)) modulo D = prod Q_m^m.  Simple parts are left in
    the cofactor, so the only singular points are genuine branch points.
    Each path carries its own chart (see ``Charts``) which is reset whenever
    it degrades.  The system is square exactly for (d-2)-incident types; other
    types are overdetermined and only used for least-squares refinement.
    """

    def __init__(self, d: int, mult: tuple[int, ...]):
        mult = tuple(sorted(mult, reverse=True))
        if sum(mult) != d or min(mult) < 1:
            raise MalformedInput(f"multiplicity vector {mult} does not sum to d={d}")
        self.d = d
        self.mult = mult
        self.basis = monomials(3, d)
        self.exps = np.array(self.basis, dtype=int)
        k = d + 1
        self.z = np.exp(2j * np.pi * np.arange(k) / k)
        # coefficients (ascending in z) = Vinv @ values at the sample points
        self.Vinv = np.linalg.inv(np.vander(self.z, k, increasing=True))
        counts = Counter(m for m in mult if m >= 2)
        self.groups: list[_Group] = []
        off = 3
        for m in sorted(counts, reverse=True):
            self.groups.append(_Group(m, counts[m], off))
            off += counts[m]
        self.n = off
        self.delta = sum(g.mult * g.count for g in self.groups)
        if not self.groups:
            raise MalformedInput(f"type {mult} has no multiple part; nothing to impose")
        # square (trackable) exactly for (d-2)-incident types; otherwise Gauss-Newton only
        self.square = self.delta + 1 == self.n

    # -- geometry helpers -------------------------------------------------
    def _PQ(self, w, ch: Charts):
        return np.einsum("bij,bj->bi", ch.Ma, w), np.einsum("bij,bj->bi", ch.Mb, w)

    def points(self, w: np.ndarray, ch: Charts) -> np.ndarray:
        P, Q = self._PQ(w, ch)
        return self.z[None, :, None] * P[:, None, :] + Q[:, None, :]

    def line(self, y: np.ndarray, ch: Charts) -> LineParam:
        """Line of a single solution row (``ch`` holds one chart)."""
        P, Q = self._PQ(np.atleast_2d(y)[:, :3], ch)
        return LineParam(np.stack([P[0], Q[0]]))

    def lines(self, y: np.ndarray, ch: Charts) -> list[LineParam]:
        P, Q = self._PQ(np.atleast_2d(y)[:, :3], ch)
        return [LineParam(np.stack([a, b])) for a, b in zip(P, Q)]

    def _mons(self, x):
        return np.prod(x[..., None, :] ** self.exps, axis=-1)

    def _grad_mons(self, x):
        out = []
        for i in range(3):
            e = self.exps.copy()
            factor = e[:, i].astype(complex)
            e[:, i] = np.maximum(e[:, i] - 1, 0)
            out.append(np.prod(x[..., None, :] ** e, axis=-1) * factor)
        return np.stack(out, axis=-1)  # (B, K, M, 3)

    def _q(self, y, g):
        q = np.ones((y.shape[0], g.count + 1), dtype=complex)
        q[:, : g.count] = y[:, g.offset:g.offset + g.count]
        return q

    def _D(self, y):
        B = y.shape[0]
        D = np.ones((B, 1), dtype=complex)
        powers = {}
        for g in self.groups:
            q = self._q(y, g)
            qm = np.ones((B, 1), dtype=complex)
            for _ in range(g.mult):
                qm = bconv(qm, q)
            powers[g.mult] = qm
            D = bconv(D, qm)
        return D, powers

    def restricted(self, y: np.ndarray, p: np.ndarray, ch: Charts) -> np.ndarray:
        """Ascending z-coefficients of F on the line encoded by y."""
        y = np.atleast_2d(y)
        vals = np.einsum("bkm,bm->bk", self._mons(self.points(y[:, :3], ch)),
                         np.broadcast_to(p, (y.shape[0], p.shape[-1])))
        return vals @ self.Vinv.T

    # -- system -----------------------------------------------------------
    def residual(self, y: np.ndarray, p: np.ndarray, ch: Charts) -> np.ndarray:
        y = np.atleast_2d(y)
        coeffs = self.restricted(y, p, ch)
        D, _ = self._D(y)
        _, rem = bdivmod(coeffs, D)
        patch = np.einsum("bi,bi->b", y[:, :3], ch.h) - 1
        return np.concatenate([rem, patch[:, None]], axis=1)

    def jacobian(self, y: np.ndarray, p: np.ndarray, ch: Charts) -> np.ndarray:
        y = np.atleast_2d(y)
        B = y.shape[0]
        p = np.broadcast_to(p, (B, p.shape[-1]))
        x = self.points(y[:, :3], ch)
        grad = np.einsum("bkmi,bm->bki", self._grad_mons(x), p)
        dxdw = self.z[None, :, None, None] * ch.Ma[:, None] + ch.Mb[:, None]  # (B, K, 3, 3)
        dvals = np.einsum("bki,bkij->bkj", grad, dxdw)
        dcoef = np.einsum("ck,bkj->bjc", self.Vinv, dvals)  # (B, 3, d+1)
        D, powers = self._D(y)
        J = np.zeros((B, self.delta + 1, self.n), dtype=complex)
        _, rw = bdivmod(dcoef, D[:, None, :])
        J[:, : self.delta, :3] = np.transpose(rw, (0, 2, 1))
        coeffs = np.einsum("bkm,bm->bk", self._mons(x), p) @ self.Vinv.T
        quo, _ = bdivmod(coeffs, D)
        for g in self.groups:
            q = self._q(y, g)
            dq = np.ones((B, 1), dtype=complex)
            for _ in range(g.mult - 1):
                dq = bconv(dq, q)
            dq = g.mult * dq
            for h in self.groups:
                if h.mult != g.mult:
                    dq = bconv(dq, powers[h.mult])
            base = bconv(quo, dq)
            for j in range(g.count):
                shifted = np.concatenate([np.zeros((B, j), dtype=complex), base], axis=1)
                _, rj = bdivmod(shifted, D)
                J[:, : self.delta, g.offset + j] = -rj
        J[:, self.delta, :3] = ch.h
        return J

    def dparam(self, y: np.ndarray, dp: np.ndarray, ch: Charts) -> np.ndarray:
        """Derivative of the residual along the parameter direction dp."""
        y = np.atleast_2d(y)
        coeffs = (self._mons(self.points(y[:, :3], ch)) @ dp) @ self.Vinv.T
        D, _ = self._D(y)
        _, rem = bdivmod(coeffs, D)
        out = np.zeros((y.shape[0], self.delta + 1), dtype=complex)
        out[:, : self.delta] = rem
        return out

    # -- charts -----------------------------------------------------------
    def _from_contacts(self, w: np.ndarray, contacts: list[list[np.ndarray]]):
        """(y, chart) for one line given its contact points in C^3, grouped like ``groups``."""
        h, Ma, Mb = _adapted_chart(w, [x for pts in contacts for x in pts])
        y = np.zeros(self.n, dtype=complex)
        y[:3] = w / (h @ w)
        P, Q = Ma @ y[:3], Mb @ y[:3]
        basis = np.stack([P, Q])
        for g, pts in zip(self.groups, contacts):
            zs = []
            for x in pts:
                a, b = np.linalg.lstsq(basis.T, x, rcond=None)[0]
                zs.append(a / b)
            y[g.offset:g.offset + g.count] = np.poly(zs)[::-1][: g.count]
        return y, (h, Ma, Mb)

    def contacts(self, y: np.ndarray, ch: Charts) -> list[list[list[np.ndarray]]]:
        """Contact points in C^3 per row and group."""
        y = np.atleast_2d(y)
        P, Q = self._PQ(y[:, :3], ch)
        out = []
        for b in range(y.shape[0]):
            row = []
            for g in self.groups:
                zs = np.roots(self._q(y[b:b + 1], g)[0][::-1])
                row.append([z * P[b] + Q[b] for z in zs])
            out.append(row)
        return out

    def rechart(self, y: np.ndarray, ch: Charts) -> tuple[np.ndarray, Charts]:
        y = np.atleast_2d(y)
        rows, hs, mas, mbs = [], [], [], []
        for yb, cb in zip(y, self.contacts(y, ch)):
            yy, (h, Ma, Mb) = self._from_contacts(yb[:3], cb)
            rows.append(yy)
            hs.append(h)
            mas.append(Ma)
            mbs.append(Mb)
        return np.array(rows), Charts(np.array(hs), np.array(mas), np.array(mbs))

    def chart_quality(self, y: np.ndarray, ch: Charts) -> np.ndarray:
        """Large when the chart is poor for the current solution."""
        y = np.atleast_2d(y)
        w = y[:, :3]
        scale = np.linalg.norm(w, axis=1) * np.linalg.norm(ch.h, axis=1)
        cauchy = 1 + np.max(np.abs(y[:, 3:]), axis=1)
        P, Q = self._PQ(w, ch)
        sv = np.linalg.svd(np.stack([P, Q], axis=1), compute_uv=False)
        return np.maximum.reduce([scale, cauchy, sv[:, 0] / sv[:, 1]])

    # -- conversion -------------------------------------------------------
    def encode(self, line: LineParam, F: HypersurfaceSpec, tol: float = 1e-6,
               divisor: RootDivisor | None = None):
        """(y, chart) for a known line of F, before Newton polishing.

        ``divisor`` (in the line's own coordinate) skips re-clustering.
        """
        if divisor is None:
            divisor = roots_with_multiplicity(restrict_to_line(F, line), tol)
        if multiplicity_vector(divisor) != self.mult:
            raise MalformedInput(f"line has type {multiplicity_vector(divisor)}, not {self.mult}")
        contacts = []
        for g in self.groups:
            contacts.append([homogeneous_point(line, pt) for pt, m in divisor.points if m == g.mult])
        y, c = self._from_contacts(line.dual(), contacts)
        return y, Charts(c[0][None], c[1][None], c[2][None])

    def divisor(self, y: np.ndarray, p: np.ndarray, ch: Charts) -> RootDivisor:
        """Divisor (in the chart's line coordinate) of a single row."""
        y = np.atleast_2d(y)
        pts = []
        for g in self.groups:
            for root in np.roots(self._q(y, g)[0][::-1]):
                pts.append((complex(root), g.mult))
        D, _ = self._D(y)
        quo, _ = bdivmod(self.restricted(y, p, ch), D)
        for root in _binary_roots(quo[0], self.d - self.delta):
            pts.append((root, 1))
        return RootDivisor(tuple(pts))


def homogeneous_point(line: LineParam, pt) -> np.ndarray:
    """Point of P^2 on ``line`` with line coordinate ``pt`` (INF allowed)."""
    if pt is INF:
        return line.basis[0].copy()
    return pt * line.basis[0] + line.basis[1]


def _binary_roots(q_asc: np.ndarray, degree: int) -> list:
    q = np.zeros(degree + 1, dtype=complex)
    q[: min(q_asc.size, degree + 1)] = q_asc[: degree + 1]
    n_inf = 0
    scale = np.linalg.norm(q)
    while n_inf < degree and abs(q[degree - n_inf]) <= 1e-14 * scale:
        n_inf += 1
    finite = q[: degree - n_inf + 1]
    roots = [complex(z) for z in np.roots(finite[::-1])] if finite.size > 1 else []
    return roots + [INF] * n_inf


# ---------------------------------------------------------------------------
# Newton and path tracking


def _solve(J, r):
    if J.shape[-1] != J.shape[-2]:
        return np.stack([np.linalg.lstsq(Ji, ri, rcond=None)[0] for Ji, ri in zip(J, r)])
    try:
        return np.linalg.solve(J, r[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.stack([np.linalg.lstsq(Ji, ri, rcond=None)[0] for Ji, ri in zip(J, r)])


def newton(system: LineTypeSystem, y: np.ndarray, p: np.ndarray, ch: Charts, iters: int = 8,
           tol: float = 1e-13) -> tuple[np.ndarray, np.ndarray]:
    """Polish a batch of approximate solutions; returns (y, relative residual)."""
    y = np.array(np.atleast_2d(y), dtype=complex)
    for _ in range(iters):
        dy = _solve(system.jacobian(y, p, ch), system.residual(y, p, ch))
        y = y - dy
        if np.all(np.linalg.norm(dy, axis=1) <= tol * (1 + np.linalg.norm(y, axis=1))):
            break
    return y, relative_residual(system, y, p, ch)


def relative_residual(system: LineTypeSystem, y: np.ndarray, p: np.ndarray, ch: Charts) -> np.ndarray:
    y = np.atleast_2d(y)
    res = system.residual(y, p, ch)
    scale = np.linalg.norm(system.restricted(y, p, ch), axis=1)
    return np.linalg.norm(res, axis=1) / np.maximum(scale, 1e-300)


@dataclass
class TrackerOptions:
    h_init: float = 0.02
    h_max: float = 0.1
    h_min: float = 1e-10
    max_steps: int = 50000
    accept_tol: float = 1e-5
    residual_tol: float = 1e-9
    final_tol: float = 1e-13
    rechart_above: float = 4.0


def track_segment(system: LineTypeSystem, y0: np.ndarray, ch: Charts, p0: np.ndarray,
                  p1: np.ndarray, opts: TrackerOptions | None = None,
                  failed: np.ndarray | None = None) -> tuple[np.ndarray, Charts]:
    """Follow every row of ``y0`` as the parameters move from p0 to p1 in a straight line.

    On step-size underflow: raise TrackingFailure (with offending indices), or,
    if a boolean ``failed`` mask is supplied, mark the path in it and freeze it.
    Rows already marked in ``failed`` are not tracked.
    """
    opts = opts or TrackerOptions()
    if not system.square:
        raise MalformedInput(f"type {system.mult} gives an overdetermined system; cannot track")
    y = np.array(np.atleast_2d(y0), dtype=complex)
    ch = ch.copy()
    B = y.shape[0]
    tau = np.zeros(B)
    if failed is not None:
        tau[failed] = 2.0
    live = np.flatnonzero(tau == 0.0)
    if live.size:
        y[live], ch[live] = system.rechart(y[live], ch[live])
        y[live], _ = newton(system, y[live], p0, ch[live], iters=3)
    dp = p1 - p0
    h = np.full(B, opts.h_init)
    streak = np.zeros(B, dtype=int)

    def velocity(yy, tt, cc):
        pp = p0[None, :] + tt[:, None] * dp[None, :]
        return -_solve(system.jacobian(yy, pp, cc), system.dparam(yy, dp, cc))

    steps = 0
    while True:
        active = np.flatnonzero(tau < 1.0)
        if active.size == 0:
            break
        steps += 1
        if steps > opts.max_steps:
            raise TrackingFailure("step budget exhausted", active)
        ya, ta, ca = y[active], tau[active], ch[active]
        ha = np.minimum(h[active], 1.0 - ta)
        k1 = velocity(ya, ta, ca)
        k2 = velocity(ya + 0.5 * ha[:, None] * k1, ta + 0.5 * ha, ca)
        k3 = velocity(ya + 0.5 * ha[:, None] * k2, ta + 0.5 * ha, ca)
        k4 = velocity(ya + ha[:, None] * k3, ta + ha, ca)
        yp = ya + (ha[:, None] / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        tn = np.where(1.0 - (ta + ha) < 1e-14, 1.0, ta + ha)
        pp = p0[None, :] + tn[:, None] * dp[None, :]
        ok = np.ones(active.size, dtype=bool)
        first = None
        with np.errstate(all="ignore"):
            for it in range(3):
                dy = _solve(system.jacobian(yp, pp, ca), system.residual(yp, pp, ca))
                nrm = np.linalg.norm(dy, axis=1) / (1 + np.linalg.norm(yp, axis=1))
                if it == 0:
                    first = nrm
                    ok &= nrm < opts.accept_tol
                elif it == 2:
                    # no divergence; near-singular Jacobians leave rounding-level noise
                    ok &= nrm <= np.maximum(first, 1e-7)
                yp = yp - dy
            ok &= np.all(np.isfinite(yp), axis=1)
            ok &= relative_residual(system, yp, pp, ca) < opts.residual_tol
        good = active[ok]
        bad = active[~ok]
        y[good] = yp[ok]
        tau[good] = tn[ok]
        streak[good] += 1
        grow = good[streak[good] >= 2]
        h[grow] = np.minimum(h[grow] * 1.6, opts.h_max)
        streak[grow] = 0
        h[bad] *= 0.5
        streak[bad] = 0
        dead = bad[h[bad] < opts.h_min]
        if dead.size:
            if failed is None:
                raise TrackingFailure("step size underflow (discriminant proximity)", dead)
            failed[dead] = True
            tau[dead] = 2.0
        if good.size:
            worn = good[system.chart_quality(y[good], ch[good]) > opts.rechart_above]
            if worn.size:
                y[worn], ch[worn] = system.rechart(y[worn], ch[worn])
    live = np.flatnonzero(tau <= 1.0)
    if live.size:
        y[live], _ = newton(system, y[live], p1, ch[live], tol=opts.final_tol)
    return y, ch


def track_polygon(system: LineTypeSystem, y0: np.ndarray, ch: Charts, waypoints: list[np.ndarray],
                  opts: TrackerOptions | None = None,
                  failed: np.ndarray | None = None) -> tuple[np.ndarray, Charts]:
    y = np.array(np.atleast_2d(y0), dtype=complex)
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        y, ch = track_segment(system, y, ch, a, b, opts, failed)
    return y, ch


def plucker_matrix(lines: list[LineParam]) -> np.ndarray:
    return np.array([ln.plucker() for ln in lines])


def plucker_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """dist[i, j] between unit Plücker rows A[i] and B[j] (same metric as LineParam.distance)."""
    ov = A.conj() @ B.T  # <A_i, B_j>
    # |A_i - <B_j, A_i> B_j|^2 = 1 - |ov|^2, so go through the explicit difference
    diff = A[:, None, :] - (ov.conj())[:, :, None] * B[None, :, :]
    return np.linalg.norm(diff, axis=2)


def match_lines(start: list[LineParam], end: list[LineParam], tol: float = 1e-6) -> list[int]:
    """perm[i] = index j in ``start`` nearest to end[i]; strict bijection or TrackingFailure."""
    A = plucker_matrix(start)
    Bm = plucker_matrix(end)
    dist = plucker_distances(Bm, A)
    perm = [int(j) for j in np.argmin(dist, axis=1)]
    far = [i for i, j in enumerate(perm) if dist[i, j] > tol]
    if far:
        raise TrackingFailure(f"{len(far)} endpoints did not land on a start line", far)
    seen: dict[int, int] = {}
    clash = []
    for i, j in enumerate(perm):
        if j in seen:
            clash.extend([seen[j], i])
        seen[j] = i
    if clash:
        raise TrackingFailure("path jump: two endpoints matched the same start line", clash)
    return perm


def seed_solution(system: LineTypeSystem, rng: np.random.Generator):
    """A random curve (coefficient vector) with one exact solution: (p, y, chart)."""
    crand = lambda *shape: rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    w = crand(3)
    line = LineParam.from_dual(w)
    contacts = [[homogeneous_point(line, complex(z)) for z in crand(g.count)] for g in system.groups]
    y, c = system._from_contacts(w, contacts)
    ch = Charts(c[0][None], c[1][None], c[2][None])
    M = len(system.basis)
    # the remainder is linear in F: project a random F onto its kernel
    A = np.stack([system.residual(y, np.eye(M)[j], ch)[0, : system.delta] for j in range(M)], axis=1)
    p = crand(M)
    for _ in range(2):
        corr, *_ = np.linalg.lstsq(A, -(A @ p), rcond=None)
        p = p + corr
    y, _ = newton(system, y, p, ch)
    return p, y, ch


# ---------------------------------------------------------------------------
# Monodromy solving


def random_direction(p: np.ndarray, rng: np.random.Generator, radius: float) -> np.ndarray:
    """Complex Gaussian offset with norm ``radius * |p|``."""
    g = rng.standard_normal(p.shape) + 1j * rng.standard_normal(p.shape)
    return radius * np.linalg.norm(p) * g / np.linalg.norm(g)


def triangle(p: np.ndarray, rng: np.random.Generator, radius: float) -> list[np.ndarray]:
    return [p, p + random_direction(p, rng, radius), p + random_direction(p, rng, radius), p]


def new_rows(known: np.ndarray, cand: np.ndarray, tol: float = 1e-6) -> list[int]:
    """Indices of ``cand`` Plücker rows farther than tol from ``known`` and from each other."""
    keep: list[int] = []
    if cand.shape[0] == 0:
        return keep
    far = np.ones(cand.shape[0], dtype=bool)
    if known.shape[0]:
        far = plucker_distances(cand, known).min(axis=1) > tol
    for i in np.flatnonzero(far):
        if not keep or plucker_distances(cand[i:i + 1], cand[keep]).min() > tol:
            keep.append(int(i))
    return keep


@dataclass
class SolveInfo:
    loops: int = 0
    failed_paths: int = 0
    closed: bool = False  # a full loop permuted the final set onto itself
    history: list = None


def monodromy_solve(system: LineTypeSystem, p: np.ndarray, rng: np.random.Generator,
                    expected: int | None = None, start: tuple | None = None, max_loops: int = 60,
                    stall: int = 5, radius: float = 1.0, opts: TrackerOptions | None = None,
                    res_tol: float = 1e-10):
    """Populate the solution fiber over ``p`` by random triangle loops.

    Stops when ``expected`` solutions are known and one further loop closes up
    as a bijection, or after ``stall`` consecutive loops without progress.
    Returns (y, charts, SolveInfo).
    """
    info = SolveInfo(history=[])
    if start is None:
        for _ in range(10):
            p0, y0, c0 = seed_solution(system, rng)
            failed = np.zeros(1, dtype=bool)
            y, ch = track_segment(system, y0, c0, p0, p, opts, failed)
            if not failed[0] and relative_residual(system, y, p, ch)[0] < res_tol:
                break
        else:
            raise TrackingFailure("could not carry a seed solution to the target")
    else:
        y, ch = start
        y = np.atleast_2d(y)
    quiet = 0
    while info.loops < max_loops:
        info.loops += 1
        failed = np.zeros(len(y), dtype=bool)
        ye, ce = track_polygon(system, y, ch, triangle(p, rng, radius), opts, failed)
        info.failed_paths += int(failed.sum())
        ok = ~failed
        if np.any(ok):
            ok[ok] = relative_residual(system, ye[ok], p, ce[ok]) < res_tol
        idx = np.flatnonzero(ok)
        start_pl = plucker_matrix(system.lines(y, ch))
        add = new_rows(start_pl, plucker_matrix(system.lines(ye[idx], ce[idx])) if idx.size else
                       np.zeros((0, start_pl.shape[1])))
        if expected is not None and len(y) == expected and not add and ok.all():
            try:
                match_lines(system.lines(y, ch), system.lines(ye, ce))
                info.closed = True
                break
            except TrackingFailure:
                pass
        if add:
            sel = idx[add]
            y = np.concatenate([y, ye[sel]])
            ch = Charts.concat([ch, ce[sel]])
            quiet = 0
        else:
            quiet += 1
        info.history.append(len(y))
        if expected is not None and len(y) > expected:
            break
        if expected is None and quiet >= stall:
            break
        if expected is not None and quiet >= 4 * stall:
            break
    return y, ch, info
