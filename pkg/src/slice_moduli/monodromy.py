"""Monodromy of special lines: transport the fiber around loops, analyse the group."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import permgroups as pg
from . import tracking as trk
from .forms import DEFAULT_TOL, HypersurfaceSpec, MalformedInput, multiplicity_vector, restrict_to_line, roots_with_multiplicity
from .incidence import IncidentLineRecord, flex_type_lines, type_lines


@dataclass
class LoopSpec:
    base: HypersurfaceSpec
    waypoints: list  # coefficient vectors in monomials(3, d) order; closed polygon
    steps: trk.TrackerOptions = field(default_factory=trk.TrackerOptions)

    def __post_init__(self):
        p = self.base.coefficient_vector()
        if len(self.waypoints) < 2:
            raise MalformedInput("a loop needs at least two waypoints")
        for end in (self.waypoints[0], self.waypoints[-1]):
            if not np.allclose(end, p, rtol=0, atol=1e-14 * max(1.0, np.linalg.norm(p))):
                raise MalformedInput("loop must start and end at the base curve")

    @classmethod
    def triangle(cls, base: HypersurfaceSpec, rng: np.random.Generator, radius: float = 1.0,
                 steps: trk.TrackerOptions | None = None) -> "LoopSpec":
        p = base.coefficient_vector()
        return cls(base, trk.triangle(p, rng, radius), steps or trk.TrackerOptions())

    def reversed(self) -> "LoopSpec":
        return LoopSpec(self.base, self.waypoints[::-1], self.steps)

    def then(self, other: "LoopSpec") -> "LoopSpec":
        """This loop followed by ``other``."""
        return LoopSpec(self.base, list(self.waypoints) + list(other.waypoints[1:]), self.steps)


class Fiber:
    """Certified lines over a base curve, encoded for tracking."""

    def __init__(self, X: HypersurfaceSpec, records: list[IncidentLineRecord]):
        if not records:
            raise MalformedInput("empty fiber")
        mult = records[0].mult
        if any(r.mult != mult for r in records):
            raise MalformedInput("fiber mixes multiplicity vectors")
        self.X = X
        self.mult = mult
        self.records = list(records)
        self.system = trk.LineTypeSystem(X.d, mult)
        if not self.system.square:
            raise MalformedInput(f"type {mult} cannot be tracked (not (d-2)-incident)")
        self.p = X.coefficient_vector(self.system.basis)
        ys, cs = zip(*(self.system.encode(r.line, X, divisor=r.divisor) for r in records))
        y, ch = np.stack(ys), trk.Charts.concat(list(cs))
        self.y, _ = trk.newton(self.system, y, self.p, ch)
        self.ch = ch
        self.lines = self.system.lines(self.y, self.ch)

    @property
    def n(self) -> int:
        return len(self.records)


def track_loop(fiber: Fiber, loop: LoopSpec, tol: float = 1e-6, check_types: bool = True) -> np.ndarray:
    """Permutation induced by ``loop``: perm[i] = index of the start line where path i ends.

    Raises TrackingFailure on step-size underflow or on an ambiguous endpoint match.
    """
    if loop.base.d != fiber.X.d:
        raise MalformedInput("loop and fiber live over curves of different degree")
    y, ch = trk.track_polygon(fiber.system, fiber.y, fiber.ch, loop.waypoints, loop.steps)
    ends = fiber.system.lines(y, ch)
    perm = np.array(trk.match_lines(fiber.lines, ends, tol))
    if check_types:
        for ln in ends:
            got = multiplicity_vector(roots_with_multiplicity(restrict_to_line(fiber.X, ln), 1e-6))
            if got != fiber.mult:
                raise trk.TrackingFailure(f"endpoint has type {got}, expected {fiber.mult}")
    return perm


@dataclass
class MonodromyReport:
    n: int
    mult: tuple
    generators: list
    loops_attempted: int
    loops_failed: int
    identity_loops: int
    summary: pg.GroupSummary
    seconds: float
    history: list = field(default_factory=list)

    @property
    def transitive(self) -> bool:
        return self.summary.transitive

    @property
    def two_transitive(self) -> bool:
        return self.summary.two_transitive

    @property
    def has_transposition(self) -> bool:
        return self.summary.has_transposition

    @property
    def is_full_symmetric(self) -> bool:
        return self.summary.is_full_symmetric

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "type": list(self.mult),
            "loops_attempted": self.loops_attempted,
            "loops_failed": self.loops_failed,
            "identity_loops": self.identity_loops,
            "generators": [pg.cycle_notation(g) for g in self.generators],
            **self.summary.to_json(),
            "history": self.history,
            "seconds": self.seconds,
        }


def _as_perm(pair, n: int) -> np.ndarray:
    p = np.arange(n)
    p[pair[0]], p[pair[1]] = pair[1], pair[0]
    return p


def fiber_for(X: HypersurfaceSpec, mult: tuple[int, ...], tol: float = DEFAULT_TOL, seed: int = 0) -> Fiber:
    mult = tuple(sorted(mult, reverse=True))
    if max(mult) >= 3 and mult[1:] == (1,) * (len(mult) - 1):
        en = flex_type_lines(X, mult[0], tol, seed)
    else:
        en = type_lines(X, mult, tol, seed)
    if not en.complete:
        raise trk.TrackingFailure(f"fiber of type {mult} incomplete: {len(en)} of {en.expected}")
    return Fiber(X, list(en))


def monodromy_group(X: HypersurfaceSpec, mult: tuple[int, ...], budget: int = 200, seed: int = 0,
                    radius: float = 1.0, fiber: Fiber | None = None, tol: float = DEFAULT_TOL,
                    check_every: int = 5) -> MonodromyReport:
    """Random triangle loops until the group is certified as S_n or the budget runs out."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    fib = fiber if fiber is not None else fiber_for(X, mult, tol, seed)
    n = fib.n
    gens: list[np.ndarray] = []
    failed = ident = 0
    summary = pg.analyse([], n, rng)
    history = []
    attempted = 0
    witness = None
    for k in range(budget):
        attempted = k + 1
        loop = LoopSpec.triangle(X, rng, radius)
        try:
            perm = track_loop(fib, loop)
        except trk.TrackingFailure:
            failed += 1
            continue
        if pg.is_identity(perm):
            ident += 1
            continue
        gens.append(perm)
        if witness is None:
            witness = pg.transposition_from(perm)
        if len(gens) % check_every == 0 or k == budget - 1:
            summary = pg.analyse(gens, n, rng, transposition=witness)
            if summary.has_transposition and witness is None:
                witness = _as_perm(summary.transposition_witness, n)
            history.append({"loop": attempted, "generators": len(gens),
                            "transitive": summary.transitive, "two_transitive": summary.two_transitive,
                            "has_transposition": summary.has_transposition,
                            "full": summary.is_full_symmetric})
            if summary.is_full_symmetric and summary.has_transposition and summary.two_transitive:
                break
    if gens:
        summary = pg.analyse(gens, n, rng, transposition=witness)
    return MonodromyReport(n, fib.mult, gens, attempted, failed, ident, summary,
                           round(time.perf_counter() - t0, 3), history)
