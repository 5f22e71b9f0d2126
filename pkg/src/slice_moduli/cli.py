"""Command line: ``slice-moduli <module> <action> [options]``.

Exit codes: 0 success, 1 certified failure (tracking, incomplete enumeration,
ambiguous valuations), 2 malformed input.  A JSON report is written on 0 and 1.
"""

from __future__ import annotations

import os

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
if os.environ.get("SLICE_MODULI_THREADS"):
    for _v in _THREAD_VARS:
        os.environ.setdefault(_v, os.environ["SLICE_MODULI_THREADS"])

import argparse
import datetime
import json
import sys
import time
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import deform, incidence, monodromy, moduli, stable
from . import tracking as trk
from .forms import INF, HypersurfaceSpec, LineParam, MalformedInput, UnstableClustering

FAILURES = (trk.TrackingFailure, incidence.UncertifiedSolution, incidence.IncompleteCensus,
            stable.ValuationAmbiguity, UnstableClustering)
MALFORMED = (MalformedInput, moduli.UnstableConfiguration, json.JSONDecodeError, FileNotFoundError)


@dataclass
class RunConfig:
    tol: float = 1e-8
    seed: int = 0
    threads: int = 1
    budget: int = 200
    out: str | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise MalformedInput("tol must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise MalformedInput("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise MalformedInput("threads must be >= 1")
        if self.budget < 0:
            raise MalformedInput("budget must be >= 0")


# -- input helpers -------------------------------------------------------------

def _load(path: str):
    with open(path) as fh:
        return json.load(fh)


def _curve(args, cfg: RunConfig) -> HypersurfaceSpec:
    if getattr(args, "curve", None):
        obj = _load(args.curve)
        if isinstance(obj, dict) and isinstance(obj.get("result"), dict):
            obj = obj["result"]  # a report from `forms random`
        return HypersurfaceSpec.from_json(obj)
    d = getattr(args, "random_d", None)
    if d is None:
        raise MalformedInput("give --curve FILE or --random-d D")
    return HypersurfaceSpec.random(2, d, np.random.default_rng(cfg.seed))


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise MalformedInput(f"expected comma-separated integers, got {text!r}") from exc


def _numbers(text: str) -> list:
    out = []
    for x in text.split(","):
        x = x.strip()
        try:
            out.append(int(x))
        except ValueError:
            try:
                out.append(complex(x.replace("i", "j")) if "j" in x or "i" in x else float(x))
            except ValueError as exc:
                raise MalformedInput(f"bad number {x!r}") from exc
    return out


def _points(obj) -> moduli.PointConfig:
    """[[re, im, mult], ...]; the string "inf" (or ["inf", mult]) is the point at infinity."""
    pts, mults = [], []
    try:
        for e in obj["points"] if isinstance(obj, dict) else obj:
            if e == "inf" or (isinstance(e, list) and e and e[0] == "inf"):
                pts.append(INF)
                mults.append(int(e[1]) if isinstance(e, list) and len(e) > 1 else 1)
            else:
                pts.append(complex(float(e[0]), float(e[1])))
                mults.append(int(e[2]) if len(e) > 2 else 1)
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise MalformedInput(f"bad point configuration: {exc}") from exc
    return moduli.PointConfig.from_points(pts, mults)


# -- commands ------------------------------------------------------------------

def cmd_forms(args, cfg):
    if args.action == "random":
        rng = np.random.default_rng(cfg.seed)
        return HypersurfaceSpec.random(args.r, args.d, rng).to_json()
    X = _curve(args, cfg)
    line = LineParam.from_json(_load(args.line))
    from .forms import multiplicity_vector, restrict_to_line, roots_with_multiplicity
    f = restrict_to_line(X, line)
    div = roots_with_multiplicity(f, cfg.tol)
    return {"binary_form": [[z.real, z.imag] for z in f.coeffs], "divisor": div.to_json(),
            "mult": list(multiplicity_vector(div))}


def cmd_incidence(args, cfg):
    a = args.action
    if a == "fermat-witness":
        return incidence.fermat_collision_witness(args.d or 5, cfg.seed, cfg.tol).to_json()
    if a == "inject-sample":
        if args.curve is None and args.random_d is None:
            args.random_d = args.d or 7
        X = _curve(args, cfg)
        return incidence.injectivity_sample(X, args.trials, cfg.seed, cfg.tol).to_json()
    X = _curve(args, cfg)
    if a == "flexes":
        en = incidence.flex_type_lines(X, args.a, cfg.tol, cfg.seed)
    elif a == "bitangents":
        en = incidence.bitangent_lines(X, cfg.tol, cfg.seed)
    else:
        cen = incidence.census(X, cfg.tol, cfg.seed)
        out = cen.to_json()
        if a == "degree":
            out = {"counts": out["counts"], "complete": cen.complete, "notes": cen.notes,
                   "degree": incidence.degree_mu1(cen)}
        return out
    out = en.to_json()
    if not en.complete:
        raise _Partial(out, f"enumeration incomplete: {len(en)} of {en.expected}")
    return out


def cmd_deform(args, cfg):
    if args.action == "versal":
        parts = _ints(args.parts)
        anchors = _numbers(args.anchors)
        V = deform.build_V(parts, anchors)
        rho = deform.rho_matrix(V, cfg.tol)
        tr = deform.check_transversality(parts, anchors, V, cfg.tol)
        return {"parts": list(parts), "basis": [[str(x) for x in b] for b in V.descending()],
                "labels": V.labels, "rho": rho.to_json(), "transversality": tr.to_json()}
    if args.action == "zcurve":
        c = deform.z_curve_coefficients(args.m1, args.m2)
        out = {"m1": args.m1, "m2": args.m2, "coefficients": {f"c{j + 1}": v for j, v in enumerate(c)}}
        if args.hyperplane:
            out["intersection"] = deform.z_curve_intersection_length(
                args.m1, args.m2, _numbers(args.hyperplane)).to_json()
        return out
    f = _numbers(args.poly)
    pt, shift = deform.complete_power(f)
    return {"unfolding": pt.to_json(), "shift": str(shift)}


def cmd_monodromy(args, cfg):
    X = _curve(args, cfg)
    rep = monodromy.monodromy_group(X, _ints(args.type), cfg.budget, cfg.seed, args.radius, tol=cfg.tol)
    return rep.to_json()


def cmd_stable(args, cfg):
    if args.action == "counts":
        d = args.d
        out = {"d": d, "straight_trees": stable.count_straight_trees(d)}
        out["over_line"] = {f"{a},{d - 1 - a}": stable.straight_trees_over_line(a, d - 1 - a, d)
                            for a in range(1, d - 1)}
        return out
    if args.action == "dandelion":
        fam = stable.dandelion_family(args.d, args.k)
    else:
        fam = stable.RootFamily.from_json(_load(args.family))
    T = stable.stable_limit(fam)
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(T.to_dot())
    out = {"tree": T.to_json(), "root_support": T.root_support()}
    if args.k:
        cls = stable.classify_tree(T, args.k)
        out["classification"] = cls.to_json()
        out["expected"] = f"{args.k}-dandelion"
        out["discrepancy"] = not cls.dandelion
    else:
        out["classification"] = stable.classify_tree(T).to_json()
    return out


def cmd_moduli(args, cfg):
    a = _points(_load(args.points))
    if args.action == "fingerprint":
        fp = moduli.canonical_fingerprint(a, cfg.tol)
        return fp.to_json()
    b = _points(_load(args.other))
    ok, g = moduli.same_moduli(a, b, cfg.tol, witness=True)
    return {"same": ok, "witness": None if g is None else [[[z.real, z.imag] for z in row] for row in g]}


def cmd_recipe(args, cfg):
    name = args.recipe
    if name == "quintic-420":
        X = HypersurfaceSpec.random(2, 5, np.random.default_rng(cfg.seed))
        cen = incidence.census(X, cfg.tol, cfg.seed)
        return {"curve": X.to_json(), "counts": cen.to_json()["counts"], "complete": cen.complete,
                "degree": incidence.degree_mu1(cen), "expected": 420}
    if name == "fermat-collide":
        return incidence.fermat_collision_witness(5, cfg.seed, cfg.tol).to_json()
    X = HypersurfaceSpec.random(2, 5, np.random.default_rng(cfg.seed))
    rep = monodromy.monodromy_group(X, (3, 1, 1), cfg.budget, cfg.seed, tol=cfg.tol)
    out = rep.to_json()
    if not rep.is_full_symmetric:
        raise _Partial(out, "group not certified as S_45 within the budget")
    return out


class _Partial(Exception):
    """A result that was computed but does not certify what was asked."""

    def __init__(self, report, message):
        super().__init__(message)
        self.report = report


# -- parser --------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--out", default=None, help="report path (JSON)")
    p.add_argument("--json", action="store_true", help="also print the report on stdout")


def _curve_opts(p):
    p.add_argument("--curve", help="hypersurface JSON")
    p.add_argument("--random-d", type=int, help="use a random plane curve of this degree (seeded)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slice-moduli", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="module", required=True)

    p = sub.add_parser("forms", help="random curves, line slices")
    p.add_argument("action", choices=["random", "slice"])
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--curve")
    p.add_argument("--line")
    _common(p)
    p.set_defaults(func=cmd_forms)

    p = sub.add_parser("incidence", help="special lines of plane curves")
    p.add_argument("action", choices=["flexes", "bitangents", "census", "degree", "inject-sample", "fermat-witness"])
    _curve_opts(p)
    p.add_argument("--a", type=int, default=3, help="contact order for flexes")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--trials", type=int, default=1000)
    _common(p)
    p.set_defaults(func=cmd_incidence)

    p = sub.add_parser("deform", help="versality linear algebra and the Z curve")
    p.add_argument("action", choices=["versal", "zcurve", "complete-power"])
    p.add_argument("--parts", default="2,2")
    p.add_argument("--anchors", default="0,1")
    p.add_argument("--m1", type=int, default=2)
    p.add_argument("--m2", type=int, default=1)
    p.add_argument("--hyperplane", help="weights on a_2..a_n")
    p.add_argument("--poly", default="1,3,0,0", help="monic polynomial, highest degree first")
    _common(p)
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("monodromy", help="monodromy of special lines")
    p.add_argument("action", choices=["run"])
    _curve_opts(p)
    p.add_argument("--type", default="3,1,1")
    p.add_argument("--radius", type=float, default=1.0, help="loop size relative to the coefficient norm")
    _common(p)
    p.set_defaults(func=cmd_monodromy)

    p = sub.add_parser("stable", help="stable limits and tree counts")
    p.add_argument("action", choices=["limit", "counts", "dandelion"])
    p.add_argument("--family")
    p.add_argument("--dot")
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--k", type=int, default=None)
    _common(p)
    p.set_defaults(func=cmd_stable)

    p = sub.add_parser("moduli", help="fingerprints of point configurations")
    p.add_argument("action", choices=["fingerprint", "same"])
    p.add_argument("--points", required=True)
    p.add_argument("--other")
    _common(p)
    p.set_defaults(func=cmd_moduli)

    for name in ("quintic-420", "fermat-collide", "monodromy-s45"):
        p = sub.add_parser(name, help="reproduction recipe")
        _common(p)
        p.set_defaults(func=cmd_recipe, recipe=name)
    return ap


def _config(args) -> RunConfig:
    env = os.environ.get("SLICE_MODULI_THREADS")
    threads = args.threads if args.threads is not None else (int(env) if env else 1)
    return RunConfig(tol=args.tol if args.tol is not None else 1e-8,
                     seed=args.seed if args.seed is not None else 0,
                     threads=threads,
                     budget=args.budget if args.budget is not None else 200,
                     out=args.out)


def _pop_timing(obj, found: list):
    """Move wall-clock fields out of the result so reports are reproducible."""
    if isinstance(obj, dict):
        for k in list(obj):
            if k == "seconds":
                found.append(obj.pop(k))
            else:
                _pop_timing(obj[k], found)
    elif isinstance(obj, list):
        for x in obj:
            _pop_timing(x, found)


def _emit(report: dict, cfg: RunConfig | None, to_stdout: bool) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    if cfg is not None and cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    if to_stdout or cfg is None or not cfg.out:
        print(text)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    cfg = None
    report = {"command": args.module if not hasattr(args, "action") else f"{args.module} {args.action}"}
    try:
        cfg = _config(args)
        report["config"] = {k: v for k, v in asdict(cfg).items() if k != "out"}
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", incidence.IncompleteEnumeration)
            result = args.func(args, cfg)
        report["warnings"] = [str(w.message) for w in caught]
        report["status"] = "ok"
        code = 0
    except _Partial as exc:
        result, code = exc.report, 1
        report["status"] = "failed"
        report["error"] = str(exc)
    except FAILURES as exc:
        result, code = None, 1
        report["status"] = "failed"
        report["error"] = f"{type(exc).__name__}: {exc}"
    except MALFORMED as exc:
        print(f"slice-moduli: malformed input: {exc}", file=sys.stderr)
        return 2
    timing: list = []
    _pop_timing(result, timing)
    report["result"] = result
    report["timestamp"] = {"started": started, "wall_seconds": round(time.perf_counter() - t0, 3),
                           "inner_seconds": timing}
    _emit(report, cfg, args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
