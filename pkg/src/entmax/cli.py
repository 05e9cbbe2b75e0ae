"""Command-line interface.

``entmax measure|smooth|regularize|dilution|gen|selftest``.  Reports go to
stdout (JSON, or CSV with ``--csv``) or to ``--out``; diagnostics go to
stderr.  Exit codes: 0 success, 2 residual or suite failure, 3 parse error,
4 solver failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dilution, properties, smoothing
from .errors import ConvergenceError, SolverError, StateFileError
from .io import StateFile, dumps_state, loads_state
from .measures import NAMES, e_max, e_r, measure
from .report import RESIDUAL_LIMIT, certificate_residual, dumps, make_report, to_csv
from .states import FAMILIES, state_factory

EXIT_OK = 0
EXIT_RESIDUAL = 2
EXIT_PARSE = 3
EXIT_SOLVER = 4

FAMILY_ALIASES = {"ginibre": "ginibre_mixed", "haar": "haar_pure", "product": "product_mixture"}

CONSTRUCTIVE_SLACK = 1e-7
PERFECT_LIMIT = 1e-12
DECOMPOSITION_LIMIT = 1e-7


class _Failure(Exception):
    pass


def _floats(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def _load(args):
    paths = list(args.paths or []) + list(args.inputs or [])
    if not paths:
        raise StateFileError("no input files given (use --in)")
    texts, states = [], []
    for p in paths:
        try:
            text = Path(p).read_text()
        except OSError as exc:
            raise StateFileError(f"cannot read {p}: {exc}") from exc
        sf = loads_state(text)
        states.append(sf.to_state(subnormalized=args.subnormalized))
        # digest over the canonical form so formatting differences do not matter
        texts.append(dumps_state(sf))
    return paths, texts, states


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _timed(fn, timing):
    t0 = time.perf_counter()
    out = fn()
    ms = (time.perf_counter() - t0) * 1e3 if timing else None
    return out, ms


def _scalar_residuals(res: dict) -> dict:
    return {k: v for k, v in res.items() if isinstance(v, (bool, int, float, np.floating))}


def cmd_measure(args):
    paths, texts, states = _load(args)
    names = [n.strip() for n in args.measures.split(",") if n.strip()]
    for n in names:
        if n not in NAMES:
            raise _Failure(f"unknown measure {n!r}; expected one of {', '.join(NAMES)}")
    kw = {"er": {"tol": args.er_tol}}

    def one(item):
        path, rho = item
        rows = []
        for n in names:
            r, ms = _timed(lambda n=n: measure(n, rho, **kw.get(n, {})), args.timing)
            resid = certificate_residual(r)
            rows.append({"state": path, "name": n, "value": r.value, "method": r.method,
                         "relaxation": r.relaxation, "exact": r.exact, "status": r.status,
                         "residuals": _scalar_residuals(r.residuals), "maxResidual": resid,
                         "wallTimeMs": ms})
        return rows

    rows = [row for rs in _map(one, list(zip(paths, states)), args.jobs) for row in rs]
    ok = all(r["maxResidual"] <= RESIDUAL_LIMIT for r in rows)
    return make_report("measure", paths, texts, rows, passed=ok), ok


def cmd_smooth(args):
    paths, texts, states = _load(args)
    grid = _floats(args.epsilon)

    def one(item):
        path, rho = item
        rows = []
        for eps in grid:
            (exact, cons), ms = _timed(lambda eps=eps: (smoothing.smooth_e_max(rho, eps),
                                                        smoothing.constructive_smooth_e_max(rho, eps)),
                                       args.timing)
            rows.append({"state": path, "name": "emax_smooth", "epsilon": eps, "exact": exact,
                         "constructive": cons, "degenerate": smoothing.is_degenerate(rho, eps),
                         "constructiveAboveExact": bool(cons >= exact - CONSTRUCTIVE_SLACK),
                         "wallTimeMs": ms})
        return rows

    per_state = _map(one, list(zip(paths, states)), args.jobs)
    rows = [row for rs in per_state for row in rs]
    checks = []
    for path, rs in zip(paths, per_state):
        ordered = sorted(rs, key=lambda r: r["epsilon"])
        vals = [r["exact"] for r in ordered]
        mono = all(b <= a + 1e-6 for a, b in zip(vals, vals[1:]))
        checks.append({"state": path, "monotone": mono,
                       "constructiveAboveExact": all(r["constructiveAboveExact"] for r in rs)})
    ok = all(c["constructiveAboveExact"] for c in checks)
    return make_report("smooth", paths, texts, rows, checks=checks, passed=ok), ok


def cmd_regularize(args):
    paths, texts, states = _load(args)
    eps = _floats(args.epsilon)
    if len(eps) != 1:
        raise _Failure("regularize takes a single --epsilon value")
    eps = eps[0]
    rows, probes = [], []
    for path, rho in zip(paths, states):
        (probe, emax), ms = _timed(
            lambda rho=rho: (smoothing.regularization_probe(rho, eps, args.copies, er_tol=args.er_tol,
                                                            jobs=args.jobs), e_max(rho).value),
            args.timing)
        for n, v in probe.values_per_copy:
            rows.append({"state": path, "name": "emax_smooth_per_copy", "copies": n, "epsilon": eps,
                         "value": v, "wallTimeMs": None})
        vals = [v for _, v in probe.values_per_copy]
        probes.append({"state": path, "emax": emax, "erReference": probe.er_reference,
                       "subadditivity": probe.subadditivity,
                       "nonIncreasing": all(b <= a + 1e-6 for a, b in zip(vals, vals[1:])),
                       "belowEmax": all(v <= emax + 1e-6 for v in vals), "wallTimeMs": ms})
    ok = all(p["subadditivity"] is None or p["subadditivity"]["pass"] for p in probes)
    return make_report("regularize", paths, texts, rows, probes=probes, passed=ok), ok


def cmd_dilution(args):
    paths, texts, states = _load(args)
    rows = []
    for path, rho in zip(paths, states):
        plan = dilution.make_plan(rho)
        checks = dilution.plan_checks(plan)
        audit = dilution.sepp_audit(plan, args.samples, seed=args.seed, jobs=args.jobs)
        ok = (checks["perfectOutput"] <= PERFECT_LIMIT and checks.get("decomposition", 0.0) <= DECOMPOSITION_LIMIT
              and audit["pass"])
        rows.append({"state": path, "name": "dilution", "s": plan.s, "M": plan.M, "rate": plan.rate,
                     "overhead": plan.overhead, "emax": e_max(rho).value, "vacuous": plan.vacuous,
                     "checks": checks, "audit": audit, "pass": ok, "wallTimeMs": None})
    ok = all(r["pass"] for r in rows)
    return make_report("dilution", paths, texts, rows, passed=ok), ok


def cmd_gen(args):
    family = FAMILY_ALIASES.get(args.family, args.family)
    if family not in FAMILIES:
        raise _Failure(f"unknown family {args.family!r}")
    params = {}
    for key in ("q", "k", "rank"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    dims = tuple(args.dims)
    if family == "mes" and args.M is not None:
        params["M"] = args.M
        if args.dims_given is None:
            dims = (args.M, args.M)
    rho = state_factory(family, dims, seed=args.seed, **params)
    meta = {"family": family, "name": args.name or family, "seed": args.seed}
    if params:
        meta["params"] = params
    return dumps_state(StateFile.from_state(rho, meta))


def cmd_selftest(args):
    outcomes = properties.run_suites(args.seed, quick=args.quick)
    suites = [o.as_dict() for o in outcomes]
    ok = all(s["pass"] for s in suites)
    rep = {"schema": 1, "command": "selftest", "seed": args.seed, "quick": bool(args.quick),
           "suites": suites, "pass": ok}
    for o in outcomes:
        if not o.passed:
            print(f"suite {o.id} failed: worst slack {o.worst_slack:.3e} < {o.threshold:.1e}", file=sys.stderr)
    return rep, ok


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the parse-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _parser():
    p = _Parser(prog="entmax", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, inputs=True):
        if inputs:
            sp.add_argument("paths", nargs="*", help="state files")
            sp.add_argument("--in", dest="inputs", nargs="+", action="extend", default=[], help="state files")
            sp.add_argument("--subnormalized", action="store_true", help="accept trace < 1")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--csv", action="store_true", help="emit CSV derived from the JSON report")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--timing", action="store_true", help="fill wallTimeMs (breaks byte determinism)")
        sp.add_argument("--er-tol", type=float, default=1e-6, help="certified gap for E_R")

    sp = sub.add_parser("measure", help="entanglement measures of each state")
    common(sp)
    sp.add_argument("--measures", default="emax,er,ln", help=f"comma list from {','.join(NAMES)}")
    sp = sub.add_parser("smooth", help="smooth E_max: exact SDP and constructive bound")
    common(sp)
    sp.add_argument("--epsilon", default="0,0.01,0.05,0.1", help="comma list")
    sp = sub.add_parser("regularize", help="per-copy smooth E_max of tensor powers")
    common(sp)
    sp.add_argument("--epsilon", default="0.01")
    sp.add_argument("--copies", type=int, default=3)
    sp = sub.add_parser("dilution", help="perfect dilution plan and separability audit")
    common(sp)
    sp.add_argument("--samples", type=int, default=100)
    sp = sub.add_parser("gen", help="emit a state file")
    common(sp, inputs=False)
    sp.add_argument("family", help=f"one of {', '.join(FAMILIES)} (aliases: {', '.join(FAMILY_ALIASES)})")
    sp.add_argument("--dims", type=int, nargs=2, default=None, dest="dims_given", metavar=("DA", "DB"))
    sp.add_argument("--M", type=int)
    sp.add_argument("--q", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--rank", type=int)
    sp.add_argument("--name")
    sp = sub.add_parser("selftest", help="run every invariant suite")
    common(sp, inputs=False)
    sp.add_argument("--quick", action="store_true", help="divide sample sizes by ten")
    return p


COMMANDS = {"measure": cmd_measure, "smooth": cmd_smooth, "regularize": cmd_regularize,
            "dilution": cmd_dilution, "selftest": cmd_selftest}


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "gen":
            args.dims = args.dims_given or (2, 2)
            _emit(cmd_gen(args), args.out)
            return EXIT_OK
        rep, ok = COMMANDS[args.command](args)
        _emit(to_csv(rep) if args.csv else dumps(rep), args.out)
        return EXIT_OK if ok else EXIT_RESIDUAL
    except StateFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (SolverError, ConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
