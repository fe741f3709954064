"""Command line: validate, eval-code, build-id, region, check.

Exit codes: 0 pass, 1 invariant violation or incompatible inputs, 2 parse
error, 3 sampling exhausted, 4 budget exceeded.  The human summary goes
to stdout, diagnostics to stderr, and ``--report`` writes a JSON run report.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .channels import extend_memoryless
from .checks import SUITES, run_suite
from .coding import (
    IDCode,
    TransmissionCode,
    acceptance_matrix,
    avg_error,
    check_simultaneous,
    id_error_1,
    id_error_2,
    id_error_2_cross,
    max_error,
)
from .config import coerce, get_tolerances, set_tolerances
from .linalg import DimensionError, InvalidStateError, state_violations
from .regions import CK, RK, BudgetExceededError, compute_region, containment_check
from .transforms import SamplingExhaustedError, extract_max_error, transformator_bounds, transformator_build, transformator_verify

EXIT_OK, EXIT_INVARIANT, EXIT_PARSE, EXIT_SAMPLING, EXIT_BUDGET = 0, 1, 2, 3, 4


@dataclass
class ExperimentConfig:
    seed: int | None = None
    dim_cap: int | None = None
    max_attempts: int | None = None
    tolerance_overrides: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def apply(self) -> None:
        changes = {k: coerce(k, v) for k, v in self.tolerance_overrides.items()}
        if self.dim_cap is not None:
            changes["dim_cap"] = self.dim_cap
        if self.max_attempts is not None:
            changes["max_attempts"] = self.max_attempts
        if changes:
            set_tolerances(**changes)

    def echo(self) -> dict:
        return {"seed": self.seed, "tolerance_overrides": self.tolerance_overrides,
                "tolerances": get_tolerances().as_dict(), "outputs": self.outputs}


class Run:
    """Collects the pieces of a run report."""

    def __init__(self, command: str, cfg: ExperimentConfig):
        self.command = command
        self.cfg = cfg
        self.inputs: dict = {}
        self.results: dict = {}
        self.passed: dict = {}
        self.t0 = time.perf_counter()

    def digest(self, path) -> None:
        if path is not None:
            self.inputs[str(path)] = io.file_digest(path)

    def report(self, code: int) -> dict:
        return {"schema": io.SCHEMA, "kind": "run_report", "command": self.command, "config": self.cfg.echo(),
                "inputs": self.inputs, "results": self.results, "passed": self.passed,
                "exit_code": code, "timing": {"seconds": time.perf_counter() - self.t0}}


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


# -- validate ---------------------------------------------------------------------


def cmd_validate(args, run: Run) -> int:
    run.digest(args.channel)
    w = io.load_channel(args.channel, validate=False)
    items = []
    for x, xs in enumerate(w.x_alphabet):
        for y, ys in enumerate(w.y_alphabet):
            for v in state_violations(w.base[x, y]):
                items.append(f"output ({xs},{ys}): {v}")
    run.results = {"x_alphabet": list(w.x_alphabet), "y_alphabet": list(w.y_alphabet), "dim": w.base_dim,
                   "violations": items, "tolerances": {"trace": get_tolerances().trace, "psd": get_tolerances().psd,
                                                       "hermitian": get_tolerances().hermitian}}
    run.passed = {"valid": not items}
    if items:
        for it in items:
            _err(it)
        print(f"invalid channel: {len(items)} violation(s)")
        return EXIT_INVARIANT
    print(f"valid channel: |X|={len(w.x_alphabet)} |Y|={len(w.y_alphabet)} dim={w.base_dim}")
    return EXIT_OK


# -- eval-code --------------------------------------------------------------------


def cmd_eval_code(args, run: Run) -> int:
    run.digest(args.channel)
    run.digest(args.code)
    w = io.load_channel(args.channel)
    code = io.load_code(args.code)
    k = code.k if args.k is None else args.k
    if k != code.k:
        _err(f"code has block length {code.k}, --k asks for {k}")
        return EXIT_INVARIANT
    wk = extend_memoryless(w, k)
    if code.dim != wk.dim:
        _err(f"code dimension {code.dim} does not match channel dimension {wk.dim} at k={k}")
        return EXIT_INVARIANT
    res = {"k": k, "M": code.M, "N": code.N, "rates": code.rates().as_dict()}
    ok = True
    if isinstance(code, TransmissionCode):
        res["avg_error"] = avg_error(code, wk)
        res["max_error"] = max_error(code, wk)
        print(f"(k={k}, M={code.M}, N={code.N}) transmission code: "
              f"avg error {res['avg_error']:.6g}, max error {res['max_error']:.6g}")
        if args.extract is not None:
            ext = extract_max_error(code, wk, args.extract)
            half = args.extract <= math.ceil(code.M / 2)
            res["extraction"] = {"keep": args.extract, "lambda": ext.lam, "n0": ext.n0,
                                 "row_error": ext.row_error, "order": ext.order,
                                 "two_eps_bound": 2 * ext.avg_error if half else None, "tolerance": 1e-12}
            if half:
                run.passed["lambda_le_2eps"] = ext.lam <= 2 * ext.avg_error + 1e-12
                ok &= run.passed["lambda_le_2eps"]
            print(f"max-error extraction keep={args.extract}: lambda {ext.lam:.6g} (fixed n0={ext.n0})")
    else:
        T = acceptance_matrix(code, wk)
        res["e1"] = id_error_1(code, wk, T)
        res["e2"] = id_error_2(code, wk, T) if code.M * code.N >= 2 else None
        res["e2_cross"] = id_error_2_cross(code, wk, T) if code.M >= 2 and code.N >= 2 else None
        line = f"(k={k}, M={code.M}, N={code.N}) ID code: e1 {res['e1']:.6g}"
        if res["e2"] is not None:
            line += f", e2 {res['e2']:.6g}"
        print(line)
        if code.structure is not None:
            sim, resid = check_simultaneous(code, code.structure)
            res["simultaneous"] = {"ok": sim, "residual": resid, "tolerance": get_tolerances().simultaneous}
            run.passed["simultaneous"] = sim
            ok &= sim
    print(f"rates: R1={res['rates']['r1_transmission']:.4g} R2={res['rates']['r2_transmission']:.4g} "
          f"(ID rates {res['rates']['r1_id']}, {res['rates']['r2_id']})")
    run.results = res
    return EXIT_OK if ok else EXIT_INVARIANT


# -- build-id ---------------------------------------------------------------------


def _overlap_json(result, report, bounds) -> dict:
    return _to_plain({
        "schema": io.SCHEMA, "kind": "transformator", "seed": result.seed, "lambda": result.lam,
        "attempts": result.attempts, "maps_a": result.maps.maps_a, "maps_b": result.maps.maps_b,
        "inner_sizes": [result.maps.M2, result.maps.N2],
        "overlap_a": result.overlap_a, "overlap_b": result.overlap_b,
        "verify": None if report is None else {k: v for k, v in report.as_dict().items()},
        "bounds": None if bounds is None else bounds.as_dict(),
    })


def cmd_build_id(args, run: Run) -> int:
    for p in (args.channel, args.outer, args.inner):
        run.digest(p)
    w = io.load_channel(args.channel)
    outer, inner = io.load_code(args.outer), io.load_code(args.inner)
    if not isinstance(outer, TransmissionCode) or not isinstance(inner, TransmissionCode):
        _err("outer and inner codes must be transmission codes")
        return EXIT_INVARIANT
    for name, c in (("outer", outer), ("inner", inner)):
        if c.dim != w.base_dim**c.k:
            _err(f"{name} code dimension {c.dim} does not match the channel at k={c.k}")
            return EXIT_INVARIANT
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = transformator_build(outer, inner, args.m, args.n, args.seed, lam=args.lam,
                                     max_attempts=args.max_attempts)
    except SamplingExhaustedError as exc:
        _err(str(exc))
        if exc.report is not None:
            _err(f"union bound (M-1)Pr_a + (N-1)Pr_b = {exc.report.union_bound:.4g}; "
                 f"per-pair bounds {exc.report.pair_bound_a:.4g}, {exc.report.pair_bound_b:.4g}; "
                 f"best overlaps {exc.report.max_overlap_a}/{outer.M}, {exc.report.max_overlap_b}/{outer.N}")
            run.results = {"sampling": _to_plain(exc.report.as_dict())}
        return EXIT_SAMPLING
    report = transformator_verify(result, args.lam) if args.lam is not None else None
    sim, resid = check_simultaneous(result.id_code, result.structure)
    bounds = None
    try:
        bounds = transformator_bounds(result, w)
    except DimensionError as exc:
        _err(f"brute-force errors skipped: {exc}")
    code_path, overlap_path = out / "id_code.json", out / "overlaps.json"
    io.save_code(code_path, result.id_code)
    io.write_json(overlap_path, _overlap_json(result, report, bounds))
    run.cfg.outputs = {"id_code": str(code_path), "overlaps": str(overlap_path)}
    run.results = _to_plain({"M": args.m, "N": args.n, "k": result.id_code.k, "attempts": result.attempts,
                             "simultaneous_residual": resid, "rates": result.id_code.rates().as_dict(),
                             "bounds": None if bounds is None else bounds.as_dict(),
                             "digests": {"id_code": io.file_digest(code_path),
                                         "overlaps": io.file_digest(overlap_path)}})
    run.passed = {"simultaneous": sim, "verify": None if report is None else report.ok}
    if bounds is not None:
        run.passed["e1_bound"] = bounds.e1 <= bounds.e1_bound + 1e-8
        if bounds.e2 is not None and bounds.e2_bound is not None:
            run.passed["e2_bound"] = bounds.e2 <= bounds.e2_bound + 1e-8
        if bounds.e2_cross is not None:
            run.passed["e2_cross_collision_bound"] = bounds.e2_cross <= bounds.e2_collision_bound + 1e-8
    print(f"built simultaneous ID code M={args.m} N={args.n} at block length {result.id_code.k} "
          f"after {result.attempts} attempt(s); refinement residual {resid:.3g}")
    if bounds is not None:
        print(f"e1 {bounds.e1:.6g} <= bound {bounds.e1_bound:.6g}")
        if bounds.e2 is not None:
            tail = f" (bound {bounds.e2_bound:.6g})" if bounds.e2_bound is not None else ""
            print(f"e2 {bounds.e2:.6g}{tail}; pairs differing in both identities {bounds.e2_cross}")
    return EXIT_OK if sim else EXIT_INVARIANT


# -- region -----------------------------------------------------------------------


def cmd_region(args, run: Run) -> int:
    run.digest(args.channel)
    w = io.load_channel(args.channel)
    region = compute_region(w, args.k, args.resolution, args.kind, refine=not args.no_refine)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = prefix.with_suffix(".csv"), prefix.with_suffix(".json")
    io.write_region_csv(csv_path, region)
    io.write_json(json_path, region_json := io.region_to_json(region))
    run.cfg.outputs = {"csv": str(csv_path), "frontier": str(json_path)}
    res = {"kind": args.kind, "k": args.k, "resolution": args.resolution, "grid_points": region.grid_points,
           "frontier_size": len(region_json["frontier"]), "max_r1": region.max_r1(), "max_r2": region.max_r2(),
           "max_sum": region.max_sum()}
    code = EXIT_OK
    if args.containment:
        rep = containment_check(w, args.k, args.resolution)
        res["containment"] = {"checked": rep.checked, "violations": rep.violations, "max_excess": rep.max_excess,
                              "tolerance": 1e-8}
        run.passed["containment"] = rep.ok
        print(f"Ck inside Rk at {rep.checked} laws: {len(rep.violations)} violation(s)")
        if not rep.ok:
            code = EXIT_INVARIANT
    run.results = res
    print(f"{args.kind} k={args.k}: max R1 {res['max_r1']:.6g}, max R2 {res['max_r2']:.6g}, "
          f"max R1+R2 {res['max_sum']:.6g} ({res['frontier_size']} frontier points)")
    return code


# -- check ------------------------------------------------------------------------


def cmd_check(args, run: Run) -> int:
    channel = None
    if args.channel is not None:
        run.digest(args.channel)
        channel = io.load_channel(args.channel)
    results = run_suite(args.suite, args.seed, args.count, channel)
    run.results = {r.name: _to_plain({k: v for k, v in r.as_dict().items() if k != "failures"}) for r in results}
    run.passed = {r.name: r.passed for r in results}
    failures = [f for r in results for f in r.failures]
    for r in results:
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} ({r.instances} instances, {len(r.failures)} failures)")
    if failures:
        dump = Path(args.dump) if args.dump else Path(f"counterexamples-{args.suite}-{args.seed}.json")
        io.write_json(dump, _to_plain({"schema": io.SCHEMA, "kind": "counterexamples", "instances": failures}))
        _err(f"counterexamples written to {dump}")
        return EXIT_INVARIANT
    return EXIT_OK


# -- entry point ------------------------------------------------------------------


def _tol_pair(text: str):
    key, _, val = text.partition("=")
    if not key or not val:
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    return key.strip(), val.strip()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccqid", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", help="write the JSON run report here")
    common.add_argument("--dim-cap", type=int, help="largest dense matrix dimension")
    common.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="NAME=VALUE",
                        help="override a tolerance (e.g. psd=1e-9)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a channel file")
    p.add_argument("channel")

    p = sub.add_parser("eval-code", parents=[common], help="error and rate report of a code")
    p.add_argument("channel")
    p.add_argument("code")
    p.add_argument("--k", type=int)
    p.add_argument("--extract", type=int, metavar="KEEP", help="also run max-error extraction")

    p = sub.add_parser("build-id", parents=[common], help="random simultaneous ID code from two codes")
    p.add_argument("channel")
    p.add_argument("outer")
    p.add_argument("inner")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("region", parents=[common], help="Ck or Rk frontier")
    p.add_argument("channel")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--kind", choices=[CK, RK], default=RK)
    p.add_argument("--resolution", type=float, default=0.05)
    p.add_argument("--out", default="region")
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--containment", action="store_true", help="also check Ck against Rk on the grid")

    p = sub.add_parser("check", parents=[common], help="seeded invariant suites")
    p.add_argument("channel", nargs="?")
    p.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--dump", help="counterexample file (default counterexamples-SUITE-SEED.json)")
    return ap


COMMANDS = {"validate": cmd_validate, "eval-code": cmd_eval_code, "build-id": cmd_build_id,
            "region": cmd_region, "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig(seed=getattr(args, "seed", None), dim_cap=args.dim_cap,
                           max_attempts=getattr(args, "max_attempts", None), tolerance_overrides=dict(args.tol))
    previous = get_tolerances()
    try:
        cfg.apply()
    except (TypeError, ValueError) as exc:
        _err(f"bad configuration: {exc}")
        return EXIT_PARSE
    run = Run(args.command, cfg)
    try:
        code = _dispatch(args, run)
        if args.report:
            # written before the tolerances are restored so the echo is accurate
            io.write_json(args.report, _to_plain(run.report(code)))
    finally:
        set_tolerances(previous)
    return code


def _dispatch(args, run: Run) -> int:
    try:
        return COMMANDS[args.command](args, run)
    except io.ParseError as exc:
        _err(f"parse error: {exc}")
        return EXIT_PARSE
    except BudgetExceededError as exc:
        _err(f"budget exceeded: {exc}")
        return EXIT_BUDGET
    except (InvalidStateError, DimensionError, ValueError) as exc:
        _err(f"error: {exc}")
        for v in getattr(exc, "violations", []):
            _err(f"  {v}")
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
