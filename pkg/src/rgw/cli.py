"""Command-line front end: density tables, root maps, asymptotic
comparisons, fixed-point grids and simulation histograms as CSV, each with a
JSON manifest carrying the resolved parameters and output checksums.

Exit codes: 0 success, 2 validation failure, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .asympt import (
    example2_constants,
    fit_leading_constant,
    model_example1,
    model_example2,
    model_two_poly,
)
from .charroots import (
    FExample1,
    FExample2,
    GeneralEq,
    RootBox,
    SolverError,
    TwoPolyEq,
    filter_spurious,
    find_real_primary,
    find_roots_in_box,
)
from .mcsim import SimConfig, chi_square_statistic, exact_distribution, simulate
from .model import (
    EMU1_P,
    InadmissibleMeasureError,
    QuadratureError,
    example1_measure,
    example2_measure,
    linfrac_measure,
    load_measure,
    two_poly_measure,
    validate_measure,
)
from .picard import (
    GridFunction,
    check_quarter_integral,
    h1_estimate,
    normalize_to_boundary,
    picard_backward,
    picard_forward,
    verify_parts_identity,
)
from .recur import (
    RATIONAL_DEFAULT_LIMIT,
    densities_example1,
    densities_example2,
    densities_general,
    densities_linfrac,
    densities_operator,
    densities_two_poly,
)
from .series import FixpointError
from .xprec import DD, format_decimal


class _CliValidation(ValueError):
    pass


TWO_POLY_PARAMS = {
    "3a": (Fraction(7, 16), Fraction(3, 4)),
    "3b": (Fraction(1, 2), Fraction(3, 4)),
    "emu1": (EMU1_P, EMU1_P),
}


def _example_measure(name: str):
    if name == "0":
        return linfrac_measure([(1, Fraction(1, 4)), (1, Fraction(1, 2))])
    if name == "1":
        return example1_measure()
    if name == "2":
        return example2_measure()
    if name in TWO_POLY_PARAMS:
        a, b = TWO_POLY_PARAMS[name]
        return two_poly_measure(a, b)
    raise _CliValidation(f"unknown example {name!r}")


def _example_densities(name: str, n_max: int, mode: str):
    if name == "0":
        return densities_linfrac(n_max)
    if name == "1":
        return densities_example1(n_max, mode)
    if name == "2":
        return densities_example2(n_max, mode)
    if name in TWO_POLY_PARAMS:
        a, b = TWO_POLY_PARAMS[name]
        return densities_two_poly(a, b, n_max, mode)
    raise _CliValidation(f"unknown example {name!r}")


# ---------------------------------------------------------------------------
# manifest plumbing
# ---------------------------------------------------------------------------

def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, command, params, outputs, started, extra=None):
    manifest = {
        "command": command,
        "params": params,
        "library_version": __version__,
        "wall_time_s": round(time.time() - started, 3),
        "outputs": [
            {"path": os.path.basename(p), "sha256": _sha256(p)} for p in outputs
        ],
    }
    if extra:
        manifest["results"] = extra
    path = os.path.join(out_dir, f"{command}.manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _open_csv(out_dir, name):
    path = os.path.join(out_dir, name)
    fh = open(path, "w", encoding="utf-8", newline="")
    return path, fh


def _fmt(value, digits):
    if isinstance(value, float):
        value = DD(value)
    return format_decimal(value, digits)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_densities(args) -> int:
    started = time.time()
    if args.measure:
        mu = load_measure(args.measure)
        report = validate_measure(mu)
        if not report.passed:
            raise InadmissibleMeasureError(report)
        if args.engine == "operator":
            seq = densities_operator(mu, args.n_max, mode=args.mode_resolved)
        else:
            seq = densities_general(mu, args.n_max, mode=args.mode_resolved)
        label = os.path.basename(args.measure)
    else:
        label = args.example
        if args.engine == "operator":
            mu = _example_measure(args.example)
            seq = densities_operator(mu, args.n_max, mode=args.mode_resolved)
        else:
            seq = _example_densities(args.example, args.n_max, args.mode)
    path, fh = _open_csv(args.out, "densities.csv")
    with fh:
        w = csv.writer(fh)
        w.writerow(["n", "phi_n", "psi_n"])
        for n in range(1, len(seq) + 1):
            w.writerow(
                [n, _fmt(seq.phi(n), args.digits), _fmt(seq.psi(n), args.digits)]
            )
    _write_manifest(
        args.out,
        "densities",
        _params(args, ["example", "measure", "n_max", "mode", "engine", "digits"]),
        [path],
        started,
        extra={"label": label, "mode": seq.mode, "provenance": seq.provenance},
    )
    return 0


def _roots_equation(args):
    if args.two_poly:
        a, b = (Fraction(x) for x in args.two_poly.split(","))
        return TwoPolyEq(a, b), GeneralEq(two_poly_measure(a, b))
    if args.example in ("1", "2"):
        f_eq = FExample1() if args.example == "1" else FExample2()
        gen = GeneralEq(_example_measure(args.example))
        if args.form == "general":
            return gen, gen
        return f_eq, gen
    if args.example in TWO_POLY_PARAMS:
        a, b = TWO_POLY_PARAMS[args.example]
        return TwoPolyEq(a, b), GeneralEq(two_poly_measure(a, b))
    raise _CliValidation("roots needs --example {1,2,3a,3b,emu1} or --two-poly A,B")


def cmd_roots(args) -> int:
    started = time.time()
    eq, reference = _roots_equation(args)
    results = []
    if args.primary:
        results.append(find_real_primary(eq))
    else:
        if args.box:
            re0, re1, _, im1 = (float(x) for x in args.box.split(","))
            box = RootBox(re0, re1, im1)
        else:
            box = eq.default_box()
        results.extend(find_roots_in_box(eq, box, tol=args.tol))
    if eq is not reference:
        results = filter_spurious(results, reference)
    path, fh = _open_csv(args.out, "roots.csv")
    with fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "residual", "classification"])
        for r in results:
            w.writerow(
                [
                    _fmt(r.alpha.re, args.digits),
                    _fmt(r.alpha.im, args.digits),
                    f"{float(r.residual):.3e}",
                    r.classification,
                ]
            )
    _write_manifest(
        args.out,
        "roots",
        _params(args, ["example", "two_poly", "form", "primary", "box", "tol", "digits"]),
        [path],
        started,
        extra={"count": len(results), "equation": repr(eq)},
    )
    return 0


def cmd_compare(args) -> int:
    started = time.time()
    name = args.example
    n_max = args.n_max
    seq = _example_densities(name, n_max, args.mode)
    extra = {}
    if name == "1":
        primary = find_real_primary(FExample1())
        alpha_f = primary.alpha.re
        fit = fit_leading_constant(seq, -alpha_f)
        model = model_example1(fit.value, alpha=alpha_f)
        extra = {
            "alpha_F": _fmt(alpha_f, args.digits),
            "fitted_C": _fmt(fit.value, args.digits),
            "fit_gauge": float(fit.gauge) if fit.gauge is not None else None,
            "terms": args.terms,
        }
        if args.terms == 1:
            model.power_terms = model.power_terms[:1]
    elif name == "2":
        model = model_example2(args.level)
        A, B, C = example2_constants()
        extra = {
            "level": args.level,
            "A": _fmt(A, args.digits),
            "B": _fmt(B, args.digits),
            "C": _fmt(C, args.digits),
        }
    elif name in TWO_POLY_PARAMS:
        a, b = TWO_POLY_PARAMS[name]
        primary = find_real_primary(TwoPolyEq(a, b))
        alpha = primary.alpha.re
        fit = fit_leading_constant(seq, -alpha - 1.0)
        model = model_two_poly(a, b, alpha, fit.value)
        extra = {
            "alpha": _fmt(alpha, args.digits),
            "fitted_C": _fmt(fit.value, args.digits),
            "fit_gauge": float(fit.gauge) if fit.gauge is not None else None,
            "terms": args.terms,
        }
        if args.terms == 1:
            model.power_terms = model.power_terms[:1]
    else:
        raise _CliValidation("compare needs --example {1,2,3a,3b,emu1}")
    path, fh = _open_csv(args.out, "compare.csv")
    with fh:
        w = csv.writer(fh)
        w.writerow(["n", "exact", "approx", "diff"])
        for n in range(args.n_min, n_max + 1, args.stride):
            exact = seq.phi(n)
            if isinstance(exact, Fraction):
                exact = DD(exact)
            approx = model.evaluate(n)
            w.writerow(
                [
                    n,
                    _fmt(exact, args.digits),
                    _fmt(approx, args.digits),
                    _fmt(exact - approx, args.digits),
                ]
            )
    _write_manifest(
        args.out,
        "compare",
        _params(args, ["example", "n_min", "n_max", "mode", "level", "terms", "stride", "digits"]),
        [path],
        started,
        extra=extra,
    )
    return 0


def cmd_picard(args) -> int:
    started = time.time()
    if args.h0 == "const":
        start = 1.0 if args.form == "backward" else 0.5
        g0 = GridFunction.constant(start, args.grid_step, args.rule)
    else:
        g0 = GridFunction.step_profile(args.grid_step, args.rule)
    if args.form == "backward":
        result = picard_backward(g0, args.iters)
        estimate = h1_estimate(result.grid)
        grid = normalize_to_boundary(result.grid)
    else:
        result = picard_forward(g0, args.iters)
        grid = result.grid
        estimate = float(grid.h[-1])
    quarter = check_quarter_integral(grid)
    parts = verify_parts_identity(grid, 1e-2)
    path, fh = _open_csv(args.out, "picard.csv")
    with fh:
        w = csv.writer(fh)
        w.writerow(["z", "H"])
        for z, h in zip(grid.z[:: args.stride], grid.h[:: args.stride]):
            w.writerow([f"{float(z):.10g}", repr(float(h))])
    _write_manifest(
        args.out,
        "picard",
        _params(args, ["grid_step", "iters", "h0", "form", "rule", "stride"]),
        [path],
        started,
        extra={
            "boundary_estimate": estimate,
            "quarter_integral_residual": quarter,
            "parts_identity_diff": parts.difference,
            "last_sup_change": result.last_change,
        },
    )
    return 0


def cmd_simulate(args) -> int:
    started = time.time()
    if args.measure:
        mu = load_measure(args.measure)
    else:
        mu = _example_measure(args.example)
    cfg = SimConfig(
        mu,
        args.t,
        int(float(args.trials)),
        seed=args.seed,
        cap=args.cap,
        threads=args.threads,
    )
    emp = simulate(cfg)
    extra = {"capped": emp.capped, "trials": emp.trials}
    exact = None
    if args.t <= 8:
        largest = max(emp.counts) if emp.counts else 1
        probs, deficit = exact_distribution(mu, args.t, min(largest, 2 ** args.t))
        exact = {n + 1: p for n, p in enumerate(probs)}
        stat, dof = chi_square_statistic(emp, probs)
        extra.update({"chi2_stat": stat, "chi2_dof": dof, "deficit": float(deficit)})
    path, fh = _open_csv(args.out, "simulate.csv")
    with fh:
        w = csv.writer(fh)
        header = ["n", "count", "ratio_to_1", "stderr"]
        if exact is not None:
            header.append("exact_prob")
        w.writerow(header)
        for n in sorted(emp.counts):
            ratio, se = emp.ratio_to_one(n)
            row = [n, emp.counts[n], repr(float(ratio)), repr(float(se))]
            if exact is not None:
                row.append(_fmt(exact.get(n, Fraction(0)), args.digits))
            w.writerow(row)
    _write_manifest(
        args.out,
        "simulate",
        _params(args, ["example", "measure", "t", "trials", "seed", "cap", "threads"]),
        [path],
        started,
        extra=extra,
    )
    return 0


def cmd_replay(args) -> int:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    params = manifest["params"]
    argv = [command]
    for key, value in params.items():
        if value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    if args.out:
        argv.extend(["--out", args.out])
    return main(argv)


def _params(args, names):
    return {k: getattr(args, k) for k in names if hasattr(args, k)}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--out", "-o", default=".", help="output directory")
    p.add_argument("--digits", type=int, default=36,
                   help="significant digits in CSV decimal fields")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("RGW_THREADS", "1")),
                   help="worker cap (RGW_THREADS fallback)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rgw",
        description="Relative limit densities of branching processes in "
        "random environments: density tables, characteristic roots, "
        "asymptotic comparisons, integral-equation grids, simulations.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("densities", help="density table phi_1..phi_N")
    p.add_argument("--example", choices=["0", "1", "2", "3a", "3b", "emu1"])
    p.add_argument("--measure", help="measure-spec JSON file")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--mode", choices=["rational", "xfloat", "auto"], default="auto")
    p.add_argument("--engine", choices=["recurrence", "operator"],
                   default="recurrence")
    _add_common(p)
    p.set_defaults(fn=cmd_densities)

    p = sub.add_parser("roots", help="characteristic-equation zeros")
    p.add_argument("--example", choices=["1", "2", "3a", "3b", "emu1"])
    p.add_argument("--two-poly", help="A,B pair parameters")
    p.add_argument("--form", choices=["specialized", "general"],
                   default="specialized")
    p.add_argument("--primary", action="store_true",
                   help="minimal real zero only")
    p.add_argument("--box", help="re0,re1,im0,im1 search rectangle")
    p.add_argument("--tol", type=float, default=1e-20)
    _add_common(p)
    p.set_defaults(fn=cmd_roots)

    p = sub.add_parser("compare", help="exact densities vs asymptotic model")
    p.add_argument("--example", choices=["1", "2", "3a", "3b", "emu1"],
                   required=True)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--mode", choices=["rational", "xfloat", "auto"],
                   default="auto")
    p.add_argument("--level", type=int, choices=[1, 2, 3], default=3,
                   help="model level (full-interval family)")
    p.add_argument("--terms", type=int, choices=[1, 2], default=2,
                   help="power terms (other families)")
    p.add_argument("--stride", type=int, default=1)
    _add_common(p)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("picard", help="integral-equation fixed point")
    p.add_argument("--grid-step", type=float, default=1e-4)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--h0", choices=["const", "step"], default="const")
    p.add_argument("--form", choices=["backward", "forward"], default="backward")
    p.add_argument("--rule",
                   choices=["trapezoid", "rectangle", "rectangle-right",
                            "rectangle-left"],
                   default="trapezoid")
    p.add_argument("--stride", type=int, default=1)
    _add_common(p)
    p.set_defaults(fn=cmd_picard)

    p = sub.add_parser("simulate", help="Monte Carlo branching trials")
    p.add_argument("--example", choices=["0", "1", "2", "3a", "3b", "emu1"])
    p.add_argument("--measure", help="measure-spec JSON file")
    p.add_argument("--t", type=int, required=True, help="time horizon")
    p.add_argument("--trials", default="100000",
                   help="trial count (scientific notation ok)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=10 ** 6)
    _add_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_replay)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "out", None):
            os.makedirs(args.out, exist_ok=True)
        if hasattr(args, "mode"):
            if args.mode == "auto":
                n = getattr(args, "n_max", 0)
                args.mode_resolved = (
                    "rational" if n <= RATIONAL_DEFAULT_LIMIT else "xfloat"
                )
            else:
                args.mode_resolved = args.mode
        return args.fn(args)
    except ValueError as exc:
        # covers inadmissible measures, malformed measure files and bad
        # parameter combinations
        print(f"validation failure: {exc}", file=sys.stderr)
        return 2
    except (SolverError, FixpointError, QuadratureError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
