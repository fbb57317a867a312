"""Command line front end: verify, sweep, reconstruct, relax, export-field.

All numeric output is CSV with 17-significant-digit decimal formatting, so
identical run configurations produce byte-identical files.  Exit codes:
0 success, 1 usage or I/O error, 2 mathematical verdict failure (theorem
violated, analytic bound broken, reconstruction hypothesis failed, or a
solver that did not converge).  ``FK_THREADS`` caps the worker processes
used to parallelize sweep cases; the default of 1 keeps everything in
process.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from fklattice.angular import check_assumptions, decompose, write_angular_csv
from fklattice.diagnostics import (
    EquationResidualError,
    compute_kappa_report,
    linearized_residual,
    verify_theorem,
)
from fklattice.examples import (
    ExampleSpec,
    build_example,
    build_example4,
    check_analytic_bounds,
    sine_gordon_norms,
)
from fklattice.lattice import read_field_csv, write_field_csv
from fklattice.rigidity import (
    HypothesisViolationError,
    check_vanishing,
    extract_ratios,
    roundtrip_check,
)
from fklattice.solver import Potential, RelaxResult, SolverConfig, default_step, relax


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2; we reserve 2
        raise UsageError(message)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x); NaN when y is not positive."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(ys <= 0.0) or np.any(xs <= 0.0):
        return math.nan
    lx = np.log(xs)
    ly = np.log(ys)
    lx = lx - lx.mean()
    return float(np.dot(lx, ly - ly.mean()) / np.dot(lx, lx))


def successive_rates(hs, values) -> list:
    """log(v_{k-1}/v_k) / log(h_{k-1}/h_k) for consecutive mesh pairs."""
    out = [None]
    for k in range(1, len(hs)):
        if values[k] > 0 and values[k - 1] > 0:
            out.append(math.log(values[k - 1] / values[k]) / math.log(hs[k - 1] / hs[k]))
        else:
            out.append(math.nan)
    return out


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


@dataclass
class VerifyCase:
    spec: ExampleSpec
    radius: float
    report: object
    theorem: object
    lemma: object
    bound_results: list
    assumptions: object

    @property
    def ok(self) -> bool:
        return (
            self.theorem.verdict == "holds"
            and all(ok for _, _, ok in self.bound_results)
            and self.lemma.passed
        )


def run_verify_case(
    example_id: str,
    h: float,
    radius: float,
    mode: str = "form-plus",
    theta_inf: Optional[float] = None,
    halo: int = 4,
    **example_kwargs,
) -> VerifyCase:
    spec = build_example(example_id, h, **example_kwargs)
    u = spec.build_field(radius, halo)
    tails = spec.tails_for_radius(radius)
    ti = theta_inf if theta_inf is not None else spec.theta_inf
    report, ang = compute_kappa_report(
        u,
        spec.source,
        theta_inf_plus=ti,
        theta_inf_minus=ti,
        include_minus=True,
        tail_estimates=tails,
    )
    theorem = verify_theorem(report, ang, h, mode)
    lemma = linearized_residual(u, spec.source, ang)
    computed = {
        "kappa0_plus": report.kappa0_plus,
        "kappa1_plus": report.kappa1_plus,
        "kappa2_plus": report.kappa2_plus,
        "kappa3_plus": report.kappa3_plus,
        "kappa4_plus": report.kappa4_plus,
        "kappa5_plus": report.kappa5_plus,
        "kappa6_plus": report.kappa6_plus,
        "kappa7_plus": report.kappa7_plus,
        "lhs_plus": theorem.lhs_form_plus,
        "Ch": theorem.bound_Ch,
    }
    bound_results = check_analytic_bounds(spec, computed)
    assumptions = check_assumptions(u)
    return VerifyCase(spec, radius, report, theorem, lemma, bound_results, assumptions)


_KAPPA_KEYS = [f"kappa{m}_{fam}" for fam in ("plus", "minus") for m in range(8)]
_TAIL_KEYS = ["lhs_plus", "kappa2", "kappa3", "kappa4", "kappa5", "kappa6", "kappa7"]


def verify_row(case: VerifyCase) -> tuple[list, list]:
    """(header, row) of the flat verify CSV keyed by (example, h, radius)."""
    rep, thm, lem = case.report, case.theorem, case.lemma
    header = ["example", "h", "radius", "mode"]
    row = [case.spec.id, fmt(case.spec.h), fmt(case.radius), thm.mode]
    for key in _KAPPA_KEYS:
        header.append(key)
        row.append(fmt(getattr(rep, key)))
    header += ["theta_inf_plus", "theta_inf_minus", "invalid_sites"]
    row += [fmt(rep.theta_inf_plus), fmt(rep.theta_inf_minus), str(rep.invalid_site_count)]
    header += ["lhs_plus", "lhs_minus", "constant_C", "Ch", "lhs_tail", "verdict"]
    row += [
        fmt(thm.lhs_form_plus),
        fmt(thm.lhs_form_minus),
        fmt(thm.constant_C),
        fmt(thm.bound_Ch),
        fmt(thm.lhs_tail),
        thm.verdict,
    ]
    for key in _TAIL_KEYS:
        header.append(f"tail_{key}")
        row.append(fmt(rep.tail_estimates.get(key)))
    header += ["lemma_max_excess", "lemma_sharp_fraction", "lemma_ok"]
    row += [fmt(lem.max_excess), fmt(lem.sharp_fraction), str(int(lem.passed))]
    header += ["assumptions_ok"]
    row += [str(int(case.assumptions.all_passed))]
    for bound, value, ok in case.bound_results:
        header.append(f"bound_{bound.name}")
        row.append(f"{'ok' if ok else 'violated'}:{fmt(value)}<=>{fmt(bound.value)}")
    return header, row


def _write_csv(path: Optional[str], lines: list) -> None:
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_verify(args) -> int:
    case = run_verify_case(
        args.example,
        args.h,
        args.radius,
        mode=args.mode,
        theta_inf=args.theta_inf,
        halo=args.halo,
        **_example4_kwargs(args),
    )
    header, row = verify_row(case)
    _write_csv(args.out, [",".join(header), ",".join(row)])
    if not case.ok:
        print(
            f"verdict={case.theorem.verdict} lemma_ok={case.lemma.passed} "
            f"bounds_ok={all(ok for _, _, ok in case.bound_results)}",
            file=sys.stderr,
        )
        return 2
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _sweep_case(task) -> dict:
    example_id, h, radius, mode, kwargs = task
    case = run_verify_case(example_id, h, radius, mode=mode, **kwargs)
    return {
        "h": h,
        "lhs": case.theorem.lhs_form_plus,
        "Ch": case.theorem.bound_Ch,
        "ok": case.ok,
        "verdict": case.theorem.verdict,
    }


def cmd_sweep(args) -> int:
    hs = args.h_list
    if len(hs) < 3:
        raise UsageError("sweep needs at least 3 mesh sizes (--h-list)")
    tasks = [(args.example, h, args.radius, args.mode, _example4_kwargs(args)) for h in hs]
    workers = min(int(os.environ.get("FK_THREADS", "1") or "1"), len(tasks))
    if workers > 1:
        import multiprocessing as mp

        with mp.Pool(workers) as pool:
            rows = pool.map(_sweep_case, tasks)
    else:
        rows = [_sweep_case(t) for t in tasks]
    lhs = [r["lhs"] for r in rows]
    ch = [r["Ch"] for r in rows]
    lhs_rates = successive_rates(hs, lhs)
    ch_rates = successive_rates(hs, ch)
    lines = ["h,lhs,Ch,lhs_rate,Ch_rate"]
    for k, r in enumerate(rows):
        lines.append(
            ",".join(
                [
                    fmt(r["h"]),
                    fmt(r["lhs"]),
                    fmt(r["Ch"]),
                    fmt(lhs_rates[k]),
                    fmt(ch_rates[k]),
                ]
            )
        )
    slope_lhs = fit_loglog_slope(hs, lhs)
    slope_ch = fit_loglog_slope(hs, ch)
    lines.append(f"# lhs_slope={fmt(slope_lhs)} Ch_slope={fmt(slope_ch)}")
    _write_csv(args.out, lines)
    print(f"lhs slope {fmt(slope_lhs)}, Ch slope {fmt(slope_ch)}", file=sys.stderr)
    return 0 if all(r["ok"] for r in rows) else 2


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------


def cmd_reconstruct(args) -> int:
    if args.input:
        u = read_field_csv(args.input)
    else:
        spec = build_example(args.example, args.h, profile=args.profile, omega=args.omega)
        u = spec.build_field(args.radius, args.halo)
    tol = args.tol if args.tol is not None else 1e-9 * max(1.0, u.core_max_abs())
    ang = decompose(u)
    try:
        is_zero, residual = check_vanishing(ang)
    except HypothesisViolationError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return 2
    if not is_zero:
        print(
            f"angular Dirichlet sum {fmt(residual)} is nonzero: "
            "configuration is not one-dimensional",
            file=sys.stderr,
        )
        return 2
    result = roundtrip_check(u, k_max=args.k_max)
    c_plus, c_minus, _ = extract_ratios(u)
    lines = [
        "c_plus,c_minus,ratio_constancy_error,max_abs_error,vanishing_residual,"
        "sites_compared,sites_skipped",
        ",".join(
            [
                fmt(c_plus),
                fmt(c_minus),
                fmt(result.ratio_constancy_error),
                fmt(result.max_abs_error),
                fmt(residual),
                str(result.sites_compared),
                str(result.sites_skipped),
            ]
        ),
    ]
    _write_csv(args.out, lines)
    return 0 if result.max_abs_error <= tol else 2


# ---------------------------------------------------------------------------
# relax
# ---------------------------------------------------------------------------

_INIT_CLOSURES = {
    "linear": lambda h: (lambda k1, k2: h * np.asarray(k2, dtype=float)),
    "sine-gordon-kink": lambda h: (
        lambda k1, k2: 4.0 * np.arctan(np.exp(h * np.asarray(k2, dtype=float)))
    ),
}

_POTENTIALS = {
    "zero": lambda: Potential(
        V=lambda k1, k2, u: np.zeros_like(np.asarray(u, dtype=float)),
        dV=lambda k1, k2, u: np.zeros_like(np.asarray(u, dtype=float)),
        hooke_d=1.0,
    ),
    "sine-gordon": lambda: Potential(
        V=lambda k1, k2, u: -np.cos(u), dV=lambda k1, k2, u: np.sin(u), hooke_d=1.0
    ),
}


def cmd_relax(args) -> int:
    from fklattice.lattice import make_window, sample

    if args.potential not in _POTENTIALS:
        raise UsageError(f"unknown potential {args.potential!r}")
    if args.init not in _INIT_CLOSURES:
        raise UsageError(f"unknown init profile {args.init!r}")
    pot = _POTENTIALS[args.potential]()
    window = make_window(args.h, args.radius, max(args.halo, 1))
    u0 = sample(_INIT_CLOSURES[args.init](args.h), window)
    step = args.step if args.step is not None else default_step(window, pot.hooke_d)
    cfg = SolverConfig(
        step=step,
        max_iters=args.max_iters,
        residual_tol=args.tol if args.tol is not None else 1e-10,
        boundary=args.boundary,
    )
    result: RelaxResult = relax(u0, pot, cfg)
    if args.out:
        write_field_csv(result.field, args.out)
    print(
        f"iters={result.iters} residual={fmt(result.final_residual_max)} "
        f"converged={result.converged}",
        file=sys.stderr,
    )
    if args.diagnose and result.converged:
        try:
            c_plus, c_minus, constancy = extract_ratios(result.field)
            print(
                f"ratios c+={fmt(c_plus)} c-={fmt(c_minus)} constancy={fmt(constancy)}",
                file=sys.stderr,
            )
        except HypothesisViolationError as exc:
            print(f"ratio extraction skipped: {exc}", file=sys.stderr)
    return 0 if result.converged else 2


# ---------------------------------------------------------------------------
# export-field
# ---------------------------------------------------------------------------


def cmd_export_field(args) -> int:
    spec = build_example(
        args.example, args.h, **_example4_kwargs(args), **_oned_kwargs(args)
    )
    u = spec.build_field(args.radius, args.halo)
    if args.angular:
        write_angular_csv(decompose(u), args.out or "angular.csv")
    else:
        write_field_csv(u, args.out or "field.csv")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _example4_kwargs(args) -> dict:
    if getattr(args, "example", None) not in ("4", "ex4"):
        return {}
    if getattr(args, "profile", "sine-gordon") in (None, "sine-gordon"):
        return {}
    if args.profile != "custom":
        raise UsageError("example 4 profile must be sine-gordon or custom")
    ns = {k: getattr(np, k) for k in ("sin", "cos", "exp", "arctan", "tanh", "sqrt", "cosh")}
    ns["pi"] = math.pi
    if not (args.vtilde_expr and args.gprime_expr):
        raise UsageError("custom profile needs --vtilde-expr and --gprime-expr")
    vt = eval(f"lambda t: {args.vtilde_expr}", {"__builtins__": {}}, dict(ns))
    gp = eval(f"lambda t: {args.gprime_expr}", {"__builtins__": {}}, dict(ns))
    norms = {
        "vtilde_prime_sup": args.norm_vp,
        "vtilde_iv_sup": args.norm_viv,
        "g_prime_sup": args.norm_gp,
        "g_second_sup": args.norm_gpp,
    }
    if any(v is None for v in norms.values()):
        raise UsageError("custom profile needs --norm-vp/--norm-viv/--norm-gp/--norm-gpp")
    return {"vtilde": vt, "gprime": gp, "norms": norms}


def _oned_kwargs(args) -> dict:
    if getattr(args, "example", None) != "oned":
        return {}
    return {"profile": args.profile or "tanh", "omega": args.omega}


def _parse_h_list(text: str) -> list:
    try:
        out = [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --h-list: {exc}")
    if not out:
        raise UsageError("empty --h-list")
    return out


def _load_config_args(path: str) -> list:
    """Key-value config lines become flags, inserted before explicit flags."""
    extra = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, value = (part.strip() for part in line.split("=", 1))
            else:
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise UsageError(f"bad config line {line!r}")
                key, value = parts[0], parts[1].strip()
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes", "on"):
                extra.append(flag)
            elif value.lower() in ("false", "no", "off"):
                continue
            else:
                extra.extend([flag, value])
    return extra


def build_parser() -> _Parser:
    parser = _Parser(prog="fklat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_example=True):
        if with_example:
            p.add_argument("--example", required=True, help="1, 2, 3, 4 or oned")
        p.add_argument("--h", type=float, help="mesh size")
        p.add_argument("--radius", type=float, default=10.0)
        p.add_argument("--halo", type=int, default=4)
        p.add_argument("--out", help="output CSV path (stdout when omitted)")
        p.add_argument("--config", help="key-value config file; explicit flags win")
        p.add_argument("--tol", type=float, default=None, help="tolerance override")

    p_verify = sub.add_parser("verify", help="run the full diagnostic pipeline on one case")
    add_common(p_verify)
    p_verify.add_argument("--mode", choices=("form-plus", "tutta"), default="form-plus")
    p_verify.add_argument("--theta-inf", type=float, default=None)
    _add_example4_flags(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="verify across mesh sizes and fit rates")
    add_common(p_sweep)
    p_sweep.add_argument("--h-list", type=_parse_h_list, help="comma-separated mesh sizes")
    p_sweep.add_argument("--mode", choices=("form-plus", "tutta"), default="form-plus")
    _add_example4_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_rec = sub.add_parser("reconstruct", help="1D detection and binomial roundtrip")
    add_common(p_rec, with_example=False)
    p_rec.add_argument("--example", default="oned")
    p_rec.add_argument("--input", help="field CSV to load instead of a built-in example")
    p_rec.add_argument("--profile", default="tanh", help="oned profile: linear|tanh|arctanexp")
    p_rec.add_argument("--omega", default="e1+e2", choices=("e2", "e1+e2"))
    p_rec.add_argument("--k-max", type=int, default=None)
    p_rec.set_defaults(func=cmd_reconstruct)

    p_relax = sub.add_parser("relax", help="damped gradient-flow relaxation")
    add_common(p_relax, with_example=False)
    p_relax.add_argument("--potential", default="zero", help="zero|sine-gordon")
    p_relax.add_argument("--init", default="linear", help="linear|sine-gordon-kink")
    p_relax.add_argument("--boundary", default="dirichlet-from-closure")
    p_relax.add_argument("--step", type=float, default=None)
    p_relax.add_argument("--max-iters", type=int, default=100_000)
    p_relax.add_argument("--diagnose", action="store_true")
    p_relax.set_defaults(func=cmd_relax)

    p_exp = sub.add_parser("export-field", help="write a built-in configuration as CSV")
    add_common(p_exp)
    p_exp.add_argument("--omega", default="e1+e2", choices=("e2", "e1+e2"))
    p_exp.add_argument("--angular", action="store_true", help="export rho/theta instead of u")
    _add_example4_flags(p_exp)
    p_exp.set_defaults(func=cmd_export_field)
    return parser


def _add_example4_flags(p) -> None:
    p.add_argument("--profile", default=None, help="example 4: sine-gordon|custom")
    p.add_argument("--vtilde-expr", default=None)
    p.add_argument("--gprime-expr", default=None)
    p.add_argument("--norm-vp", type=float, default=None)
    p.add_argument("--norm-viv", type=float, default=None)
    p.add_argument("--norm-gp", type=float, default=None)
    p.add_argument("--norm-gpp", type=float, default=None)


def main(argv: Optional[list] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # --config contributes flags that explicit command line flags override
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            cfg_path = argv[idx + 1]
        except IndexError:
            print("error: --config needs a path", file=sys.stderr)
            return 1
        try:
            extra = _load_config_args(cfg_path)
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 1
        except UsageError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        argv = argv[:1] + extra + argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "h", None) is None and args.command in (
            "verify",
            "relax",
            "export-field",
            "reconstruct",
        ):
            if args.command == "reconstruct" and args.input:
                pass
            else:
                raise UsageError("--h is required")
        if args.command == "sweep" and not args.h_list:
            raise UsageError("--h-list is required for sweep")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except EquationResidualError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
