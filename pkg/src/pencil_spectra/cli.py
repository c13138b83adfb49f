"""Command-line front end: ``pencil-spectra {classify,asym,solve,compare} FILE``.

Exit codes: 0 success, 1 soft failure (not regular, incomplete spectrum),
2 input error, 3 no asymptotic expansion for the configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Sequence

from .asymptotics import AsymptoticCoeffs, TauFit, UnsupportedCase, coeffs_for, fit_tau, seed
from ._ode import IntegrationError, NonFiniteCoefficient
from .exprparse import ExprSyntaxError, UnknownIdentifier
from .problem import ProblemError, ProblemSpec, case_label, classify_regularity, validate
from .rootfind import IncompleteSpectrum, RootFindError, SpectrumReport, solve_spectrum

EXIT_OK, EXIT_SOFT, EXIT_INPUT, EXIT_UNSUPPORTED = 0, 1, 2, 3
FIT_WARN = 0.10  # relative tau1 disagreement that gets reported


class InputError(Exception):
    pass


def fmt(x: float) -> str:
    """Fixed 15-significant-digit formatting used in every table."""
    return f"{float(x):.14e}"


def load_problem(path: str) -> ProblemSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None
    try:
        return validate(raw)
    except (ProblemError, ExprSyntaxError, UnknownIdentifier) as exc:
        raise InputError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# comparison rows


@dataclass(frozen=True)
class ComparisonRow:
    k: int
    lam: complex
    mu: complex
    seed_mu: complex
    residual: float
    scaled_gap: float


def comparison_rows(report: SpectrumReport, coeffs: AsymptoticCoeffs, a: float) -> list[ComparisonRow]:
    rows = []
    for k, e in sorted(report.indexed().items()):
        if k < 1 or k > report.kmax:
            continue
        mu_hat = seed(k, coeffs, a)[0]
        rows.append(ComparisonRow(k, e.lam, e.mu, mu_hat, e.residual, abs(e.mu - mu_hat) * k * k))
    return rows


def gap_slack(k: int) -> float:
    # computed mu_k carry an absolute error of order 1e-9, which the k^2 factor amplifies
    return 1e-9 * k * k


def is_decreasing(rows: Sequence[ComparisonRow], k_lo: int, k_hi: int) -> bool:
    sel = [r for r in rows if k_lo <= r.k <= k_hi]
    if len(sel) < 2 or [r.k for r in sel] != list(range(sel[0].k, sel[-1].k + 1)):
        return False
    return all(b.scaled_gap <= a.scaled_gap + gap_slack(b.k) for a, b in zip(sel, sel[1:]))


def fit_rows(rows: Sequence[ComparisonRow], a: float, k_lo: int) -> TauFit:
    sel = [r for r in rows if r.k >= k_lo]
    return fit_tau([r.k for r in sel], [r.mu for r in sel], a)


def relative_diff(fitted: complex, printed: complex) -> float:
    if printed == 0:
        return math.inf if fitted != 0 else 0.0
    return abs(fitted - printed) / abs(printed)


# ---------------------------------------------------------------------------
# commands


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _coeff_dict(c: AsymptoticCoeffs) -> dict:
    return {
        "tau0": _complex_pair(c.tau0),
        "tau1": _complex_pair(c.tau1),
        "tau2": _complex_pair(c.tau2),
        "anomalies": list(c.anomalies),
    }


def cmd_classify(spec: ProblemSpec, args, out) -> int:
    label = case_label(spec)
    reg = classify_regularity(spec)
    conditions = {ep.value: [str(h) for h in hits] for ep, hits in reg.holds.items()}
    if args.json:
        json.dump(
            {
                "case": str(label),
                "right_class": label.right_class.value,
                "left_case": label.left_case,
                "conditions": conditions,
                "regular": reg.birkhoff_regular,
            },
            out,
            indent=2,
        )
        out.write("\n")
    else:
        out.write(f"case: {label}\n")
        out.write(f"right_class: {label.right_class.value}\n")
        out.write(f"left_case: {label.left_case if label.left_case is not None else 'none'}\n")
        for end, names in conditions.items():
            out.write(f"conditions {end}: {', '.join(names) if names else 'none'}\n")
        out.write(f"regular: {'yes' if reg.birkhoff_regular else 'no'}\n")
    return EXIT_OK if reg.birkhoff_regular else EXIT_SOFT


def cmd_asym(spec: ProblemSpec, args, out) -> int:
    coeffs = coeffs_for(spec)
    rows = [(k, seed(k, coeffs, spec.a)[0]) for k in range(1, args.kmax + 1)]
    if args.json:
        json.dump(
            {
                "case": str(case_label(spec)),
                **_coeff_dict(coeffs),
                "rows": [{"k": k, "mu_hat": _complex_pair(m)} for k, m in rows],
            },
            out,
            indent=2,
        )
        out.write("\n")
        return EXIT_OK
    for name in ("tau0", "tau1", "tau2"):
        z = getattr(coeffs, name)
        out.write(f"# {name},{fmt(z.real)},{fmt(z.imag)}\n")
    for note in coeffs.anomalies:
        out.write(f"# anomaly: {note}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["k", "re_mu_hat", "im_mu_hat"])
    for k, m in rows:
        w.writerow([k, fmt(m.real), fmt(m.imag)])
    return EXIT_OK


def _solve(spec: ProblemSpec, args) -> tuple[SpectrumReport, bool]:
    try:
        return solve_spectrum(spec, args.kmax, args.tol, radius=args.radius, threads=args.threads), True
    except IncompleteSpectrum as exc:
        return exc.report, False


def _report_summary(report: SpectrumReport) -> dict:
    w = report.window
    return {
        "window": [w.x0, w.x1, w.y0, w.y1],
        "window_winding": report.window_winding,
        "found_in_window": report.found_in_window,
        "complete": report.complete,
        "axis_count": report.axis_count,
        "axis_parity": report.axis_parity,
        "symmetry_defect": report.symmetry_defect,
        "k0": report.k0,
        "kmax": report.kmax,
        "fallback_used": report.fallback_used,
        "unresolved": len(report.unresolved),
        "notes": list(report.notes),
    }


def _write_summary(out, summary: dict) -> None:
    for key, value in summary.items():
        if isinstance(value, float):
            value = fmt(value)
        elif isinstance(value, list) and key == "window":
            value = ",".join(fmt(v) for v in value)
        elif isinstance(value, list):
            value = "; ".join(value) if value else ""
        out.write(f"# {key}={value}\n")


def cmd_solve(spec: ProblemSpec, args, out) -> int:
    report, complete = _solve(spec, args)
    summary = _report_summary(report)
    if args.json:
        eig = [
            {
                "k": e.index,
                "lambda": _complex_pair(e.lam),
                "mu": _complex_pair(e.mu),
                "multiplicity": e.multiplicity,
                "residual": e.residual,
                "seed": None if e.seed_used is None else _complex_pair(e.seed_used),
                "partner": e.partner,
            }
            for e in report.eigenvalues
        ]
        json.dump({"case": str(case_label(spec)), **summary, "eigenvalues": eig}, out, indent=2)
        out.write("\n")
    else:
        _write_summary(out, summary)
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["k", "re_lambda", "im_lambda", "re_mu", "im_mu", "multiplicity", "residual"])
        for e in report.eigenvalues:
            w.writerow(
                [
                    "" if e.index is None else e.index,
                    fmt(e.lam.real),
                    fmt(e.lam.imag),
                    fmt(e.mu.real),
                    fmt(e.mu.imag),
                    e.multiplicity,
                    fmt(e.residual),
                ]
            )
    return EXIT_OK if complete else EXIT_SOFT


def cmd_compare(spec: ProblemSpec, args, out) -> int:
    coeffs = coeffs_for(spec)
    report, complete = _solve(spec, args)
    rows = comparison_rows(report, coeffs, spec.a)
    k_lo = max(1, (args.kmax + 1) // 2)
    top = [r.scaled_gap for r in rows if r.k >= k_lo]
    summary = {
        **_report_summary(report),
        "max_scaled_gap_top_half": max(top) if top else math.nan,
        "trend_top_half": "decreasing" if is_decreasing(rows, k_lo, args.kmax) else "not decreasing",
    }
    fit_info = None
    if args.fit:
        fit = fit_rows(rows, spec.a, k_lo)
        fit_info = {
            "ks": [fit.ks[0], fit.ks[-1]],
            "rms_residual": fit.rms_residual,
            "terms": {},
        }
        for name in ("tau0", "tau1", "tau2"):
            fitted, printed = getattr(fit, name), getattr(coeffs, name)
            rel = relative_diff(fitted, printed)
            fit_info["terms"][name] = {
                "fitted": _complex_pair(fitted),
                "printed": _complex_pair(printed),
                "relative_difference": rel,
            }
        fit_info["tau1_disagrees"] = fit_info["terms"]["tau1"]["relative_difference"] > FIT_WARN

    if args.json:
        payload = {
            "case": str(case_label(spec)),
            **summary,
            **_coeff_dict(coeffs),
            "rows": [
                {
                    "k": r.k,
                    "lambda": _complex_pair(r.lam),
                    "mu": _complex_pair(r.mu),
                    "seed_mu": _complex_pair(r.seed_mu),
                    "residual": r.residual,
                    "scaled_gap": r.scaled_gap,
                }
                for r in rows
            ],
        }
        if fit_info is not None:
            payload["fit"] = fit_info
        json.dump(payload, out, indent=2)
        out.write("\n")
    else:
        _write_summary(out, summary)
        if fit_info is not None:
            for name, t in fit_info["terms"].items():
                f, p = t["fitted"], t["printed"]
                flag = " DISAGREES" if name == "tau1" and fit_info["tau1_disagrees"] else ""
                out.write(
                    f"# fit {name}: fitted={fmt(f[0])},{fmt(f[1])} printed={fmt(p[0])},{fmt(p[1])} "
                    f"relative_difference={fmt(t['relative_difference'])}{flag}\n"
                )
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["k", "re_lambda", "im_lambda", "re_mu", "im_mu", "re_seed_mu", "im_seed_mu", "residual", "scaled_gap"])
        for r in rows:
            w.writerow(
                [
                    r.k,
                    fmt(r.lam.real),
                    fmt(r.lam.imag),
                    fmt(r.mu.real),
                    fmt(r.mu.imag),
                    fmt(r.seed_mu.real),
                    fmt(r.seed_mu.imag),
                    fmt(r.residual),
                    fmt(r.scaled_gap),
                ]
            )
    return EXIT_OK if complete else EXIT_SOFT


COMMANDS = {"classify": cmd_classify, "asym": cmd_asym, "solve": cmd_solve, "compare": cmd_compare}


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pencil-spectra", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    env_threads = os.environ.get("PENCIL_SPECTRA_THREADS", "")
    default_threads = int(env_threads) if env_threads.strip().isdigit() else 1
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("file", help="problem description (JSON)")
        p.add_argument("--json", action="store_true", help="emit JSON instead of text/CSV")
        if name == "classify":
            continue
        p.add_argument("--kmax", type=_positive_int, default=12)
        if name == "asym":
            continue
        p.add_argument("--tol", type=_positive_float, default=1e-10, help="residual tolerance |Delta| <= tol")
        p.add_argument("--radius", type=_positive_float, default=None, help="radius of the low-index search")
        p.add_argument("--threads", type=_positive_int, default=default_threads)
        if name == "compare":
            p.add_argument("--fit", action="store_true", help="least-squares fit of tau from the computed roots")
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    try:
        spec = load_problem(args.file)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](spec, args, buf)
    except UnsupportedCase as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except NonFiniteCoefficient as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RootFindError, IntegrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOFT
    except ValueError as exc:
        # non-finite g on [0, a] and similar evaluation problems are input errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
