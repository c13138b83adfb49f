"""Solve every benchmark configuration and tabulate completeness, parity and the asymptotic gap.

    python scripts/sweep.py --kmax 40 --out runs/sweep.json
    python scripts/sweep.py --only A2-case3
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from pencil_spectra import catalog
from pencil_spectra.cli import comparison_rows, fit_rows, is_decreasing, relative_diff
from pencil_spectra.rootfind import solve_spectrum


def instances() -> dict:
    out = {"missile-g1": catalog.missile("1"), "missile-gx": catalog.missile("x")}
    out.update(catalog.asymptotic_instances())
    return out


def run_one(spec, kmax: int, k_lo: int) -> dict:
    t = time.perf_counter()
    report = solve_spectrum(spec, kmax, raise_incomplete=False)
    elapsed = time.perf_counter() - t
    rows = comparison_rows(report, report.coeffs, spec.a)
    fit = fit_rows(rows, spec.a, k_lo)
    return {
        "seconds": round(elapsed, 2),
        "window_winding": report.window_winding,
        "found": report.found_in_window,
        "complete": report.complete,
        "axis_count": report.axis_count,
        "parity": report.axis_parity,
        "symmetry_defect": report.symmetry_defect,
        "k0": report.k0,
        "fallback": report.fallback_used,
        "decreasing": is_decreasing(rows, k_lo, kmax),
        "max_scaled_gap": max(r.scaled_gap for r in rows if r.k >= k_lo),
        "last_scaled_gap": rows[-1].scaled_gap,
        "fit_tau1": [fit.tau1.real, fit.tau1.imag],
        "printed_tau1": [report.coeffs.tau1.real, report.coeffs.tau1.imag],
        "tau1_relative_difference": relative_diff(fit.tau1, report.coeffs.tau1),
        "fit_tau0": [fit.tau0.real, fit.tau0.imag],
        "scaled_gaps": {r.k: r.scaled_gap for r in rows},
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmax", type=int, default=40)
    ap.add_argument("--k-lo", type=int, default=15, help="first k of the trend and fit range")
    ap.add_argument("--only", default="", help="substring filter on instance names")
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    results = {}
    print(f"{'instance':16s} {'sec':>6s} {'wind':>5s} {'found':>5s} {'axis':>5s} {'k0':>3s}  trend  {'gap@kmax':>10s}  tau1 rel.diff")
    for name, spec in instances().items():
        if args.only not in name:
            continue
        r = run_one(spec, args.kmax, args.k_lo)
        results[name] = r
        trend = "dec" if r["decreasing"] else "NOT"
        print(
            f"{name:16s} {r['seconds']:6.1f} {r['window_winding']:5d} {r['found']:5d} "
            f"{r['axis_count']:3d}{r['parity'][0]} {r['k0']!s:>3s}  {trend:5s}  {r['last_scaled_gap']:10.3e}  "
            f"{r['tau1_relative_difference']:.3g}",
            flush=True,
        )
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(results, indent=1))


if __name__ == "__main__":
    main()
