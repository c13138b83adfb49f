"""Free-free beam with constant g: exact characteristic function in extended precision.

For g = c the solutions are cosh/sinh(s x) with s^2 = (c +- sqrt(c^2 + 4 lam^2)) / 2,
so the eigenvalues can be found without the ODE solver. The script compares them
with ``solve_spectrum`` and fits the expansion mu_k = k pi / a + tau0 + tau1/k + tau2/k^2.

    python scripts/missile_constant_g.py --g 1 --kmax 40
"""

from __future__ import annotations

import argparse

import mpmath as mp

from pencil_spectra import catalog
from pencil_spectra.asymptotics import coeffs_for, fit_tau, seed
from pencil_spectra.rootfind import solve_spectrum


def char_fn(mu, c, a):
    """det of [y'', y''' - c y'] at 0 and a over the basis cosh/sinh(s1 x), cosh/sinh(s2 x)."""
    lam = mu * mu
    root = mp.sqrt(c * c + 4 * lam * lam)
    s1, s2 = mp.sqrt((c + root) / 2), mp.sqrt((c - root) / 2)

    def rows(x):
        out = []
        for s in (s1, s2):
            ch, sh = mp.cosh(s * x), mp.sinh(s * x)
            # y = cosh(s x): y'' = s^2 ch, y''' - c y' = (s^3 - c s) sh
            out.append((s * s * ch, (s**3 - c * s) * sh))
            out.append((s * s * sh, (s**3 - c * s) * ch))
        return out

    r0, ra = rows(0), rows(a)
    m = mp.matrix(4, 4)
    for j in range(4):
        m[0, j], m[1, j] = r0[j]
        m[2, j], m[3, j] = ra[j]
    # divide out the growth of the two cosh/sinh(s1 a) columns
    return mp.det(m) / mp.cosh(s1 * a) ** 2


def exact_mus(c: float, a: float, ks, start) -> dict[int, mp.mpf]:
    # the function is real on the real axis up to rounding in the complex branch
    return {k: mp.re(mp.findroot(lambda m: char_fn(m, c, a), mp.mpf(start(k)))) for k in ks}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--kmax", type=int, default=40)
    ap.add_argument("--dps", type=int, default=60)
    args = ap.parse_args()
    mp.mp.dps = args.dps

    spec = catalog.missile(repr(args.g), a=args.a)
    coeffs = coeffs_for(spec)
    rep = solve_spectrum(spec, args.kmax)
    computed = {k: e.mu for k, e in rep.indexed().items() if 4 <= k <= args.kmax}
    ks = sorted(computed)
    exact = exact_mus(args.g, args.a, ks, lambda k: computed[k].real)

    print(f"{'k':>3s} {'exact mu':>22s} {'|solver - exact|':>17s} {'scaled gap':>11s}")
    for k in ks:
        mu_hat = seed(k, coeffs, args.a)[0]
        ex = float(exact[k])
        print(f"{k:3d} {ex:22.15f} {abs(computed[k] - ex):17.3e} {abs(ex - mu_hat) * k * k:11.4e}")

    top = [k for k in ks if k >= 15]
    fit = fit_tau(top, [complex(float(exact[k])) for k in top], args.a, tau0=coeffs.tau0)
    print(f"tau1 fitted {fit.tau1.real:.10f}  tabulated {coeffs.tau1.real:.10f}")
    print(f"tau2 fitted {fit.tau2.real:.10f}  tabulated {coeffs.tau2.real:.10f}")


if __name__ == "__main__":
    main()
