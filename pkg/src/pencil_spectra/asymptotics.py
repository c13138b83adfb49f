"""Closed-form g = 0 characteristic functions and the four-term eigenvalue expansion.

For the covered boundary configurations the square roots of the eigenvalues obey

    mu_k = k pi / a + tau0 + tau1 / k + tau2 / k^2 + o(k^-2)

with tau coefficients that depend on a, G(a) = int_0^a g, g(0), g(a) and the
right-end couplings beta3, beta4. ``tau_coeffs`` returns them exactly as tabulated
(including entries believed to be misprinted, which carry an ``anomalies`` note),
and ``fit_tau`` recovers them from computed spectra for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from ._ode import NonFiniteCoefficient
from .exprparse import compile_expr
from .problem import CaseLabel, ProblemSpec, RightClass, case_label

__all__ = [
    "UnsupportedCase",
    "NonFiniteCoefficient",
    "AsymptoticCoeffs",
    "ZeroTable",
    "TauFit",
    "adaptive_simpson",
    "G_of",
    "tau_coeffs",
    "seed",
    "phi0",
    "phi0_zero_table",
    "fit_tau",
    "coeffs_for",
    "KNOWN_ANOMALIES",
]

PI = math.pi


class UnsupportedCase(ValueError):
    pass


# ---------------------------------------------------------------------------
# quadrature

def adaptive_simpson(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12, max_depth: int = 40) -> float:
    """Adaptive Simpson with Richardson correction; ``tol`` is absolute over [lo, hi]."""

    def checked(x):
        v = float(f(x))
        if not math.isfinite(v):
            raise NonFiniteCoefficient(f"integrand is {v} at x={x:.6g}")
        return v

    def simpson(a, fa, b, fb):
        m = 0.5 * (a + b)
        fm = checked(m)
        return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, b, fb, m, fm, whole, eps, depth):
        lm, flm, left = simpson(a, fa, m, fm)
        rm, frm, right = simpson(m, fm, b, fb)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        return recurse(a, fa, m, fm, lm, flm, left, eps / 2, depth - 1) + recurse(
            m, fm, b, fb, rm, frm, right, eps / 2, depth - 1
        )

    if hi == lo:
        return 0.0
    fa, fb = checked(lo), checked(hi)
    m, fm, whole = simpson(lo, fa, hi, fb)
    return recurse(lo, fa, hi, fb, m, fm, whole, tol, max_depth)


def G_of(spec: ProblemSpec, x: float | None = None) -> float:
    """G(x) = int_0^x g(t) dt, by default at x = a."""
    g = compile_expr(spec.g)
    upper = spec.a if x is None else x

    def f(t):
        with np.errstate(all="ignore"):
            return g(np.float64(t))

    return adaptive_simpson(f, 0.0, upper, 1e-12, 40)


# ---------------------------------------------------------------------------
# tau tables

# Entries whose printed form disagrees with spectra computed by this package.
KNOWN_ANOMALIES: dict[tuple[RightClass, int], tuple[str, ...]] = {
    (RightClass.CASE_A2, 3): (
        "tau0: zeros of the g = 0 function sit at (j + 1/4) pi / a, not at -5 pi / (4a) mod pi / a",
        "tau1: printed value is real; fitted values are close to i / pi",
    ),
    (RightClass.CASE_A2, 4): (
        "tau0: zeros of the g = 0 function sit at (j + 1/4) pi / a, not at -5 pi / (4a) mod pi / a",
        "tau1: printed value is real; fitted values are close to i / pi",
    ),
    (RightClass.CASE_A2, 6): ("tau1, tau2: beta term carries an extra factor 1 / pi",),
}


@dataclass(frozen=True)
class AsymptoticCoeffs:
    tau0: complex
    tau1: complex
    tau2: complex
    right_class: RightClass
    left_case: int | None
    anomalies: tuple[str, ...] = field(default=())

    @property
    def flagged(self) -> bool:
        return bool(self.anomalies)


def _beta34(spec: ProblemSpec) -> tuple[complex, complex]:
    b3, b4 = spec.right[0].beta, spec.right[1].beta
    if b3 == 0 or b4 == 0:
        raise UnsupportedCase("the expansion needs beta3 * beta4 != 0")
    return b3, b4


def _tau_a1(case: int, a: float, G: float, g0: float, b3: complex, b4: complex):
    s = 1 / b3 + 1 / b4
    d_minus = 1 / b3**2 + 1 / b4**2 - 2 / (b3 * b4)
    d_plus = 1 / b3**2 + 1 / b4**2 + 2 / (b3 * b4)
    tau1 = G / (4 * PI) + 1j / (2 * PI) * s
    if case == 1:
        tau0 = -3 * PI / (4 * a)
        tau2 = 3 / 16 * G / PI - g0 / (4 * PI**2) - a / (4 * PI**2) * d_minus + 3 / 8 * 1j / PI * s
    elif case == 2:
        tau0 = -PI / a
        tau2 = G / (4 * PI) - a / (4 * PI**2) * d_plus + 1j / (2 * PI) * s
    elif case in (3, 4):
        tau0 = -5 * PI / (4 * a)
        tau2 = 5 / 16 * G / PI - a * g0 / (4 * PI**2) - a / (4 * PI**2) * d_minus + 5 / 8 * 1j / PI * s
    elif case == 5:
        tau0 = -PI / (2 * a)
        tau2 = G / (8 * PI) + 1j / (4 * PI) * s - a / (4 * PI**2) * d_minus
    else:
        tau0 = -7 * PI / (4 * a)
        tau2 = 7 / 16 * G / PI + 3 / 4 * a * g0 / PI + 7 / 8 * 1j / PI * s - a / (4 * PI**2) * d_minus
    return tau0, tau1, tau2


def _tau_a2(case: int, a: float, G: float, g0: float, b3: complex, b4: complex):
    c = (1 - b3 * b4) / b3
    q_plus = (b3**2 * b4**2 + 2 * b3 * b4 + 1) / (PI**2 * b3**2)
    q_minus = (b3**2 * b4**2 - 2 * b3 * b4 + 1) / (PI**2 * b3**2)
    tau1 = G / (4 * PI) + 1j / (2 * PI) * c
    if case == 1:
        tau0 = -PI / (4 * a)
        tau2 = G / (16 * PI) - a * g0 / (4 * PI**2) - a / 4 * q_plus + 1j / (8 * PI) * c
    elif case == 2:
        tau0 = -PI / (2 * a)
        tau2 = G / (8 * PI) - a / 4 * q_plus + 1j / (4 * PI) * c
    elif case in (3, 4):
        tau0 = -5 * PI / (4 * a)
        tau1 = (b3 * b4 - 1) / (2 * PI * b3) - 1j / 4 * G / PI
        tau2 = (
            -a * G**2 / (16 * PI**2)
            + a * G / (4 * PI**2) * (b4 * b3 - 1) / b3
            + 5 / 8 * (b4 * b3 - 1) / (PI * b3)
            - a / 4 * q_minus
            - 5j / 16 * G / PI
        )
    elif case == 5:
        tau0 = -PI / a
        tau2 = G / (4 * PI) - a / 4 * q_plus - 1j / (2 * PI) * c
    else:
        tau0 = -5 * PI / (4 * a)
        tau1 = G / (4 * PI) + 1j / (2 * PI) * c / PI
        tau2 = 5 / 16 * G / PI + 3 / 4 * a * g0 / PI**2 - a / 4 * q_plus + 5 / 8 * 1j / PI * c / PI
    return tau0, tau1, tau2


def tau_coeffs(label: CaseLabel, spec: ProblemSpec) -> AsymptoticCoeffs:
    """Tabulated (tau0, tau1, tau2) for the configuration ``label``."""
    if label.left_case is None:
        raise UnsupportedCase(f"no expansion for {label}")
    a = spec.a
    G = G_of(spec)
    g0 = float(spec.g_at(0.0))
    ga = float(spec.g_at(a))
    if not (math.isfinite(g0) and math.isfinite(ga)):
        raise NonFiniteCoefficient("g is not finite at an endpoint")
    if label.right_class is RightClass.FLEXIBLE_MISSILE:
        tau0 = -5 * PI / (2 * a)
        tau1 = G / (4 * PI)
        tau2 = 5 / 8 * G / PI**2 + a / (4 * PI**2) * (5 * g0 + 3 * ga)
        return AsymptoticCoeffs(complex(tau0), complex(tau1), complex(tau2), label.right_class, label.left_case)
    if label.right_class is RightClass.CASE_A1:
        taus = _tau_a1(label.left_case, a, G, g0, *_beta34(spec))
    elif label.right_class is RightClass.CASE_A2:
        taus = _tau_a2(label.left_case, a, G, g0, *_beta34(spec))
    else:
        raise UnsupportedCase(f"no expansion for {label}")
    notes = KNOWN_ANOMALIES.get((label.right_class, label.left_case), ())
    return AsymptoticCoeffs(*(complex(t) for t in taus), label.right_class, label.left_case, notes)


def seed(k: int, coeffs: AsymptoticCoeffs, a: float) -> tuple[complex, complex]:
    """Predicted (mu_k, lambda_k = mu_k^2)."""
    if k < 1:
        raise ValueError("k must be positive")
    mu = k * PI / a + coeffs.tau0 + coeffs.tau1 / k + coeffs.tau2 / k**2
    return mu, mu * mu


# ---------------------------------------------------------------------------
# g = 0 characteristic functions and their zeros

def _trig(mu, a, lib=np):
    z = mu * a
    return lib.sin(z), lib.cos(z), lib.sinh(z), lib.cosh(z)


# (power of mu, constant, combination) per configuration; combination gets (s, c, sh, ch)
_PHI0 = {
    (RightClass.CASE_A1, 1): (1, 1, lambda s, c, sh, ch: c * sh - s * ch),
    (RightClass.CASE_A1, 2): (2, -1, lambda s, c, sh, ch: s * sh),
    (RightClass.CASE_A1, 3): (3, -1, lambda s, c, sh, ch: s * ch + c * sh),
    (RightClass.CASE_A1, 4): (3, -1, lambda s, c, sh, ch: s * ch + c * sh),
    (RightClass.CASE_A1, 5): (4, -2, lambda s, c, sh, ch: c * ch),
    (RightClass.CASE_A1, 6): (5, 1, lambda s, c, sh, ch: s * ch - c * sh),
    (RightClass.CASE_A2, 1): (1, 1, lambda s, c, sh, ch: c * sh + s * ch),
    (RightClass.CASE_A2, 2): (2, 1, lambda s, c, sh, ch: c * ch),
    (RightClass.CASE_A2, 3): (3, 1, lambda s, c, sh, ch: c * sh - s * ch),
    (RightClass.CASE_A2, 4): (3, 1, lambda s, c, sh, ch: c * sh - s * ch),
    (RightClass.CASE_A2, 5): (4, -2, lambda s, c, sh, ch: s * sh),
    (RightClass.CASE_A2, 6): (5, -1, lambda s, c, sh, ch: s * ch + c * sh),
    (RightClass.FLEXIBLE_MISSILE, 6): (4, 2, lambda s, c, sh, ch: 1 - c * ch),
}


def _phi0_entry(label: CaseLabel):
    key = (label.right_class, label.left_case)
    if key not in _PHI0:
        raise UnsupportedCase(f"no g = 0 listing for {label}")
    return _PHI0[key]


def phi0(label: CaseLabel, mu, a: float, lib=np):
    """The g = 0 characteristic function of the configuration, as listed.

    ``lib`` supplies sin, cos, sinh and cosh; pass ``mpmath`` to evaluate in
    extended precision.
    """
    power, const, comb = _phi0_entry(label)
    return const * mu**power * comb(*_trig(mu, a, lib))


def _phi0_reduced(label: CaseLabel, mu: float, a: float) -> float:
    # Positive-mu zeros of phi0, divided by mu^n cosh(mu a) so it stays O(1).
    _, _, comb = _phi0_entry(label)
    s, c, sh, ch = _trig(mu, a)
    return float(comb(s, c, sh / ch, 1.0) if label.right_class is not RightClass.FLEXIBLE_MISSILE else 1 / ch - c)


@dataclass(frozen=True)
class ZeroTable:
    """Positive zeros of the g = 0 function.

    ``exact`` progressions give mu_k = (num * k + shift) pi / (den a) for
    k >= k_min. Otherwise the same formula is only the asymptotic centre and
    ``zero(k)`` refines a simple root near it. All zero sets are symmetric under
    mu -> -mu and mu -> i mu.
    """

    label: CaseLabel
    a: float
    origin_multiplicity: int
    exact: bool
    num: int
    shift: int
    den: int
    k_min: int
    axis_symmetric: bool = True
    anomalies: tuple[str, ...] = ()

    def center(self, k: int, pi=PI):
        return (self.num * k + self.shift) * pi / (self.den * self.a)

    def zero(self, k: int) -> float | None:
        if k < self.k_min:
            return None
        c = self.center(k)
        if self.exact:
            return c
        half = PI / (2 * self.a)
        f = lambda m: _phi0_reduced(self.label, m, self.a)
        lo, hi = max(c - half, 1e-9), c + half
        if f(lo) * f(hi) > 0:
            return None
        return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    def brackets(self, count: int) -> list[tuple[float, float]]:
        """Intervals holding exactly one positive zero (only those with a confirmed sign change)."""
        if self.label.right_class is RightClass.FLEXIBLE_MISSILE:
            out = []
            m = 0
            while len(out) < count:
                for lo, hi in ((2 * m, 2 * m + 0.5), (2 * m + 1.5, 2 * m + 2)):
                    lo_mu, hi_mu = lo * PI / self.a, hi * PI / self.a
                    # the m = 0 interval starts at the origin, where phi0 vanishes to high order
                    if lo_mu > 0 and _phi0_reduced(self.label, lo_mu, self.a) * _phi0_reduced(self.label, hi_mu, self.a) < 0:
                        out.append((lo_mu, hi_mu))
                m += 1
            return out[:count]
        half = PI / (2 * self.a)
        out = []
        k = self.k_min
        while len(out) < count:
            c = self.center(k)
            lo, hi = max(c - half, 1e-9), c + half
            if _phi0_reduced(self.label, lo, self.a) * _phi0_reduced(self.label, hi, self.a) < 0:
                out.append((lo, hi))
            k += 1
        return out


# (origin multiplicity, exact, num, shift, den, k_min)
_TABLE = {
    (RightClass.CASE_A1, 1): (4, False, 4, -3, 4, 2),
    (RightClass.CASE_A1, 2): (4, True, 1, -1, 1, 2),
    (RightClass.CASE_A1, 3): (4, False, 4, -5, 4, 2),
    (RightClass.CASE_A1, 4): (4, False, 4, -5, 4, 2),
    (RightClass.CASE_A1, 5): (4, True, 2, -1, 2, 2),
    (RightClass.CASE_A1, 6): (8, False, 4, -7, 4, 3),
    (RightClass.CASE_A2, 1): (2, False, 4, -1, 4, 1),
    (RightClass.CASE_A2, 2): (2, True, 2, -1, 2, 1),
    (RightClass.CASE_A2, 3): (6, False, 4, -5, 4, 2),
    (RightClass.CASE_A2, 4): (6, False, 4, -5, 4, 2),
    (RightClass.CASE_A2, 5): (6, True, 1, -1, 1, 2),
    (RightClass.CASE_A2, 6): (6, False, 4, -5, 4, 2),
    (RightClass.FLEXIBLE_MISSILE, 6): (8, False, 2, -5, 2, 4),
}

_TABLE_ANOMALIES = {
    (RightClass.CASE_A2, 3): ("listed centres (4k - 5) pi / (4a) are half a spacing, pi / (2a), off the zeros",),
    (RightClass.CASE_A2, 4): ("listed centres (4k - 5) pi / (4a) are half a spacing, pi / (2a), off the zeros",),
}


def phi0_zero_table(label: CaseLabel, a: float = 1.0) -> ZeroTable:
    key = (label.right_class, label.left_case)
    if key not in _TABLE:
        raise UnsupportedCase(f"no zero table for {label}")
    mult, exact, num, shift, den, k_min = _TABLE[key]
    return ZeroTable(label, a, mult, exact, num, shift, den, k_min, True, _TABLE_ANOMALIES.get(key, ()))


# ---------------------------------------------------------------------------
# fitting the expansion to computed roots

@dataclass(frozen=True)
class TauFit:
    tau0: complex
    tau1: complex
    tau2: complex
    ks: tuple[int, ...]
    rms_residual: float


def fit_tau(ks: Sequence[int], mus: Sequence[complex], a: float, tau0: complex | None = None, extra_terms: int = 2) -> TauFit:
    """Least-squares fit of mu_k - k pi / a = tau0 + tau1/k + tau2/k^2 + ...

    ``extra_terms`` higher inverse powers are fitted and discarded to soak up the
    o(k^-2) remainder. When ``tau0`` is given it is held fixed.
    """
    ks = np.asarray(ks, dtype=float)
    r = np.asarray(mus, dtype=complex) - ks * PI / a
    powers = list(range(0 if tau0 is None else 1, 3 + extra_terms))
    if tau0 is not None:
        r = r - tau0
    if len(ks) < len(powers):
        raise ValueError(f"need at least {len(powers)} roots to fit")
    A = np.stack([ks ** (-p) for p in powers], axis=1).astype(complex)
    coef, *_ = np.linalg.lstsq(A, r, rcond=None)
    resid = r - A @ coef
    c = dict(zip(powers, coef))
    t0 = tau0 if tau0 is not None else c[0]
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    return TauFit(complex(t0), complex(c[1]), complex(c[2]), tuple(int(k) for k in ks), rms)


def coeffs_for(spec: ProblemSpec) -> AsymptoticCoeffs:
    return tau_coeffs(case_label(spec), spec)
