"""Characteristic determinant of the boundary-value problem.

Solutions are carried in quasi-derivative form ``u = (y, y', y'', y''' - g y')``:

    u0' = u1,  u1' = u2,  u2' = u3 + g u1,  u3' = lambda^2 u0

The canonical fundamental matrix is the identity at ``x = 0``. The determinant
``det M(lambda)`` of the boundary forms applied to it is evaluated through the
second exterior power of the flow. The two left conditions fix a 6-vector
``w(0)``, the compound system carries it to ``x = a``, and the two right
conditions are paired against ``w(a)``. This avoids the catastrophic cancellation
of a 4x4 determinant whose columns all grow like ``exp(|mu| x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from ._ode import IntegrationError, NonFiniteCoefficient, StepUnderflow, integrate
from .exprparse import compile_expr, is_constant, evaluate
from .problem import NEG_INF, BoundaryCondition, ProblemSpec

__all__ = [
    "CharValue",
    "FundamentalMatrix",
    "IntegrationError",
    "NonFiniteCoefficient",
    "Overflow",
    "StepUnderflow",
    "DEFAULT_TOL",
    "flow_rhs",
    "closed_form_fundamental",
    "integrate_fundamental",
    "bc_row",
    "char_matrix",
    "char_det",
    "char_det_many",
    "char_det_closed_form",
]

DEFAULT_TOL = 1e-10
TOL_RANGE = (1e-13, 1e-6)
# exp(700) is near the top of the double range.
OVERFLOW_GUARD = 700.0

PAIRS = list(combinations(range(4), 2))  # 01, 02, 03, 12, 13, 23
_PAIR_INDEX = {p: i for i, p in enumerate(PAIRS)}
_COMPLEMENT = [_PAIR_INDEX[tuple(sorted(set(range(4)) - set(p)))] for p in PAIRS]
# Sign of the permutation (S, S^c) for each 2-subset S.
_SIGN = np.array([(-1) ** (1 + i + j) for i, j in PAIRS], dtype=float)


class Overflow(ArithmeticError):
    pass


@dataclass(frozen=True)
class CharValue:
    """``det M(lambda) == value * 2**log2_scale``; the scale is positive by construction."""

    value: complex
    log2_scale: float

    @property
    def scale(self) -> float:
        try:
            return math.ldexp(1.0, int(math.floor(self.log2_scale))) * 2.0 ** (self.log2_scale % 1.0)
        except OverflowError:
            return math.inf

    def unscaled(self) -> complex:
        return self.value * self.scale


@dataclass(frozen=True)
class FundamentalMatrix:
    """Columns are canonical solutions; ``matrix * 2**log2[None, :]`` is the true value."""

    matrix: np.ndarray
    log2: np.ndarray
    x: float
    lam: complex

    def unscaled(self) -> np.ndarray:
        return self.matrix * np.exp2(self.log2.astype(float))[None, :]

    def det(self) -> complex:
        sign, logdet = np.linalg.slogdet(self.matrix)
        return complex(sign * np.exp(logdet + math.log(2.0) * float(np.sum(self.log2))))


def flow_rhs(x: float, s: Sequence[complex], lam: complex, g_at_x: float) -> np.ndarray:
    u0, u1, u2, u3 = (complex(v) for v in s)
    return np.array([u1, u2, u3 + g_at_x * u1, lam * lam * u0], dtype=complex)


def _check_tol(tol: float) -> None:
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise ValueError(f"tol must lie in [{TOL_RANGE[0]:g}, {TOL_RANGE[1]:g}], got {tol:g}")


SCAN_POINTS = 1025


def _g_function(spec: ProblemSpec):
    g = compile_expr(spec.g)
    with np.errstate(all="ignore"):
        grid = np.asarray(g(np.linspace(0.0, spec.a, SCAN_POINTS)), dtype=float)
    if not np.all(np.isfinite(grid)):
        raise NonFiniteCoefficient("g is not finite on [0, a]")
    if is_constant(spec.g):
        value = evaluate(spec.g, 0.0)
        if not math.isfinite(value):
            raise NonFiniteCoefficient(f"g evaluates to {value}")
        return lambda x: value

    def g_at(x: float) -> float:
        with np.errstate(all="ignore"):
            v = float(g(np.float64(x)))
        if not math.isfinite(v):
            raise NonFiniteCoefficient(f"g({x:.6g}) = {v}")
        return v

    return g_at


# ---------------------------------------------------------------------------
# closed form for g = 0

def _series_derivative(mu: complex, x: float, n: int) -> complex:
    """n-th x-derivative of (sinh(mu x) - sin(mu x)) / (2 mu^3), 0 <= n <= 6, by its power series."""
    # y = sum_k mu^(4k) x^(4k+3) / (4k+3)!
    total = 0j
    m4 = mu**4
    k = 0
    term_power = 1.0 + 0j
    while True:
        deg = 4 * k + 3 - n
        if deg >= 0:
            term = term_power * x**deg / math.factorial(deg)
            total += term
            if k > 2 and abs(term) < 1e-18 * max(abs(total), 1e-300):
                break
        k += 1
        term_power *= m4
        if k > 200:
            break
    return total


def _closed_derivative(mu: complex, x: float, n: int) -> complex:
    z = mu * x
    sinh_d = np.cosh(z) if n % 2 else np.sinh(z)
    sin_d = [np.sin(z), np.cos(z), -np.sin(z), -np.cos(z)][n % 4]
    return complex(mu ** (n - 3) * (sinh_d - sin_d) / 2)


def closed_form_fundamental(mu: complex, x: float) -> FundamentalMatrix:
    """Exact canonical matrix for g = 0: column j holds derivatives of y^(3-j)."""
    mu = complex(mu)
    if abs(mu) * x > OVERFLOW_GUARD:
        raise Overflow(f"|mu| x = {abs(mu) * x:.4g} exceeds {OVERFLOW_GUARD}")
    deriv = _series_derivative if abs(mu) * x <= 2.0 else _closed_derivative
    values = {n: deriv(mu, x, n) for n in range(7)}
    phi = np.array([[values[3 - j + m] for j in range(4)] for m in range(4)], dtype=complex)
    return FundamentalMatrix(phi, np.zeros(4, dtype=np.int64), float(x), mu * mu)


# ---------------------------------------------------------------------------
# numerical fundamental matrix

def _columns_rhs(lam2: np.ndarray, g_at):
    def rhs(x, Y):
        # Y: (B, 4 columns, 4 components)
        gx = g_at(x)
        out = np.empty_like(Y)
        out[..., 0] = Y[..., 1]
        out[..., 1] = Y[..., 2]
        out[..., 2] = Y[..., 3] + gx * Y[..., 1]
        out[..., 3] = lam2 * Y[..., 0]
        return out

    return rhs


def integrate_fundamental(spec: ProblemSpec, lam: complex, tol: float = DEFAULT_TOL) -> FundamentalMatrix:
    """Canonical fundamental matrix at ``x = a`` with a per-column binary exponent."""
    _check_tol(tol)
    lam = complex(lam)
    g_at = _g_function(spec)
    lam2 = np.array([[lam * lam]])
    y0 = np.eye(4, dtype=complex)[None]  # column j is the state vector e_j
    y, log2 = integrate(_columns_rhs(lam2, g_at), y0, spec.a, tol, h0=_initial_step(np.array([lam]), spec.a))
    return FundamentalMatrix(y[0].T.copy(), log2[0].copy(), spec.a, lam)


def _initial_step(lams: np.ndarray, a: float) -> float:
    rate = max(1.0, float(np.max(np.sqrt(np.abs(lams)))))
    return min(a, 0.5 / rate)


# ---------------------------------------------------------------------------
# boundary forms and the determinant

def bc_row(c: BoundaryCondition, lam: complex) -> np.ndarray:
    """Coefficients of B(lambda) y = y^[p] + i beta lambda y^[q] acting on a quasi-state."""
    row = np.zeros(4, dtype=complex)
    row[c.p] = 1.0
    if c.q is not NEG_INF:
        row[c.q] += 1j * c.beta * lam
    return row


def _bc_rows(spec: ProblemSpec, lams: np.ndarray) -> np.ndarray:
    rows = np.zeros((len(lams), 4, 4), dtype=complex)
    for i, c in enumerate(spec.bcs):
        rows[:, i, c.p] = 1.0
        if c.q is not NEG_INF:
            rows[:, i, c.q] += 1j * c.beta * lams
    return rows


def _minors(r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
    """2x2 minors of the (B, 2, 4) row pair, in PAIRS order."""
    return np.stack([r1[:, i] * r2[:, j] - r1[:, j] * r2[:, i] for i, j in PAIRS], axis=-1)


def char_matrix(spec: ProblemSpec, lam: complex, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """The 4x4 matrix ``B_i(lambda) y_j``, with per-column binary exponents.

    Only usable for moderate ``|lambda| a``; ``char_det`` is the robust path.
    """
    fm = integrate_fundamental(spec, lam, tol)
    rows = _bc_rows(spec, np.array([complex(lam)]))[0]
    top = rows[:2] @ np.diag(np.exp2(-fm.log2.astype(float)))
    bottom = rows[2:] @ fm.matrix
    return np.vstack([top, bottom]), fm.log2


def _compound_rhs(lam2: np.ndarray, g_at):
    lam2 = lam2.reshape(-1, 1)

    def rhs(x, W):
        # W: (B, 1, 6) in PAIRS order
        gx = g_at(x)
        w = W[:, 0, :]
        out = np.empty_like(W)
        o = out[:, 0, :]
        o[:, 0] = w[:, 1]
        o[:, 1] = w[:, 3] + w[:, 2] + gx * w[:, 0]
        o[:, 2:4] = w[:, 4:5]
        o[:, 4] = w[:, 5] - lam2[:, 0] * w[:, 0]
        o[:, 5] = gx * w[:, 4] - lam2[:, 0] * w[:, 1]
        return out

    return rhs


def _left_vector(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Initial compound vector w(0) and the log2 of the normalisation divided out."""
    minors = _minors(rows[:, 0], rows[:, 1])
    w0 = (_SIGN[_COMPLEMENT] * minors[:, _COMPLEMENT])
    norm = np.max(np.abs(w0), axis=-1)
    e = np.frexp(norm)[1]
    return np.ldexp(w0.real, -e[:, None]) + 1j * np.ldexp(w0.imag, -e[:, None]), e


def _pair_right(rows: np.ndarray, w: np.ndarray, log2_w: np.ndarray) -> list[CharValue]:
    p34 = _minors(rows[:, 2], rows[:, 3])
    norm34 = np.max(np.abs(rows[:, 2]), axis=-1) * np.max(np.abs(rows[:, 3]), axis=-1)
    wnorm = np.max(np.abs(w), axis=-1)
    values = np.sum(p34 * w, axis=-1) / (norm34 * wnorm)
    log2 = log2_w + np.log2(norm34) + np.log2(wnorm)
    return [CharValue(complex(v), float(s)) for v, s in zip(values, log2)]


def char_det_many(spec: ProblemSpec, lams, tol: float = DEFAULT_TOL) -> list[CharValue]:
    """Normalised characteristic determinant at several lambda in one batched sweep."""
    _check_tol(tol)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if lams.size == 0:
        return []
    g_at = _g_function(spec)
    rows = _bc_rows(spec, lams)
    w0, e0 = _left_vector(rows)
    lam2 = (lams * lams)[:, None]
    w, log2 = integrate(_compound_rhs(lam2, g_at), w0[:, None, :], spec.a, tol, h0=_initial_step(lams, spec.a))
    return _pair_right(rows, w[:, 0, :], log2[:, 0] + e0)


def char_det(spec: ProblemSpec, lam: complex, tol: float = DEFAULT_TOL) -> CharValue:
    return char_det_many(spec, [lam], tol)[0]


# ---------------------------------------------------------------------------
# closed-form determinant for g = 0 (oracle path)

_F = np.array([[1j ** (n * m) for n in range(4)] for m in range(4)])
_F_INV = _F.conj().T / 4


def _compound(m: np.ndarray) -> np.ndarray:
    c = np.empty((6, 6), dtype=complex)
    for r, (i, j) in enumerate(PAIRS):
        for s, (k, l) in enumerate(PAIRS):
            c[r, s] = m[i, k] * m[j, l] - m[i, l] * m[j, k]
    return c


_C2_F = _compound(_F)
_C2_F_INV = _compound(_F_INV)
_MU_POWER = np.array([i + j for i, j in PAIRS])


def _compound_flow_closed(mu: complex, a: float, w0: np.ndarray) -> tuple[np.ndarray, float]:
    """C2(Phi(a)) w0 for g = 0, returned as (vector, log2 of factored-out scale)."""
    if abs(mu) * a <= 2.0:
        phi = closed_form_fundamental(mu, a).matrix
        return _compound(phi) @ w0, 0.0
    # Phi(a) = V diag(exp(rho_n a)) V^-1 with V = diag(mu^m) F and rho_n = i^n mu
    rho = np.array([1j**n for n in range(4)]) * mu
    sums = np.array([rho[i] + rho[j] for i, j in PAIRS]) * a
    top = float(np.max(sums.real))
    expo = np.exp(sums - top)
    v = _C2_F_INV @ (w0 / mu**_MU_POWER)
    v = _C2_F @ (expo * v)
    v = v * mu**_MU_POWER
    return v, top / math.log(2.0)


def char_det_closed_form(spec: ProblemSpec, lam: complex) -> CharValue:
    """Same normalisation as ``char_det`` but with the exact g = 0 flow; ``spec.g`` is ignored."""
    lam = complex(lam)
    mu = complex(np.sqrt(lam))
    rows = _bc_rows(spec, np.array([lam]))
    w0, e0 = _left_vector(rows)
    w, top = _compound_flow_closed(mu, spec.a, w0[0])
    wnorm = np.max(np.abs(w))
    e = np.frexp(wnorm)[1]
    w = np.ldexp(w.real, -e) + 1j * np.ldexp(w.imag, -e)
    return _pair_right(rows, w[None, :], np.array([e0[0] + e + top]))[0]
