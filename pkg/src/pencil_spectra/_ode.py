"""Batched DOP853 for linear complex systems with per-vector power-of-two rescaling.

The state has shape ``(B, m, d)``: ``B`` independent problems (one per spectral
parameter), each carrying ``m`` vectors of length ``d``. All entries share one step
sequence. Every vector has its own error norm and its own binary exponent, so a
solution that grows like ``exp(|mu| x)`` never overflows.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

_NS = _dop.N_STAGES
_A = _dop.A[:_NS, :_NS]
_B = _dop.B
_C = _dop.C[:_NS]
_E3 = _dop.E3
_E5 = _dop.E5

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
RESCALE_ABOVE = 2.0**64
RESCALE_BELOW = 2.0**-64
MAX_STEPS = 200_000
ROUNDOFF = 4 * np.finfo(float).eps


class IntegrationError(RuntimeError):
    pass


class StepUnderflow(IntegrationError):
    pass


class NonFiniteCoefficient(IntegrationError, ValueError):
    pass


def _supnorm(y: np.ndarray) -> np.ndarray:
    return np.max(np.abs(y), axis=-1)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    x1: float,
    tol: float,
    h0: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``y' = rhs(x, y)`` from 0 to ``x1``; ``rhs`` must be linear in ``y``.

    Returns ``(y, log2)`` where the true solution is ``y * 2**log2[..., None]``.
    The step is accepted when, for every vector, the embedded error estimate per
    unit step is at most ``tol`` times that vector's sup-norm.
    """
    y = np.array(y0, dtype=complex)
    if y.ndim != 3:
        raise ValueError("state must have shape (B, m, d)")
    log2 = np.zeros(y.shape[:2], dtype=np.int64)
    y, log2 = _rescale(y, log2, force=True)

    x = 0.0
    f = rhs(x, y)
    if h0 is None:
        rate = np.max(_supnorm(f) / np.maximum(_supnorm(y), 1e-300))
        h0 = 0.5 / max(rate, 1.0 / x1)
    h = min(h0, x1)
    hmin = 1e-14 * max(1.0, abs(x1))
    shape = y.shape
    K = np.empty((_NS + 1, y.size), dtype=complex)
    exponent = -1.0 / 7.0  # error per unit step scales like h^7
    steps = 0
    while x < x1:
        steps += 1
        if steps > MAX_STEPS:
            raise StepUnderflow(f"step budget exhausted at x={x:.6g}")
        if h < hmin:
            raise StepUnderflow(f"step size {h:.3g} underflowed at x={x:.6g}")
        last = x + h >= x1 * (1 - 1e-14)
        if last:
            h = x1 - x
        yf = y.reshape(-1)
        K[0] = f.reshape(-1)
        for s in range(1, _NS):
            dy = np.dot(_A[s, :s] * h, K[:s])
            K[s] = rhs(x + _C[s] * h, (yf + dy).reshape(shape)).reshape(-1)
        y_new = (yf + np.dot(_B * h, K[:_NS])).reshape(shape)
        x_new = x1 if last else x + h
        f_new = rhs(x_new, y_new)
        K[_NS] = f_new.reshape(-1)

        # per-unit-step tolerance, floored at the rounding noise of one step
        tol_h = max(tol, ROUNDOFF / h)
        scale = tol_h * np.maximum(_supnorm(y), _supnorm(y_new))
        scale = np.where(scale > 0, scale, tol_h)
        e5 = _supnorm(np.dot(_E5, K).reshape(shape)) / scale
        e3 = _supnorm(np.dot(_E3, K).reshape(shape)) / scale
        denom = np.sqrt(e5 * e5 + 0.01 * e3 * e3)
        ratio = np.where(denom > 0, e5 * e5 / np.where(denom > 0, denom, 1.0), 0.0)
        err = float(np.max(ratio))
        if not np.isfinite(err):
            h *= MIN_FACTOR
            continue
        if err <= 1.0:
            x, y, f = x_new, y_new, f_new
            y, log2, f = _rescale(y, log2, f)
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err**exponent)
            h *= max(factor, 1.0)
        else:
            h *= max(MIN_FACTOR, SAFETY * err**exponent)
    return y, log2


def _rescale(y, log2, f=None, force=False):
    norm = _supnorm(y)
    need = norm > 0
    if not force:
        need &= (norm > RESCALE_ABOVE) | (norm < RESCALE_BELOW)
    if np.any(need):
        shift = np.where(need, np.frexp(np.where(need, norm, 1.0))[1], 0)
        y = _ldexp_c(y, -shift[..., None])
        if f is not None:
            f = _ldexp_c(f, -shift[..., None])
        log2 = log2 + shift
    if f is None:
        return y, log2
    return y, log2, f


def _ldexp_c(z: np.ndarray, k: np.ndarray) -> np.ndarray:
    return np.ldexp(z.real, k) + 1j * np.ldexp(z.imag, k)
