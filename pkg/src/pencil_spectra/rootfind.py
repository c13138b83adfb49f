"""Eigenvalue location in the lambda-plane.

Zeros of the characteristic determinant are counted with the argument principle
on axis-aligned rectangles and polished with damped Newton steps. Asymptotic
seeds cover the high-index tail; a quadtree search covers the low-index region;
a winding count over an enclosing window certifies that nothing was missed.

All function evaluations go through batched calls so that one sweep of the
integrator serves many spectral parameters at once.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .asymptotics import AsymptoticCoeffs, UnsupportedCase, seed as seed_mu, tau_coeffs
from .charfn import DEFAULT_TOL, char_det_many
from .problem import ProblemSpec, case_label

__all__ = [
    "Contour",
    "Eigenvalue",
    "SpectrumReport",
    "RootFindError",
    "ZeroOnContour",
    "NonConvergent",
    "Diverged",
    "IncompleteSpectrum",
    "DeltaFunction",
    "winding_count",
    "winding_count_nudged",
    "newton_polish",
    "locate_low_index",
    "solve_spectrum",
    "principal_sqrt",
]

EPS = np.finfo(float).eps
AXIS_REL = 1e-6
CHUNK = 1024
BATCH_OVERHEAD = 150
LN2 = math.log(2.0)
FINE_STEP = 1e-12  # Newton stops when |step| < FINE_STEP * max(1, |lambda|)
COARSE_STEP = 1e-7  # same, for the first stage on the counting function
MAX_TRAVEL = math.pi / 8  # max a * |d mu| along one boundary segment
CLUSTER_STEP = 1e-3  # difference step for a multiple zero, relative to its cell
COUNT_TOL = 1e-8  # integrator tolerance for winding counts; only the phase is needed
MAG_JUMP = math.log(4.0)  # max change of ln|f| along one boundary segment
LOG_GUARD = math.log(1e3 * EPS)  # |f| this far below both neighbours means a zero on the boundary


class RootFindError(RuntimeError):
    pass


class ZeroOnContour(RootFindError):
    pass


class NonConvergent(RootFindError):
    pass


class Diverged(RootFindError):
    pass


class IncompleteSpectrum(RootFindError):
    def __init__(self, message: str, report: "SpectrumReport"):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# function wrappers

class DeltaFunction:
    """Batched, memoised evaluation of the normalised determinant.

    ``values(lams)`` returns ``(value, log2_scale)`` arrays. Batches are sorted by
    modulus and cut into fixed chunks, so results do not depend on ``threads``.
    """

    def __init__(self, spec: ProblemSpec, tol: float = DEFAULT_TOL, threads: int = 1):
        self.spec = spec
        self.tol = tol
        self.threads = max(1, int(threads))
        self._cache: dict[complex, tuple[complex, float]] = {}
        self.evaluations = 0

    def _eval_chunk(self, lams: np.ndarray):
        out = char_det_many(self.spec, lams, self.tol)
        return [(c.value, c.log2_scale) for c in out]

    def values(self, lams) -> tuple[np.ndarray, np.ndarray]:
        lams = np.asarray(lams, dtype=complex).ravel()
        missing = sorted({complex(z) for z in lams if complex(z) not in self._cache}, key=lambda z: (abs(z), z.real, z.imag))
        if missing:
            chunks = _chunks(missing)
            if self.threads > 1 and len(chunks) > 1:
                with ThreadPoolExecutor(self.threads) as pool:
                    results = list(pool.map(self._eval_chunk, chunks))
            else:
                results = [self._eval_chunk(c) for c in chunks]
            for chunk, res in zip(chunks, results):
                for z, r in zip(chunk, res):
                    self._cache[complex(z)] = r
            self.evaluations += len(missing)
        vals = np.array([self._cache[complex(z)][0] for z in lams], dtype=complex)
        logs = np.array([self._cache[complex(z)][1] for z in lams], dtype=float)
        return vals, logs

    def __call__(self, lams) -> np.ndarray:
        return self.values(lams)[0]


def _chunks(points: list[complex]) -> list[np.ndarray]:
    """Split points into integrator batches.

    A batch shares one step sequence, whose length grows with the largest |mu|
    in it, and each step has a fixed overhead worth about BATCH_OVERHEAD points.
    Walking down in |mu|, a new batch starts when the points still to come would
    save more than that overhead. Depends only on the point set.
    """
    pts = sorted(points, key=lambda z: (-abs(z), z.real, z.imag))
    rate = [max(math.sqrt(abs(z)), 8.0) for z in pts]
    out, start = [], 0
    for i in range(1, len(pts) + 1):
        if i == len(pts):
            out.append(np.array(pts[start:i]))
            break
        remaining = len(pts) - i
        if i - start >= CHUNK or remaining * (rate[start] - rate[i]) > BATCH_OVERHEAD * rate[i]:
            out.append(np.array(pts[start:i]))
            start = i
    return out


class _Split:
    """Winding counts use ``count``; Newton uses the tighter ``polish``."""

    def __init__(self, count: DeltaFunction, polish: DeltaFunction):
        self.count, self.polish = count, polish

    def __call__(self, lams):
        return self.count(lams)


def _as_scaled(f, purpose: str = "count") -> Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]:
    if isinstance(f, _Split):
        f = f.count if purpose == "count" else f.polish
    if isinstance(f, DeltaFunction):
        return f.values

    def plain(lams):
        v = np.asarray(f(np.asarray(lams, dtype=complex)), dtype=complex)
        return v, np.zeros(v.shape)

    return plain


def _interval_length(f) -> float | None:
    if isinstance(f, _Split):
        f = f.count
    return f.spec.a if isinstance(f, DeltaFunction) else None


def principal_sqrt(lam: complex) -> complex:
    """Square root with Re >= 0, and Im >= 0 on the tie Re = 0."""
    mu = complex(np.sqrt(complex(lam)))
    if mu.real < 0 or (mu.real == 0 and mu.imag < 0):
        mu = -mu
    return mu


# ---------------------------------------------------------------------------
# contours and winding numbers

@dataclass(frozen=True)
class Contour:
    x0: float
    x1: float
    y0: float
    y1: float
    density: int = 3  # each edge starts with 2**density segments
    max_depth: int = 40  # refinement rounds
    verify: bool = True  # bisect every segment once more after the polygon is accepted

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def corners(self) -> tuple[complex, complex, complex, complex]:
        return (complex(self.x0, self.y0), complex(self.x1, self.y0), complex(self.x1, self.y1), complex(self.x0, self.y1))

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        mx, my = margin * self.width, margin * self.height
        return self.x0 - mx < z.real < self.x1 + mx and self.y0 - my < z.imag < self.y1 + my

    def expanded(self, fraction: float) -> "Contour":
        dx, dy = fraction * self.width, fraction * self.height
        return replace(self, x0=self.x0 - dx, x1=self.x1 + dx, y0=self.y0 - dy, y1=self.y1 + dy)

    def split(self, fx: float = 0.5, fy: float = 0.5) -> list["Contour"]:
        xm = 0.5 * (self.x0 + self.x1) if fx == 0.5 else self.x0 + fx * self.width
        ym = 0.5 * (self.y0 + self.y1) if fy == 0.5 else self.y0 + fy * self.height
        return [
            replace(self, x0=self.x0, x1=xm, y0=self.y0, y1=ym),
            replace(self, x0=xm, x1=self.x1, y0=self.y0, y1=ym),
            replace(self, x0=self.x0, x1=xm, y0=ym, y1=self.y1),
            replace(self, x0=xm, x1=self.x1, y0=ym, y1=self.y1),
        ]

    @staticmethod
    def around(z: complex, half: float, **kw) -> "Contour":
        return Contour(z.real - half, z.real + half, z.imag - half, z.imag + half, **kw)


def _edge(a: float, b: float, n: int) -> list[float]:
    # points by repeated bisection, so neighbouring cells share sample abscissae exactly
    pts = [a, b]
    for _ in range(n):
        new = [pts[0]]
        for p, q in zip(pts[:-1], pts[1:]):
            new.extend([0.5 * (p + q), q])
        pts = new
    return pts


def _levels(c: Contour, a: float | None, z0: complex, z1: complex) -> int:
    if a is None:
        return c.density
    # the determinant turns roughly once per pi / (2a) of travel in mu = sqrt(lambda)
    t = np.linspace(0.0, 1.0, 65)
    mu = np.sqrt(z0 + (z1 - z0) * t)
    travel = float(np.sum(np.abs(np.diff(mu)))) * a
    return max(c.density, int(math.ceil(math.log2(max(1.0, 8 * travel / math.pi)))))


def _mu_travel(z0: np.ndarray, z1: np.ndarray) -> np.ndarray:
    """Upper bound for the length of sqrt(segment z0 -> z1)."""
    d = z1 - z0
    length = np.abs(d)
    t = np.clip(-(z0.real * d.real + z0.imag * d.imag) / np.maximum(length * length, 1e-300), 0.0, 1.0)
    dist = np.abs(z0 + t * d)
    with np.errstate(divide="ignore"):
        near = np.where(dist > 0, length / (2 * np.sqrt(dist)), np.inf)
    return np.minimum(near, np.sqrt(2 * length))


def _boundary(c: Contour, a: float | None = None) -> np.ndarray:
    z = c.corners()
    nb, nr, nt, nl = (_levels(c, a, z[i], z[(i + 1) % 4]) for i in range(4))
    bottom = [complex(x, c.y0) for x in _edge(c.x0, c.x1, nb)][:-1]
    right = [complex(c.x1, y) for y in _edge(c.y0, c.y1, nr)][:-1]
    top = [complex(x, c.y1) for x in _edge(c.x0, c.x1, nt)[::-1]][:-1]
    left = [complex(c.x0, y) for y in _edge(c.y0, c.y1, nl)[::-1]][:-1]
    return np.array(bottom + right + top + left)


def _winding_many(f, contours: Sequence[Contour]) -> list[int | RootFindError]:
    """Winding numbers for several contours with pooled function evaluations.

    A boundary polygon is accepted when every segment turns the phase by less
    than pi/2 and changes log|f| by less than ln 4. Once accepted, every segment
    is bisected one more time and the test is repeated; this catches a zero
    that hides between two samples with nearly equal phase.
    """
    fv = _as_scaled(f)
    a = _interval_length(f)
    pts = [_boundary(c, a) for c in contours]
    vals: list = [None] * len(contours)
    logs: list = [None] * len(contours)
    result: list[int | RootFindError | None] = [None] * len(contours)
    verified = [False] * len(contours)
    cache: dict[complex, tuple[complex, float]] = {}

    def lookup(points_list):
        need = sorted({complex(z) for p in points_list for z in p if complex(z) not in cache}, key=lambda z: (z.real, z.imag))
        if need:
            v, lg = fv(np.array(need))
            cache.update(zip(need, zip(v, lg)))

    def fetch(points):
        got = [cache[complex(z)] for z in points]
        return np.array([g[0] for g in got], dtype=complex), np.array([g[1] for g in got], dtype=float)

    todo = list(range(len(contours)))
    lookup([pts[i] for i in todo])
    for i in todo:
        vals[i], logs[i] = fetch(pts[i])

    depth = 0
    while todo:
        depth += 1
        still, new_points = [], {}
        for i in todo:
            c, p, v = contours[i], pts[i], vals[i]
            mag = np.abs(v)
            if not np.all(np.isfinite(v)) or np.any(mag == 0):
                result[i] = ZeroOnContour(f"|f| vanishes on the boundary of {c}")
                continue
            lmag = np.log(mag) + logs[i] * LN2
            local = np.maximum(np.roll(lmag, 1), np.roll(lmag, -1))
            if np.any(lmag - local <= LOG_GUARD):
                result[i] = ZeroOnContour(f"|f| is at rounding level on the boundary of {c}")
                continue
            jumps = np.angle(np.roll(v, -1) / v)
            dmag = np.abs(np.roll(lmag, -1) - lmag)
            coarse = (np.abs(jumps) >= 0.5 * math.pi) | (dmag >= MAG_JUMP)
            if a is not None:
                coarse |= _mu_travel(p, np.roll(p, -1)) * a > MAX_TRAVEL
            bad = np.nonzero(coarse)[0]
            if bad.size == 0:
                if not verified[i] and c.verify:
                    verified[i] = True
                    bad = np.arange(len(p))
                else:
                    total = float(np.sum(jumps)) / (2 * math.pi)
                    k = int(round(total))
                    result[i] = k if abs(total - k) <= 0.25 and k >= 0 else NonConvergent(f"winding {total:.3f} is not near an integer")
                    continue
            if depth > c.max_depth:
                result[i] = NonConvergent(f"phase refinement did not settle on {c}")
                continue
            nxt = np.roll(p, -1)
            seg = np.abs(nxt[bad] - p[bad])
            if np.min(seg) < 1e-10 * max(abs(c.width), abs(c.height)):
                # the phase keeps turning inside a vanishing segment: a zero sits on it
                result[i] = ZeroOnContour(f"segments collapsed on {c}")
                continue
            mids = [complex(0.5 * (p[j].real + nxt[j].real), 0.5 * (p[j].imag + nxt[j].imag)) for j in bad]
            new_points[i] = (bad, mids)
            still.append(i)
        if not still:
            break
        lookup([m for _, m in new_points.values()])
        for i in still:
            bad, mids = new_points[i]
            mv, ml = fetch(mids)
            pts[i] = np.insert(pts[i], bad + 1, mids)
            vals[i] = np.insert(vals[i], bad + 1, mv)
            logs[i] = np.insert(logs[i], bad + 1, ml)
        todo = still
    return result  # type: ignore[return-value]


def winding_count(f, c: Contour) -> int:
    """Number of zeros of ``f`` inside ``c``, counted with multiplicity."""
    r = _winding_many(f, [c])[0]
    if isinstance(r, RootFindError):
        raise r
    return r


def _nudged_many(f, contours: Sequence[Contour], attempts: int = 5) -> list[tuple[int, Contour] | RootFindError]:
    current = list(contours)
    out: list = [None] * len(contours)
    pending = list(range(len(contours)))
    for attempt in range(attempts + 1):
        res = _winding_many(f, [current[i] for i in pending])
        retry = []
        for i, r in zip(pending, res):
            if isinstance(r, RootFindError):
                if attempt == attempts:
                    out[i] = r
                else:
                    current[i] = current[i].expanded(0.01)
                    retry.append(i)
            else:
                out[i] = (r, current[i])
        pending = retry
        if not pending:
            break
    return out


def winding_count_nudged(f, c: Contour, attempts: int = 5) -> tuple[int, Contour]:
    """Winding count, expanding the rectangle by 1% per side when a zero sits on it."""
    r = _nudged_many(f, [c], attempts)[0]
    if isinstance(r, RootFindError):
        raise r
    return r


# ---------------------------------------------------------------------------
# Newton

@dataclass(frozen=True)
class Eigenvalue:
    lam: complex
    mu: complex
    index: int | None
    multiplicity: int
    residual: float
    seed_used: complex | None = None
    partner: int | None = None  # position of the -conj(lambda) mate in the report list

    @property
    def is_axis(self) -> bool:
        return abs(self.lam.real) <= AXIS_REL * max(1.0, abs(self.lam))


@dataclass
class _NewtonState:
    lam: complex
    seed: complex
    radius: float
    mult: int = 1
    residual: float = math.inf
    log_abs: float = math.inf
    step: complex | None = None
    halvings: int = 0
    iterations: int = 0
    stalls: int = 0
    status: str = "running"  # running | converged | diverged
    h_cap: float = math.inf  # bound on the difference step; clusters need one below their size


def _newton_many(
    f, seeds: Sequence[complex], radii: Sequence[float], tol: float, maxit: int = 60, mults: Sequence[int] | None = None
) -> list[_NewtonState]:
    """Batched damped Newton. With a ``_Split`` the cheap counting function
    brings each iterate close first, then the polishing function finishes."""
    states = [
        _NewtonState(complex(s), complex(s), float(r), 1 if mults is None else int(m))
        for s, r, m in zip(seeds, radii, mults if mults is not None else [1] * len(seeds))
    ]
    for st in states:
        if st.mult > 1:
            st.h_cap = CLUSTER_STEP * st.radius
    if isinstance(f, _Split):
        _newton_run(_as_scaled(f.count), states, math.inf, maxit, COARSE_STEP)
        for st in states:
            if st.status == "converged":
                st.status, st.halvings, st.stalls = "running", 0, 0
        _newton_run(_as_scaled(f.polish), states, tol, maxit, FINE_STEP)
    else:
        _newton_run(_as_scaled(f), states, tol, maxit, FINE_STEP)
    return states


def _newton_run(fv, states: list[_NewtonState], tol: float, maxit: int, step_rel: float) -> None:
    prev: dict[int, tuple[complex, float]] = {}
    while True:
        active = [s for s in states if s.status == "running"]
        if not active:
            break
        hs = [min(1e-6 * max(1.0, abs(s.lam)), s.h_cap) for s in active]
        pts = []
        for s, h in zip(active, hs):
            pts.extend([s.lam, s.lam + h, s.lam - h])
        v, lg = fv(np.array(pts))
        for j, (s, h) in enumerate(zip(active, hs)):
            f0, fp, fm = v[3 * j : 3 * j + 3]
            s0, sp, sm = lg[3 * j : 3 * j + 3]
            s.residual = float(abs(f0))
            log_abs = math.log2(abs(f0)) + s0 if f0 != 0 else -math.inf
            key = id(s)
            # damping: back off when |Delta| grew, unless the step is already at noise level
            if key in prev and log_abs > prev[key][1] + 1e-9 and s.halvings < 12:
                base, base_log = prev[key]
                last_step = (base - s.lam) * 0.5
                if abs(last_step) > 1e-12 * max(1.0, abs(base)):
                    s.halvings += 1
                    s.lam = base - last_step
                    continue
            s.halvings = 0
            s.log_abs = log_abs
            if f0 == 0:
                s.status = "converged"
                continue
            fp_ = fp * 2.0 ** (sp - s0)
            fm_ = fm * 2.0 ** (sm - s0)
            d = (fp_ - fm_) / (2 * h)
            s.iterations += 1
            if d == 0 or not np.isfinite(d):
                s.status = "diverged"
                continue
            step = s.mult * f0 / d
            s.step = step
            tiny = abs(step) < step_rel * max(1.0, abs(s.lam))
            if tiny and s.residual <= tol:
                s.status = "converged"
                continue
            if tiny:
                # at the step floor but above the residual tolerance: a few more tries
                s.stalls += 1
                if s.stalls > 3:
                    s.status = "diverged"
                    continue
            prev[key] = (s.lam, log_abs)
            s.lam = s.lam - step
            if abs(s.lam - s.seed) > s.radius or s.iterations >= maxit:
                s.status = "diverged"


def newton_polish(f, seed: complex, tol: float = 1e-10, maxit: int = 60, guard: float | None = None, multiplicity: int = 1) -> Eigenvalue:
    """Damped Newton with a central finite-difference derivative.

    ``guard`` is the radius of the disk around ``seed`` the iterates may not
    leave (twice the local seed spacing in the solver).
    """
    radius = guard if guard is not None else 2.0 * max(1.0, abs(seed))
    st = _newton_many(f, [seed], [radius], tol, maxit, [multiplicity])[0]
    if st.status != "converged":
        raise Diverged(f"Newton from {seed} did not converge (last {st.lam}, |f|={st.residual:.3g})")
    return Eigenvalue(st.lam, principal_sqrt(st.lam), None, multiplicity, st.residual, complex(seed))


# ---------------------------------------------------------------------------
# quadtree search

@dataclass
class _Found:
    lam: complex
    mult: int
    residual: float
    seed: complex | None = None
    k: int | None = None


def _spacing(c: Contour, a: float | None) -> float:
    """Distance between neighbouring eigenvalues near the cell, about 2 pi |mu| / a."""
    if a is None:
        return math.inf
    far = max(abs(z) for z in c.corners())
    return 2 * math.pi * max(math.sqrt(far), math.pi / a) / a


def _quadtree(
    f, region: Contour, tol: float, cluster: float, max_rounds: int = 400
) -> tuple[list[_Found], list[Contour], int]:
    """Isolate and polish every zero inside ``region``. Returns (roots, unresolved cells, total count).

    A cell holding one zero is polished from its centre. A cell holding several
    is split until it is smaller than ``cluster``; then Newton with the
    multiplicity as step factor is tried, and the result is kept only if a small
    square around it winds the same number of times.
    """
    first = _nudged_many(f, [region])[0]
    if isinstance(first, RootFindError):
        return [], [region], -1
    total, region = first
    found: list[_Found] = []
    unresolved: list[Contour] = []
    # (cell, count, split retries, newton already failed here)
    active = [(region, total, 0, False)] if total > 0 else []
    min_size = 1e-10 * max(1.0, region.width, region.height)
    a = _interval_length(f)
    rounds = 0
    while active:
        # isolate: split until every cell is ready for Newton
        ready = []
        while active:
            rounds += 1
            if rounds > max_rounds:
                unresolved.extend(c for c, *_ in active)
                active = []
                break
            splits = []
            for c, n, tries, failed in active:
                size = max(c.width, c.height)
                if not failed and ((n == 1 and size <= _spacing(c, a)) or size <= cluster):
                    ready.append((c, n, tries))
                elif size > min_size:
                    splits.append((c, n, tries, failed))
                else:
                    unresolved.append(c)
            active = _split_cells(f, splits, unresolved)

        # polish every ready cell in one batch; failures go back to splitting
        if not ready:
            break
        states = _newton_many(
            f,
            [c.center for c, *_ in ready],
            [max(c.width, c.height) for c, *_ in ready],
            tol,
            mults=[n for _, n, _ in ready],
        )
        confirm, retry = [], []
        for (c, n, tries), st in zip(ready, states):
            if st.status == "converged" and c.contains(st.lam, margin=1e-9):
                if n == 1:
                    found.append(_Found(st.lam, n, st.residual))
                else:
                    confirm.append((c, n, tries, st))
            else:
                retry.append((c, n, tries, True))
        if confirm:
            boxes = [Contour.around(st.lam, 0.25 * max(c.width, c.height)) for c, _, _, st in confirm]
            for (c, n, tries, st), w in zip(confirm, _winding_many(f, boxes)):
                if w == n:
                    found.append(_Found(st.lam, n, st.residual))
                else:
                    retry.append((c, n, tries, True))
        active = retry
    return found, unresolved, total


def _split_cells(f, splits, unresolved: list[Contour]) -> list:
    """Quarter each cell and count the children; a miscount is retried with a shifted split."""
    if not splits:
        return []
    children = [c.split(0.5 + 0.0731 * tries, 0.5 + 0.0731 * tries) for c, _, tries, _ in splits]
    counts = _winding_many(f, [ch for group in children for ch in group])
    active = []
    for j, ((c, n, tries, failed), group) in enumerate(zip(splits, children)):
        res = counts[4 * j : 4 * j + 4]
        if any(isinstance(r, RootFindError) for r in res) or sum(res) != n:
            if tries < 3:
                active.append((c, n, tries + 1, failed))
            else:
                unresolved.append(c)
            continue
        active.extend((ch, r, 0, False) for ch, r in zip(group, res) if r > 0)
    return active


def _half_region(radius: float, symmetric: bool) -> Contour:
    # offsets keep the real axis and the imaginary axis off every dyadic grid line
    if symmetric:
        return Contour(-0.0123 * radius, radius, -0.9737 * radius, 1.0263 * radius)
    return Contour(-1.0123 * radius, 0.9877 * radius, -0.9737 * radius, 1.0263 * radius)


def _cover(window: Contour, symmetric: bool) -> Contour:
    """A search region containing the window (its right half when mirrors are used)."""
    X = max(window.x1, window.y1)
    x0 = -0.0123 * X if symmetric else -1.0137 * X
    return Contour(x0, 1.0137 * X, -1.0137 * X, 1.0263 * X)


def _is_symmetric(spec: ProblemSpec) -> bool:
    return all(c.beta.imag == 0 for c in spec.bcs)


def _axis_tol(lam: complex) -> float:
    return AXIS_REL * max(1.0, abs(lam))


def locate_low_index(
    spec: ProblemSpec,
    radius: float,
    tol: float = 1e-10,
    ode_tol: float = DEFAULT_TOL,
    delta: DeltaFunction | None = None,
    polish: DeltaFunction | None = None,
) -> list[Eigenvalue]:
    """All eigenvalues of the half-square [-eps, R] x [-R, R] plus their mirrors.

    When the couplings are not all real the full square is searched and nothing
    is mirrored.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    delta = delta or DeltaFunction(spec, max(ode_tol, COUNT_TOL))
    polish = polish or DeltaFunction(spec, min(ode_tol, 1e-12))
    region = _half_region(radius, _is_symmetric(spec))
    roots, unresolved, _ = _quadtree(_Split(delta, polish), region, tol, 1e-5 * max(1.0, radius))
    if unresolved:
        raise NonConvergent(f"{len(unresolved)} cells could not be resolved")
    roots = _dedupe(roots, spec.a)
    out = _with_mirrors(polish, roots, tol, _is_symmetric(spec))[0]
    return [Eigenvalue(r.lam, principal_sqrt(r.lam), None, r.mult, r.residual, r.seed) for r in out]


def _dedupe(roots: list[_Found], a: float) -> list[_Found]:
    out: list[_Found] = []
    for r in sorted(roots, key=lambda r: (r.lam.real, r.lam.imag)):
        tol = 1e-6 * max(1.0, 2 * math.pi * abs(principal_sqrt(r.lam)) / a)
        dup = next((o for o in out if abs(o.lam - r.lam) < tol), None)
        if dup is None:
            out.append(r)
        else:
            dup.mult = max(dup.mult, r.mult)
            if dup.k is None:
                dup.k, dup.seed = r.k, r.seed
            if r.residual < dup.residual:
                dup.lam, dup.residual = r.lam, r.residual
    return out


def _with_mirrors(polish, roots: list[_Found], tol: float, symmetric: bool) -> tuple[list[_Found], list[tuple[int, int]], float]:
    """Keep the right half plus the axis, and check or polish the mirror partners."""
    if not symmetric:
        return list(roots), [], 0.0
    keep = [r for r in roots if r.lam.real > -_axis_tol(r.lam)]
    right = [r for r in keep if r.lam.real > _axis_tol(r.lam)]
    axis = [r for r in keep if r.lam.real <= _axis_tol(r.lam)]
    seeds = [-r.lam.conjugate() for r in right]
    # the exact mirror is accepted when it already meets the residual tolerance
    direct = np.abs(_as_scaled(polish, "polish")(np.array(seeds))[0]) if right else np.zeros(0)
    redo = [i for i, v in enumerate(direct) if not v <= tol]
    states = [_NewtonState(z, z, 0.0, r.mult, float(v), status="converged") for z, r, v in zip(seeds, right, direct)]
    if redo:
        radii = [1e-3 * max(1.0, abs(right[i].lam)) for i in redo]
        again = _newton_many(polish, [seeds[i] for i in redo], radii, tol, mults=[right[i].mult for i in redo])
        for i, st in zip(redo, again):
            states[i] = st
    mirrors, pairs, defect = [], [], 0.0
    for i, (r, st) in enumerate(zip(right, states)):
        lam = st.lam if st.status == "converged" else -r.lam.conjugate()
        res = st.residual
        if st.status != "converged":
            defect = math.inf
        else:
            defect = max(defect, abs(lam + r.lam.conjugate()) / (1 + abs(r.lam)))
        mirrors.append(_Found(lam, r.mult, res, None if r.seed is None else -r.seed.conjugate(), None if r.k is None else -r.k))
        pairs.append((i, len(right) + len(axis) + i))
    return right + axis + mirrors, pairs, defect


# ---------------------------------------------------------------------------
# the full solver

@dataclass
class SpectrumReport:
    eigenvalues: list[Eigenvalue]
    window: Contour
    window_winding: int
    found_in_window: int
    axis_count: int
    axis_parity: str
    symmetry_defect: float
    symmetric: bool
    k0: int | None
    kmax: int
    coeffs: AsymptoticCoeffs | None = None
    seeds: dict[int, complex] = field(default_factory=dict)
    unresolved: list[Contour] = field(default_factory=list)
    fallback_used: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.window_winding == self.found_in_window and not self.unresolved

    def indexed(self) -> dict[int, Eigenvalue]:
        return {e.index: e for e in self.eigenvalues if e.index is not None}


def _seed_table(coeffs: AsymptoticCoeffs, a: float, kmax: int) -> dict[int, tuple[complex, complex]]:
    return {k: seed_mu(k, coeffs, a) for k in range(1, kmax + 2)}


def _window_half(seeds: dict[int, tuple[complex, complex]], kmax: int, a: float) -> float:
    if seeds:
        mid = 0.5 * (seeds[kmax][0] + seeds[kmax + 1][0])
        return float((mid * mid).real)
    return float(((kmax + 0.5) * math.pi / a) ** 2)


def solve_spectrum(
    spec: ProblemSpec,
    kmax: int,
    tol: float = 1e-10,
    ode_tol: float = DEFAULT_TOL,
    radius: float | None = None,
    threads: int | None = None,
    raise_incomplete: bool = True,
) -> SpectrumReport:
    """Every eigenvalue with |Re lambda| below the window edge between indices kmax and kmax + 1."""
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    if threads is None:
        threads = int(os.environ.get("PENCIL_SPECTRA_THREADS", "1") or 1)
    delta = DeltaFunction(spec, max(ode_tol, COUNT_TOL), threads)
    polish = DeltaFunction(spec, min(ode_tol, 1e-12), threads)
    split = _Split(delta, polish)
    symmetric = _is_symmetric(spec)
    a = spec.a
    notes: list[str] = []

    try:
        coeffs = tau_coeffs(case_label(spec), spec)
    except UnsupportedCase:
        coeffs = None
        notes.append("no asymptotic table for this configuration; searching without seeds")
    seeds = _seed_table(coeffs, a, kmax) if coeffs is not None else {}

    X = _window_half(seeds, kmax, a)
    # zeros stay away from the window edge and from seed squares, so no verification pass
    window = Contour(-X, X, -X, X, verify=False)
    win = _nudged_many(delta, [window])[0]
    if isinstance(win, RootFindError):
        raise win
    window_count, window = win

    # seeds: isolate, polish, and find k0
    found: list[_Found] = []
    k0 = None
    if seeds:
        ks = list(range(1, kmax + 1))
        lam_hat = {k: seeds[k][1] for k in range(1, kmax + 2)}
        halves = {}
        for k in ks:
            gaps = [abs(lam_hat[k + 1] - lam_hat[k])]
            if k > 1:
                gaps.append(abs(lam_hat[k] - lam_hat[k - 1]))
            halves[k] = 0.5 * min(gaps)
        usable = [k for k in ks if seeds[k][0].real > 0 and halves[k] > 0]
        contours = [Contour.around(lam_hat[k], halves[k], verify=False) for k in usable]
        counts = _winding_many(delta, contours)
        states = _newton_many(split, [lam_hat[k] for k in usable], [2 * halves[k] for k in usable], tol)
        ok = {}
        for k, c, n, st in zip(usable, contours, counts, states):
            good = n == 1 and st.status == "converged" and c.contains(st.lam)
            ok[k] = good
            if good:
                found.append(_Found(st.lam, 1, st.residual, lam_hat[k], k))
        increasing = all(seeds[k + 1][0].real > seeds[k][0].real for k in ks)
        k0 = kmax + 1
        for k in reversed(ks):
            if ok.get(k, False) and increasing:
                k0 = k
            else:
                break
        found = [r for r in found if r.k is not None and r.k >= k0]
        if k0 > kmax:
            notes.append("no seed isolated its root; the tail comes from the search")

    # low-index region; without usable seeds it is the whole window
    cover = _cover(window, symmetric)
    if radius is None and seeds and k0 is not None and k0 <= kmax:
        lam0 = seeds[k0][1]
        hw = 0.5 * abs(seeds[k0 + 1][1] - lam0)
        radius = max(lam0.real - 0.5 * hw, 1.0)
    low_region = cover if radius is None else _half_region(radius, symmetric)
    low, unresolved, _ = _quadtree(split, low_region, tol, 1e-5 * max(1.0, low_region.x1))
    found = _dedupe(found + low, a)

    fallback = False
    roots, pairs, defect = _with_mirrors(polish, found, tol, symmetric)
    inside = sum(r.mult for r in roots if window.contains(r.lam))
    if (inside != window_count or unresolved) and low_region != cover:
        fallback = True
        notes.append(f"seeded search found {inside} of {window_count} zeros in the window; searched the whole window")
        region = cover
        extra, unresolved, _ = _quadtree(split, region, tol, 1e-5 * max(1.0, X))
        found = _dedupe(found + extra, a)
        roots, pairs, defect = _with_mirrors(polish, found, tol, symmetric)
        inside = sum(r.mult for r in roots if window.contains(r.lam))

    roots = [r for r in roots if window.contains(r.lam)]
    eigen = _assign_indices(roots, seeds, kmax, symmetric)
    axis = sum(e.multiplicity for e in eigen if e.is_axis)
    report = SpectrumReport(
        eigenvalues=eigen,
        window=window,
        window_winding=window_count,
        found_in_window=inside,
        axis_count=axis,
        axis_parity="even" if axis % 2 == 0 else "odd",
        symmetry_defect=defect,
        symmetric=symmetric,
        k0=k0,
        kmax=kmax,
        coeffs=coeffs,
        seeds={k: v[0] for k, v in seeds.items() if k <= kmax},
        unresolved=unresolved,
        fallback_used=fallback,
        notes=notes,
    )
    if raise_incomplete and not report.complete:
        raise IncompleteSpectrum(
            f"window {window} winds {window_count} times but {inside} zeros were found", report
        )
    return report


def _assign_indices(roots: list[_Found], seeds, kmax: int, symmetric: bool) -> list[Eigenvalue]:
    """Index the right-half roots by ascending Re mu, anchored at the seed nearest the top root."""
    right = sorted([r for r in roots if r.lam.real > _axis_tol(r.lam)], key=lambda r: principal_sqrt(r.lam).real)
    index: dict[int, int] = {}
    if right and seeds:
        top = principal_sqrt(right[-1].lam)
        k_top = min((k for k in seeds if k <= kmax + 1), key=lambda k: abs(seeds[k][0] - top))
        for rank, r in enumerate(reversed(right)):
            k = k_top - rank
            if k >= 1:
                index[id(r)] = k
    eig = []
    for r in roots:
        k = index.get(id(r))
        if k is None and symmetric and r.lam.real < -_axis_tol(r.lam):
            mate = min(right, key=lambda q: abs(q.lam + r.lam.conjugate()), default=None)
            if mate is not None and id(mate) in index:
                k = -index[id(mate)]
        seed_used = None
        if k is not None and abs(k) in seeds and abs(k) <= kmax:
            lam_hat = seeds[abs(k)][1]
            seed_used = lam_hat if k > 0 else -lam_hat.conjugate()
        elif r.seed is not None:
            seed_used = r.seed
        eig.append(_Found(r.lam, r.mult, r.residual, seed_used, k))
    eig.sort(key=lambda r: (r.k is None, r.k if r.k is not None else 0, r.lam.real, r.lam.imag))
    out = [Eigenvalue(r.lam, principal_sqrt(r.lam), r.k, r.mult, r.residual, r.seed) for r in eig]
    if symmetric:
        linked = []
        for i, e in enumerate(out):
            partner = None
            if not e.is_axis:
                j = min(range(len(out)), key=lambda j: abs(out[j].lam + e.lam.conjugate()))
                if j != i and abs(out[j].lam + e.lam.conjugate()) < 1e-6 * (1 + abs(e.lam)):
                    partner = j
            linked.append(replace(e, partner=partner))
        out = linked
    return out
