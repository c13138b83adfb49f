import math

import numpy as np
import pytest
from scipy.optimize import brentq
from hypothesis import assume, given, settings, strategies as st

from pencil_spectra import catalog
from pencil_spectra.asymptotics import coeffs_for, seed
from pencil_spectra.problem import bc, validate
from pencil_spectra.rootfind import (
    Contour,
    DeltaFunction,
    Diverged,
    ZeroOnContour,
    locate_low_index,
    newton_polish,
    principal_sqrt,
    solve_spectrum,
    winding_count,
    winding_count_nudged,
)

from .oracles import FREE_FREE_ROOTS

UNIT = Contour(-0.5, 0.5, -0.5, 0.5)


def poly(roots):
    roots = np.asarray(roots, dtype=complex)
    return lambda z: np.prod(np.asarray(z, dtype=complex)[:, None] - roots[None, :], axis=1)


def test_winding_examples():
    assert winding_count(lambda z: z * z, UNIT) == 2
    assert winding_count(lambda z: z - (1 + 1j), UNIT) == 0
    assert winding_count(poly([0.1, 0.1j, -0.2 - 0.3j, 3.0]), UNIT) == 3


def test_winding_missile_rectangle():
    f = DeltaFunction(catalog.missile())
    assert winding_count(f, Contour(20, 25, -1, 1)) == 1
    assert FREE_FREE_ROOTS[0] ** 2 == pytest.approx(22.3733, abs=1e-4)


def test_zero_on_contour_and_nudging():
    c = Contour(0.0, 1.0, -0.5, 0.5)
    f = poly([0.0])
    with pytest.raises(ZeroOnContour):
        winding_count(f, c)
    n, used = winding_count_nudged(f, c)
    assert n == 1 and used.x0 < 0


def test_principal_sqrt():
    assert principal_sqrt(4) == 2
    assert principal_sqrt(-4) == 2j
    mu = principal_sqrt(-3 - 4j)
    assert mu.real >= 0 and mu * mu == pytest.approx(-3 - 4j)


def test_newton_simple():
    e = newton_polish(lambda z: z * z - 4, 1.5, tol=1e-12)
    assert abs(e.lam - 2) < 1e-12


def test_newton_diverges_outside_guard():
    with pytest.raises(Diverged):
        newton_polish(np.exp, 0.0, guard=1.0, maxit=20)


def test_newton_missile_seed():
    lam_hat = (3 * math.pi / 2) ** 2
    e = newton_polish(DeltaFunction(catalog.missile(), 1e-12), lam_hat, tol=1e-11)
    assert abs(e.mu - FREE_FREE_ROOTS[0]) < 1e-9


def test_newton_case_a1_case2_seed_k12():
    spec = catalog.case_a1(2)
    lam_hat = seed(12, coeffs_for(spec), 1.0)[1]
    f = DeltaFunction(spec, 1e-12)
    e = newton_polish(f, lam_hat, tol=1e-10)
    assert e.residual <= 1e-10
    half = 0.25 * abs(seed(13, coeffs_for(spec), 1.0)[1] - lam_hat)
    assert winding_count(f, Contour.around(e.lam, half)) == 1


def test_locate_low_index_missile():
    roots = locate_low_index(catalog.missile(), 30.0)
    at_zero = [r for r in roots if abs(r.lam) < 1e-6]
    assert len(at_zero) == 1 and at_zero[0].multiplicity == 4
    positive = sorted(r.mu.real for r in roots if r.lam.real > 1)
    assert positive == pytest.approx([FREE_FREE_ROOTS[0]], abs=1e-9)
    # closed under lambda -> -conj(lambda)
    lams = [r.lam for r in roots]
    for z in lams:
        assert min(abs(w + z.conjugate()) for w in lams) < 1e-8 * (1 + abs(z))


def test_locate_low_index_small_radius_is_empty():
    assert locate_low_index(catalog.case_a2(1), 0.5) == []


def test_locate_low_index_rejects_bad_radius():
    with pytest.raises(ValueError):
        locate_low_index(catalog.missile(), 0.0)


def test_solve_missile_kmax12(missile_k12):
    rep = missile_k12
    assert rep.complete
    assert all(abs(e.lam.imag) < 1e-7 * (1 + abs(e.lam)) for e in rep.eigenvalues)
    mus = [rep.indexed()[k].mu.real for k in range(4, 8)]
    assert mus == pytest.approx(FREE_FREE_ROOTS, abs=1e-9)
    gaps = [abs(rep.indexed()[k].mu - (2 * k - 5) * math.pi / 2) for k in range(5, 13)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_solve_is_deterministic_across_threads(missile_k12):
    again = solve_spectrum(catalog.missile(), 12, threads=2)
    assert [e.lam for e in again.eigenvalues] == [e.lam for e in missile_k12.eigenvalues]


def test_solve_parity_small():
    rep = solve_spectrum(catalog.case_a2(2), 6)
    assert rep.complete and rep.axis_parity == "odd"
    rep = solve_spectrum(catalog.case_a1(5), 6)
    assert rep.complete and rep.axis_parity == "even"


def test_solve_without_seeds():
    # clamped-pinned beam has no asymptotic table, so the whole window is searched
    spec = validate({"a": 1, "g": "0", "bcs": [bc("left", 0), bc("left", 1), bc("right", 0), bc("right", 2)]})
    rep = solve_spectrum(spec, 3)
    assert rep.complete and rep.k0 is None and rep.notes
    oracle = [brentq(lambda m: math.tan(m) - math.tanh(m), (k + 0.25) * math.pi - 0.3, (k + 0.25) * math.pi + 0.3) for k in (1, 2)]
    positive = sorted(e.mu.real for e in rep.eigenvalues if e.lam.real > 1)[:2]
    assert positive == pytest.approx(oracle, abs=1e-9)


def test_residual_and_multiplicity_invariants(missile_k12):
    for e in missile_k12.eigenvalues:
        assert e.multiplicity >= 1
        assert e.residual <= 1e-10


# --- property tests ------------------------------------------------------

_coord = st.floats(-0.95, 0.95, allow_nan=False)


@settings(deadline=None, max_examples=30)
@given(
    st.lists(st.tuples(_coord, _coord), min_size=0, max_size=5),
    st.lists(st.integers(1, 19), min_size=1, max_size=3, unique=True),
    st.lists(st.integers(1, 19), min_size=1, max_size=3, unique=True),
)
def test_winding_is_additive(roots, xcuts, ycuts):
    xcuts = [t / 20 for t in xcuts]
    ycuts = [t / 20 for t in ycuts]
    box = Contour(-1, 1, -1, 1)
    xs = [-1.0] + sorted(-1 + 2 * t for t in xcuts) + [1.0]
    ys = [-1.0] + sorted(-1 + 2 * t for t in ycuts) + [1.0]
    # keep roots off every cell edge
    for rx, ry in roots:
        assume(min(abs(rx - x) for x in xs) > 1e-3 and min(abs(ry - y) for y in ys) > 1e-3)
    f = poly([complex(rx, ry) for rx, ry in roots])
    total = winding_count(f, box)
    parts = sum(
        winding_count(f, Contour(x0, x1, y0, y1))
        for x0, x1 in zip(xs, xs[1:])
        for y0, y1 in zip(ys, ys[1:])
    )
    assert total == parts == len(roots)


@settings(deadline=None, max_examples=15)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_small_circle_around_root_winds_once(re, im):
    spec = catalog.case_a1(3, "x")
    f = DeltaFunction(spec, 1e-12)
    lam_hat = seed(8, coeffs_for(spec), 1.0)[1]
    e = newton_polish(f, lam_hat + complex(re, im), tol=1e-10)
    assert winding_count(f, Contour.around(e.lam, 1.0)) == 1
