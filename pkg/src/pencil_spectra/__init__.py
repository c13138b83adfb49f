"""Eigenvalues of y'''' - (g y')' = lambda^2 y with lambda-dependent boundary conditions.

The main entry points are ``validate`` (problem description -> ``ProblemSpec``),
``classify_regularity``, ``char_det``, ``tau_coeffs`` and ``solve_spectrum``.
"""

from .asymptotics import AsymptoticCoeffs, UnsupportedCase, coeffs_for, fit_tau, phi0, seed, tau_coeffs
from .charfn import CharValue, char_det, char_det_closed_form, char_det_many, closed_form_fundamental, integrate_fundamental
from .exprparse import ExprSyntaxError, UnknownIdentifier, evaluate, parse
from .problem import (
    NEG_INF,
    BoundaryCondition,
    CaseLabel,
    Endpoint,
    ProblemError,
    ProblemSpec,
    RightClass,
    bc,
    case_label,
    classify_regularity,
    validate,
)
from .rootfind import (
    Contour,
    Eigenvalue,
    IncompleteSpectrum,
    SpectrumReport,
    locate_low_index,
    newton_polish,
    solve_spectrum,
    winding_count,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticCoeffs",
    "BoundaryCondition",
    "CaseLabel",
    "CharValue",
    "Contour",
    "Eigenvalue",
    "Endpoint",
    "ExprSyntaxError",
    "IncompleteSpectrum",
    "NEG_INF",
    "ProblemError",
    "ProblemSpec",
    "RightClass",
    "SpectrumReport",
    "UnknownIdentifier",
    "UnsupportedCase",
    "bc",
    "case_label",
    "char_det",
    "char_det_closed_form",
    "char_det_many",
    "classify_regularity",
    "closed_form_fundamental",
    "coeffs_for",
    "evaluate",
    "fit_tau",
    "integrate_fundamental",
    "locate_low_index",
    "newton_polish",
    "parse",
    "phi0",
    "seed",
    "solve_spectrum",
    "tau_coeffs",
    "validate",
    "winding_count",
]
