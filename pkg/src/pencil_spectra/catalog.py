"""Named benchmark configurations used by the tests and the experiment scripts."""

from __future__ import annotations

from .problem import LEFT_CASES, ProblemSpec, bc, validate

_LEFT_PAIRS = {case: pair for pair, case in LEFT_CASES.items()}


def missile(g: str = "0", a: float = 1.0) -> ProblemSpec:
    """Free-free beam: y'' = y''' = 0 at both ends."""
    return validate({"a": a, "g": g, "bcs": [bc("left", 2), bc("left", 3), bc("right", 2), bc("right", 3)]})


def _left(case: int):
    p1, p2 = _LEFT_PAIRS[case]
    return [bc("left", p1), bc("left", p2)]


def case_a1(case: int, g: str = "0", beta3: complex = 1, beta4: complex = 1, a: float = 1.0) -> ProblemSpec:
    """y'(a) + i b3 lam y(a) = 0 and y'''(a) + i b4 lam y''(a) = 0."""
    right = [bc("right", 1, 0, beta3), bc("right", 3, 2, beta4)]
    return validate({"a": a, "g": g, "bcs": _left(case) + right})


def case_a2(case: int, g: str = "0", beta3: complex = 1, beta4: complex = -1, a: float = 1.0) -> ProblemSpec:
    """y''(a) + i b3 lam y'(a) = 0 and y'''(a) + i b4 lam y(a) = 0."""
    right = [bc("right", 2, 1, beta3), bc("right", 3, 0, beta4)]
    return validate({"a": a, "g": g, "bcs": _left(case) + right})


def nonregular(g: str = "0", a: float = 1.0) -> ProblemSpec:
    """Clamped at 0; y''' = 0 and y'' + i lam y = 0 at a, which no condition C(r, 1) admits."""
    return validate({"a": a, "g": g, "bcs": [bc("left", 0), bc("left", 1), bc("right", 3), bc("right", 2, 0, 1)]})


def asymptotic_instances(gs: tuple[str, ...] = ("0", "1")) -> dict[str, ProblemSpec]:
    """All six left cases against both right classes, for each g."""
    out = {}
    for name, make in (("A1", case_a1), ("A2", case_a2)):
        for case in range(1, 7):
            for g in gs:
                out[f"{name}-case{case}-g{g}"] = make(case, g)
    return out
