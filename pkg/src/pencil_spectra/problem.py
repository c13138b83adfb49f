"""Boundary-value problems y'''' - (g y')' = lambda^2 y on [0, a] and their classification.

Each boundary condition has the form ``y^[p](c) + i*beta*lambda*y^[q](c) = 0`` in
quasi-derivatives (``y^[3] = y''' - g y'``), with ``c`` the left or right end.
``beta == 0`` means the condition does not involve lambda, and then ``q`` is the
``NEG_INF`` sentinel.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .exprparse import Expr, evaluate, parse, to_text

__all__ = [
    "Endpoint",
    "NEG_INF",
    "NegInfinity",
    "BoundaryCondition",
    "ProblemSpec",
    "CaseLabel",
    "RightClass",
    "ConditionHit",
    "RegularityReport",
    "ProblemError",
    "DuplicateOrder",
    "BadOrderPair",
    "WrongCount",
    "validate",
    "bc",
    "case_label",
    "check_condition",
    "classify_regularity",
]


class ProblemError(ValueError):
    pass


class DuplicateOrder(ProblemError):
    pass


class BadOrderPair(ProblemError):
    pass


class WrongCount(ProblemError):
    pass


class Endpoint(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class NegInfinity:
    """Order of the lambda term of a lambda-free condition.

    Compares below every integer, and ``NEG_INF + 2`` is still ``NEG_INF``.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __lt__(self, other):
        return other is not self

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is self

    def __repr__(self):
        return "NEG_INF"

    def __reduce__(self):
        return (NegInfinity, ())


NEG_INF = NegInfinity()
Order = Union[int, NegInfinity]


@dataclass(frozen=True)
class BoundaryCondition:
    endpoint: Endpoint
    p: int
    q: Order
    beta: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "beta", complex(self.beta))
        if not (isinstance(self.p, int) and 0 <= self.p <= 3):
            raise BadOrderPair(f"p must be an integer in 0..3, got {self.p!r}")
        if self.beta == 0:
            if self.q is not NEG_INF:
                raise BadOrderPair(f"beta = 0 requires q = NEG_INF, got q={self.q!r}")
        else:
            if self.q is NEG_INF or not isinstance(self.q, int):
                raise BadOrderPair("beta != 0 requires an integer q")
            if not 0 <= self.q < self.p:
                raise BadOrderPair(f"need 0 <= q < p <= 3, got p={self.p}, q={self.q}")

    @property
    def depends_on_lambda(self) -> bool:
        return self.beta != 0

    def relation(self) -> str:
        """How p compares with q + 2: one of '>', '<', '='."""
        if self.q is NEG_INF or self.p > self.q + 2:
            return ">"
        return "<" if self.q + 2 > self.p else "="

    def to_dict(self) -> dict:
        return {
            "endpoint": self.endpoint.value,
            "p": self.p,
            "q": None if self.q is NEG_INF else self.q,
            "beta": [self.beta.real, self.beta.imag],
        }


def bc(endpoint: str | Endpoint, p: int, q: int | None = None, beta: complex = 0) -> BoundaryCondition:
    """Shorthand constructor: ``bc("right", 1, 0, 1.0)`` or ``bc("left", 2)``."""
    return BoundaryCondition(Endpoint(endpoint), p, NEG_INF if q is None else q, complex(beta))


@dataclass(frozen=True)
class ProblemSpec:
    a: float
    g: Expr
    left: tuple[BoundaryCondition, BoundaryCondition]
    right: tuple[BoundaryCondition, BoundaryCondition]
    g_text: str = field(default="", compare=False)

    @property
    def bcs(self) -> tuple[BoundaryCondition, ...]:
        return self.left + self.right

    def g_at(self, x):
        return evaluate(self.g, x)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "g": self.g_text or to_text(self.g),
            "bcs": [c.to_dict() for c in self.bcs],
        }


class RightClass(enum.Enum):
    CASE_A1 = "CaseA1"
    CASE_A2 = "CaseA2"
    FLEXIBLE_MISSILE = "FlexibleMissile"
    OTHER = "Other"


LEFT_CASES = {(0, 1): 1, (0, 2): 2, (0, 3): 3, (1, 2): 4, (1, 3): 5, (2, 3): 6}


@dataclass(frozen=True)
class CaseLabel:
    left_case: int | None  # None when the left pair is not one of the six lambda-free cases
    right_class: RightClass

    def __str__(self):
        left = "Other" if self.left_case is None else str(self.left_case)
        return f"{self.right_class.value}/case {left}"


def _parse_bc(item) -> BoundaryCondition:
    if isinstance(item, BoundaryCondition):
        return item
    try:
        endpoint = Endpoint(item["endpoint"])
        p = item["p"]
        q = item.get("q")
        beta = item.get("beta", [0.0, 0.0])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemError(f"malformed boundary condition {item!r}: {exc}") from None
    if isinstance(beta, (list, tuple)):
        if len(beta) != 2:
            raise ProblemError(f"beta must be [re, im], got {beta!r}")
        beta = complex(float(beta[0]), float(beta[1]))
    beta = complex(beta)
    if isinstance(p, bool) or not isinstance(p, int):
        raise BadOrderPair(f"p must be an integer, got {p!r}")
    if q is not None and (isinstance(q, bool) or not isinstance(q, int)):
        raise BadOrderPair(f"q must be an integer or null, got {q!r}")
    if (q is None) != (beta == 0):
        raise BadOrderPair(f"q is null exactly when beta is zero (q={q!r}, beta={beta})")
    return BoundaryCondition(endpoint, p, NEG_INF if q is None else q, beta)


def validate(raw: Mapping) -> ProblemSpec:
    """Check and canonicalise a problem description.

    ``raw`` has keys ``a``, ``g`` (expression text or parsed tree) and ``bcs``
    (four records in the problem-file schema, or ``BoundaryCondition`` objects).
    """
    try:
        a = float(raw["a"])
        g_raw = raw["g"]
        items = list(raw["bcs"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemError(f"problem needs 'a', 'g' and 'bcs': {exc}") from None
    if not (a > 0 and a < float("inf")):
        raise ProblemError(f"interval length must be positive and finite, got {a}")
    if isinstance(g_raw, str):
        g, g_text = parse(g_raw), g_raw
    else:
        g, g_text = g_raw, to_text(g_raw)

    bcs = [_parse_bc(item) for item in items]
    if len(bcs) != 4:
        raise WrongCount(f"need exactly 4 boundary conditions, got {len(bcs)}")
    ends = {}
    for endpoint in Endpoint:
        pair = [c for c in bcs if c.endpoint is endpoint]
        if len(pair) != 2:
            raise WrongCount(f"need 2 conditions at the {endpoint.value} end, got {len(pair)}")
        orders = [c.p for c in pair] + [c.q for c in pair if c.depends_on_lambda]
        if len(set(orders)) != len(orders):
            raise DuplicateOrder(f"orders at the {endpoint.value} end are not distinct: {orders}")
        ends[endpoint] = tuple(sorted(pair, key=lambda c: c.p))
    return ProblemSpec(a, g, ends[Endpoint.LEFT], ends[Endpoint.RIGHT], g_text)


def case_label(spec: ProblemSpec) -> CaseLabel:
    left_case = None
    if not any(c.depends_on_lambda for c in spec.left):
        left_case = LEFT_CASES.get((spec.left[0].p, spec.left[1].p))
    r3, r4 = spec.right
    pq = ((r3.p, r3.q), (r4.p, r4.q))
    if r3.depends_on_lambda and r4.depends_on_lambda and pq == ((1, 0), (3, 2)):
        right = RightClass.CASE_A1
    elif r3.depends_on_lambda and r4.depends_on_lambda and pq == ((2, 1), (3, 0)):
        right = RightClass.CASE_A2
    elif (
        not r3.depends_on_lambda
        and not r4.depends_on_lambda
        and {r3.p, r4.p} == {2, 3}
        and {c.p for c in spec.left} == {2, 3}
    ):
        right = RightClass.FLEXIBLE_MISSILE
    else:
        right = RightClass.OTHER
    return CaseLabel(left_case, right)


def _beta_excluded(beta: complex) -> bool:
    # The excluded values (-1)^l for l = 1, 2 are both rejected.
    return beta in (1, -1)


def check_condition(first: BoundaryCondition, second: BoundaryCondition, r: int, primed: bool = False) -> bool:
    """Literal truth of C(r, u) for the ordered pair (first, second).

    ``primed=True`` with ``r=2`` checks the mirrored variant C'(2, u).
    """
    f, s = first.relation(), second.relation()
    if primed:
        if r != 2:
            raise ValueError("only C'(2, u) has a primed variant")
        return f == "<" and s == ">"
    if r == 1:
        return f == ">" and s == ">"
    if r == 2:
        return f == ">" and s == "<"
    if r == 3:
        return f == ">" and s == "=" and not _beta_excluded(second.beta)
    if r == 4:
        return f == "<" and s == "<"
    if r == 5:
        return f == "<" and s == "=" and not _beta_excluded(second.beta)
    raise ValueError(f"r must be in 1..5, got {r}")


@dataclass(frozen=True)
class ConditionHit:
    name: str  # e.g. "C(4,1)" or "C'(2,1)"
    swapped: bool  # True when the pair was taken against its canonical p-order

    def __str__(self):
        return self.name + (" [swapped]" if self.swapped else "")


@dataclass(frozen=True)
class RegularityReport:
    holds: dict[Endpoint, tuple[ConditionHit, ...]]
    birkhoff_regular: bool

    def names(self, endpoint: Endpoint, canonical_only: bool = False) -> list[str]:
        return [h.name for h in self.holds[endpoint] if not (canonical_only and h.swapped)]


def _conditions(pair: Iterable[BoundaryCondition], u: int) -> tuple[ConditionHit, ...]:
    a, b = pair
    hits = []
    for swapped, (first, second) in ((False, (a, b)), (True, (b, a))):
        for r in range(1, 6):
            if check_condition(first, second, r):
                hits.append(ConditionHit(f"C({r},{u})", swapped))
        if check_condition(first, second, 2, primed=True):
            hits.append(ConditionHit(f"C'(2,{u})", swapped))
    return tuple(hits)


def classify_regularity(spec: ProblemSpec) -> RegularityReport:
    holds = {
        Endpoint.LEFT: _conditions(spec.left, 0),
        Endpoint.RIGHT: _conditions(spec.right, 1),
    }
    return RegularityReport(holds, bool(holds[Endpoint.LEFT]) and bool(holds[Endpoint.RIGHT]))
