"""Relative response for binary outcomes in two subgroups and their mixture.

A :class:`ResponseTable` holds the eight joint probabilities
``p[arm][group][response]``.  Cells given as ``int`` or
:class:`fractions.Fraction` keep exact rational arithmetic throughout;
float cells use ordinary floating point.

The overall relative response equals the subgroup relative responses mixed
with weights proportional to the control responders in each subgroup
(:func:`mix_rr_correct`), provided arm assignment is independent of the
marker, as it is under randomization.  Mixing by prevalence, on either the
natural or the log scale, is wrong in general; both are kept as labeled
counterexamples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import DomainError, ZeroDenominatorError
from .survival import Arm, Group

SCHEMA_VERSION = "1.0"

_ORDER = tuple((arm, group, resp) for arm in ("Rx", "C")
               for group in ("g_plus", "g_minus") for resp in ("R", "NR"))


def _exact(x):
    if isinstance(x, bool):
        raise DomainError("cell values must be numbers")
    if isinstance(x, Rational):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class ResponseTable:
    """Joint probabilities of (arm, marker group, response).

    Build from probabilities with the constructor or from raw counts with
    :meth:`from_counts`.
    """

    cells: dict

    def __post_init__(self):
        try:
            cells = {key: _exact(self.cells[key]) for key in _ORDER}
        except KeyError as exc:
            raise DomainError(f"missing cell {exc.args[0]}") from None
        if any(v < 0 for v in cells.values()):
            raise DomainError("cell probabilities must be nonnegative")
        total = sum(cells.values())
        if abs(total - 1) > 1e-12:
            raise DomainError(f"cell probabilities must sum to 1, got {total}")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_counts(cls, counts: dict) -> "ResponseTable":
        """Normalize nonnegative counts (ints stay exact) to probabilities."""
        vals = {key: _exact(counts[key]) for key in _ORDER}
        total = sum(vals.values())
        if total <= 0:
            raise ZeroDenominatorError("table has no observations")
        return cls({key: v / total for key, v in vals.items()})

    @classmethod
    def from_nested(cls, doc: dict, counts: bool = True) -> "ResponseTable":
        """Read ``doc[arm][group][response]`` (``Rx``/``C``, ``g_plus``/``g_minus``, ``R``/``NR``)."""
        try:
            flat = {(a, g, r): doc[a][g][r] for a, g, r in _ORDER}
        except (KeyError, TypeError) as exc:
            raise DomainError(f"table is missing entry {exc}") from None
        return cls.from_counts(flat) if counts else cls(flat)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.cells.values())

    def p(self, arm: str, group: str | None = None, response: str | None = None):
        """Marginal probability; ``None`` sums over that index."""
        arm = Arm(arm).value
        group = None if group is None else Group(group).value
        return sum(v for (a, g, r), v in self.cells.items()
                   if a == arm and (group is None or g == group)
                   and (response is None or r == response))

    def prevalence(self, group: str = "g_plus"):
        return self.p("Rx", group) + self.p("C", group)


def _ratio(num, den):
    if den == 0:
        raise ZeroDenominatorError("relative response denominator is zero")
    return num / den


def rr_subgroup(table: ResponseTable, group: str):
    """``(p_Rx,g(R) * p_C,g) / (p_C,g(R) * p_Rx,g)``."""
    return _ratio(table.p("Rx", group, "R") * table.p("C", group),
                  table.p("C", group, "R") * table.p("Rx", group))


def rr_overall(table: ResponseTable):
    return _ratio(table.p("Rx", None, "R") * table.p("C"),
                  table.p("C", None, "R") * table.p("Rx"))


def mix_rr_correct(rr_gplus, rr_gminus, control_responders_gplus,
                   control_responders_gminus):
    """Mix subgroup relative responses by their share of control responders."""
    total = control_responders_gplus + control_responders_gminus
    if control_responders_gplus <= 0 or control_responders_gminus <= 0:
        raise ZeroDenominatorError("control responder probabilities must be positive")
    w_minus = control_responders_gminus / total
    w_plus = 1 - w_minus
    return w_minus * rr_gminus + w_plus * rr_gplus


def mix_rr_naive_prevalence(rr_gplus, rr_gminus, gamma_plus):
    """Prevalence-weighted arithmetic mean of relative responses (incorrect)."""
    if rr_gplus <= 0 or rr_gminus <= 0 or not (0 < gamma_plus < 1):
        raise DomainError("need positive relative responses and 0 < gamma_plus < 1")
    return gamma_plus * rr_gplus + (1 - gamma_plus) * rr_gminus


def mix_rr_naive_log(rr_gplus, rr_gminus, gamma_plus) -> float:
    """Prevalence-weighted geometric mean of relative responses (incorrect)."""
    if rr_gplus <= 0 or rr_gminus <= 0 or not (0 < gamma_plus < 1):
        raise DomainError("need positive relative responses and 0 < gamma_plus < 1")
    return math.exp(float(gamma_plus) * math.log(rr_gplus)
                    + (1 - float(gamma_plus)) * math.log(rr_gminus))


def _num(x):
    if isinstance(x, Fraction):
        return {"value": float(x), "exact": f"{x.numerator}/{x.denominator}"}
    return {"value": float(x)}


def rr_report(table: ResponseTable) -> dict:
    rr_plus = rr_subgroup(table, "g_plus")
    rr_minus = rr_subgroup(table, "g_minus")
    gamma = table.prevalence("g_plus")
    correct = mix_rr_correct(rr_plus, rr_minus, table.p("C", "g_plus", "R"),
                             table.p("C", "g_minus", "R"))
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "rr_report",
        "exact": table.exact,
        "prevalence_g_plus": _num(gamma),
        "rr_g_plus": _num(rr_plus),
        "rr_g_minus": _num(rr_minus),
        "rr_overall": _num(rr_overall(table)),
        "mix_correct": {**_num(correct), "incorrect_estimator": False},
        "mix_naive_prevalence": {**_num(mix_rr_naive_prevalence(rr_plus, rr_minus, gamma)),
                                 "incorrect_estimator": True},
        "mix_naive_log": {**_num(mix_rr_naive_log(rr_plus, rr_minus, gamma)),
                          "incorrect_estimator": True},
    }


def table2() -> ResponseTable:
    """The worked example: 86 subjects split over the eight cells."""
    return ResponseTable.from_counts({
        ("Rx", "g_plus", "R"): 8, ("Rx", "g_plus", "NR"): 12,
        ("Rx", "g_minus", "R"): 10, ("Rx", "g_minus", "NR"): 13,
        ("C", "g_plus", "R"): 3, ("C", "g_plus", "NR"): 17,
        ("C", "g_minus", "R"): 12, ("C", "g_minus", "NR"): 11,
    })
