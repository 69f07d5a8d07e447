"""Linear constraint systems over named nonnegative rational unknowns."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .prob import ZERO, format_rational, to_rational

EQ = "=="
GE = ">="


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple  # ((unknown, coefficient), ...) with nonzero coefficients
    sense: str
    rhs: Fraction
    label: str = ""

    def coeffs(self) -> dict:
        return dict(self.terms)

    def is_trivial(self) -> bool:
        """``0 == 0`` or ``0 >= c`` with ``c <= 0``."""
        if self.terms:
            return False
        return self.rhs == 0 if self.sense == EQ else self.rhs <= 0

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        return sum((c * values.get(n, ZERO) for n, c in self.terms), ZERO)

    def satisfied_by(self, values: Mapping[str, Fraction]) -> bool:
        lhs = self.evaluate(values)
        return lhs == self.rhs if self.sense == EQ else lhs >= self.rhs

    def normalized(self):
        """Scale-free form used for canonical comparison (``None`` if trivial)."""
        if self.is_trivial():
            return None
        terms = sorted(self.terms)
        if not terms:
            return ((), self.sense, self.rhs if self.sense == EQ else Fraction(1))
        lead = terms[0][1]
        scale = 1 / lead if self.sense == EQ else 1 / abs(lead)
        return (tuple((n, c * scale) for n, c in terms), self.sense, self.rhs * scale)


class ConstraintSystem:
    """Unknowns are implicitly ``>= 0``; constraints keep declaration order."""

    def __init__(self, unknowns: Iterable[str] = ()):
        self.unknowns = []
        self._index = {}
        self.constraints = []
        for name in unknowns:
            self.add_unknown(name)

    def add_unknown(self, name: str) -> str:
        if name not in self._index:
            self._index[name] = len(self.unknowns)
            self.unknowns.append(name)
        return name

    def __contains__(self, name) -> bool:
        return name in self._index

    def _terms(self, coeffs: Mapping[str, object]) -> tuple:
        terms = []
        for name, c in coeffs.items():
            if name not in self._index:
                raise KeyError(f"constraint references undeclared unknown {name!r}")
            c = to_rational(c)
            if c:
                terms.append((name, c))
        terms.sort(key=lambda nc: self._index[nc[0]])
        return tuple(terms)

    def add_eq(self, coeffs: Mapping[str, object], rhs=0, label: str = "") -> None:
        self.constraints.append(LinearConstraint(self._terms(coeffs), EQ, to_rational(rhs), label))

    def add_ge(self, coeffs: Mapping[str, object], rhs=0, label: str = "") -> None:
        self.constraints.append(LinearConstraint(self._terms(coeffs), GE, to_rational(rhs), label))

    def extend(self, other: "ConstraintSystem") -> "ConstraintSystem":
        for name in other.unknowns:
            self.add_unknown(name)
        self.constraints.extend(other.constraints)
        return self

    def copy(self) -> "ConstraintSystem":
        return ConstraintSystem().extend(self)

    def __len__(self) -> int:
        return len(self.constraints)

    def to_text(self) -> str:
        payload = {
            "unknowns": self.unknowns,
            "constraints": [
                [c.label, c.sense, format_rational(c.rhs), [[n, format_rational(v)] for n, v in c.terms]]
                for c in self.constraints
            ],
        }
        return json.dumps(payload, separators=(",", ":"), ensure_ascii=True)

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("ascii")).hexdigest()

    def canonical(self) -> tuple:
        """Order- and scale-insensitive form; trivial rows are dropped."""
        rows = {c.normalized() for c in self.constraints}
        rows.discard(None)
        return frozenset(self.unknowns), frozenset(rows)

    def __repr__(self):
        return f"ConstraintSystem({len(self.unknowns)} unknowns, {len(self.constraints)} constraints)"
