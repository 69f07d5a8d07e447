"""Exact finite probability kernel.

Variable spaces, conditional distribution tables ``p(out|in)`` with exact
rational entries, and the small algebra the rest of the package is built on
(chaining by total probability, marginalization, convex mixing).

Assignments are tuples of integers in the declared variable order; tables are
indexed row-major over that order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    NegativeEntry,
    NotNormalized,
    ShapeMismatch,
    SigmaOutOfRange,
    SpaceMismatch,
    UnknownVariable,
)

Rational = Fraction
Assignment = tuple

ZERO = Fraction(0)
ONE = Fraction(1)


def to_rational(value) -> Fraction:
    """Coerce ``value`` to an exact ``Fraction``.

    Accepts ints, Fractions and strings like ``"3/4"``. Floats and bools are
    rejected: a float has already lost the exactness we are trying to keep.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"refusing inexact value {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_rational(value: Fraction) -> str:
    """Canonical ``"p/q"`` text form (denominator always written)."""
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class FiniteSpace:
    """An ordered list of named finite variables."""

    variables: tuple

    def __post_init__(self):
        variables = tuple((str(name), int(card)) for name, card in self.variables)
        object.__setattr__(self, "variables", variables)
        names = [name for name, _ in variables]
        if len(set(names)) != len(names):
            raise ShapeMismatch(f"duplicate variable names in {names}")
        for name, card in variables:
            if card < 1:
                raise ShapeMismatch(f"variable {name!r} has cardinality {card} < 1")

    @classmethod
    def of(cls, **cards: int) -> "FiniteSpace":
        return cls(tuple(cards.items()))

    @classmethod
    def empty(cls) -> "FiniteSpace":
        return cls(())

    @property
    def names(self) -> tuple:
        return tuple(name for name, _ in self.variables)

    @property
    def cards(self) -> tuple:
        return tuple(card for _, card in self.variables)

    @cached_property
    def size(self) -> int:
        size = 1
        for card in self.cards:
            size *= card
        return size

    @cached_property
    def _strides(self) -> tuple:
        strides = []
        acc = 1
        for card in reversed(self.cards):
            strides.append(acc)
            acc *= card
        return tuple(reversed(strides))

    @cached_property
    def assignments(self) -> tuple:
        return tuple(itertools.product(*(range(card) for card in self.cards)))

    def index(self, assignment: Sequence[int]) -> int:
        if len(assignment) != len(self.variables):
            raise ShapeMismatch(f"assignment {assignment} does not fit {self.names}")
        idx = 0
        for value, card, stride in zip(assignment, self.cards, self._strides):
            if not 0 <= value < card:
                raise ShapeMismatch(f"value {value} out of range for cardinality {card}")
            idx += value * stride
        return idx

    def assignment(self, index: int) -> Assignment:
        return self.assignments[index]

    def card(self, name: str) -> int:
        return self.cards[self.position(name)]

    def position(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariable(f"no variable {name!r} in {self.names}") from None

    def __contains__(self, name) -> bool:
        return name in self.names

    def __len__(self) -> int:
        return len(self.variables)

    def concat(self, other: "FiniteSpace") -> "FiniteSpace":
        return FiniteSpace(self.variables + other.variables)

    def keep(self, names: Iterable[str]) -> "FiniteSpace":
        """Sub-space on ``names``, in this space's order."""
        wanted = set(names)
        for name in wanted:
            self.position(name)
        return FiniteSpace(tuple(v for v in self.variables if v[0] in wanted))

    def drop(self, names: Iterable[str]) -> "FiniteSpace":
        unwanted = set(names)
        for name in unwanted:
            self.position(name)
        return FiniteSpace(tuple(v for v in self.variables if v[0] not in unwanted))

    def rename(self, mapping: Mapping[str, str]) -> "FiniteSpace":
        return FiniteSpace(tuple((mapping.get(n, n), c) for n, c in self.variables))

    def project(self, assignment: Sequence[int], names: Sequence[str]) -> Assignment:
        return tuple(assignment[self.position(name)] for name in names)

    def as_dict(self, assignment: Sequence[int]) -> dict:
        return dict(zip(self.names, assignment))

    def label(self, assignment: Sequence[int]) -> str:
        return ",".join(f"{n}={v}" for n, v in zip(self.names, assignment))

    def shape(self) -> tuple:
        return self.cards

    def __repr__(self):
        inner = ", ".join(f"{n}:{c}" for n, c in self.variables)
        return f"FiniteSpace({inner})"


@dataclass(frozen=True)
class CondDist:
    """A stochastic map ``p(output|input)`` with exact entries.

    ``columns[i][o]`` is the probability of output index ``o`` given input
    index ``i``; every column sums to exactly one.
    """

    input: FiniteSpace
    output: FiniteSpace
    columns: tuple

    def __post_init__(self):
        columns = tuple(tuple(to_rational(v) for v in col) for col in self.columns)
        object.__setattr__(self, "columns", columns)
        if len(columns) != self.input.size:
            raise ShapeMismatch(
                f"expected {self.input.size} input columns, got {len(columns)}"
            )
        for i, col in enumerate(columns):
            if len(col) != self.output.size:
                raise ShapeMismatch(
                    f"column {i} has {len(col)} entries, expected {self.output.size}"
                )
            for o, value in enumerate(col):
                if value < 0:
                    raise NegativeEntry(
                        f"negative entry {value} at output {self.output.assignment(o)}, "
                        f"input {self.input.assignment(i)}",
                        coordinate=(self.output.assignment(o), self.input.assignment(i)),
                    )
            total = sum(col, ZERO)
            if total != 1:
                raise NotNormalized(
                    f"column for input {self.input.label(self.input.assignment(i))} "
                    f"sums to {total}",
                    coordinate=self.input.assignment(i),
                )

    def __call__(self, out: Sequence[int], inp: Sequence[int]) -> Fraction:
        return self.columns[self.input.index(inp)][self.output.index(out)]

    def column(self, inp: Sequence[int]) -> tuple:
        return self.columns[self.input.index(inp)]

    def rows(self) -> list:
        """Matrix form ``[output][input]``."""
        return [list(row) for row in zip(*self.columns)]

    def support(self, i: int):
        """Nonzero ``(output_index, value)`` pairs of input column ``i``."""
        return [(o, v) for o, v in enumerate(self.columns[i]) if v]

    @classmethod
    def from_function(
        cls,
        input: FiniteSpace,
        output: FiniteSpace,
        fn: Callable[[Assignment, Assignment], object],
    ) -> "CondDist":
        columns = [
            [to_rational(fn(out, inp)) for out in output.assignments]
            for inp in input.assignments
        ]
        return cls(input, output, columns)

    @classmethod
    def deterministic(
        cls,
        input: FiniteSpace,
        output: FiniteSpace,
        fn: Callable[[Assignment], Sequence[int]],
    ) -> "CondDist":
        columns = []
        for inp in input.assignments:
            col = [ZERO] * output.size
            col[output.index(tuple(fn(inp)))] = ONE
            columns.append(col)
        return cls(input, output, columns)

    @classmethod
    def identity(cls, space: FiniteSpace) -> "CondDist":
        return cls.deterministic(space, space, lambda a: a)

    def relabel(self, input: FiniteSpace, output: FiniteSpace) -> "CondDist":
        """Same table on renamed spaces of identical shape."""
        if input.cards != self.input.cards or output.cards != self.output.cards:
            raise SpaceMismatch("relabel must preserve cardinalities")
        return CondDist(input, output, self.columns)

    def __repr__(self):
        return f"CondDist({self.output!r} | {self.input!r})"


def make_cond_dist(input: FiniteSpace, output: FiniteSpace, entries) -> CondDist:
    """Build and validate a ``CondDist``.

    ``entries`` is either a mapping ``{(out_assignment, in_assignment): value}``
    (missing cells are zero) or a nested sequence in matrix form
    ``entries[output_index][input_index]``.
    """
    if isinstance(entries, Mapping):
        columns = [[ZERO] * output.size for _ in range(input.size)]
        for (out, inp), value in entries.items():
            try:
                columns[input.index(tuple(inp))][output.index(tuple(out))] = to_rational(value)
            except ShapeMismatch as exc:
                raise ShapeMismatch(f"bad cell {(out, inp)}: {exc}") from None
        return CondDist(input, output, columns)
    rows = [list(row) for row in entries]
    if len(rows) != output.size or any(len(row) != input.size for row in rows):
        raise ShapeMismatch(
            f"table must be {output.size} x {input.size} (outputs x inputs)"
        )
    return CondDist(input, output, [list(col) for col in zip(*rows)])


def chain(second: CondDist, first: CondDist) -> CondDist:
    """``p(t|r) = sum_s second(t|s) first(s|r)``."""
    if first.output != second.input:
        raise SpaceMismatch(f"cannot chain {second!r} after {first!r}")
    columns = []
    for col in first.columns:
        out = [ZERO] * second.output.size
        for s, p in enumerate(col):
            if not p:
                continue
            for t, q in enumerate(second.columns[s]):
                if q:
                    out[t] += p * q
        columns.append(out)
    return CondDist(first.input, second.output, columns)


def marginalize(d: CondDist, keep: Iterable[str]) -> CondDist:
    keep = list(keep)
    for name in keep:
        if name not in d.output:
            raise UnknownVariable(f"{name!r} is not an output of {d!r}")
    kept = d.output.keep(keep)
    positions = [d.output.position(n) for n in kept.names]
    target = [kept.index(tuple(a[p] for p in positions)) for a in d.output.assignments]
    columns = []
    for col in d.columns:
        out = [ZERO] * kept.size
        for o, value in enumerate(col):
            if value:
                out[target[o]] += value
        columns.append(out)
    return CondDist(d.input, kept, columns)


def convex_mix(sigma, d1: CondDist, d2: CondDist) -> CondDist:
    sigma = to_rational(sigma)
    if not 0 <= sigma <= 1:
        raise SigmaOutOfRange(f"sigma={sigma} outside [0, 1]")
    if d1.input != d2.input or d1.output != d2.output:
        raise SpaceMismatch("convex_mix needs identical spaces")
    rest = 1 - sigma
    columns = [
        [sigma * a + rest * b for a, b in zip(c1, c2)]
        for c1, c2 in zip(d1.columns, d2.columns)
    ]
    return CondDist(d1.input, d1.output, columns)


def dist_equal(d1: CondDist, d2: CondDist) -> bool:
    return d1.input == d2.input and d1.output == d2.output and d1.columns == d2.columns


def differing_cells(d1: CondDist, d2: CondDist) -> list:
    """``(out, in, v1, v2)`` for every cell where two same-shape tables differ."""
    if d1.input != d2.input or d1.output != d2.output:
        raise SpaceMismatch(f"{d1!r} and {d2!r} live on different spaces")
    cells = []
    for i, (c1, c2) in enumerate(zip(d1.columns, d2.columns)):
        for o, (a, b) in enumerate(zip(c1, c2)):
            if a != b:
                cells.append((d1.output.assignment(o), d1.input.assignment(i), a, b))
    return cells


def product_dist(d: CondDist, prior: Sequence, space: FiniteSpace) -> CondDist:
    """``p(out, extra|in) = d(out|in) prior(extra)`` with ``extra`` on ``space``."""
    prior = [to_rational(p) for p in prior]
    if len(prior) != space.size:
        raise ShapeMismatch("prior does not match its space")
    if any(p < 0 for p in prior) or sum(prior, ZERO) != 1:
        raise NotNormalized("prior must be a probability vector")
    columns = [[a * b for a in col for b in prior] for col in d.columns]
    return CondDist(d.input, d.output.concat(space), columns)


def deterministic_functions(input: FiniteSpace, output: FiniteSpace):
    """Every deterministic ``CondDist`` from ``input`` to ``output``."""
    for images in itertools.product(range(output.size), repeat=input.size):
        columns = []
        for o in images:
            col = [ZERO] * output.size
            col[o] = ONE
            columns.append(col)
        yield CondDist(input, output, columns)
