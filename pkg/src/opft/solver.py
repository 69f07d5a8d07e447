"""Exact rational feasibility with re-checkable verdicts.

``solve`` runs a phase-I simplex over ``Fraction`` with Bland's least-index
rule. A feasible system yields a ``Witness``; an infeasible one yields a
Farkas certificate: multipliers ``y`` (free on equalities, nonnegative on
``>=`` rows) whose combined row has only nonpositive coefficients while its
right-hand side is positive. Since unknowns are nonnegative that reads
``0 >= combined_rhs > 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import InvalidCertificate
from .prob import ZERO, format_rational, to_rational
from .system import EQ, GE, ConstraintSystem

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Witness:
    values: dict
    system_hash: str

    feasible = True


@dataclass(frozen=True)
class InfeasibilityCertificate:
    multipliers: tuple
    combined: dict
    combined_rhs: Fraction
    system_hash: str

    feasible = False


FeasibilityVerdict = Union[Witness, InfeasibilityCertificate]


def _reduce_rows(system: ConstraintSystem):
    """Drop trivial rows and scaled duplicates.

    Returns ``(rows, early)`` where rows are ``(orig_index, scale, terms, sense, rhs)``
    and ``early`` is a ready certificate if some row reads ``0 = b != 0`` or
    ``0 >= b > 0``.
    """
    rows = []
    seen = {}
    for i, c in enumerate(system.constraints):
        if not c.terms:
            if c.is_trivial():
                continue
            return rows, (i, Fraction(1) if c.sense == GE or c.rhs > 0 else Fraction(-1))
        lead = c.terms[0][1]
        scale = 1 / lead if c.sense == EQ else 1 / abs(lead)
        key = (tuple((n, v * scale) for n, v in c.terms), c.sense, c.rhs * scale)
        if key in seen:
            continue
        seen[key] = i
        rows.append((i, scale, key[0], c.sense, key[2]))
    return rows, None


def _certificate(system: ConstraintSystem, multipliers: list) -> InfeasibilityCertificate:
    combined, rhs = _combine(system, multipliers)
    return InfeasibilityCertificate(tuple(multipliers), combined, rhs, system.hash())


def _combine(system: ConstraintSystem, multipliers) -> tuple:
    combined = {name: ZERO for name in system.unknowns}
    rhs = ZERO
    for y, c in zip(multipliers, system.constraints):
        if not y:
            continue
        for name, v in c.terms:
            combined[name] += y * v
        rhs += y * c.rhs
    return combined, rhs


def solve(system: ConstraintSystem) -> FeasibilityVerdict:
    n = len(system.unknowns)
    col_of = {name: j for j, name in enumerate(system.unknowns)}
    rows, early = _reduce_rows(system)
    if early is not None:
        i, y = early
        mult = [ZERO] * len(system.constraints)
        mult[i] = y
        return _certificate(system, mult)

    m = len(rows)
    n_slack = sum(1 for r in rows if r[3] == GE)
    art0 = n + n_slack

    tableau = []
    rhs = []
    signs = []
    slack = n
    for k, (_, _, terms, sense, b) in enumerate(rows):
        row = {col_of[name]: v for name, v in terms}
        if sense == GE:
            row[slack] = Fraction(-1)
            slack += 1
        sign = 1 if b >= 0 else -1
        if sign < 0:
            row = {j: -v for j, v in row.items()}
            b = -b
        row[art0 + k] = Fraction(1)
        tableau.append(row)
        rhs.append(b)
        signs.append(sign)

    basis = [art0 + k for k in range(m)]
    # reduced costs of the phase-I objective (sum of artificials)
    cost = {}
    for row in tableau:
        for j, v in row.items():
            if j < art0:
                cost[j] = cost.get(j, ZERO) - v
    while True:
        entering = min((j for j, d in cost.items() if d < 0), default=None)
        if entering is None:
            break
        leave = None
        best = None
        for k, row in enumerate(tableau):
            a = row.get(entering)
            if a is not None and a > 0:
                ratio = rhs[k] / a
                if best is None or ratio < best or (ratio == best and basis[k] < basis[leave]):
                    best, leave = ratio, k
        if leave is None:
            # cannot happen in phase I: the objective is bounded below by 0
            raise RuntimeError("unbounded phase-I direction")
        _pivot(tableau, rhs, cost, leave, entering)
        basis[leave] = entering

    objective = sum((rhs[k] for k in range(m) if basis[k] >= art0), ZERO)
    if objective == 0:
        values = {name: ZERO for name in system.unknowns}
        for k, j in enumerate(basis):
            if j < n:
                values[system.unknowns[j]] = rhs[k]
        return Witness(values, system.hash())

    # y_k = 1 - reduced cost of artificial k; undo the sign flip and row scaling
    mult = [ZERO] * len(system.constraints)
    for k, (orig, scale, _, _, _) in enumerate(rows):
        y = 1 - cost.get(art0 + k, ZERO)
        mult[orig] = y * signs[k] * scale
    return _certificate(system, mult)


def _pivot(tableau, rhs, cost, p, j):
    prow = tableau[p]
    a = prow[j]
    if a != 1:
        inv = 1 / a
        for col in prow:
            prow[col] *= inv
        rhs[p] *= inv
    for k, row in enumerate(tableau):
        if k == p:
            continue
        f = row.get(j)
        if f is None:
            continue
        for col, v in prow.items():
            nv = row.get(col, ZERO) - f * v
            if nv:
                row[col] = nv
            else:
                row.pop(col, None)
        rhs[k] -= f * rhs[p]
    f = cost.get(j)
    if f:
        for col, v in prow.items():
            nv = cost.get(col, ZERO) - f * v
            if nv:
                cost[col] = nv
            else:
                cost.pop(col, None)


def verify(system: ConstraintSystem, verdict: FeasibilityVerdict) -> bool:
    """Re-check a verdict by exact arithmetic, without trusting the solver."""
    if verdict.system_hash != system.hash():
        return False
    if isinstance(verdict, Witness):
        values = verdict.values
        if set(values) != set(system.unknowns):
            return False
        if any(v < 0 for v in values.values()):
            return False
        return all(c.satisfied_by(values) for c in system.constraints)
    if isinstance(verdict, InfeasibilityCertificate):
        mult = verdict.multipliers
        if len(mult) != len(system.constraints):
            return False
        for y, c in zip(mult, system.constraints):
            if c.sense == GE and y < 0:
                return False
        combined, rhs = _combine(system, mult)
        if combined != verdict.combined or rhs != verdict.combined_rhs:
            return False
        return all(v <= 0 for v in combined.values()) and rhs > 0
    return False


def verdict_to_dict(verdict: FeasibilityVerdict, system: ConstraintSystem) -> dict:
    if isinstance(verdict, Witness):
        return {
            "kind": "witness",
            "system_hash": verdict.system_hash,
            "values": [[name, format_rational(verdict.values[name])] for name in system.unknowns],
        }
    return {
        "kind": "farkas",
        "system_hash": verdict.system_hash,
        "multipliers": [
            [c.label, format_rational(y)] for c, y in zip(system.constraints, verdict.multipliers)
        ],
        "combined": [[name, format_rational(verdict.combined[name])] for name in system.unknowns],
        "combined_rhs": format_rational(verdict.combined_rhs),
    }


def verdict_from_dict(data: dict) -> FeasibilityVerdict:
    try:
        kind = data["kind"]
        if kind == "witness":
            return Witness({n: to_rational(v) for n, v in data["values"]}, data["system_hash"])
        if kind == "farkas":
            return InfeasibilityCertificate(
                tuple(to_rational(v) for _, v in data["multipliers"]),
                {n: to_rational(v) for n, v in data["combined"]},
                to_rational(data["combined_rhs"]),
                data["system_hash"],
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidCertificate(f"malformed verdict: {exc}") from None
    raise InvalidCertificate(f"unknown verdict kind {data.get('kind')!r}")


def dumps_verdict(verdict: FeasibilityVerdict, system: ConstraintSystem) -> str:
    payload = {"version": FORMAT_VERSION}
    payload.update(verdict_to_dict(verdict, system))
    return json.dumps(payload, indent=1, ensure_ascii=True) + "\n"
