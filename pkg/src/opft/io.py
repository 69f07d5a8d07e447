"""Scenario and certificate files.

Both are JSON with a ``"version"`` field and rationals written as ``"p/q"``
strings. ``dumps_scenario`` is canonical, so export, parse and export again
reproduces the same bytes.
"""

from __future__ import annotations

import json
import re

from .assumptions import normalize_assumptions
from .errors import (
    InvalidCertificate,
    NegativeEntry,
    NotNormalized,
    OpftError,
    ParseError,
    ShapeMismatch,
)
from .experiment import (
    CONTROLLED,
    OBSERVED,
    Equation,
    Experiment,
    LambdaConfig,
    Scenario,
    Side,
    Variable,
    build_comb,
)
from .prob import CondDist, FiniteSpace, format_rational, to_rational
from .solver import verdict_from_dict, verdict_to_dict

FORMAT_VERSION = 1

_SCENARIO_KEYS = {
    "version", "name", "description", "variables", "experiments",
    "equations", "assumptions", "lambda", "functor",
}
_REQUIRED = {"version", "name", "variables", "experiments", "equations"}


def _check_keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise ParseError(f"{where} must be an object")
    extra = set(obj) - allowed
    if extra:
        raise ParseError(f"unknown field(s) {sorted(extra)} in {where}")
    missing = set(required) - set(obj)
    if missing:
        raise ParseError(f"missing field(s) {sorted(missing)} in {where}")


def _rational(text, where):
    if not isinstance(text, (str, int)) or isinstance(text, bool):
        raise ParseError(f"{where}: rationals are written as \"p/q\" strings, got {text!r}")
    try:
        return to_rational(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise ParseError(f"{where}: {text!r} is not a rational") from None


# ---- lambda configuration -----------------------------------------------


def lambda_to_dict(lam: LambdaConfig) -> dict:
    out = {"mode": lam.mode}
    if lam.size is not None:
        out["size"] = lam.size
    if lam.strategies is not None:
        out["strategies"] = {
            label: [[list(t) for t in strat] for strat in strats]
            for label, strats in sorted(lam.strategies.items())
        }
    if lam.k is not None:
        out["k"] = list(lam.k)
    return out


def lambda_from_dict(data) -> LambdaConfig:
    _check_keys(data, {"mode", "size", "strategies", "k"}, {"mode"}, "lambda")
    k = data.get("k")
    strategies = data.get("strategies")
    if strategies is not None:
        strategies = {
            label: [tuple(tuple(int(v) for v in t) for t in strat) for strat in strats]
            for label, strats in strategies.items()
        }
    return LambdaConfig(data["mode"], data.get("size"), strategies, None if k is None else tuple(k))


def parse_lambda_option(text: str) -> LambdaConfig:
    """``auto``, ``deterministic`` or ``stochastic:N``."""
    mode, _, size = text.partition(":")
    if mode == "stochastic":
        if not size.isdigit():
            raise ParseError("use --lambda stochastic:N with a positive integer N")
        return LambdaConfig("stochastic", int(size))
    if size or mode not in ("auto", "deterministic"):
        raise ParseError(f"unknown lambda option {text!r}; use auto, deterministic or stochastic:N")
    return LambdaConfig(mode)


# ---- scenarios ----------------------------------------------------------


def scenario_to_dict(sc: Scenario) -> dict:
    variables = {}
    for E in sc.experiments.values():
        for v in E.variables:
            prev = variables.setdefault(v.name, v)
            if prev != v:
                raise ShapeMismatch(f"variable {v.name!r} is declared differently across experiments")
    equations = []
    for eq in sc.equations:
        for s in (eq.lhs, eq.rhs):
            if s.spec is None:
                raise ShapeMismatch(f"equation {eq.label!r} has a comb without a serializable spec")
        equations.append({
            "label": eq.label,
            "lhs": {"experiment": eq.lhs.experiment.label, "comb": eq.lhs.spec},
            "rhs": {"experiment": eq.rhs.experiment.label, "comb": eq.rhs.spec},
        })
    out = {
        "version": FORMAT_VERSION,
        "name": sc.name,
        "description": sc.description,
        "variables": [
            {
                "name": v.name,
                "cardinality": v.cardinality,
                "role": v.role,
                "stage": v.stage,
                "party": v.party,
            }
            for v in variables.values()
        ],
        "experiments": [
            {
                "label": E.label,
                "inputs": list(E.S.names),
                "outputs": list(E.T.names),
                "table": [[format_rational(p) for p in col] for col in E.dist.columns],
            }
            for E in sc.experiments.values()
        ],
        "equations": equations,
        "assumptions": list(normalize_assumptions(sc.assumptions)),
        "lambda": lambda_to_dict(sc.lam),
    }
    if sc.functor is not None:
        out["functor"] = sc.functor
    return out


_FLAT_LIST = re.compile(r"\[\s+([^\[\]{}]*?)\s+\]")


def dumps_scenario(sc: Scenario) -> str:
    text = json.dumps(scenario_to_dict(sc), indent=2, ensure_ascii=True)
    # keep lists of scalars on one line so tables read as rows
    text = _FLAT_LIST.sub(lambda m: "[" + re.sub(r",\s+", ", ", m.group(1)) + "]", text)
    return text + "\n"


def _parse_variable(data, i) -> Variable:
    where = f"variables[{i}]"
    _check_keys(data, {"name", "cardinality", "role", "stage", "party"}, {"name", "cardinality", "role"}, where)
    card = data["cardinality"]
    if not isinstance(card, int) or isinstance(card, bool) or card < 1:
        raise ParseError(f"{where}: cardinality must be a positive integer")
    if data["role"] not in (CONTROLLED, OBSERVED):
        raise ParseError(f"{where}: role must be {CONTROLLED!r} or {OBSERVED!r}")
    try:
        return Variable(data["name"], card, data["role"], data.get("stage"), data.get("party"))
    except OpftError as exc:
        raise ParseError(f"{where}: {exc}") from None


def _parse_experiment(data, i, variables) -> Experiment:
    where = f"experiments[{i}]"
    _check_keys(data, {"label", "inputs", "outputs", "table"}, {"label", "inputs", "outputs", "table"}, where)
    label = data["label"]
    used = []
    for name in list(data["inputs"]) + list(data["outputs"]):
        if name not in variables:
            raise ParseError(f"{where}: undeclared variable {name!r}")
        used.append(variables[name])
    for name in data["inputs"]:
        if variables[name].role != CONTROLLED:
            raise ParseError(f"{where}: input {name!r} is not a controlled variable")
    for name in data["outputs"]:
        if variables[name].role != OBSERVED:
            raise ParseError(f"{where}: output {name!r} is not an observed variable")
    S = FiniteSpace(tuple((n, variables[n].cardinality) for n in data["inputs"]))
    T = FiniteSpace(tuple((n, variables[n].cardinality) for n in data["outputs"]))
    table = data["table"]
    if not isinstance(table, list) or len(table) != S.size:
        raise ParseError(f"{where}: table needs one row per input assignment ({S.size})")
    cols = []
    for si, row in enumerate(table):
        if not isinstance(row, list) or len(row) != T.size:
            raise ParseError(f"{where}: row {si} needs {T.size} entries")
        cols.append([_rational(v, f"{where} row {si}") for v in row])
    try:
        dist = CondDist(S, T, cols)
    except (NotNormalized, NegativeEntry) as exc:
        raise type(exc)(f"experiment {label!r}: {exc}", exc.coordinate) from None
    return Experiment(label, dist, tuple(used))


def _parse_side(data, where, experiments) -> Side:
    _check_keys(data, {"experiment", "comb"}, {"experiment", "comb"}, where)
    E = experiments.get(data["experiment"])
    if E is None:
        raise ParseError(f"{where}: unknown experiment {data['experiment']!r}")
    try:
        comb = build_comb(data["comb"], E.S, E.T)
    except ParseError as exc:
        raise ParseError(f"{where}: {exc}") from None
    except OpftError as exc:
        raise ParseError(f"{where}: {type(exc).__name__}: {exc}") from None
    return Side(E, comb, data["comb"])


def scenario_from_dict(data) -> Scenario:
    _check_keys(data, _SCENARIO_KEYS, _REQUIRED, "scenario")
    if data["version"] != FORMAT_VERSION:
        raise ParseError(f"unsupported scenario version {data['version']!r}")
    variables = {}
    for i, v in enumerate(data["variables"]):
        var = _parse_variable(v, i)
        if var.name in variables:
            raise ParseError(f"variable {var.name!r} declared twice")
        variables[var.name] = var
    experiments = {}
    for i, e in enumerate(data["experiments"]):
        E = _parse_experiment(e, i, variables)
        if E.label in experiments:
            raise ParseError(f"experiment label {E.label!r} used twice")
        experiments[E.label] = E
    equations = []
    for i, eq in enumerate(data["equations"]):
        where = f"equations[{i}]"
        _check_keys(eq, {"label", "lhs", "rhs"}, {"lhs", "rhs"}, where)
        equations.append(
            Equation(
                _parse_side(eq["lhs"], where + ".lhs", experiments),
                _parse_side(eq["rhs"], where + ".rhs", experiments),
                eq.get("label", f"eq{i}"),
            )
        )
    assumptions = normalize_assumptions(data.get("assumptions", []))
    lam = lambda_from_dict(data.get("lambda", {"mode": "auto"}))
    functor = data.get("functor")
    if functor is not None:
        _check_keys(
            functor, {"experiment", "generators", "bound", "lambda_size", "k"},
            {"experiment", "generators"}, "functor",
        )
        if functor["experiment"] not in experiments:
            raise ParseError(f"functor: unknown experiment {functor['experiment']!r}")
    return Scenario(
        data["name"], experiments, equations, assumptions, lam, data.get("description", ""), functor
    )


def loads_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    return scenario_from_dict(data)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads_scenario(fh.read())


# ---- certificates -------------------------------------------------------


def verdict_file(scenario_name: str, verdict) -> dict:
    return {
        "version": FORMAT_VERSION,
        "scenario": scenario_name,
        "verdict": verdict.label,
        "assumptions": list(verdict.assumptions),
        "lambda": lambda_to_dict(verdict.lam),
        "attempts": [
            dict({"k": None if a.k is None else list(a.k)}, **verdict_to_dict(a.verdict, a.system))
            for a in verdict.attempts
        ],
    }


def dumps_verdict_file(scenario_name: str, verdict) -> str:
    return json.dumps(verdict_file(scenario_name, verdict), indent=1, ensure_ascii=True) + "\n"


def load_verdict_file(text: str) -> dict:
    """Parsed certificate file with each attempt's verdict rebuilt."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidCertificate(f"not valid JSON: {exc}") from None
    if not isinstance(data, dict) or data.get("version") != FORMAT_VERSION:
        raise InvalidCertificate("missing or unsupported certificate version")
    try:
        data["lambda"] = lambda_from_dict(data["lambda"])
        data["assumptions"] = normalize_assumptions(data["assumptions"])
        data["attempts"] = [
            (None if a["k"] is None else tuple(a["k"]), verdict_from_dict(a)) for a in data["attempts"]
        ]
    except (KeyError, TypeError, ParseError) as exc:
        raise InvalidCertificate(f"malformed certificate: {exc}") from None
    return data
